//! Poisson probabilities evaluated without forming `e^{-λ}` and `λ^k / k!`
//! separately.
//!
//! The seed term uses Loader's saddle-point expansion
//! (`pmf = exp(-stirlerr(k) - bd0(k, λ)) / sqrt(2πk)`), every other term
//! comes from the ratio recurrence `p(i+1) = p(i)·λ/(i+1)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `ln(n!) - ln(sqrt(2πn)·(n/e)^n)` for `n = 0..=15`.
#[allow(clippy::excessive_precision)]
const STIRLING_ERROR: [f64; 16] = [
    0.0,
    0.081_061_466_795_327_258_219_670_2,
    0.041_340_695_955_409_294_093_822_1,
    0.027_677_925_684_998_339_148_789_29,
    0.020_790_672_103_765_093_111_522_77,
    0.016_644_691_189_821_192_163_194_87,
    0.013_876_128_823_070_747_998_745_73,
    0.011_896_709_945_891_770_095_055_72,
    0.010_411_265_261_972_096_497_478_567,
    0.009_255_462_182_712_732_917_728_637,
    0.008_330_563_433_362_871_256_469_318,
    0.007_573_675_487_951_840_794_972_024,
    0.006_942_840_107_209_529_865_664_152,
    0.006_408_994_188_004_207_068_439_631,
    0.005_951_370_112_758_847_735_624_416,
    0.005_554_733_551_962_801_371_038_690,
];

/// Terms smaller than this fraction of the running sum are dropped once the
/// recurrence moves away from the mode.
const NEGLIGIBLE: f64 = 1e-17;

fn stirling_error(n: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15 {
        return STIRLING_ERROR[n as usize];
    }
    let n = n as f64;
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// `x·ln(x/m) + m - x`, accurate when `x ≈ m`.
fn deviance_term(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let mut v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let next = s + ej / f64::from(2 * j + 1);
            if next == s {
                return next;
            }
            s = next;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "lambda",
            format!("Poisson mean must be finite and non-negative, got {lambda}"),
        ))
    }
}

/// Poisson probability mass `P(X = k)` for mean `lambda`.
pub fn poisson_pmf(k: u64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(pmf_unchecked(k, lambda))
}

fn pmf_unchecked(k: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if k == 0 {
        return (-lambda).exp();
    }
    let x = k as f64;
    (-stirling_error(k) - deviance_term(x, lambda)).exp() / (2.0 * PI * x).sqrt()
}

/// Sums `p(k) + p(k-1) + ... + p(0)` for `k` at or below the mode.
fn sum_downward(k: u64, lambda: f64) -> (f64, f64) {
    let seed = pmf_unchecked(k, lambda);
    let mut term = seed;
    let mut sum = seed;
    let mut i = k;
    while i > 0 {
        term *= i as f64 / lambda;
        sum += term;
        if term < sum * NEGLIGIBLE {
            break;
        }
        i -= 1;
    }
    (sum, seed)
}

/// Poisson cumulative distribution `P(X ≤ k)`.
pub fn poisson_cdf(k: u64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if lambda == 0.0 {
        return Ok(1.0);
    }
    let mode = lambda.floor() as u64;
    if k <= mode {
        return Ok(sum_downward(k, lambda).0.min(1.0));
    }
    let (mut sum, mut term) = sum_downward(mode, lambda);
    for i in mode + 1..=k {
        term *= lambda / i as f64;
        sum += term;
        if term < sum * NEGLIGIBLE {
            break;
        }
    }
    Ok(sum.min(1.0))
}

/// Poisson survival function `P(X > k)`, summed directly in the upper tail.
pub fn poisson_sf(k: u64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let mode = lambda.floor() as u64;
    if k < mode {
        return Ok((1.0 - poisson_cdf(k, lambda)?).max(0.0));
    }
    let mut term = pmf_unchecked(k + 1, lambda);
    let mut sum = term;
    let mut i = k + 1;
    loop {
        i += 1;
        term *= lambda / i as f64;
        sum += term;
        if term <= sum * NEGLIGIBLE {
            break;
        }
    }
    Ok(sum.min(1.0))
}

/// `P(X ≥ k)`; equals 1 for `k = 0`.
pub fn poisson_upper_tail(k: u64, lambda: f64) -> Result<f64> {
    match k {
        0 => {
            check_lambda(lambda)?;
            Ok(1.0)
        }
        _ => poisson_sf(k - 1, lambda),
    }
}
