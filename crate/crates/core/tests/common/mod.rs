//! Independent reference computations for the integration tests.
#![allow(dead_code)]

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use seqsample::sprt::{run_sequence, Observation, SprtConfig};

pub mod http;

/// `(mantissa, exponent)` with `x = mantissa · 2^exponent`, exact.
fn dyadic(x: f64) -> (BigUint, i64) {
    assert!(x.is_finite() && x >= 0.0);
    if x == 0.0 {
        return (BigUint::zero(), 0);
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    if exp == 0 {
        (BigUint::from(frac), -1074)
    } else {
        (BigUint::from(frac | (1u64 << 52)), exp - 1075)
    }
}

/// `num / den` rounded to f64 (both positive).
fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let shift = 128i64 + den.bits() as i64 - num.bits() as i64;
    let q = if shift >= 0 {
        (num << shift as usize) / den
    } else {
        num / (den << (-shift) as usize)
    };
    q.to_f64().unwrap() * 2f64.powi(-shift as i32)
}

/// Poisson CDF by exact fixed-point summation: the partial sum
/// `Σ_{i≤k} λ^i/i!` divided by the full series for `e^λ`, both carried with
/// 256 fractional bits. λ is taken exactly as its binary value.
pub fn poisson_cdf_oracle(k: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return 1.0;
    }
    const FRAC_BITS: usize = 256;
    let (m, e) = dyadic(lambda);
    let mut term = BigUint::one() << FRAC_BITS;
    let mut partial = BigUint::zero();
    let mut total = BigUint::zero();
    let mut i: u64 = 0;
    loop {
        if i <= k {
            partial += &term;
        }
        total += &term;
        i += 1;
        // term ← term · λ / i
        term *= &m;
        if e >= 0 {
            term <<= e as usize;
            term /= BigUint::from(i);
        } else {
            term /= BigUint::from(i) << (-e) as usize;
        }
        if term.is_zero() {
            break;
        }
    }
    ratio_to_f64(&partial, &total)
}

fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= BigUint::from(n - i);
        acc /= BigUint::from(i + 1);
    }
    acc
}

/// Exact `P(X ≥ k)` for X ~ Hypergeometric(size, defectives, n).
pub fn hypergeometric_upper_tail(size: u64, defectives: u64, n: u64, k: u64) -> f64 {
    let den = binomial(size, n);
    let mut num = BigUint::zero();
    for x in k..=n.min(defectives) {
        num += binomial(defectives, x) * binomial(size - defectives, n - x);
    }
    ratio_to_f64(&num, &den)
}

/// `ceil(z² p0 (1−p0) / δ²)` in exact rational arithmetic.
pub fn sample_size_oracle(z: f64, p0: f64, delta: f64) -> u64 {
    let (zm, ze) = dyadic(z);
    let (pm, pe) = dyadic(p0);
    let (dm, de) = dyadic(delta);
    // 1 − p0 = (2^{-pe} − pm) · 2^{pe}
    assert!(pe < 0);
    let one = BigUint::one() << (-pe) as usize;
    let qm = one - &pm;
    let num = BigInt::from(&zm * &zm * &pm * &qm);
    let den = BigInt::from(&dm * &dm);
    // value = num/den · 2^(2ze + 2pe − 2de)
    let shift = 2 * ze + 2 * pe - 2 * de;
    let (num, den) = if shift >= 0 {
        (num << shift as usize, den)
    } else {
        (num, den << (-shift) as usize)
    };
    let q = &num / &den;
    let r = &num % &den;
    let ceil = if r.is_zero() { q } else { q + 1 };
    ceil.to_u64().unwrap().max(1)
}

/// Every k-scan entry `P(X ≥ k)` with the oracle CDF.
pub fn upper_tail_oracle(k: u64, lambda: f64) -> f64 {
    if k == 0 {
        1.0
    } else {
        1.0 - poisson_cdf_oracle(k - 1, lambda)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Enumerated {
    pub accept_prob: f64,
    pub reject_prob: f64,
    pub asn: f64,
}

/// Accept/reject probabilities and ASN by running all `2^n_max` result
/// sequences through the stepping rules.
pub fn enumerate_sprt(config: &SprtConfig, true_p: f64) -> Enumerated {
    let n = config.n_max as usize;
    assert!(n <= 20);
    let mut out = Enumerated {
        accept_prob: 0.0,
        reject_prob: 0.0,
        asn: 0.0,
    };
    let mut seq = vec![Observation::Pass; n];
    for mask in 0u32..(1 << n) {
        let mut weight = 1.0;
        for (i, slot) in seq.iter_mut().enumerate() {
            if mask >> i & 1 == 1 {
                *slot = Observation::Defect;
                weight *= true_p;
            } else {
                *slot = Observation::Pass;
                weight *= 1.0 - true_p;
            }
        }
        let (state, stop) = run_sequence(config, &seq).unwrap();
        match state.verdict.accepts_lot() {
            Some(true) => out.accept_prob += weight,
            Some(false) => out.reject_prob += weight,
            None => panic!("a full-length sequence must reach a verdict"),
        }
        out.asn += weight * stop as f64;
    }
    out
}

/// Two-sided Student-t p-value by quadrature: with `u = √ν·tanθ` the tail
/// `P(|T| ≥ t)` is `∫_{θ_t}^{π/2} cos^{ν−1} / ∫_0^{π/2} cos^{ν−1}`. Uses
/// composite Simpson on a fine grid; valid for ν ≥ 1.
pub fn student_t_two_sided_quadrature(t: f64, df: f64) -> f64 {
    assert!(df >= 1.0);
    let f = |theta: f64| theta.cos().powf(df - 1.0);
    let simpson = |a: f64, b: f64, panels: usize| {
        let h = (b - a) / panels as f64;
        let mut s = f(a) + f(b);
        for i in 1..panels {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    };
    let half_pi = std::f64::consts::FRAC_PI_2;
    let theta_t = (t.abs() / df.sqrt()).atan();
    let panels = 400_000;
    simpson(theta_t, half_pi, panels) / simpson(0.0, half_pi, panels)
}

/// Tables IV and V transcribed cell by cell: rows are batch ranges, columns
/// AQL 0.025, 0.04, 0.065, 0.1; `None` is a blank cell.
pub const BATCH_RANGES: [(u64, Option<u64>); 11] = [
    (2, Some(8)),
    (9, Some(15)),
    (16, Some(25)),
    (26, Some(50)),
    (51, Some(90)),
    (91, Some(150)),
    (151, Some(280)),
    (281, Some(500)),
    (501, Some(1200)),
    (1201, Some(3200)),
    (3201, None),
];

pub const AQLS: [f64; 4] = [0.025, 0.04, 0.065, 0.1];

type Cell = Option<(u64, u64)>;

pub const CASE_I: [[Cell; 4]; 11] = [
    [Some((2, 0)), Some((2, 0)), Some((2, 0)), Some((2, 0))],
    [Some((3, 0)), Some((3, 0)), Some((3, 0)), Some((3, 0))],
    [Some((5, 0)), Some((5, 0)), Some((5, 0)), Some((5, 1))],
    [Some((8, 0)), Some((8, 0)), Some((8, 1)), Some((8, 2))],
    [Some((13, 0)), Some((13, 1)), Some((13, 2)), Some((13, 3))],
    [Some((20, 1)), Some((20, 2)), Some((20, 3)), Some((20, 5))],
    [Some((32, 2)), Some((32, 3)), Some((32, 5)), Some((32, 7))],
    [Some((38, 8)), Some((50, 5)), Some((50, 7)), Some((50, 10))],
    [None, Some((60, 11)), Some((80, 10)), Some((80, 14))],
    [None, None, Some((94, 16)), Some((125, 21))],
    [None, None, None, Some((139, 21))],
];

pub const CASE_II: [[Cell; 4]; 11] = [
    [Some((2, 0)), Some((2, 0)), Some((2, 0)), Some((2, 0))],
    [Some((3, 0)), Some((3, 0)), Some((3, 0)), Some((3, 0))],
    [Some((5, 0)), Some((5, 0)), Some((5, 0)), Some((5, 1))],
    [Some((8, 0)), Some((8, 0)), Some((8, 1)), Some((8, 2))],
    [Some((13, 0)), Some((13, 1)), Some((13, 2)), Some((13, 3))],
    [Some((20, 1)), Some((20, 2)), Some((20, 3)), Some((20, 5))],
    [Some((27, 6)), Some((32, 3)), Some((32, 5)), Some((32, 7))],
    [None, Some((42, 8)), Some((50, 7)), Some((50, 10))],
    [None, None, Some((66, 11)), Some((80, 14))],
    [None, None, None, Some((98, 15))],
    [None, None, None, None],
];

/// Transcribed cell for a batch size.
pub fn transcribed_cell(case_ii: bool, batch: u64, aql_index: usize) -> Cell {
    let table = if case_ii { &CASE_II } else { &CASE_I };
    let row = BATCH_RANGES
        .iter()
        .position(|&(lo, hi)| batch >= lo && hi.is_none_or(|h| batch <= h))
        .unwrap();
    table[row][aql_index]
}

