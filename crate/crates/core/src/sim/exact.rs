//! Exact acceptance probabilities of a fixed plan, for checking simulations.

use crate::error::Result;
use crate::plans::FixedPlan;

use super::LotModel;

/// Normalised pmf from unnormalised terms built outward from `start` with
/// the ratio `ratio(x) = P(x+1)/P(x)`.
fn pmf_from_ratios(lo: u64, hi: u64, start: u64, ratio: impl Fn(u64) -> f64) -> Vec<f64> {
    let len = (hi - lo + 1) as usize;
    let mut terms = vec![0.0; len];
    let s = (start - lo) as usize;
    terms[s] = 1.0;
    for i in s..len - 1 {
        terms[i + 1] = terms[i] * ratio(lo + i as u64);
    }
    for i in (0..s).rev() {
        terms[i] = terms[i + 1] / ratio(lo + i as u64);
    }
    let total: f64 = terms.iter().sum();
    terms.iter_mut().for_each(|t| *t /= total);
    terms
}

/// `(lowest support value, pmf over the support)` of the defect count in a
/// sample of `n` items.
pub fn defect_count_pmf(lot: &LotModel, n: u64) -> Result<(u64, Vec<f64>)> {
    lot.validate()?;
    lot.check_sample(n)?;
    match *lot {
        LotModel::Finite { size, defectives } => {
            let lo = (n + defectives).saturating_sub(size);
            let hi = n.min(defectives);
            let (nf, df, sf) = (n as f64, defectives as f64, size as f64);
            let mode = (((nf + 1.0) * (df + 1.0)) / (sf + 2.0)).floor() as u64;
            let start = mode.clamp(lo, hi);
            let ratio = |x: u64| {
                let x = x as f64;
                (df - x) * (nf - x) / ((x + 1.0) * (sf - df - nf + x + 1.0))
            };
            Ok((lo, pmf_from_ratios(lo, hi, start, ratio)))
        }
        LotModel::Infinite { rate } => {
            let start = (((n + 1) as f64) * rate).floor().min(n as f64) as u64;
            let odds = rate / (1.0 - rate);
            let nf = n as f64;
            let ratio = |x: u64| (nf - x as f64) / (x as f64 + 1.0) * odds;
            Ok((0, pmf_from_ratios(0, n, start, ratio)))
        }
    }
}

/// Probability that a fixed plan accepts the lot, i.e. `P(defects < k_star)`.
pub fn fixed_plan_accept_probability(plan: &FixedPlan, lot: &LotModel) -> Result<f64> {
    let (lo, pmf) = defect_count_pmf(lot, plan.n)?;
    Ok(pmf
        .iter()
        .enumerate()
        .filter(|(i, _)| plan.accepts(lo + *i as u64))
        .map(|(_, p)| p)
        .sum())
}
