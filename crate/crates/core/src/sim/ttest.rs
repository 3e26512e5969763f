use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t_statistic: f64,
    /// Welch–Satterthwaite degrees of freedom.
    pub degrees_of_freedom: f64,
    /// Two-sided p-value.
    pub p_value: f64,
}

/// Two-sided Student-t tail `P(|T| ≥ |t|)` with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// Welch's unequal-variance two-sample t-test from summary statistics.
/// Variances are the unbiased sample variances.
pub fn welch_t(
    mean_a: f64,
    var_a: f64,
    n_a: u64,
    mean_b: f64,
    var_b: f64,
    n_b: u64,
) -> Result<TTestResult> {
    if n_a < 2 {
        return Err(Error::invalid("n_a", "need at least two observations"));
    }
    if n_b < 2 {
        return Err(Error::invalid("n_b", "need at least two observations"));
    }
    for (field, v) in [("var_a", var_a), ("var_b", var_b)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::invalid(field, format!("must be finite and ≥ 0, got {v}")));
        }
    }
    if var_a == 0.0 && var_b == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let (na, nb) = (n_a as f64, n_b as f64);
    let sa = var_a / na;
    let sb = var_b / nb;
    let se2 = sa + sb;
    let t = (mean_a - mean_b) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    Ok(TTestResult {
        t_statistic: t,
        degrees_of_freedom: df,
        p_value: student_t_two_sided(t, df),
    })
}
