//! Fixed-sample-size inspection plans.
//!
//! A plan is designed in two steps: the sample size comes from the normal
//! approximation to the binomial proportion, then a defect-count threshold
//! is read off the Poisson distribution with mean `n·p0`.

mod aql;
mod poisson;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{check_open_unit, Error, Result};

pub use aql::{
    code_letter_size, export_csv, lookup_plan, plan_table, AqlPlanEntry, CaseId, AQL_LEVELS,
    CODE_LETTERS, PLAN_TABLE_CSV,
};
pub use poisson::{poisson_cdf, poisson_pmf, poisson_sf, poisson_upper_tail};

/// Largest accepted gap between a supplied `z_half_alpha` and the exact
/// upper `alpha/2` normal quantile. Printed tables round z to 2-3 decimals
/// (1.96, 1.645).
pub const Z_TOLERANCE: f64 = 5e-3;

/// Upper `alpha/2` quantile of the standard normal distribution.
pub fn z_half_alpha(alpha: f64) -> Result<f64> {
    check_open_unit("alpha", alpha)?;
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(1.0 - alpha / 2.0))
}

/// Inputs of the sample-size formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanParams {
    /// Producer's risk.
    pub alpha: f64,
    /// Nominal defective rate claimed by the supplier.
    pub p0: f64,
    /// Allowable error on the defective rate.
    pub delta: f64,
    /// `|Z_{α/2}|`, as printed alongside `alpha`.
    pub z_half_alpha: f64,
}

impl PlanParams {
    pub fn new(alpha: f64, p0: f64, delta: f64, z_half_alpha: f64) -> Result<Self> {
        let params = Self {
            alpha,
            p0,
            delta,
            z_half_alpha,
        };
        params.validate()?;
        Ok(params)
    }

    /// Builds the parameters with the exact normal quantile for `alpha`.
    pub fn with_exact_z(alpha: f64, p0: f64, delta: f64) -> Result<Self> {
        Self::new(alpha, p0, delta, z_half_alpha(alpha)?)
    }

    pub fn validate(&self) -> Result<()> {
        check_open_unit("alpha", self.alpha)?;
        check_open_unit("p0", self.p0)?;
        check_open_unit("delta", self.delta)?;
        if !(self.z_half_alpha.is_finite() && self.z_half_alpha > 0.0) {
            return Err(Error::invalid("z", "must be a positive finite number"));
        }
        let exact = z_half_alpha(self.alpha)?;
        if (exact - self.z_half_alpha).abs() > Z_TOLERANCE {
            return Err(Error::invalid(
                "z",
                format!(
                    "{} is inconsistent with alpha={} (expected {exact:.6})",
                    self.z_half_alpha, self.alpha
                ),
            ));
        }
        Ok(())
    }
}

/// How a fixed plan's threshold is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    /// Reject the lot when `defects ≥ k_star`.
    RejectionThreshold,
    /// Accept the lot when `defects < k_star`.
    AcceptanceThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPlan {
    pub n: u64,
    pub k_star: u64,
    pub kind: ThresholdKind,
    /// Poisson mean `n·p0` the threshold was derived from.
    pub lambda: f64,
}

impl FixedPlan {
    /// A plan taken from a table rather than derived; `lambda` is `n·p0`.
    pub fn new(n: u64, k_star: u64, kind: ThresholdKind, p0: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "sample size must be at least 1"));
        }
        if k_star > n {
            return Err(Error::invalid(
                "k_star",
                format!("threshold {k_star} exceeds sample size {n}"),
            ));
        }
        Ok(Self {
            n,
            k_star,
            kind,
            lambda: n as f64 * p0,
        })
    }

    /// Both conventions reject exactly when `defects ≥ k_star`.
    pub fn rejects(&self, defects: u64) -> bool {
        defects >= self.k_star
    }

    pub fn accepts(&self, defects: u64) -> bool {
        !self.rejects(defects)
    }
}

/// Required sample size: `ceil(z² · p0(1−p0) / δ²)`, at least 1.
pub fn sample_size(params: &PlanParams) -> Result<u64> {
    params.validate()?;
    let raw = params.z_half_alpha.powi(2) * params.p0 * (1.0 - params.p0) / params.delta.powi(2);
    // Values within rounding noise of an integer are that integer.
    let nearest = raw.round();
    let n = if (raw - nearest).abs() <= 1e-9 * raw.max(1.0) {
        nearest
    } else {
        raw.ceil()
    };
    if !n.is_finite() || n > u64::MAX as f64 {
        return Err(Error::invalid("delta", "sample size overflows"));
    }
    Ok((n as u64).max(1))
}

fn check_plan_inputs(n: u64, p0: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n", "sample size must be at least 1"));
    }
    check_open_unit("p0", p0)
}

/// Smallest `k` with `P(X ≥ k | λ = n·p0) ≤ alpha`; the lot is rejected when
/// `defects ≥ k`.
pub fn rejection_threshold(n: u64, p0: f64, alpha: f64) -> Result<FixedPlan> {
    check_plan_inputs(n, p0)?;
    check_open_unit("alpha", alpha)?;
    let lambda = n as f64 * p0;
    let mut k = 0;
    while poisson_upper_tail(k, lambda)? > alpha {
        k += 1;
        if k > n {
            return Err(Error::invalid(
                "alpha",
                format!("no threshold within n={n} keeps P(X ≥ k) ≤ {alpha} at λ={lambda}"),
            ));
        }
    }
    Ok(FixedPlan {
        n,
        k_star: k,
        kind: ThresholdKind::RejectionThreshold,
        lambda,
    })
}

/// Smallest `k` with `P(X ≤ k−1 | λ = n·p0) ≥ reliability`; the lot is
/// accepted when `defects < k`.
pub fn acceptance_threshold(n: u64, p0: f64, reliability: f64) -> Result<FixedPlan> {
    check_plan_inputs(n, p0)?;
    check_open_unit("reliability", reliability)?;
    let lambda = n as f64 * p0;
    let mut k = 1;
    while poisson_cdf(k - 1, lambda)? < reliability {
        k += 1;
        if k > n {
            return Err(Error::invalid(
                "reliability",
                format!("no threshold within n={n} reaches P(X < k) ≥ {reliability} at λ={lambda}"),
            ));
        }
    }
    Ok(FixedPlan {
        n,
        k_star: k,
        kind: ThresholdKind::AcceptanceThreshold,
        lambda,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub delta: f64,
    pub n: u64,
    pub k_star: u64,
}

/// Sample size and rejection threshold for each tolerance, using the exact
/// normal quantile for `alpha`.
pub fn plan_sweep(p0: f64, alpha: f64, deltas: &[f64]) -> Result<Vec<SweepPoint>> {
    plan_sweep_with_z(p0, alpha, z_half_alpha(alpha)?, deltas)
}

pub fn plan_sweep_with_z(p0: f64, alpha: f64, z: f64, deltas: &[f64]) -> Result<Vec<SweepPoint>> {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if deltas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("deltas", "must be strictly increasing"));
    }
    deltas
        .iter()
        .map(|&delta| {
            let tag = |e: Error| match e {
                Error::InvalidParameter { field, message } => Error::InvalidParameter {
                    field,
                    message: format!("{message} (at delta={delta})"),
                },
                other => other,
            };
            let params = PlanParams::new(alpha, p0, delta, z).map_err(tag)?;
            let n = sample_size(&params).map_err(tag)?;
            let plan = rejection_threshold(n, p0, alpha).map_err(tag)?;
            Ok(SweepPoint {
                delta,
                n,
                k_star: plan.k_star,
            })
        })
        .collect()
}
