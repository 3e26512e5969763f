//! Truncated sequential probability ratio test.
//!
//! Items are inspected one at a time. After each item the log-likelihood
//! ratio of "defective rate is `p1`" against "defective rate is `p0`" is
//! compared with Wald's boundaries `ln(β/(1−α))` and `ln((1−β)/α)`. Two
//! extra rules bound the test: reaching `k_star` defects rejects at once,
//! and reaching `n_max` items falls back to the fixed plan's decision.
//!
//! Rules are checked in this order at every step:
//!
//! 1. `defects ≥ k_star` → [`Verdict::Reject`]
//! 2. `log_lr ≤ ln A` → [`Verdict::Accept`]
//! 3. `log_lr ≥ ln B` → [`Verdict::Reject`]
//! 4. `n_seen = n_max` → [`Verdict::TruncatedAccept`] if `defects < k_star`,
//!    else [`Verdict::TruncatedReject`]
//! 5. otherwise [`Verdict::Continue`]

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_open_unit, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observation {
    Pass,
    Defect,
}

impl std::str::FromStr for Observation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pass" => Ok(Observation::Pass),
            "defect" => Ok(Observation::Defect),
            other => Err(Error::invalid(
                "result",
                format!("expected `pass` or `defect`, got `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Continue,
    Accept,
    Reject,
    TruncatedAccept,
    TruncatedReject,
}

impl Verdict {
    pub fn is_final(self) -> bool {
        self != Verdict::Continue
    }

    /// Lot disposition, with truncated verdicts folded into their side.
    pub fn accepts_lot(self) -> Option<bool> {
        match self {
            Verdict::Continue => None,
            Verdict::Accept | Verdict::TruncatedAccept => Some(true),
            Verdict::Reject | Verdict::TruncatedReject => Some(false),
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Continue => "continue",
            Verdict::Accept => "accept",
            Verdict::Reject => "reject",
            Verdict::TruncatedAccept => "truncated_accept",
            Verdict::TruncatedReject => "truncated_reject",
        })
    }
}

/// Wald's acceptance and rejection bounds `(A, B) = (β/(1−α), (1−β)/α)`.
pub fn boundaries(alpha: f64, beta: f64) -> Result<(f64, f64)> {
    check_open_unit("alpha", alpha)?;
    check_open_unit("beta", beta)?;
    Ok((beta / (1.0 - alpha), (1.0 - beta) / alpha))
}

fn log_increments(p0: f64, p1: f64) -> (f64, f64) {
    let defect = p1.ln() - p0.ln();
    let pass = (-p1).ln_1p() - (-p0).ln_1p();
    (defect, pass)
}

/// `x·ln(p1/p0) + (n−x)·ln((1−p1)/(1−p0))`.
pub fn log_likelihood_ratio(n: u64, x: u64, p0: f64, p1: f64) -> Result<f64> {
    check_open_unit("p0", p0)?;
    check_open_unit("p1", p1)?;
    if x > n {
        return Err(Error::invalid("x", format!("{x} defects exceed {n} items")));
    }
    Ok(llr_unchecked(n, x, p0, p1))
}

fn llr_unchecked(n: u64, x: u64, p0: f64, p1: f64) -> f64 {
    let (defect, pass) = log_increments(p0, p1);
    x as f64 * defect + (n - x) as f64 * pass
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SprtConfig {
    pub p0: f64,
    pub p1: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n_max: u64,
    pub k_star: u64,
}

impl SprtConfig {
    pub fn new(p0: f64, p1: f64, alpha: f64, beta: f64, n_max: u64, k_star: u64) -> Result<Self> {
        let config = Self {
            p0,
            p1,
            alpha,
            beta,
            n_max,
            k_star,
        };
        config.validate()?;
        Ok(config)
    }

    /// Uses `p1 = p0 + delta`.
    pub fn with_delta(
        p0: f64,
        delta: f64,
        alpha: f64,
        beta: f64,
        n_max: u64,
        k_star: u64,
    ) -> Result<Self> {
        check_open_unit("delta", delta)?;
        Self::new(p0, p0 + delta, alpha, beta, n_max, k_star)
    }

    pub fn validate(&self) -> Result<()> {
        check_open_unit("p0", self.p0)?;
        check_open_unit("p1", self.p1)?;
        if self.p1 <= self.p0 {
            return Err(Error::invalid(
                "p1",
                format!("must exceed p0={}, got {}", self.p0, self.p1),
            ));
        }
        check_open_unit("alpha", self.alpha)?;
        check_open_unit("beta", self.beta)?;
        if self.n_max == 0 {
            return Err(Error::invalid("n_max", "must be at least 1"));
        }
        if self.k_star > self.n_max {
            return Err(Error::invalid(
                "k_star",
                format!("must not exceed n_max={}, got {}", self.n_max, self.k_star),
            ));
        }
        Ok(())
    }

    /// `ln(β/(1−α))`.
    pub fn log_a(&self) -> f64 {
        self.beta.ln() - (-self.alpha).ln_1p()
    }

    /// `ln((1−β)/α)`.
    pub fn log_b(&self) -> f64 {
        (-self.beta).ln_1p() - self.alpha.ln()
    }

    pub fn log_lr(&self, n_seen: u64, defects: u64) -> f64 {
        llr_unchecked(n_seen, defects, self.p0, self.p1)
    }

    /// Verdict for a state reached after at least one item.
    pub fn decide(&self, n_seen: u64, defects: u64) -> Verdict {
        let log_lr = self.log_lr(n_seen, defects);
        if defects >= self.k_star {
            Verdict::Reject
        } else if log_lr <= self.log_a() {
            Verdict::Accept
        } else if log_lr >= self.log_b() {
            Verdict::Reject
        } else if n_seen >= self.n_max {
            if defects < self.k_star {
                Verdict::TruncatedAccept
            } else {
                Verdict::TruncatedReject
            }
        } else {
            Verdict::Continue
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SprtState {
    pub n_seen: u64,
    pub defects: u64,
    pub log_lr: f64,
    pub verdict: Verdict,
}

impl Default for SprtState {
    fn default() -> Self {
        Self::new()
    }
}

impl SprtState {
    pub fn new() -> Self {
        Self {
            n_seen: 0,
            defects: 0,
            log_lr: 0.0,
            verdict: Verdict::Continue,
        }
    }

    /// Λ itself; under- or overflows for long runs.
    pub fn likelihood_ratio(&self) -> f64 {
        self.log_lr.exp()
    }

    /// Records one inspected item and applies the stopping rules.
    ///
    /// The log-likelihood ratio is re-evaluated from the counts, so states
    /// with equal `(n_seen, defects)` are bit-identical whatever the order of
    /// the results that produced them.
    pub fn step(&self, config: &SprtConfig, result: Observation) -> Result<SprtState> {
        if self.verdict.is_final() {
            return Err(Error::SteppedAfterStop(self.verdict.to_string()));
        }
        if self.n_seen >= config.n_max {
            return Err(Error::invalid(
                "n_seen",
                format!("already at the sample-size limit {}", config.n_max),
            ));
        }
        let n_seen = self.n_seen + 1;
        let defects = self.defects + u64::from(result == Observation::Defect);
        Ok(SprtState {
            n_seen,
            defects,
            log_lr: config.log_lr(n_seen, defects),
            verdict: config.decide(n_seen, defects),
        })
    }
}

/// Feeds `results` through [`SprtState::step`] until a verdict is reached
/// or the list runs out. Returns the final state and the number of items
/// consumed; a `Continue` state means the list was shorter than the
/// stopping time.
pub fn run_sequence(config: &SprtConfig, results: &[Observation]) -> Result<(SprtState, usize)> {
    config.validate()?;
    if results.is_empty() {
        return Err(Error::invalid("results", "must contain at least one item"));
    }
    let mut state = SprtState::new();
    for (i, &r) in results.iter().enumerate() {
        state = state.step(config, r)?;
        if state.verdict.is_final() {
            return Ok((state, i + 1));
        }
    }
    Ok((state, results.len()))
}

/// Like [`run_sequence`] but errors when the list ends before a verdict.
pub fn run_to_verdict(config: &SprtConfig, results: &[Observation]) -> Result<(SprtState, usize)> {
    let (state, consumed) = run_sequence(config, results)?;
    if state.verdict.is_final() {
        Ok((state, consumed))
    } else {
        Err(Error::ExhaustedWithoutVerdict { consumed })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Performance {
    pub accept_prob: f64,
    pub reject_prob: f64,
    /// Expected number of items inspected.
    pub asn: f64,
    /// `stop_prob[i]` is the probability of stopping after exactly `i` items.
    pub stop_prob: Vec<f64>,
}

/// Exact operating characteristic and average sample number of the
/// truncated test when each item is defective with probability `true_p`.
///
/// Propagates the probability mass of every reachable `(n_seen, defects)`
/// state forward one item at a time; stopped states absorb their mass.
pub fn exact_performance(config: &SprtConfig, true_p: f64) -> Result<Performance> {
    config.validate()?;
    check_open_unit("true_p", true_p)?;
    let q = 1.0 - true_p;
    let n_max = config.n_max as usize;
    let mut stop_prob = vec![0.0; n_max + 1];
    let mut accept = 0.0;
    let mut reject = 0.0;
    // Mass of live states at the current depth, indexed by defect count.
    let mut live = vec![1.0];
    #[allow(clippy::needless_range_loop)]
    for n in 1..=n_max {
        let mut next = vec![0.0; live.len() + 1];
        for (d, &mass) in live.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            next[d] += mass * q;
            next[d + 1] += mass * true_p;
        }
        for (d, mass) in next.iter_mut().enumerate() {
            if *mass == 0.0 {
                continue;
            }
            match config.decide(n as u64, d as u64).accepts_lot() {
                None => {}
                Some(accepted) => {
                    if accepted {
                        accept += *mass;
                    } else {
                        reject += *mass;
                    }
                    stop_prob[n] += *mass;
                    *mass = 0.0;
                }
            }
        }
        live = next;
        if live.iter().all(|&m| m == 0.0) {
            break;
        }
    }
    let asn = stop_prob
        .iter()
        .enumerate()
        .map(|(i, p)| i as f64 * p)
        .sum();
    Ok(Performance {
        accept_prob: accept,
        reject_prob: reject,
        asn,
        stop_prob,
    })
}
