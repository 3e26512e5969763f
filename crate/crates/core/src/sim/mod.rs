//! Seeded Monte Carlo simulation of fixed and sequential inspection.
//!
//! Every replication draws from its own ChaCha8 stream selected by
//! `(seed, replication index)`, so a report is a pure function of its
//! configuration whatever the worker count. Per-replication outcomes are
//! collected in index order and reduced with exact integer sums.

mod exact;
mod lot;
mod ttest;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plans::{FixedPlan, ThresholdKind};
use crate::sprt::{Observation, SprtConfig, SprtState};

pub use exact::{defect_count_pmf, fixed_plan_accept_probability};
pub use lot::{draw_defects, LotModel, LotSampler};
pub use ttest::{student_t_two_sided, welch_t, TTestResult};

/// Random stream for one replication.
pub fn replication_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub replications: u64,
    pub seed: u64,
    pub lot: LotModel,
    /// Keep every replication's sample count in the report.
    #[serde(default = "default_true")]
    pub retain_per_rep: bool,
}

fn default_true() -> bool {
    true
}

impl SimConfig {
    pub fn new(replications: u64, seed: u64, lot: LotModel) -> Result<Self> {
        let config = Self {
            replications,
            seed,
            lot,
            retain_per_rep: true,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::invalid("replications", "must be at least 1"));
        }
        self.lot.validate()
    }
}

/// What was simulated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Procedure {
    FixedPlan(FixedPlan),
    Sprt(SprtConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub replications: u64,
    pub seed: u64,
    pub accept_rate: f64,
    pub reject_rate: f64,
    pub sample_count_mean: f64,
    /// Unbiased; 0 for a single replication.
    pub sample_count_var: f64,
    /// Stopping index → number of replications that stopped there.
    pub stopping_histogram: BTreeMap<u64, u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_rep_counts: Option<Vec<u64>>,
    pub procedure: Procedure,
    pub lot: LotModel,
}

impl SimReport {
    /// Standard error of `sample_count_mean`.
    pub fn sample_count_se(&self) -> f64 {
        (self.sample_count_var / self.replications as f64).sqrt()
    }

    /// Standard error of `accept_rate`.
    pub fn accept_rate_se(&self) -> f64 {
        (self.accept_rate * (1.0 - self.accept_rate) / self.replications as f64).sqrt()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Two-column CSV `stop_index,count`.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("stop_index,count\n");
        for (idx, count) in &self.stopping_histogram {
            out.push_str(&format!("{idx},{count}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct Outcome {
    count: u64,
    accepted: bool,
}

fn reduce(
    outcomes: Vec<Outcome>,
    sim: &SimConfig,
    procedure: Procedure,
) -> SimReport {
    let reps = outcomes.len() as u64;
    let mut histogram = BTreeMap::new();
    let mut accepted = 0u64;
    let mut sum = 0u128;
    let mut sum_sq = 0u128;
    for o in &outcomes {
        *histogram.entry(o.count).or_insert(0u64) += 1;
        accepted += u64::from(o.accepted);
        sum += u128::from(o.count);
        sum_sq += u128::from(o.count) * u128::from(o.count);
    }
    let accept_rate = accepted as f64 / reps as f64;
    let mean = sum as f64 / reps as f64;
    let var = if reps > 1 {
        let r = u128::from(reps);
        // n·Σx² − (Σx)² is exact in integers.
        let numer = r * sum_sq - sum * sum;
        numer as f64 / (r * (r - 1)) as f64
    } else {
        0.0
    };
    SimReport {
        replications: reps,
        seed: sim.seed,
        accept_rate,
        reject_rate: (reps - accepted) as f64 / reps as f64,
        sample_count_mean: mean,
        sample_count_var: var,
        stopping_histogram: histogram,
        per_rep_counts: sim
            .retain_per_rep
            .then(|| outcomes.iter().map(|o| o.count).collect()),
        procedure,
        lot: sim.lot,
    }
}

fn run_replications<F>(sim: &SimConfig, workers: Option<usize>, one: F) -> Result<Vec<Outcome>>
where
    F: Fn(&mut ChaCha8Rng) -> Result<Outcome> + Sync,
{
    let job = || {
        (0..sim.replications)
            .into_par_iter()
            .map(|rep| one(&mut replication_rng(sim.seed, rep)))
            .collect::<Result<Vec<_>>>()
    };
    match workers {
        None => job(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::invalid("workers", e.to_string()))?
            .install(job),
    }
}

/// Simulates a fixed plan. Items are inspected in order; a rejection-threshold
/// plan stops as soon as `k_star` defects have been seen, so the recorded
/// sample count is the stopping index.
pub fn simulate_fixed_plan(plan: &FixedPlan, sim: &SimConfig) -> Result<SimReport> {
    simulate_fixed_plan_with(plan, sim, None)
}

/// [`simulate_fixed_plan`] on a pool of `workers` threads (`None`: the global
/// pool). The result does not depend on the worker count.
pub fn simulate_fixed_plan_with(
    plan: &FixedPlan,
    sim: &SimConfig,
    workers: Option<usize>,
) -> Result<SimReport> {
    sim.validate()?;
    if plan.n == 0 || plan.k_star > plan.n {
        return Err(Error::invalid("plan", "need n ≥ 1 and k_star ≤ n"));
    }
    sim.lot.check_sample(plan.n)?;
    let stops_early = plan.kind == ThresholdKind::RejectionThreshold;
    let outcomes = run_replications(sim, workers, |rng| {
        let mut sampler = sim.lot.sampler();
        let mut defects = 0;
        for i in 1..=plan.n {
            if sampler.next_item(rng)? == Observation::Defect {
                defects += 1;
            }
            if stops_early && plan.rejects(defects) {
                return Ok(Outcome {
                    count: i,
                    accepted: false,
                });
            }
        }
        Ok(Outcome {
            count: plan.n,
            accepted: plan.accepts(defects),
        })
    })?;
    Ok(reduce(outcomes, sim, Procedure::FixedPlan(*plan)))
}

/// Simulates the truncated sequential test, one item at a time.
pub fn simulate_sequential(config: &SprtConfig, sim: &SimConfig) -> Result<SimReport> {
    simulate_sequential_with(config, sim, None)
}

pub fn simulate_sequential_with(
    config: &SprtConfig,
    sim: &SimConfig,
    workers: Option<usize>,
) -> Result<SimReport> {
    config.validate()?;
    sim.validate()?;
    sim.lot.check_sample(config.n_max)?;
    let outcomes = run_replications(sim, workers, |rng| {
        let mut sampler = sim.lot.sampler();
        let mut state = SprtState::new();
        while !state.verdict.is_final() {
            state = state.step(config, sampler.next_item(rng)?)?;
        }
        Ok(Outcome {
            count: state.n_seen,
            accepted: state.verdict.accepts_lot() == Some(true),
        })
    })?;
    Ok(reduce(outcomes, sim, Procedure::Sprt(*config)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// Fixed-plan mean sample count minus sequential mean sample count.
    pub mean_difference: f64,
    pub fixed_mean: f64,
    pub sequential_mean: f64,
    pub ttest: TTestResult,
}

fn mean_var(counts: &[u64]) -> (f64, f64) {
    let n = counts.len() as u128;
    let sum: u128 = counts.iter().map(|&c| u128::from(c)).sum();
    let sum_sq: u128 = counts.iter().map(|&c| u128::from(c) * u128::from(c)).sum();
    let mean = sum as f64 / n as f64;
    let var = if n > 1 {
        (n * sum_sq - sum * sum) as f64 / (n * (n - 1)) as f64
    } else {
        0.0
    };
    (mean, var)
}

/// Welch's t-test on the per-replication sample counts of two reports.
pub fn compare_plans(fixed: &SimReport, sequential: &SimReport) -> Result<Comparison> {
    let a = fixed
        .per_rep_counts
        .as_deref()
        .ok_or_else(|| Error::MissingPerRepData("fixed".into()))?;
    let b = sequential
        .per_rep_counts
        .as_deref()
        .ok_or_else(|| Error::MissingPerRepData("sequential".into()))?;
    compare_counts(a, b)
}

pub fn compare_counts(fixed: &[u64], sequential: &[u64]) -> Result<Comparison> {
    let (ma, va) = mean_var(fixed);
    let (mb, vb) = mean_var(sequential);
    let ttest = welch_t(ma, va, fixed.len() as u64, mb, vb, sequential.len() as u64)?;
    Ok(Comparison {
        mean_difference: ma - mb,
        fixed_mean: ma,
        sequential_mean: mb,
        ttest,
    })
}
