//! Command-line front end.
//!
//! Exit codes: 0 success, 2 validation failure, 3 internal error.

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::plans::{
    acceptance_threshold, export_csv, plan_sweep_with_z, plan_table, rejection_threshold,
    sample_size, z_half_alpha, CaseId, FixedPlan, PlanParams, ThresholdKind,
};
use crate::sim::{
    compare_plans, fixed_plan_accept_probability, simulate_fixed_plan_with,
    simulate_sequential_with, LotModel, Procedure, SimConfig, SimReport,
};
use crate::sprt::{exact_performance, SprtConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "seqsample", version, about = "Acceptance-sampling plan design and validation")]
pub struct Cli {
    /// Print machine-readable JSON instead of a summary line.
    #[arg(long, global = true)]
    pub json: bool,
    /// Directory for written artifacts.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Master seed for simulations.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Rejection,
    Acceptance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableCase {
    #[value(name = "I")]
    I,
    #[value(name = "II")]
    II,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Design a fixed plan: sample size and Poisson threshold.
    Design {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, allow_negative_numbers = true)]
        p0: f64,
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
        /// |Z_{α/2}|; defaults to the exact normal quantile.
        #[arg(long, allow_negative_numbers = true)]
        z: Option<f64>,
        #[arg(long, value_enum, default_value = "rejection")]
        mode: Mode,
        /// Required with `--mode acceptance`.
        #[arg(long, allow_negative_numbers = true)]
        reliability: Option<f64>,
    },
    /// Sample size and threshold over a tolerance grid (CSV `delta,n,k_star`).
    Sweep {
        #[arg(long, allow_negative_numbers = true)]
        p0: f64,
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, allow_negative_numbers = true)]
        delta_min: f64,
        #[arg(long, allow_negative_numbers = true)]
        delta_max: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long, allow_negative_numbers = true)]
        z: Option<f64>,
    },
    /// Export an embedded batch-size × AQL plan table as CSV.
    Tables {
        #[arg(long, value_enum)]
        case: TableCase,
    },
    /// Monte Carlo simulation of a fixed plan or a sequential test.
    Simulate {
        #[command(subcommand)]
        procedure: SimulateProcedure,
    },
    /// Welch t-test on the sample counts of two simulation reports.
    Compare { fixed: PathBuf, sequential: PathBuf },
    /// Run the inspection-session HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        #[arg(long, default_value = "sessions")]
        data_dir: PathBuf,
        /// Built console bundle to serve at `/`.
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// Finite lot size; omit for an infinite (binomial) lot.
    #[arg(long)]
    pub lot_size: Option<u64>,
    /// Defective items in a finite lot.
    #[arg(long, conflicts_with = "rate")]
    pub defectives: Option<u64>,
    /// Defective rate; a finite lot gets round(size·rate) defectives.
    #[arg(long, allow_negative_numbers = true)]
    pub rate: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub reps: u64,
    /// Worker threads (result is independent of this).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Artifact file stem.
    #[arg(long)]
    pub name: Option<String>,
    /// Omit per-replication counts from the report.
    #[arg(long)]
    pub no_per_rep: bool,
}

#[derive(Debug, Subcommand)]
pub enum SimulateProcedure {
    /// A fixed (n, k*) plan.
    Fixed {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k_star: u64,
        #[arg(long, value_enum, default_value = "rejection")]
        mode: Mode,
        /// Nominal rate recorded as the plan's λ = n·p0.
        #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
        p0: f64,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// The truncated sequential probability ratio test.
    Sprt {
        #[arg(long, allow_negative_numbers = true)]
        p0: f64,
        /// Defaults to p0 + delta.
        #[arg(long, allow_negative_numbers = true)]
        p1: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        delta: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long)]
        n_max: u64,
        #[arg(long)]
        k_star: u64,
        #[command(flatten)]
        sim: SimArgs,
    },
}

/// Result of one command invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutcome {
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
    /// Human-readable summary line.
    pub summary: String,
    /// What goes to stdout: the summary, or a JSON document with `--json`.
    pub output: String,
}

struct Ctx {
    json: bool,
    out: PathBuf,
    seed: u64,
    artifacts: Vec<PathBuf>,
}

impl Ctx {
    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        fs::create_dir_all(&self.out)?;
        let path = self.out.join(name);
        fs::write(&path, contents)?;
        self.artifacts.push(path);
        Ok(())
    }

    fn finish<T: Serialize>(self, summary: String, doc: &T) -> Result<CommandOutcome> {
        let output = if self.json {
            serde_json::to_string_pretty(doc)?
        } else {
            summary.clone()
        };
        Ok(CommandOutcome {
            exit_code: EXIT_OK,
            artifacts: self.artifacts,
            summary,
            output,
        })
    }
}

fn flag_name(field: &str) -> String {
    // Library field names that differ from their flag.
    let flag = match field {
        "replications" => "reps",
        other => other,
    };
    format!("--{}", flag.replace('_', "-"))
}

fn failure(err: &Error) -> CommandOutcome {
    let (code, summary) = match err {
        Error::InvalidParameter { field, message } => (
            EXIT_VALIDATION,
            format!("error: invalid value for `{}`: {message}", flag_name(field)),
        ),
        e if e.is_validation() => (EXIT_VALIDATION, format!("error: {e}")),
        e => (EXIT_INTERNAL, format!("internal error: {e}")),
    };
    CommandOutcome {
        exit_code: code,
        artifacts: Vec::new(),
        output: summary.clone(),
        summary,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> CommandOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let text = e.render().to_string();
            CommandOutcome {
                exit_code: code,
                artifacts: Vec::new(),
                summary: text.lines().next().unwrap_or_default().to_owned(),
                output: text,
            }
        }
    }
}

pub fn run(cli: Cli) -> CommandOutcome {
    let ctx = Ctx {
        json: cli.json,
        out: cli.out,
        seed: cli.seed,
        artifacts: Vec::new(),
    };
    let result = match cli.command {
        Command::Design {
            alpha,
            p0,
            delta,
            z,
            mode,
            reliability,
        } => cmd_design(ctx, alpha, p0, delta, z, mode, reliability),
        Command::Sweep {
            p0,
            alpha,
            delta_min,
            delta_max,
            steps,
            z,
        } => cmd_sweep(ctx, p0, alpha, delta_min, delta_max, steps, z),
        Command::Tables { case } => cmd_tables(ctx, case),
        Command::Simulate { procedure } => cmd_simulate(ctx, procedure),
        Command::Compare { fixed, sequential } => cmd_compare(ctx, &fixed, &sequential),
        Command::Serve {
            bind,
            data_dir,
            static_dir,
        } => cmd_serve(ctx, bind, data_dir, static_dir),
    };
    result.unwrap_or_else(|e| failure(&e))
}

#[derive(Debug, Serialize)]
struct DesignDoc {
    params: PlanParams,
    plan: FixedPlan,
    decision: String,
}

fn decision_text(plan: &FixedPlan) -> String {
    match plan.kind {
        ThresholdKind::RejectionThreshold => format!(
            "inspect {} items; reject the lot when defects >= {}",
            plan.n, plan.k_star
        ),
        ThresholdKind::AcceptanceThreshold => format!(
            "inspect {} items; accept the lot when defects < {}",
            plan.n, plan.k_star
        ),
    }
}

fn cmd_design(
    mut ctx: Ctx,
    alpha: f64,
    p0: f64,
    delta: f64,
    z: Option<f64>,
    mode: Mode,
    reliability: Option<f64>,
) -> Result<CommandOutcome> {
    let z = match z {
        Some(z) => z,
        None => z_half_alpha(alpha)?,
    };
    let params = PlanParams::new(alpha, p0, delta, z)?;
    let n = sample_size(&params)?;
    let plan = match mode {
        Mode::Rejection => rejection_threshold(n, p0, alpha)?,
        Mode::Acceptance => {
            let reliability = reliability.ok_or_else(|| {
                Error::invalid("reliability", "required with --mode acceptance")
            })?;
            acceptance_threshold(n, p0, reliability)?
        }
    };
    let doc = DesignDoc {
        params,
        plan,
        decision: decision_text(&plan),
    };
    ctx.write("plan.json", &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    let summary = format!("n={} k*={}: {}", plan.n, plan.k_star, doc.decision);
    ctx.finish(summary, &doc)
}

/// Evenly spaced grid, rounded to 12 significant decimals so that grid
/// points like 0.05 print as written.
fn delta_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    (0..steps)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (steps - 1) as f64;
            let scale = 10f64.powi(12 - x.abs().log10().ceil() as i32);
            (x * scale).round() / scale
        })
        .collect()
}

fn cmd_sweep(
    mut ctx: Ctx,
    p0: f64,
    alpha: f64,
    delta_min: f64,
    delta_max: f64,
    steps: usize,
    z: Option<f64>,
) -> Result<CommandOutcome> {
    if steps < 2 {
        return Err(Error::invalid("steps", "must be at least 2"));
    }
    // Written to reject NaN as well.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(delta_min < delta_max) {
        return Err(Error::invalid("delta_min", "must be less than --delta-max"));
    }
    for (field, v) in [("delta_min", delta_min), ("delta_max", delta_max)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::invalid(field, format!("must lie in (0, 1), got {v}")));
        }
    }
    let z = match z {
        Some(z) => z,
        None => z_half_alpha(alpha)?,
    };
    let points = plan_sweep_with_z(p0, alpha, z, &delta_grid(delta_min, delta_max, steps))?;
    let mut csv = String::from("delta,n,k_star\n");
    for p in &points {
        csv.push_str(&format!("{},{},{}\n", p.delta, p.n, p.k_star));
    }
    ctx.write("sweep.csv", &csv)?;
    let first = points.first().expect("steps ≥ 2");
    let last = points.last().expect("steps ≥ 2");
    let summary = format!(
        "{} tolerances: n {}→{}, k* {}→{}",
        points.len(),
        first.n,
        last.n,
        first.k_star,
        last.k_star
    );
    ctx.finish(summary, &points)
}

fn cmd_tables(mut ctx: Ctx, case: TableCase) -> Result<CommandOutcome> {
    let (case_id, stem) = match case {
        TableCase::I => (CaseId::CaseI, "table_case_I.csv"),
        TableCase::II => (CaseId::CaseII, "table_case_II.csv"),
    };
    let csv = export_csv(Some(case_id));
    ctx.write(stem, &csv)?;
    let entries: Vec<_> = plan_table()
        .iter()
        .filter(|e| e.case_id == case_id)
        .collect();
    let blanks = entries.iter().filter(|e| e.cell.is_none()).count();
    let summary = format!(
        "{case_id}: {} cells ({blanks} blank) written to {}",
        entries.len(),
        ctx.out.join(stem).display()
    );
    ctx.finish(summary, &entries)
}

fn build_lot(sim: &SimArgs) -> Result<LotModel> {
    match (sim.lot_size, sim.defectives, sim.rate) {
        (Some(size), Some(d), None) => LotModel::finite(size, d),
        (Some(size), None, Some(rate)) => LotModel::finite_from_rate(size, rate),
        (Some(_), None, None) => Err(Error::invalid(
            "defectives",
            "a finite lot needs --defectives or --rate",
        )),
        (None, None, Some(rate)) => LotModel::infinite(rate),
        (None, Some(_), _) => Err(Error::invalid("lot_size", "--defectives needs --lot-size")),
        (None, None, None) => Err(Error::invalid("rate", "give --rate or --lot-size")),
        (_, Some(_), Some(_)) => Err(Error::invalid("rate", "conflicts with --defectives")),
    }
}

fn sim_config(seed: u64, sim: &SimArgs) -> Result<SimConfig> {
    if let Some(0) = sim.workers {
        return Err(Error::invalid("workers", "must be at least 1"));
    }
    let mut config = SimConfig::new(sim.reps, seed, build_lot(sim)?)?;
    config.retain_per_rep = !sim.no_per_rep;
    Ok(config)
}

fn cmd_simulate(mut ctx: Ctx, procedure: SimulateProcedure) -> Result<CommandOutcome> {
    let (report, stem, oracle) = match procedure {
        SimulateProcedure::Fixed {
            n,
            k_star,
            mode,
            p0,
            sim,
        } => {
            let kind = match mode {
                Mode::Rejection => ThresholdKind::RejectionThreshold,
                Mode::Acceptance => ThresholdKind::AcceptanceThreshold,
            };
            let plan = FixedPlan::new(n, k_star, kind, p0)?;
            let config = sim_config(ctx.seed, &sim)?;
            let report = simulate_fixed_plan_with(&plan, &config, sim.workers)?;
            let exact = fixed_plan_accept_probability(&plan, &config.lot)?;
            (report, sim.name.unwrap_or_else(|| "fixed".into()), exact)
        }
        SimulateProcedure::Sprt {
            p0,
            p1,
            delta,
            alpha,
            beta,
            n_max,
            k_star,
            sim,
        } => {
            let p1 = match (p1, delta) {
                (Some(p1), _) => p1,
                (None, Some(d)) => p0 + d,
                (None, None) => return Err(Error::invalid("p1", "give --p1 or --delta")),
            };
            let config = SprtConfig::new(p0, p1, alpha, beta, n_max, k_star)?;
            let sim_cfg = sim_config(ctx.seed, &sim)?;
            let report = simulate_sequential_with(&config, &sim_cfg, sim.workers)?;
            let exact = match sim_cfg.lot {
                LotModel::Infinite { rate } => exact_performance(&config, rate)?.accept_prob,
                // Without-replacement draws have no closed form here.
                LotModel::Finite { .. } => f64::NAN,
            };
            (report, sim.name.unwrap_or_else(|| "sequential".into()), exact)
        }
    };
    ctx.write(&format!("{stem}_report.json"), &report.to_json()?)?;
    ctx.write(&format!("{stem}_histogram.csv"), &report.histogram_csv())?;
    let mut summary = format!(
        "{} replications: accept rate {:.6}, mean sample count {:.4}",
        report.replications, report.accept_rate, report.sample_count_mean
    );
    if oracle.is_finite() {
        summary.push_str(&format!(
            ", exact accept probability {oracle:.6} (|diff| {:.6})",
            (report.accept_rate - oracle).abs()
        ));
    }
    let doc = SummaryDoc {
        report: &report,
        exact_accept_prob: oracle.is_finite().then_some(oracle),
    };
    ctx.finish(summary, &doc)
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    #[serde(flatten)]
    report: &'a SimReport,
    exact_accept_prob: Option<f64>,
}

fn read_report(path: &Path) -> Result<SimReport> {
    let text = fs::read_to_string(path).map_err(|e| {
        Error::invalid(
            "report",
            format!("cannot read {}: {e}", path.display()),
        )
    })?;
    SimReport::from_json(&text).map_err(|e| {
        Error::invalid("report", format!("{} is not a report: {e}", path.display()))
    })
}

fn cmd_compare(mut ctx: Ctx, fixed: &Path, sequential: &Path) -> Result<CommandOutcome> {
    let a = read_report(fixed)?;
    let b = read_report(sequential)?;
    let describe = |r: &SimReport| match r.procedure {
        Procedure::FixedPlan(_) => "fixed",
        Procedure::Sprt(_) => "sequential",
    };
    let cmp = compare_plans(&a, &b).map_err(|e| match e {
        Error::MissingPerRepData(_) => Error::MissingPerRepData(
            if a.per_rep_counts.is_none() { fixed } else { sequential }
                .display()
                .to_string(),
        ),
        other => other,
    })?;
    ctx.write("comparison.json", &(serde_json::to_string_pretty(&cmp)? + "\n"))?;
    let summary = format!(
        "{} mean {:.4} vs {} mean {:.4}: difference {:.4}, t={:.4}, df={:.2}, p={:.3e}",
        describe(&a),
        cmp.fixed_mean,
        describe(&b),
        cmp.sequential_mean,
        cmp.mean_difference,
        cmp.ttest.t_statistic,
        cmp.ttest.degrees_of_freedom,
        cmp.ttest.p_value
    );
    ctx.finish(summary, &cmp)
}

fn cmd_serve(
    ctx: Ctx,
    bind: SocketAddr,
    data_dir: PathBuf,
    static_dir: Option<PathBuf>,
) -> Result<CommandOutcome> {
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(crate::service::serve(bind, data_dir, static_dir))?;
    ctx.finish("service stopped".into(), &serde_json::json!({"status": "stopped"}))
}
