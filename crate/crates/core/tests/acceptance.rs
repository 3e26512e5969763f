//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

mod common;

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use common::http::Server;
use common::{
    enumerate_sprt, hypergeometric_upper_tail, poisson_cdf_oracle, transcribed_cell, upper_tail_oracle, AQLS,
    BATCH_RANGES,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seqsample::plans::*;
use seqsample::sim::*;
use seqsample::sprt::*;
use serde_json::{json, Value};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {{
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    }};
}

fn sample_sizes() -> Outcome {
    let a = sample_size(&PlanParams::new(0.05, 0.1, 0.05, 1.96).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let b = sample_size(&PlanParams::new(0.1, 0.1, 0.05, 1.645).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    ensure!(a == 139 && b == 98, "got n={a} and n={b}, want 139 and 98");
    Ok("n=139 (z=1.96), n=98 (z=1.645)".into())
}

fn thresholds() -> Outcome {
    let scan_reject = (0..=139u64).find(|&k| upper_tail_oracle(k, 13.9) <= 0.05);
    let scan_accept = (1..=98u64).find(|&k| poisson_cdf_oracle(k - 1, 9.8) >= 0.90);
    ensure!(scan_reject == Some(21), "oracle scan gives rejection k*={scan_reject:?}, not 21");
    ensure!(
        scan_accept == Some(15),
        "oracle scan gives acceptance k*={scan_accept:?} under P(X ≤ k−1) ≥ 0.90, not 15"
    );
    let r = rejection_threshold(139, 0.1, 0.05).map_err(|e| e.to_string())?.k_star;
    let a = acceptance_threshold(98, 0.1, 0.90).map_err(|e| e.to_string())?.k_star;
    ensure!(r == 21 && a == 15, "library gives k*={r} and k*={a}");
    Ok("k*=21 and k*=15, both confirmed by oracle scan".into())
}

fn plan_table_lookups() -> Outcome {
    let mut triples = vec![(100u64, 3usize, false), (5000, 3, false)];
    let mut rng = ChaCha8Rng::seed_from_u64(4_5);
    while triples.len() < 20 {
        let row = rng.random_range(0..BATCH_RANGES.len());
        let (lo, hi) = BATCH_RANGES[row];
        let batch = rng.random_range(lo..=hi.unwrap_or(lo + 100_000));
        triples.push((batch, rng.random_range(0..4), rng.random_bool(0.5)));
    }
    // Make sure blanks from both tables are exercised.
    triples.extend([(800, 0, false), (2000, 1, false), (5000, 3, true), (300, 0, true)]);
    let mut blanks = 0;
    for &(batch, aql_idx, case_ii) in &triples {
        let case = if case_ii { CaseId::CaseII } else { CaseId::CaseI };
        let got = lookup_plan(batch, AQLS[aql_idx], case);
        match (transcribed_cell(case_ii, batch, aql_idx), got) {
            (Some((n, c)), Ok(cell)) => {
                ensure!(cell.n == n && cell.c == c, "{batch} {} {case}: got {cell:?}, want ({n},{c})", AQLS[aql_idx])
            }
            (None, Err(seqsample::Error::PlanNotFound { .. })) => blanks += 1,
            (want, got) => return Err(format!("{batch} {} {case}: got {got:?}, want {want:?}", AQLS[aql_idx])),
        }
    }
    let first = lookup_plan(100, 0.1, CaseId::CaseI).map_err(|e| e.to_string())?;
    let last = lookup_plan(5000, 0.1, CaseId::CaseI).map_err(|e| e.to_string())?;
    ensure!((first.n, first.c, last.n, last.c) == (20, 5, 139, 21), "anchor cells wrong");
    Ok(format!("{} lookups match, {blanks} blanks not found", triples.len()))
}

fn poisson_accuracy() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for &lambda in &[0.5, 9.8, 13.9, 100.0, 1000.0] {
        let sd = f64::sqrt(lambda);
        let lo = (lambda - 6.0 * sd).max(0.0) as u64;
        let hi = (lambda + 6.0 * sd) as u64 + 2;
        for k in lo..=hi {
            let got = poisson_cdf(k, lambda).map_err(|e| e.to_string())?;
            let err = (got - poisson_cdf_oracle(k, lambda)).abs();
            ensure!(err <= 1e-12, "λ={lambda} k={k}: error {err:e}");
            worst = worst.max(err);
            checked += 1;
        }
    }
    Ok(format!("{checked} points, max abs error {worst:.2e}"))
}

fn sprt_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let mut worst: f64 = 0.0;
    for _ in 0..25 {
        let p0: f64 = rng.random_range(0.02..0.4);
        let p1 = (p0 + rng.random_range(0.02..0.4f64)).min(0.98);
        let n_max = rng.random_range(1..=12);
        let c = SprtConfig::new(
            p0,
            p1,
            rng.random_range(0.01..0.3),
            rng.random_range(0.01..0.3),
            n_max,
            rng.random_range(0..=n_max),
        )
        .map_err(|e| e.to_string())?;
        let p = rng.random_range(0.01..0.99);
        let dp = exact_performance(&c, p).map_err(|e| e.to_string())?;
        let brute = enumerate_sprt(&c, p);
        for (a, b) in [
            (dp.accept_prob, brute.accept_prob),
            (dp.reject_prob, brute.reject_prob),
            (dp.asn, brute.asn),
        ] {
            let err = (a - b).abs();
            ensure!(err <= 1e-10, "{c:?} at p={p}: {a} vs {b}");
            worst = worst.max(err);
        }
    }
    Ok(format!("25 configs, max abs difference {worst:.2e}"))
}

fn rejection_rate_stability() -> Outcome {
    let plan = FixedPlan::new(139, 21, ThresholdKind::RejectionThreshold, 0.1).map_err(|e| e.to_string())?;
    let lot = LotModel::finite(10_000, 1000).map_err(|e| e.to_string())?;
    let exact = hypergeometric_upper_tail(10_000, 1000, 139, 21);
    let mut rates = Vec::new();
    for reps in (3000..=9000).step_by(1000) {
        let sim = SimConfig::new(reps, 42, lot).map_err(|e| e.to_string())?;
        let r = simulate_fixed_plan(&plan, &sim).map_err(|e| e.to_string())?;
        ensure!(
            (r.reject_rate - exact).abs() <= 0.02,
            "reps={reps}: rejection rate {} vs exact {exact}",
            r.reject_rate
        );
        rates.push(r.reject_rate);
    }
    let span = rates.iter().cloned().fold(f64::MIN, f64::max) - rates.iter().cloned().fold(f64::MAX, f64::min);
    ensure!(span <= 0.02, "estimates span {span}");
    Ok(format!("exact {exact:.5}, estimates {rates:.4?}, span {span:.4}"))
}

fn sample_count_reduction() -> Outcome {
    let err = |e: seqsample::Error| e.to_string();
    let lot = LotModel::infinite(0.1).map_err(err)?;
    let sim = SimConfig::new(10_000, 2024, lot).map_err(err)?;
    let plan = FixedPlan::new(139, 21, ThresholdKind::RejectionThreshold, 0.1).map_err(err)?;
    let config = SprtConfig::new(0.1, 0.15, 0.05, 0.05, 139, 21).map_err(err)?;
    let fixed = simulate_fixed_plan(&plan, &sim).map_err(err)?;
    let seq = simulate_sequential(&config, &sim).map_err(err)?;
    let cmp = compare_plans(&fixed, &seq).map_err(err)?;
    let asn = exact_performance(&config, 0.1).map_err(err)?.asn;
    ensure!(seq.sample_count_mean < fixed.sample_count_mean, "sequential mean not smaller");
    ensure!(cmp.mean_difference > 0.0, "difference {}", cmp.mean_difference);
    ensure!(cmp.ttest.p_value < 0.01, "p={}", cmp.ttest.p_value);
    let z = (seq.sample_count_mean - asn) / seq.sample_count_se();
    ensure!(z.abs() <= 3.0, "sequential mean {} vs ASN {asn}: {z:.2} SE", seq.sample_count_mean);
    Ok(format!(
        "fixed mean {:.3}, sequential mean {:.3} (ASN {asn:.3}, {z:+.2} SE), p={:.1e}",
        fixed.sample_count_mean, seq.sample_count_mean, cmp.ttest.p_value
    ))
}

fn cli(out: &Path, args: &[&str]) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_seqsample"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    Ok(())
}

fn determinism() -> Outcome {
    let runs = [
        (
            "fixed",
            vec!["--seed", "9", "simulate", "fixed", "--n", "139", "--k-star", "21", "--lot-size", "10000", "--defectives", "1000", "--reps", "5000"],
        ),
        (
            "sequential",
            vec![
                "--seed", "9", "simulate", "sprt", "--p0", "0.1", "--p1", "0.15", "--alpha", "0.05", "--beta", "0.05",
                "--n-max", "139", "--k-star", "21", "--rate", "0.1", "--reps", "5000",
            ],
        ),
    ];
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    for (stem, args) in &runs {
        let mut reference: Option<Vec<Vec<u8>>> = None;
        for (i, workers) in ["1", "1", "4", "4"].iter().enumerate() {
            let dir = root.path().join(format!("{stem}{i}"));
            let mut a = args.clone();
            a.extend_from_slice(&["--workers", workers]);
            cli(&dir, &a)?;
            let files: Vec<Vec<u8>> = ["report.json", "histogram.csv"]
                .iter()
                .map(|f| fs::read(dir.join(format!("{stem}_{f}"))).unwrap())
                .collect();
            match &reference {
                None => reference = Some(files),
                Some(r) => ensure!(*r == files, "{stem} artifacts differ with {workers} workers"),
            }
            compared += 1;
        }
    }
    Ok(format!("{compared} runs, artifacts byte-identical across workers 1 and 4"))
}

/// Scripted requests for the replay check.
fn replay_script() -> Vec<&'static str> {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    (0..199)
        .map(|_| match rng.random_range(0..100) {
            0..12 => "defect",
            12..27 => "undo",
            _ => "pass",
        })
        .collect()
}

fn strip_times(mut v: Value) -> Value {
    if let Some(obj) = v.as_object_mut() {
        obj.remove("created_at");
        obj.remove("id");
    }
    if let Some(events) = v.get_mut("events").and_then(Value::as_array_mut) {
        for e in events {
            e.as_object_mut().unwrap().remove("recorded_at");
        }
    }
    v
}

const REPLAY_CONFIG: &str = r#"{"p0":0.1,"p1":0.15,"alpha":0.01,"beta":0.01,"n_max":400,"k_star":60}"#;

/// Runs the script (creation plus 199 steps plus a final read), restarting
/// the service before the listed request indices. Returns every response.
fn run_script(script: &[&str], kill_before: &[usize]) -> Result<Vec<(u16, Value)>, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut server = Server::start(dir.path());
    let created = server.post("/sessions", REPLAY_CONFIG);
    ensure!(created.status == 201, "create failed: {}", created.body);
    let id = created.body["id"].as_str().unwrap().to_owned();
    let mut responses = vec![(created.status, strip_times(created.body))];
    for (i, step) in script.iter().enumerate() {
        if kill_before.contains(&i) {
            server.kill();
            server = Server::start(dir.path());
        }
        let r = match *step {
            "undo" => server.post(&format!("/sessions/{id}/undo"), ""),
            token => server.post(&format!("/sessions/{id}/results"), &json!({ "result": token }).to_string()),
        };
        responses.push((r.status, strip_times(r.body)));
    }
    let last = server.get(&format!("/sessions/{id}"));
    responses.push((last.status, strip_times(last.body)));
    Ok(responses)
}

fn session_replay() -> Outcome {
    let script = replay_script();
    let plain = run_script(&script, &[])?;
    let killed = run_script(&script, &[67, 133])?;
    ensure!(plain.len() == 201, "expected 201 responses");
    for (i, (a, b)) in plain.iter().zip(&killed).enumerate() {
        ensure!(a == b, "response {i} differs after restart: {a:?} vs {b:?}");
    }

    // Direct replay through the engine with the same undo semantics.
    let config: SprtConfig = serde_json::from_str(REPLAY_CONFIG).unwrap();
    let mut log: Vec<Observation> = Vec::new();
    let mut state = SprtState::new();
    let mut conflicts = 0;
    for step in &script {
        match *step {
            "undo" if log.is_empty() => conflicts += 1,
            "undo" => {
                log.pop();
                state = replay(&config, &log);
            }
            _ if state.verdict.is_final() => conflicts += 1,
            token => {
                let obs: Observation = token.parse().unwrap();
                state = state.step(&config, obs).unwrap();
                log.push(obs);
            }
        }
    }
    let (status, view) = plain.last().unwrap();
    ensure!(*status == 200, "final read failed");
    let server_state: SprtState = serde_json::from_value(view.clone()).map_err(|e| e.to_string())?;
    ensure!(server_state == state, "service {server_state:?} vs engine {state:?}");
    ensure!(view["events"].as_array().unwrap().len() == log.len(), "event log length differs");
    let conflicts_seen = plain.iter().filter(|(s, _)| *s == 409).count();
    ensure!(conflicts_seen == conflicts, "{conflicts_seen} vs {conflicts} conflicts");
    Ok(format!(
        "201 requests, 2 restarts; final n_seen={} defects={} verdict={}",
        state.n_seen, state.defects, state.verdict
    ))
}

fn replay(config: &SprtConfig, log: &[Observation]) -> SprtState {
    log.iter().fold(SprtState::new(), |s, &o| s.step(config, o).unwrap())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("sample sizes 139 and 98", sample_sizes),
        ("thresholds 21 and 15 confirmed by oracle scan", thresholds),
        ("embedded AQL tables", plan_table_lookups),
        ("Poisson CDF accuracy", poisson_accuracy),
        ("sequential test exact performance vs enumeration", sprt_oracle),
        ("simulated rejection rate stable across replication counts", rejection_rate_stability),
        ("sequential test reduces sample count", sample_count_reduction),
        ("simulation determinism across worker counts", determinism),
        ("session replay across restarts", session_replay),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} ({secs:.2}s)"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} ({secs:.2}s)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
