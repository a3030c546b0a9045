//! End-to-end acceptance criteria. Runs as a plain binary so each verdict is
//! printed; the process exits non-zero if any criterion fails.

use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use offpsf::config::RunConfig;
use offpsf::experiment::{rate_sweep, run_experiment};
use offpsf::fixtures;
use offpsf::verify::{self, pdis_batch_moments, Check};
use offpsf::{exact_value, BehaviorPolicy, PolicyParams, Result};

const SEED: u64 = 20_240_611;

fn is_unbiased_chain3() -> Result<Vec<Check>> {
    let mdp = fixtures::chain3();
    let behavior = BehaviorPolicy::uniform(&mdp);
    let params = PolicyParams::for_mdp(&mdp, vec![1.0, -1.0, 0.5, 0.0, -1.0, 1.0])?;
    let exact = exact_value(&mdp, &params, 200)?;
    let stats = pdis_batch_moments(&mdp, &behavior, &params, 10_000, 50, 200, SEED)?;
    let gap = (stats.mean() - exact).abs();
    let bound = 4.0 * stats.std_error();
    Ok(vec![Check {
        suite: "is-unbiased",
        name: format!("chain3 mean {:.5} vs J {:.5}", stats.mean(), exact),
        statistic: gap,
        bound,
        passed: gap <= bound,
    }])
}

fn sf_unbiased_bandit() -> Result<Vec<Check>> {
    let (est, oracle) = verify::sf_mean_vs_oracle(
        &fixtures::bandit(),
        &[0.5, -0.5],
        0.2,
        20,
        20,
        10,
        10_000,
        1_000_000,
        SEED,
    )?;
    Ok(est
        .iter()
        .enumerate()
        .map(|(j, m)| {
            let se = (m.std_error().powi(2) + oracle.se[j].powi(2)).sqrt();
            let gap = (m.mean() - oracle.mean[j]).abs();
            Check {
                suite: "sf-unbiased",
                name: format!("bandit component {j}"),
                statistic: gap,
                bound: 5.0 * se,
                passed: gap <= 5.0 * se,
            }
        })
        .collect())
}

const BANDIT_CONFIG: &str = r#"
seed = 11
iterations = 200
repetitions = 10
horizon_cap = 10

[mdp]
fixture = "bandit"

[box]
lower = -5.0
upper = 5.0

[schedule]
kind = "corollary"
batch_size = 20

[diagnostics]
exact = true
"#;

fn bandit_learns() -> Result<Vec<Check>> {
    let dir = tempfile::tempdir().map_err(|e| offpsf::Error::Io {
        path: "<tempdir>".into(),
        source: e,
    })?;
    let report = run_experiment(&RunConfig::parse(BANDIT_CONFIG)?, dir.path())?;
    let finals: Vec<f64> = report
        .successes()
        .filter_map(|r| r.final_exact_value())
        .collect();
    let failed = report.failures() + 10 - finals.len();
    let mean = finals.iter().sum::<f64>() / finals.len().max(1) as f64;
    Ok(vec![Check {
        suite: "convergence",
        name: format!("bandit mean final J over 10 seeds ({failed} failed); statistic is 0.9 - mean"),
        statistic: 0.9 - mean,
        bound: 0.0,
        passed: failed == 0 && mean >= 0.9,
    }])
}

const SWEEP_CONFIG: &str = r#"
seed = 5
iterations = 25
repetitions = 400
horizon_cap = 10

[mdp]
fixture = "bandit"

[box]
lower = -5.0
upper = 5.0

[schedule]
kind = "corollary"
batch_size = 20

[diagnostics]
exact = false
"#;

fn rate_slope() -> Result<Vec<Check>> {
    let report = rate_sweep(&RunConfig::parse(SWEEP_CONFIG)?, &[25, 100, 400])?;
    let slope = report.slope.unwrap_or(f64::INFINITY);
    let means: Vec<String> = report
        .rows
        .iter()
        .map(|r| format!("N={}: {:.3e}±{:.1e}", r.iterations, r.mean, r.se))
        .collect();
    Ok(vec![Check {
        suite: "rate",
        name: format!("log-log slope of E|P|^2 ({})", means.join(", ")),
        statistic: slope,
        bound: -0.35,
        passed: slope <= -0.35,
    }])
}

fn run_with_threads(threads: usize) -> Result<Vec<(String, Vec<u8>)>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool");
    let dir = tempfile::tempdir().map_err(|e| offpsf::Error::Io {
        path: "<tempdir>".into(),
        source: e,
    })?;
    let config = RunConfig::parse(&BANDIT_CONFIG.replace("repetitions = 10", "repetitions = 4"))?;
    pool.install(|| run_experiment(&config, dir.path()))?;
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir.path())
        .expect("read output dir")
        .map(|e| {
            let e = e.expect("dir entry");
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).expect("read csv"),
            )
        })
        .collect();
    files.sort();
    Ok(files)
}

fn determinism() -> Result<Vec<Check>> {
    let one = run_with_threads(1)?;
    let four = run_with_threads(4)?;
    let differing = if one.len() == four.len() {
        one.iter().zip(&four).filter(|(a, b)| a != b).count()
    } else {
        one.len().max(four.len())
    };
    Ok(vec![Check {
        suite: "determinism",
        name: format!("{} CSV files differing between 1 and 4 threads", differing),
        statistic: differing as f64,
        bound: 0.0,
        passed: differing == 0 && !one.is_empty(),
    }])
}

type Criterion = (&'static str, fn() -> Result<Vec<Check>>);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("IS unbiasedness on chain3", is_unbiased_chain3),
        ("SF estimator mean on bandit", sf_unbiased_bandit),
        ("smoothing bias bound", || verify::bias_bound(1_000_000)),
        ("SF variance scaling in n", || verify::variance_scaling(4_000)),
        ("prox-map properties", || Ok(verify::prox_props(10_000))),
        ("bandit learning", bandit_learns),
        ("stationarity rate", rate_slope),
        ("thread-count determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(checks) => {
                let ok = checks.iter().all(|c| c.passed);
                failed += !ok as usize;
                println!(
                    "criterion {}: {} {title} ({secs:.1}s)",
                    i + 1,
                    if ok { "PASS" } else { "FAIL" }
                );
                for c in &checks {
                    println!("    {c}");
                }
            }
            Err(e) => {
                failed += 1;
                println!("criterion {}: FAIL {title}: error: {e}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
