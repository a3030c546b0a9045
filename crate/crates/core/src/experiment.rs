//! Repeated runs, aggregate statistics, and rate sweeps, with CSV output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::config::{ResolvedRun, RunConfig, ScheduleSpec};
use crate::error::{Error, Result};
use crate::optimizer::{
    corollary_schedule, run_ascent, stationarity_measure, AscentConfig, Diagnostics,
    OffPolicyObjective, RunResult,
};
use crate::rng::{derive_seed, Stream};
use crate::sf::Moments;

/// Window of the trailing moving average applied to the mean-J column.
pub const SMOOTHING_WINDOW: usize = 20;

pub const AGGREGATE_HEADER: [&str; 7] = [
    "k",
    "mean_j",
    "se_j",
    "smoothed_mean_j",
    "mean_stationarity",
    "se_stationarity",
    "runs",
];

pub const SWEEP_HEADER: [&str; 6] = ["N", "mean", "se", "reps", "failed", "slope"];

#[derive(Debug)]
pub struct Repetition {
    pub index: usize,
    pub seed: u64,
    pub result: Result<RunResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub k: usize,
    pub mean_j: Option<f64>,
    pub se_j: Option<f64>,
    pub smoothed_mean_j: Option<f64>,
    pub mean_stationarity: Option<f64>,
    pub se_stationarity: Option<f64>,
    pub runs: usize,
}

#[derive(Debug)]
pub struct ExperimentReport {
    pub repetitions: Vec<Repetition>,
    pub aggregate: Vec<AggregateRow>,
}

impl ExperimentReport {
    pub fn failures(&self) -> usize {
        self.repetitions.iter().filter(|r| r.result.is_err()).count()
    }

    pub fn successes(&self) -> impl Iterator<Item = &RunResult> {
        self.repetitions.iter().filter_map(|r| r.result.as_ref().ok())
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Seed of repetition `r` under `master`.
pub fn repetition_seed(master: u64, r: usize) -> u64 {
    derive_seed(master, Stream::Repetition, r as u64)
}

/// Run every repetition of `resolved` in parallel. Failed runs are kept, not dropped.
pub fn run_repetitions(resolved: &ResolvedRun) -> Result<Vec<Repetition>> {
    let objective = OffPolicyObjective::new(&resolved.mdp, &resolved.behavior, resolved.horizon_cap)?;
    let master = resolved.ascent.seed;
    Ok((0..resolved.repetitions)
        .into_par_iter()
        .map(|index| {
            let seed = repetition_seed(master, index);
            let cfg = AscentConfig {
                seed,
                ..resolved.ascent.clone()
            };
            Repetition {
                index,
                seed,
                result: run_ascent(&objective, &cfg),
            }
        })
        .collect())
}

/// Per-iteration mean and standard error of the exact-J and stationarity
/// traces across successful runs.
pub fn aggregate(runs: &[&RunResult], iterations: usize) -> Vec<AggregateRow> {
    let mut rows: Vec<AggregateRow> = (0..iterations)
        .map(|k| {
            let j: Moments = runs
                .iter()
                .filter_map(|r| r.exact_trace.as_ref().map(|t| t[k]))
                .collect();
            let s: Moments = runs
                .iter()
                .filter_map(|r| r.stationarity_trace.as_ref().map(|t| t[k]))
                .collect();
            let stat = |m: &Moments| (m.count() > 0).then(|| m.estimate());
            AggregateRow {
                k,
                mean_j: stat(&j).map(|e| e.mean),
                se_j: stat(&j).map(|e| e.se),
                smoothed_mean_j: None,
                mean_stationarity: stat(&s).map(|e| e.mean),
                se_stationarity: stat(&s).map(|e| e.se),
                runs: runs.len(),
            }
        })
        .collect();
    let means: Vec<Option<f64>> = rows.iter().map(|r| r.mean_j).collect();
    for (row, s) in rows.iter_mut().zip(trailing_mean(&means, SMOOTHING_WINDOW)) {
        row.smoothed_mean_j = s;
    }
    rows
}

/// Mean of the last `window` values up to and including each index; `None`
/// wherever the window holds a missing value.
pub fn trailing_mean(values: &[Option<f64>], window: usize) -> Vec<Option<f64>> {
    (0..values.len())
        .map(|k| {
            let lo = (k + 1).saturating_sub(window.max(1));
            let w: Option<Vec<f64>> = values[lo..=k].iter().copied().collect();
            w.map(|w| w.iter().sum::<f64>() / w.len() as f64)
        })
        .collect()
}

pub fn write_aggregate<W: Write>(rows: &[AggregateRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AGGREGATE_HEADER)?;
    for r in rows {
        w.write_record([
            r.k.to_string(),
            cell(r.mean_j),
            cell(r.se_j),
            cell(r.smoothed_mean_j),
            cell(r.mean_stationarity),
            cell(r.se_stationarity),
            r.runs.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

fn write_run_summary<W: Write>(reps: &[Repetition], dim: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = [
        "rep",
        "seed",
        "status",
        "final_j",
        "sampled_index",
        "stationarity_at_index",
        "converged_at",
        "active_bounds",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((0..dim).map(|j| format!("final_theta_{j}")));
    w.write_record(&header)?;
    for rep in reps {
        let mut row = vec![rep.index.to_string(), rep.seed.to_string()];
        match &rep.result {
            Ok(run) => {
                row.push("ok".into());
                row.push(cell(run.final_exact_value()));
                row.push(run.sampled_index.to_string());
                row.push(cell(
                    run.stationarity_trace.as_ref().map(|t| t[run.sampled_index]),
                ));
                row.push(run.converged_at.map(|k| k.to_string()).unwrap_or_default());
                row.push(
                    run.active_bounds
                        .iter()
                        .map(|j| j.to_string())
                        .collect::<Vec<_>>()
                        .join(" "),
                );
                row.extend(run.final_theta().iter().map(|t| t.to_string()));
            }
            Err(e) => {
                row.push(format!("failed: {e}"));
                row.extend(std::iter::repeat_n(String::new(), 5 + dim));
            }
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn run_csv_name(rep: usize) -> String {
    format!("run_{rep:03}.csv")
}

/// Execute all repetitions of `config` and write, under `out_dir`:
/// `run_NNN.csv` per successful run, `runs.csv` (one summary row per
/// repetition, failures included) and `aggregate.csv`.
pub fn run_experiment(config: &RunConfig, out_dir: &Path) -> Result<ExperimentReport> {
    let resolved = config.resolve()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let repetitions = run_repetitions(&resolved)?;

    for rep in &repetitions {
        if let Ok(run) = &rep.result {
            let path = out_dir.join(run_csv_name(rep.index));
            run.write_csv(create(&path)?)?;
        }
    }
    let dim = resolved.mdp.param_dim();
    write_run_summary(&repetitions, dim, create(&out_dir.join("runs.csv"))?)?;

    let ok: Vec<&RunResult> = repetitions
        .iter()
        .filter_map(|r| r.result.as_ref().ok())
        .collect();
    let rows = aggregate(&ok, resolved.ascent.iterations);
    write_aggregate(&rows, create(&out_dir.join("aggregate.csv"))?)?;
    Ok(ExperimentReport {
        repetitions,
        aggregate: rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub iterations: usize,
    pub mean: f64,
    pub se: f64,
    pub reps: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of ln(mean) against ln(N); `None` with fewer than
    /// two budgets or a non-positive mean.
    pub slope: Option<f64>,
}

impl SweepReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(SWEEP_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.iterations.to_string(),
                r.mean.to_string(),
                r.se.to_string(),
                r.reps.to_string(),
                r.failed.to_string(),
                cell(self.slope),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|(x, y)| *x <= 0.0 || *y <= 0.0) {
        return None;
    }
    let pts: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// For each budget N, run the constant schedule α = c₁/√N, μ = c₂/√N,
/// n = ⌈c₃N⌉ for `repetitions` seeds, draw R ∝ αₖ per run, and average
/// ‖P_Θ(θ_R, ∇J(θ_R), α_R)‖².
pub fn rate_sweep(config: &RunConfig, budgets: &[usize]) -> Result<SweepReport> {
    if budgets.is_empty() {
        return Err(Error::config("rate sweep needs at least one budget"));
    }
    if budgets.windows(2).any(|w| w[0] >= w[1]) || budgets[0] == 0 {
        return Err(Error::config("budgets must be positive and strictly ascending"));
    }
    let (c1, c2, c3, m) = match config.schedule {
        ScheduleSpec::Corollary {
            c1,
            c2,
            c3,
            batch_size,
        } => (c1, c2, c3, batch_size),
        ScheduleSpec::Asymptotic { .. } => {
            return Err(Error::config("rate sweep requires a corollary schedule"))
        }
    };
    let base = config.resolve()?;
    let objective = OffPolicyObjective::new(&base.mdp, &base.behavior, base.horizon_cap)?;
    let fd_step = base.ascent.diagnostics.fd_step;

    let mut rows = Vec::with_capacity(budgets.len());
    for &budget in budgets {
        let schedule = corollary_schedule(budget, c1, c2, c3, m)?;
        let sweep_seed = derive_seed(config.seed, Stream::Sweep, budget as u64);
        let values: Vec<Result<f64>> = (0..base.repetitions)
            .into_par_iter()
            .map(|r| {
                let cfg = AscentConfig {
                    schedule: schedule.clone(),
                    iterations: budget,
                    seed: repetition_seed(sweep_seed, r),
                    diagnostics: Diagnostics::default(),
                    ..base.ascent.clone()
                };
                let run = run_ascent(&objective, &cfg)?;
                let k = run.sampled_index;
                stationarity_measure(
                    &objective,
                    &run.theta_trace[k],
                    run.steps[k].alpha,
                    &cfg.bounds,
                    fd_step,
                )
            })
            .collect();
        let stats: Moments = values.iter().filter_map(|v| v.as_ref().ok().copied()).collect();
        if stats.count() == 0 {
            let first = values.into_iter().find_map(|v| v.err());
            return Err(first.unwrap_or_else(|| Error::config("no repetitions")));
        }
        rows.push(SweepRow {
            iterations: budget,
            mean: stats.mean(),
            se: stats.std_error(),
            reps: stats.count(),
            failed: base.repetitions - stats.count(),
        });
    }
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.iterations as f64, r.mean)).collect();
    Ok(SweepReport {
        slope: log_log_slope(&points),
        rows,
    })
}
