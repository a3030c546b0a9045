//! Statistical property suites with fixed seeds, driven by `offpsf verify`.
//!
//! Each check reports the statistic it measured, the bound it was held to,
//! and a verdict. Sample sizes are pinned here so every invocation is
//! reproducible.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fixtures;
use crate::mdp::{sample_batch, BehaviorPolicy, PolicyParams, TabularMdp};
use crate::ope::{pdis_estimate, EvalBatch};
use crate::optimizer::{prox_map, BoxSet};
use crate::rng::{derive_seed, derived_stream, stream, Stream};
use crate::sf::{
    norm, sample_unit_sphere, sf_gradient_estimate, sf_gradient_mean_oracle, Moments, SfConfig,
};

pub const SUITES: &[&str] = &[
    "is-unbiased",
    "sf-unbiased",
    "bias-bound",
    "variance-scaling",
    "prox-props",
];

const SEED: u64 = 0xFF5F;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub statistic: f64,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `statistic <= bound`.
    fn at_most(suite: &'static str, name: impl Into<String>, statistic: f64, bound: f64) -> Self {
        Check {
            suite,
            name: name.into(),
            statistic,
            bound,
            passed: statistic <= bound,
        }
    }

    fn within(suite: &'static str, name: impl Into<String>, statistic: f64, lo: f64, hi: f64) -> Self {
        Check {
            suite,
            name: name.into(),
            statistic,
            bound: hi,
            passed: (lo..=hi).contains(&statistic),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}/{}: statistic {:.6e}, bound {:.6e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.name,
            self.statistic,
            self.bound
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        write!(
            f,
            "{} checks, {} failed",
            self.checks.len(),
            self.failures()
        )
    }
}

/// Run a named suite, or every suite for `all`.
pub fn verify(suite: &str) -> Result<Report> {
    let checks = match suite {
        "is-unbiased" => is_unbiased(10_000, 50),
        "sf-unbiased" => sf_unbiased(10_000, 1_000_000),
        "bias-bound" => bias_bound(1_000_000),
        "variance-scaling" => variance_scaling(4_000),
        "prox-props" => Ok(prox_props(10_000)),
        "all" => {
            let mut all = Vec::new();
            for s in SUITES {
                all.extend(verify(s)?.checks);
            }
            return Ok(Report { checks: all });
        }
        other => {
            return Err(Error::config(format!(
                "unknown suite `{other}`; expected one of {} or all",
                SUITES.join(", ")
            )))
        }
    }?;
    Ok(Report { checks })
}

/// IS fixtures: (name, MDP, target logits, horizon cap).
fn is_fixtures() -> Vec<(&'static str, TabularMdp, Vec<f64>, usize)> {
    vec![
        ("bandit", fixtures::bandit(), vec![1.5, -1.0], 10),
        (
            "chain3",
            fixtures::chain3(),
            vec![1.0, -1.0, 0.5, 0.0, -1.0, 1.0],
            200,
        ),
        (
            "gridlet",
            fixtures::gridlet(),
            vec![0.8, 0.2, -0.8, 0.5, -0.2, -0.5, -0.3, 0.6, -0.6, 0.0, 0.0, 0.0],
            200,
        ),
    ]
}

/// Mean and standard error of Ĵ_m(θ) over `batches` independent batches.
pub fn pdis_batch_moments(
    mdp: &TabularMdp,
    behavior: &BehaviorPolicy,
    params: &PolicyParams,
    batches: usize,
    m: usize,
    horizon_cap: usize,
    seed: u64,
) -> Result<Moments> {
    let values = (0..batches)
        .into_par_iter()
        .map(|i| {
            let trajs = sample_batch(mdp, behavior, m, horizon_cap, derive_seed(seed, Stream::Batch, i as u64))?;
            let batch = EvalBatch::new(trajs, behavior, mdp.gamma())?;
            pdis_estimate(&batch, params)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(values.into_iter().collect())
}

pub fn is_unbiased(batches: usize, m: usize) -> Result<Vec<Check>> {
    const SUITE: &str = "is-unbiased";
    let mut checks = Vec::new();

    // π_θ = b: every ratio is one.
    let chain = fixtures::chain3();
    let params = PolicyParams::for_mdp(&chain, vec![0.4, -0.3, 1.1, 0.2, -0.5, 0.9])?;
    let b = BehaviorPolicy::from_params(&params, 1e-3)?;
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let trajs = sample_batch(&chain, &b, m, 200, derive_seed(SEED, Stream::Batch, i))?;
        let batch = EvalBatch::new(trajs, &b, chain.gamma())?;
        worst = worst.max((pdis_estimate(&batch, &params)? - batch.mean_discounted_return()).abs());
    }
    checks.push(Check::at_most(SUITE, "matching-target", worst, 1e-12));

    for (name, mdp, theta, horizon) in is_fixtures() {
        let behavior = BehaviorPolicy::uniform(&mdp);
        let params = PolicyParams::for_mdp(&mdp, theta)?;
        let exact = crate::mdp::exact_value(&mdp, &params, horizon)?;
        let stats = pdis_batch_moments(&mdp, &behavior, &params, batches, m, horizon, SEED)?;
        checks.push(Check::at_most(
            SUITE,
            format!("{name}: |mean - J|"),
            (stats.mean() - exact).abs(),
            4.0 * stats.std_error(),
        ));
    }
    Ok(checks)
}

/// Component-wise comparison of the repetition mean of the two-point
/// estimator on fresh IS batches with the single-point oracle for ∇J_μ on
/// the exact value. Returns (estimator, oracle) means and standard errors.
#[allow(clippy::too_many_arguments)]
pub fn sf_mean_vs_oracle(
    mdp: &TabularMdp,
    theta: &[f64],
    mu: f64,
    n: usize,
    m: usize,
    horizon_cap: usize,
    reps: usize,
    oracle_samples: usize,
    seed: u64,
) -> Result<(Vec<Moments>, crate::sf::VectorEstimate)> {
    let behavior = BehaviorPolicy::uniform(mdp);
    let d = mdp.param_dim();
    let cfg = SfConfig::new(mu, n, d)?;
    let estimates = (0..reps)
        .into_par_iter()
        .map(|i| {
            let trajs = sample_batch(mdp, &behavior, m, horizon_cap, derive_seed(seed, Stream::Batch, i as u64))?;
            let batch = EvalBatch::new(trajs, &behavior, mdp.gamma())?;
            let mut rng = derived_stream(seed, Stream::Directions, i as u64);
            sf_gradient_estimate(&|t: &[f64]| batch.value_at(t), theta, &cfg, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut moments = vec![Moments::default(); d];
    for e in &estimates {
        moments.iter_mut().zip(&e.grad).for_each(|(m, g)| m.push(*g));
    }
    let exact = |t: &[f64]| mdp.value_of(t, horizon_cap);
    let oracle = sf_gradient_mean_oracle(
        &exact,
        theta,
        mu,
        oracle_samples,
        &mut derived_stream(seed, Stream::Oracle, 0),
    )?;
    Ok((moments, oracle))
}

pub fn sf_unbiased(reps: usize, oracle_samples: usize) -> Result<Vec<Check>> {
    const SUITE: &str = "sf-unbiased";
    let mut checks = Vec::new();
    let cases: [(&str, TabularMdp, Vec<f64>, usize, usize); 2] = [
        ("bandit", fixtures::bandit(), vec![0.5, -0.5], 10, oracle_samples),
        (
            "chain3",
            fixtures::chain3(),
            vec![0.5, -0.5, 0.0, 0.3, -0.3, 0.2],
            200,
            oracle_samples / 5,
        ),
    ];
    for (name, mdp, theta, horizon, samples) in cases {
        let (est, oracle) = sf_mean_vs_oracle(&mdp, &theta, 0.2, 20, 20, horizon, reps, samples.max(1), SEED)?;
        for (j, m) in est.iter().enumerate() {
            let se = (m.std_error().powi(2) + oracle.se[j].powi(2)).sqrt();
            checks.push(Check::at_most(
                SUITE,
                format!("{name}: component {j}"),
                (m.mean() - oracle.mean[j]).abs(),
                5.0 * se,
            ));
        }
    }
    Ok(checks)
}

/// Σⱼ sin θⱼ: gradient cos θ, gradient-Lipschitz with L = 1.
pub fn sin_sum(theta: &[f64]) -> f64 {
    theta.iter().map(|t| t.sin()).sum()
}

pub fn bias_bound(oracle_samples: usize) -> Result<Vec<Check>> {
    const SUITE: &str = "bias-bound";
    let mut checks = Vec::new();
    for d in [2usize, 5] {
        let theta: Vec<f64> = (0..d).map(|j| 0.3 + 0.4 * j as f64).collect();
        let grad: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
        for (i, mu) in [0.5, 0.25, 0.1, 0.05].into_iter().enumerate() {
            let mut rng = derived_stream(SEED, Stream::Oracle, (d * 10 + i) as u64);
            let oracle = sf_gradient_mean_oracle(&sin_sum, &theta, mu, oracle_samples, &mut rng)?;
            let diff: Vec<f64> = oracle.mean.iter().zip(&grad).map(|(a, b)| a - b).collect();
            checks.push(Check::at_most(
                SUITE,
                format!("d={d}, mu={mu}"),
                norm(&diff),
                mu * d as f64 / 2.0 + 5.0 * oracle.se_norm(),
            ));
        }
    }
    Ok(checks)
}

/// x₀³ − 3x₀x₁²: harmonic, so its ball average equals its value and the
/// smoothed gradient vanishes at the origin while the function is not even.
pub fn monkey_saddle(theta: &[f64]) -> f64 {
    theta[0].powi(3) - 3.0 * theta[0] * theta[1].powi(2)
}

pub const VARIANCE_DIRECTIONS: [usize; 3] = [10, 40, 160];

/// E‖∇̂‖² at the origin of the monkey saddle, for each direction count.
/// The estimator's mean is zero there, so this is pure variance.
pub fn saddle_second_moments(reps: usize, mu: f64, seed: u64) -> Result<Vec<Moments>> {
    VARIANCE_DIRECTIONS
        .iter()
        .map(|&n| {
            let cfg = SfConfig::new(mu, n, 2)?;
            let values = (0..reps)
                .into_par_iter()
                .map(|i| {
                    let mut rng = derived_stream(derive_seed(seed, Stream::Directions, n as u64), Stream::Repetition, i as u64);
                    let g = sf_gradient_estimate(&monkey_saddle, &[0.0, 0.0], &cfg, &mut rng)?;
                    Ok(g.grad.iter().map(|x| x * x).sum::<f64>())
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(values.into_iter().collect())
        })
        .collect()
}

/// E‖∇̂ − E∇̂‖² of the IS-driven estimator on one frozen bandit batch, for
/// each direction count: the trace of the sample covariance.
pub fn bandit_central_second_moments(reps: usize, mu: f64, seed: u64) -> Result<Vec<f64>> {
    let mdp = fixtures::bandit();
    let behavior = BehaviorPolicy::uniform(&mdp);
    let trajs = sample_batch(&mdp, &behavior, 50, 10, derive_seed(seed, Stream::Batch, 0))?;
    let batch = EvalBatch::new(trajs, &behavior, mdp.gamma())?;
    let theta = [0.5, -0.5];
    VARIANCE_DIRECTIONS
        .iter()
        .map(|&n| {
            let cfg = SfConfig::new(mu, n, 2)?;
            let grads = (0..reps)
                .into_par_iter()
                .map(|i| {
                    let mut rng = derived_stream(derive_seed(seed, Stream::Directions, n as u64), Stream::Repetition, i as u64);
                    sf_gradient_estimate(&|t: &[f64]| batch.value_at(t), &theta, &cfg, &mut rng)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut moments = [Moments::default(), Moments::default()];
            for g in &grads {
                moments[0].push(g.grad[0]);
                moments[1].push(g.grad[1]);
            }
            Ok(moments.iter().map(Moments::variance).sum())
        })
        .collect()
}

fn scaling_checks(suite: &'static str, label: &str, m: &[f64]) -> Vec<Check> {
    let mut checks = Vec::new();
    for w in 0..m.len() - 1 {
        checks.push(Check::within(
            suite,
            format!(
                "{label}: ratio n={} / n={}",
                VARIANCE_DIRECTIONS[w], VARIANCE_DIRECTIONS[w + 1]
            ),
            m[w] / m[w + 1],
            3.0,
            5.5,
        ));
    }
    let worst_increase = m.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check::at_most(suite, format!("{label}: non-increasing"), worst_increase, 0.0));
    checks
}

pub fn variance_scaling(reps: usize) -> Result<Vec<Check>> {
    const SUITE: &str = "variance-scaling";
    let saddle: Vec<f64> = saddle_second_moments(reps, 0.5, SEED)?
        .iter()
        .map(Moments::mean)
        .collect();
    let bandit = bandit_central_second_moments(reps, 0.2, SEED)?;
    let mut checks = scaling_checks(SUITE, "saddle E|g|^2", &saddle);
    checks.extend(scaling_checks(SUITE, "bandit E|g - Eg|^2", &bandit));
    Ok(checks)
}

/// Random (θ ∈ Θ, f, g, α) draw on a random box.
pub struct ProxCase {
    pub bounds: BoxSet,
    pub theta: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub alpha: f64,
}

pub fn random_prox_case<R: Rng + ?Sized>(rng: &mut R) -> ProxCase {
    let d = rng.random_range(1..=6);
    let lower: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..0.0)).collect();
    let upper: Vec<f64> = lower.iter().map(|lo| lo + rng.random_range(0.1..4.0)).collect();
    let theta = lower
        .iter()
        .zip(&upper)
        .map(|(lo, hi)| match rng.random_range(0..5) {
            0 => *lo,
            1 => *hi,
            _ => rng.random_range(*lo..=*hi),
        })
        .collect();
    let vector = |rng: &mut R| {
        let scale = rng.random_range(0.0..5.0);
        sample_unit_sphere(rng, d)
            .expect("d >= 1")
            .into_iter()
            .map(|x| x * scale)
            .collect::<Vec<f64>>()
    };
    let f = vector(rng);
    let g = vector(rng);
    // α ∈ (0, 1]
    let alpha = 1.0 - rng.random::<f64>();
    ProxCase {
        bounds: BoxSet::new(lower, upper).expect("positive widths"),
        theta,
        f,
        g,
        alpha,
    }
}

/// Excess over each of the three prox inequalities (positive = violated):
/// ‖P(g)‖ − ‖g‖, ‖P(f) − P(g)‖ − ‖f − g‖, ‖P(g)‖² − ⟨g, P(g)⟩.
pub fn prox_excess(case: &ProxCase) -> [f64; 3] {
    let pf = prox_map(&case.theta, &case.f, case.alpha, &case.bounds).expect("valid case");
    let pg = prox_map(&case.theta, &case.g, case.alpha, &case.bounds).expect("valid case");
    let diff_p: Vec<f64> = pf.iter().zip(&pg).map(|(a, b)| a - b).collect();
    let diff: Vec<f64> = case.f.iter().zip(&case.g).map(|(a, b)| a - b).collect();
    let inner: f64 = case.g.iter().zip(&pg).map(|(a, b)| a * b).sum();
    [
        norm(&pg) - norm(&case.g),
        norm(&diff_p) - norm(&diff),
        norm(&pg).powi(2) - inner,
    ]
}

pub const PROX_SLACK: f64 = 1e-9;

pub fn prox_props(cases: usize) -> Vec<Check> {
    const SUITE: &str = "prox-props";
    let mut rng = stream(SEED);
    let mut violations = [0usize; 3];
    for _ in 0..cases {
        let excess = prox_excess(&random_prox_case(&mut rng));
        for (v, e) in violations.iter_mut().zip(excess) {
            *v += (e > PROX_SLACK) as usize;
        }
    }
    ["(i) |P| <= |g|", "(ii) non-expansive", "(iii) <g, P> >= |P|^2"]
        .iter()
        .zip(violations)
        .map(|(name, v)| Check::at_most(SUITE, *name, v as f64, 0.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite() {
        assert!(matches!(verify("nope"), Err(Error::Config(_))));
    }

    #[test]
    fn prox_suite_passes() {
        let checks = prox_props(2_000);
        assert_eq!(checks.len(), 3);
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");
    }

    #[test]
    fn small_is_suite_runs() {
        let checks = is_unbiased(300, 10).unwrap();
        assert_eq!(checks.len(), 4);
        assert!(checks[0].passed, "{}", checks[0]);
    }

    #[test]
    fn saddle_gradient_vanishes_at_origin() {
        let g = crate::sf::finite_diff_gradient(&monkey_saddle, &[0.0, 0.0], 1e-4).unwrap();
        assert!(g.iter().all(|x| x.abs() < 1e-7));
    }

    #[test]
    fn display_marks_verdict() {
        let c = Check::at_most("s", "n", 1.0, 2.0);
        assert!(c.to_string().starts_with("[PASS] s/n"));
        let c = Check::within("s", "n", 6.0, 3.0, 5.5);
        assert!(c.to_string().starts_with("[FAIL]"));
    }
}
