//! Projected smoothed-functional ascent over a box of policy parameters.
//!
//! Each iteration draws one batch of behavior episodes, estimates the
//! gradient from antithetic perturbations evaluated on that shared batch, and
//! takes a projected step. The loop itself is generic over [`Objective`] so
//! that synthetic functions with known constants can be pushed through the
//! exact same machinery.

use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mdp::{sample_batch, BehaviorPolicy, TabularMdp};
use crate::ope::EvalBatch;
use crate::rng::{derive_seed, derived_stream, Stream};
use crate::sf::{
    finite_diff_gradient, norm, sf_gradient_estimate, sf_gradient_mean_oracle, GradEstimate,
    SfConfig,
};

/// Axis-aligned box Θ = Πⱼ [lowerⱼ, upperⱼ].
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::config(format!(
                "box bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (j, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::config(format!(
                    "box coordinate {j} has empty interior: [{lo}, {hi}]"
                )));
            }
        }
        Ok(BoxSet { lower, upper })
    }

    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(t, (lo, hi))| lo <= t && t <= hi)
    }

    /// Coordinate-wise clamp. Panics on dimension mismatch; see [`project_box`].
    pub fn project(&self, theta: &[f64]) -> Vec<f64> {
        assert_eq!(theta.len(), self.dim(), "dimension mismatch");
        theta
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(t, (lo, hi))| t.max(*lo).min(*hi))
            .collect()
    }

    /// Coordinates of `theta` sitting exactly on a face of the box.
    pub fn active_bounds(&self, theta: &[f64]) -> Vec<usize> {
        theta
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .enumerate()
            .filter(|(_, (t, (lo, hi)))| t == lo || t == hi)
            .map(|(j, _)| j)
            .collect()
    }

    fn check_dim(&self, len: usize, what: &str) -> Result<()> {
        if len != self.dim() {
            return Err(Error::config(format!(
                "{what} has dimension {len}, box has {}",
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Π_Θ(θ).
pub fn project_box(theta: &[f64], bounds: &BoxSet) -> Result<Vec<f64>> {
    bounds.check_dim(theta.len(), "theta")?;
    Ok(bounds.project(theta))
}

/// P_Θ(θ, g, α) = (Π_Θ(θ + αg) − θ)/α.
///
/// Coordinates whose step stays inside the box return gⱼ unchanged rather than
/// the rounded (θⱼ + αgⱼ − θⱼ)/α.
pub fn prox_map(theta: &[f64], g: &[f64], alpha: f64, bounds: &BoxSet) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::domain(format!("step size must be positive, got {alpha}")));
    }
    bounds.check_dim(theta.len(), "theta")?;
    bounds.check_dim(g.len(), "direction")?;
    if !bounds.contains(theta) {
        return Err(Error::domain("prox map is defined for points inside the box"));
    }
    Ok(theta
        .iter()
        .zip(g)
        .zip(bounds.lower.iter().zip(&bounds.upper))
        .map(|((t, gj), (lo, hi))| {
            let stepped = t + alpha * gj;
            if *lo <= stepped && stepped <= *hi {
                *gj
            } else {
                (stepped.max(*lo).min(*hi) - t) / alpha
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleKind {
    /// α = c₁/√N, μ = c₂/√N, n = ⌈c₃N⌉ for a fixed budget of N iterations.
    Corollary {
        budget: usize,
        c1: f64,
        c2: f64,
        c3: f64,
    },
    /// αₖ = a₀/(k+1)^p_α, μₖ = μ₀/(k+1)^p_μ, nₖ = ⌈n₀ (k+1)^p_n⌉.
    PowerLaw {
        a0: f64,
        alpha_exp: f64,
        mu0: f64,
        mu_exp: f64,
        n0: f64,
        n_exp: f64,
    },
}

/// Step sizes, smoothing radii and direction counts per iteration, plus the
/// fixed trajectory batch size.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    kind: ScheduleKind,
    batch_size: usize,
}

/// ⌈x⌉, treating values within 1e-9 of an integer as that integer so that
/// products like 0.1 · 30 do not round up spuriously.
fn ceil_count(x: f64) -> usize {
    let r = x.round();
    let c = if (x - r).abs() < 1e-9 { r } else { x.ceil() };
    (c as usize).max(1)
}

pub const DEFAULT_C1: f64 = 1.0;
pub const DEFAULT_C2: f64 = 1.0;
pub const DEFAULT_C3: f64 = 0.5;

/// Constant schedule tuned to a known iteration budget.
pub fn corollary_schedule(budget: usize, c1: f64, c2: f64, c3: f64, m: usize) -> Result<Schedule> {
    if budget == 0 {
        return Err(Error::config("iteration budget must be at least 1"));
    }
    for (name, c) in [("c1", c1), ("c2", c2), ("c3", c3)] {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::config(format!("{name} must be positive, got {c}")));
        }
    }
    if m == 0 {
        return Err(Error::config("batch size m must be at least 1"));
    }
    let mu = c2 / (budget as f64).sqrt();
    if mu > crate::sf::MAX_MU {
        return Err(Error::config(format!(
            "mu = c2/sqrt(N) = {mu} exceeds {}",
            crate::sf::MAX_MU
        )));
    }
    Ok(Schedule {
        kind: ScheduleKind::Corollary { budget, c1, c2, c3 },
        batch_size: m,
    })
}

/// Decaying preset: αₖ = a₀/(k+1), μₖ = μ₀/(k+1)^¼, nₖ = ⌈n_growth √(k+1)⌉.
pub fn asymptotic_schedule(a0: f64, mu0: f64, n_growth: f64, m: usize) -> Result<Schedule> {
    power_law_schedule(a0, 1.0, mu0, 0.25, n_growth, 0.5, m)
}

pub fn power_law_schedule(
    a0: f64,
    alpha_exp: f64,
    mu0: f64,
    mu_exp: f64,
    n0: f64,
    n_exp: f64,
    m: usize,
) -> Result<Schedule> {
    for (name, c) in [("a0", a0), ("mu0", mu0), ("n0", n0)] {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::config(format!("{name} must be positive, got {c}")));
        }
    }
    for (name, e) in [("alpha_exp", alpha_exp), ("mu_exp", mu_exp), ("n_exp", n_exp)] {
        if !(e >= 0.0 && e.is_finite()) {
            return Err(Error::config(format!("{name} must be non-negative, got {e}")));
        }
    }
    if mu0 > crate::sf::MAX_MU {
        return Err(Error::config(format!("mu0 = {mu0} exceeds {}", crate::sf::MAX_MU)));
    }
    if m == 0 {
        return Err(Error::config("batch size m must be at least 1"));
    }
    Ok(Schedule {
        kind: ScheduleKind::PowerLaw {
            a0,
            alpha_exp,
            mu0,
            mu_exp,
            n0,
            n_exp,
        },
        batch_size: m,
    })
}

impl Schedule {
    pub fn kind(&self) -> &ScheduleKind {
        &self.kind
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    /// Number of iterations the schedule is defined for; `None` if unbounded.
    pub fn len(&self) -> Option<usize> {
        match self.kind {
            ScheduleKind::Corollary { budget, .. } => Some(budget),
            ScheduleKind::PowerLaw { .. } => None,
        }
    }

    pub fn alpha(&self, k: usize) -> f64 {
        match self.kind {
            ScheduleKind::Corollary { budget, c1, .. } => c1 / (budget as f64).sqrt(),
            ScheduleKind::PowerLaw { a0, alpha_exp, .. } => a0 / ((k + 1) as f64).powf(alpha_exp),
        }
    }

    pub fn mu(&self, k: usize) -> f64 {
        match self.kind {
            ScheduleKind::Corollary { budget, c2, .. } => c2 / (budget as f64).sqrt(),
            ScheduleKind::PowerLaw { mu0, mu_exp, .. } => mu0 / ((k + 1) as f64).powf(mu_exp),
        }
    }

    pub fn n(&self, k: usize) -> usize {
        match self.kind {
            ScheduleKind::Corollary { budget, c3, .. } => ceil_count(c3 * budget as f64),
            ScheduleKind::PowerLaw { n0, n_exp, .. } => {
                ceil_count(n0 * ((k + 1) as f64).powf(n_exp))
            }
        }
    }

    /// Whether the sequences satisfy the conditions for almost-sure
    /// convergence: αₖ, μₖ → 0, nₖ → ∞, Σαₖ = ∞ and Σαₖ² < ∞. Decided from
    /// the exponents, which is exact for power laws: Σ(k+1)^-p diverges iff
    /// p ≤ 1 and Σ(k+1)^-2p converges iff p > ½.
    pub fn satisfies_asymptotic_conditions(&self) -> bool {
        match self.kind {
            ScheduleKind::Corollary { .. } => false,
            ScheduleKind::PowerLaw {
                alpha_exp,
                mu_exp,
                n_exp,
                ..
            } => alpha_exp > 0.5 && alpha_exp <= 1.0 && mu_exp > 0.0 && n_exp > 0.0,
        }
    }

    pub fn alphas(&self, iterations: usize) -> Vec<f64> {
        (0..iterations).map(|k| self.alpha(k)).collect()
    }
}

/// Draw an index with probability proportional to `weights`.
pub fn sample_index_by_weights<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize> {
    let dist = WeightedIndex::new(weights)
        .map_err(|e| Error::domain(format!("cannot sample from weights: {e}")))?;
    Ok(dist.sample(rng))
}

/// R ∈ {0, …, N−1} with P(R = k) = αₖ / Σⱼ αⱼ.
pub fn sample_stationarity_index<R: Rng + ?Sized>(
    schedule: &Schedule,
    iterations: usize,
    rng: &mut R,
) -> Result<usize> {
    if iterations == 0 {
        return Err(Error::domain("need at least one iteration"));
    }
    sample_index_by_weights(&schedule.alphas(iterations), rng)
}

/// A value function reachable only through per-iteration noisy estimates,
/// with an exact oracle for diagnostics.
pub trait Objective: Sync {
    /// Randomness shared by every evaluation within one iteration.
    type Sample: Sync;

    fn dim(&self) -> usize;

    fn draw(&self, batch_size: usize, seed: u64) -> Result<Self::Sample>;

    fn estimate(&self, sample: &Self::Sample, theta: &[f64]) -> f64;

    fn exact(&self, theta: &[f64]) -> f64;
}

/// Importance-sampled value of a softmax policy from behavior episodes.
#[derive(Debug, Clone)]
pub struct OffPolicyObjective<'a> {
    pub mdp: &'a TabularMdp,
    pub behavior: &'a BehaviorPolicy,
    pub horizon_cap: usize,
}

impl<'a> OffPolicyObjective<'a> {
    pub fn new(mdp: &'a TabularMdp, behavior: &'a BehaviorPolicy, horizon_cap: usize) -> Result<Self> {
        behavior.check_mdp(mdp)?;
        mdp.ensure_horizon(horizon_cap)?;
        Ok(OffPolicyObjective {
            mdp,
            behavior,
            horizon_cap,
        })
    }
}

impl Objective for OffPolicyObjective<'_> {
    type Sample = EvalBatch;

    fn dim(&self) -> usize {
        self.mdp.param_dim()
    }

    fn draw(&self, batch_size: usize, seed: u64) -> Result<EvalBatch> {
        let trajectories = sample_batch(self.mdp, self.behavior, batch_size, self.horizon_cap, seed)?;
        EvalBatch::new(trajectories, self.behavior, self.mdp.gamma())
    }

    fn estimate(&self, batch: &EvalBatch, theta: &[f64]) -> f64 {
        batch.value_at(theta)
    }

    fn exact(&self, theta: &[f64]) -> f64 {
        self.mdp.value_of(theta, self.horizon_cap)
    }
}

/// A deterministic function observed without noise.
pub struct FnObjective<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnObjective<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnObjective { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Objective for FnObjective<F> {
    type Sample = ();

    fn dim(&self) -> usize {
        self.dim
    }

    fn draw(&self, _: usize, _: u64) -> Result<()> {
        Ok(())
    }

    fn estimate(&self, _: &(), theta: &[f64]) -> f64 {
        (self.f)(theta)
    }

    fn exact(&self, theta: &[f64]) -> f64 {
        (self.f)(theta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// Record J(θₖ) and ‖P_Θ(θₖ, ∇J(θₖ), αₖ)‖² from the exact oracle.
    pub exact: bool,
    /// When set, record ξₖ and βₖ using this many oracle samples for ∇J_μ.
    pub bias_noise_samples: Option<usize>,
    /// Central-difference step for ∇J.
    pub fd_step: f64,
    /// Convergence is declared once ‖P_Θ‖ stays below this for `convergence_window` iterations.
    pub convergence_tol: f64,
    pub convergence_window: usize,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Diagnostics {
            exact: false,
            bias_noise_samples: None,
            fd_step: 1e-5,
            convergence_tol: 1e-3,
            convergence_window: 50,
        }
    }
}

impl Diagnostics {
    pub fn exact() -> Self {
        Diagnostics {
            exact: true,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AscentConfig {
    pub bounds: BoxSet,
    pub schedule: Schedule,
    pub theta0: Vec<f64>,
    pub iterations: usize,
    pub seed: u64,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    pub alpha: f64,
    pub mu: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    pub bounds: BoxSet,
    pub schedule: Schedule,
    pub steps: Vec<StepParams>,
    /// θ₀ … θ_N.
    pub theta_trace: Vec<Vec<f64>>,
    /// Gradient estimate used at iterations 0 … N−1.
    pub estimate_trace: Vec<GradEstimate>,
    /// J(θ₀) … J(θ_N), when exact diagnostics are on.
    pub exact_trace: Option<Vec<f64>>,
    /// ‖P_Θ(θₖ, ∇J(θₖ), αₖ)‖² for k < N, when exact diagnostics are on.
    pub stationarity_trace: Option<Vec<f64>>,
    /// ξₖ: estimate minus its conditional mean ∇J_μ(θₖ).
    pub xi_trace: Option<Vec<Vec<f64>>>,
    /// βₖ: ∇J_μ(θₖ) − ∇J(θₖ).
    pub beta_trace: Option<Vec<Vec<f64>>>,
    /// Random index R drawn with probability proportional to αₖ.
    pub sampled_index: usize,
    /// First iteration of a window in which ‖P_Θ‖ stayed below tolerance.
    pub converged_at: Option<usize>,
    /// Box faces the final iterate sits on.
    pub active_bounds: Vec<usize>,
}

impl RunResult {
    pub fn iterations(&self) -> usize {
        self.estimate_trace.len()
    }

    pub fn final_theta(&self) -> &[f64] {
        self.theta_trace.last().expect("trace holds theta_0")
    }

    pub fn final_exact_value(&self) -> Option<f64> {
        self.exact_trace.as_ref().and_then(|t| t.last().copied())
    }

    pub fn csv_header(dim: usize) -> Vec<String> {
        let mut header: Vec<String> = ["k", "alpha", "mu", "n"].iter().map(|s| s.to_string()).collect();
        header.extend((0..dim).map(|j| format!("theta_{j}")));
        header.extend(
            ["estimate_norm", "exact_j", "stationarity", "xi_norm", "beta_norm"]
                .iter()
                .map(|s| s.to_string()),
        );
        header
    }

    /// One row per iteration k < N describing θₖ, the step taken from it, and
    /// optional diagnostics (empty cells when not recorded).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let dim = self.theta_trace[0].len();
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::csv_header(dim))?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for k in 0..self.iterations() {
            let s = self.steps[k];
            let mut row = vec![k.to_string(), s.alpha.to_string(), s.mu.to_string(), s.n.to_string()];
            row.extend(self.theta_trace[k].iter().map(|t| t.to_string()));
            row.push(self.estimate_trace[k].norm().to_string());
            row.push(opt(self.exact_trace.as_ref().map(|t| t[k])));
            row.push(opt(self.stationarity_trace.as_ref().map(|t| t[k])));
            row.push(opt(self.xi_trace.as_ref().map(|t| norm(&t[k]))));
            row.push(opt(self.beta_trace.as_ref().map(|t| norm(&t[k]))));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// ‖P_Θ(θ, ∇J(θ), α)‖² with ∇J from central differences on the exact oracle.
pub fn stationarity_measure<O: Objective>(
    objective: &O,
    theta: &[f64],
    alpha: f64,
    bounds: &BoxSet,
    fd_step: f64,
) -> Result<f64> {
    let grad = finite_diff_gradient(&|t: &[f64]| objective.exact(t), theta, fd_step)?;
    let p = prox_map(theta, &grad, alpha, bounds)?;
    Ok(p.iter().map(|x| x * x).sum())
}

/// Run projected smoothed-functional ascent on `objective`.
pub fn run_ascent<O: Objective>(objective: &O, cfg: &AscentConfig) -> Result<RunResult> {
    let d = objective.dim();
    let n_iter = cfg.iterations;
    if n_iter == 0 {
        return Err(Error::config("iterations must be at least 1"));
    }
    if cfg.bounds.dim() != d || cfg.theta0.len() != d {
        return Err(Error::config(format!(
            "objective has dimension {d}, box {} and theta0 {}",
            cfg.bounds.dim(),
            cfg.theta0.len()
        )));
    }
    if !cfg.bounds.contains(&cfg.theta0) {
        return Err(Error::config("theta0 lies outside the box"));
    }
    if let Some(len) = cfg.schedule.len() {
        if len < n_iter {
            return Err(Error::config(format!(
                "schedule covers {len} iterations, {n_iter} requested"
            )));
        }
    }

    let mut theta = cfg.theta0.clone();
    let mut theta_trace = Vec::with_capacity(n_iter + 1);
    let mut estimate_trace = Vec::with_capacity(n_iter);
    let mut steps = Vec::with_capacity(n_iter);
    theta_trace.push(theta.clone());
    for k in 0..n_iter {
        let step = StepParams {
            alpha: cfg.schedule.alpha(k),
            mu: cfg.schedule.mu(k),
            n: cfg.schedule.n(k),
        };
        let estimate = (|| {
            let sf = SfConfig::new(step.mu, step.n, d)?;
            let sample = objective.draw(
                cfg.schedule.batch_size(),
                derive_seed(cfg.seed, Stream::Batch, k as u64),
            )?;
            let mut rng = derived_stream(cfg.seed, Stream::Directions, k as u64);
            sf_gradient_estimate(&|t: &[f64]| objective.estimate(&sample, t), &theta, &sf, &mut rng)
        })()
        .map_err(|e| e.at_iteration(k))?;
        let stepped: Vec<f64> = theta
            .iter()
            .zip(&estimate.grad)
            .map(|(t, g)| t + step.alpha * g)
            .collect();
        theta = cfg.bounds.project(&stepped);
        theta_trace.push(theta.clone());
        estimate_trace.push(estimate);
        steps.push(step);
    }

    let sampled_index = sample_index_by_weights(
        &steps.iter().map(|s| s.alpha).collect::<Vec<_>>(),
        &mut derived_stream(cfg.seed, Stream::Index, 0),
    )?;

    let diag = &cfg.diagnostics;
    let (exact_trace, stationarity_trace) = if diag.exact {
        let exact: Vec<f64> = theta_trace.par_iter().map(|t| objective.exact(t)).collect();
        let stationarity = (0..n_iter)
            .into_par_iter()
            .map(|k| {
                stationarity_measure(objective, &theta_trace[k], steps[k].alpha, &cfg.bounds, diag.fd_step)
            })
            .collect::<Result<Vec<_>>>()?;
        (Some(exact), Some(stationarity))
    } else {
        (None, None)
    };

    let (xi_trace, beta_trace) = match diag.bias_noise_samples {
        Some(samples) => {
            let pairs = (0..n_iter)
                .into_par_iter()
                .map(|k| {
                    let exact = |t: &[f64]| objective.exact(t);
                    let mut rng = derived_stream(cfg.seed, Stream::Oracle, k as u64);
                    let smoothed =
                        sf_gradient_mean_oracle(&exact, &theta_trace[k], steps[k].mu, samples, &mut rng)?;
                    let grad = finite_diff_gradient(&exact, &theta_trace[k], diag.fd_step)?;
                    let xi = estimate_trace[k]
                        .grad
                        .iter()
                        .zip(&smoothed.mean)
                        .map(|(e, m)| e - m)
                        .collect::<Vec<_>>();
                    let beta = smoothed.mean.iter().zip(&grad).map(|(m, g)| m - g).collect::<Vec<_>>();
                    Ok((xi, beta))
                })
                .collect::<Result<Vec<_>>>()?;
            let (xi, beta) = pairs.into_iter().unzip();
            (Some(xi), Some(beta))
        }
        None => (None, None),
    };

    let converged_at = stationarity_trace.as_ref().and_then(|st| {
        let window = diag.convergence_window.max(1);
        let mut run = 0usize;
        for (k, s) in st.iter().enumerate() {
            if s.sqrt() < diag.convergence_tol {
                run += 1;
                if run == window {
                    return Some(k + 1 - window);
                }
            } else {
                run = 0;
            }
        }
        None
    });
    let active_bounds = cfg.bounds.active_bounds(&theta);

    Ok(RunResult {
        seed: cfg.seed,
        bounds: cfg.bounds.clone(),
        schedule: cfg.schedule.clone(),
        steps,
        theta_trace,
        estimate_trace,
        exact_trace,
        stationarity_trace,
        xi_trace,
        beta_trace,
        sampled_index,
        converged_at,
        active_bounds,
    })
}

/// The off-policy loop: each iteration samples `m` behavior episodes, forms
/// the two-point estimate from importance-sampled values on that shared batch,
/// and projects the step back into the box.
pub fn offp_sf_run(
    mdp: &TabularMdp,
    behavior: &BehaviorPolicy,
    horizon_cap: usize,
    cfg: &AscentConfig,
) -> Result<RunResult> {
    let objective = OffPolicyObjective::new(mdp, behavior, horizon_cap)?;
    run_ascent(&objective, cfg)
}
