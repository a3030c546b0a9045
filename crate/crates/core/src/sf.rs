//! Smoothed-functional gradient estimation on the unit sphere, plus the
//! Monte-Carlo and finite-difference oracles used to check it.
//!
//! Every routine takes the objective as an abstract evaluator
//! `Fn(&[f64]) -> f64`, so the same code serves importance-sampled values,
//! exact dynamic-programming values and synthetic test functions.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Below this many directions the perturbed evaluations run inline.
const PARALLEL_DIRECTIONS: usize = 32;

/// Largest smoothing radius: perturbed points must stay within the unit
/// enlargement of the parameter box.
pub const MAX_MU: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SfConfig {
    pub mu: f64,
    pub n: usize,
    pub d: usize,
}

impl SfConfig {
    pub fn new(mu: f64, n: usize, d: usize) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::config(format!("mu must be positive, got {mu}")));
        }
        if mu > MAX_MU {
            return Err(Error::config(format!(
                "mu = {mu} exceeds {MAX_MU}; perturbed points would leave the enlarged box"
            )));
        }
        if n == 0 {
            return Err(Error::config("at least one direction is required"));
        }
        if d == 0 {
            return Err(Error::domain("dimension must be at least 1"));
        }
        Ok(SfConfig { mu, n, d })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradEstimate {
    pub grad: Vec<f64>,
    pub directions_used: usize,
    pub mu_used: f64,
}

impl GradEstimate {
    pub fn norm(&self) -> f64 {
        norm(&self.grad)
    }
}

/// Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub se: f64,
}

/// Component-wise Monte-Carlo mean with standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorEstimate {
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
}

impl VectorEstimate {
    /// Standard error scale of the whole vector, √(Σ seⱼ²).
    pub fn se_norm(&self) -> f64 {
        norm(&self.se)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Default)]
pub struct Moments {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero with fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }

    pub fn estimate(&self) -> MeanEstimate {
        MeanEstimate {
            mean: self.mean(),
            se: self.std_error(),
        }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        iter.into_iter().for_each(|x| m.push(x));
        m
    }
}

fn vector_moments(dims: usize) -> Vec<Moments> {
    vec![Moments::default(); dims]
}

fn finish(moments: &[Moments]) -> VectorEstimate {
    VectorEstimate {
        mean: moments.iter().map(Moments::mean).collect(),
        se: moments.iter().map(Moments::std_error).collect(),
    }
}

/// Uniform direction on 𝕊^{d−1}: a standard normal vector, normalized.
pub fn sample_unit_sphere<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::domain("cannot sample a direction in dimension 0"));
    }
    loop {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let len = norm(&v);
        if len > 0.0 && len.is_finite() {
            v.iter_mut().for_each(|x| *x /= len);
            return Ok(v);
        }
    }
}

/// Uniform point in the unit ball 𝔹^d: a sphere direction scaled by U^{1/d}.
pub fn sample_unit_ball<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Result<Vec<f64>> {
    let mut v = sample_unit_sphere(rng, d)?;
    let u: f64 = rng.random();
    let radius = u.powf(1.0 / d as f64);
    v.iter_mut().for_each(|x| *x *= radius);
    Ok(v)
}

fn shifted(theta: &[f64], direction: &[f64], scale: f64, out: &mut Vec<f64>) {
    out.clear();
    out.extend(theta.iter().zip(direction).map(|(t, v)| t + scale * v));
}

/// The two-point estimate (d/n) Σᵢ [f(θ+μvᵢ) − f(θ−μvᵢ)]/(2μ) · vᵢ with
/// freshly drawn directions.
pub fn sf_gradient_estimate<F, R>(
    value_fn: &F,
    theta: &[f64],
    cfg: &SfConfig,
    rng: &mut R,
) -> Result<GradEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
    R: Rng + ?Sized,
{
    if theta.len() != cfg.d {
        return Err(Error::config(format!(
            "theta has dimension {}, config says {}",
            theta.len(),
            cfg.d
        )));
    }
    let directions = (0..cfg.n)
        .map(|_| sample_unit_sphere(rng, cfg.d))
        .collect::<Result<Vec<_>>>()?;
    sf_gradient_from_directions(value_fn, theta, cfg.mu, &directions)
}

/// The two-point estimate over caller-supplied directions.
///
/// Perturbed evaluations may run in parallel; the weighted directions are
/// accumulated in index order, so the result is independent of thread count.
pub fn sf_gradient_from_directions<F>(
    value_fn: &F,
    theta: &[f64],
    mu: f64,
    directions: &[Vec<f64>],
) -> Result<GradEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let cfg = SfConfig::new(mu, directions.len(), theta.len())?;
    if let Some(v) = directions.iter().find(|v| v.len() != cfg.d) {
        return Err(Error::config(format!(
            "direction of dimension {} for theta of dimension {}",
            v.len(),
            cfg.d
        )));
    }
    let coefficient = |v: &Vec<f64>| {
        let mut point = Vec::with_capacity(cfg.d);
        shifted(theta, v, mu, &mut point);
        let plus = value_fn(&point);
        shifted(theta, v, -mu, &mut point);
        let minus = value_fn(&point);
        (plus - minus) / (2.0 * mu)
    };
    let coefficients: Vec<f64> = if directions.len() >= PARALLEL_DIRECTIONS {
        directions.par_iter().map(coefficient).collect()
    } else {
        directions.iter().map(coefficient).collect()
    };

    let mut grad = vec![0.0; cfg.d];
    for (c, v) in coefficients.iter().zip(directions) {
        grad.iter_mut().zip(v).for_each(|(g, vj)| *g += c * vj);
    }
    let scale = cfg.d as f64 / cfg.n as f64;
    grad.iter_mut().for_each(|g| *g *= scale);
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NumericOverflow("gradient estimate is not finite".into()));
    }
    Ok(GradEstimate {
        grad,
        directions_used: cfg.n,
        mu_used: mu,
    })
}

/// Monte-Carlo estimate of J_μ(θ) = E_{u∈𝔹^d}[J(θ+μu)].
pub fn smoothed_value_oracle<F, R>(
    value_fn: &F,
    theta: &[f64],
    mu: f64,
    num_samples: usize,
    rng: &mut R,
) -> Result<MeanEstimate>
where
    F: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    if num_samples == 0 {
        return Err(Error::domain("num_samples must be at least 1"));
    }
    let mut moments = Moments::default();
    let mut point = Vec::with_capacity(theta.len());
    for _ in 0..num_samples {
        let u = sample_unit_ball(rng, theta.len())?;
        shifted(theta, &u, mu, &mut point);
        moments.push(value_fn(&point));
    }
    Ok(moments.estimate())
}

/// Monte-Carlo estimate of ∇J_μ(θ) = E_{v∈𝕊^{d−1}}[(d/μ) J(θ+μv) v].
///
/// Samples are centered on J(θ): E[v] = 0, so subtracting the constant
/// (d/μ) J(θ) v leaves the expectation unchanged and removes the dominant
/// O(d/μ) noise term.
pub fn sf_gradient_mean_oracle<F, R>(
    value_fn: &F,
    theta: &[f64],
    mu: f64,
    num_samples: usize,
    rng: &mut R,
) -> Result<VectorEstimate>
where
    F: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    if num_samples == 0 {
        return Err(Error::domain("num_samples must be at least 1"));
    }
    if !(mu > 0.0) {
        return Err(Error::domain(format!("mu must be positive, got {mu}")));
    }
    let d = theta.len();
    let base = value_fn(theta);
    let scale = d as f64 / mu;
    let mut moments = vector_moments(d);
    let mut point = Vec::with_capacity(d);
    for _ in 0..num_samples {
        let v = sample_unit_sphere(rng, d)?;
        shifted(theta, &v, mu, &mut point);
        let w = scale * (value_fn(&point) - base);
        moments.iter_mut().zip(&v).for_each(|(m, vj)| m.push(w * vj));
    }
    Ok(finish(&moments))
}

/// Central differences [f(θ+h eⱼ) − f(θ−h eⱼ)]/(2h).
pub fn finite_diff_gradient<F>(value_fn: &F, theta: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::domain(format!("step h must be positive, got {h}")));
    }
    let mut point = theta.to_vec();
    let grad = (0..theta.len())
        .map(|j| {
            point[j] = theta[j] + h;
            let plus = value_fn(&point);
            point[j] = theta[j] - h;
            let minus = value_fn(&point);
            point[j] = theta[j];
            (plus - minus) / (2.0 * h)
        })
        .collect();
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn sphere_samples_have_unit_norm() {
        let mut rng = stream(1);
        for d in [1, 2, 3, 10, 100] {
            for _ in 0..200 {
                let v = sample_unit_sphere(&mut rng, d).unwrap();
                assert!((norm(&v) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_dimension_is_a_domain_error() {
        assert!(matches!(
            sample_unit_sphere(&mut stream(0), 0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn one_dimensional_sphere_is_a_fair_coin() {
        let mut rng = stream(2);
        let n = 100_000;
        let mut plus = 0usize;
        for _ in 0..n {
            let v = sample_unit_sphere(&mut rng, 1).unwrap();
            assert!(v[0] == 1.0 || v[0] == -1.0);
            plus += (v[0] > 0.0) as usize;
        }
        let freq = plus as f64 / n as f64;
        let se = (0.25 / n as f64).sqrt();
        assert!((freq - 0.5).abs() < 4.0 * se);
    }

    #[test]
    fn sphere_first_and_second_moments() {
        // E[v] = 0 and E[v vᵀ] = I/3 in three dimensions.
        let mut rng = stream(3);
        let n = 100_000;
        let mut first = vector_moments(3);
        let mut second = vec![Moments::default(); 9];
        for _ in 0..n {
            let v = sample_unit_sphere(&mut rng, 3).unwrap();
            for i in 0..3 {
                first[i].push(v[i]);
                for j in 0..3 {
                    second[i * 3 + j].push(v[i] * v[j]);
                }
            }
        }
        for m in &first {
            assert!(m.mean().abs() < 4.0 * m.std_error());
        }
        for i in 0..3 {
            for j in 0..3 {
                let m = &second[i * 3 + j];
                let target = if i == j { 1.0 / 3.0 } else { 0.0 };
                assert!(
                    (m.mean() - target).abs() < 4.0 * m.std_error(),
                    "E[v{i} v{j}] = {}",
                    m.mean()
                );
            }
        }
    }

    #[test]
    fn ball_samples_stay_inside() {
        let mut rng = stream(4);
        for _ in 0..1000 {
            assert!(norm(&sample_unit_ball(&mut rng, 4).unwrap()) <= 1.0);
        }
    }

    #[test]
    fn config_validation() {
        assert!(SfConfig::new(0.0, 1, 1).is_err());
        assert!(matches!(SfConfig::new(1.5, 1, 1), Err(Error::Config(_))));
        assert!(SfConfig::new(1.0, 0, 1).is_err());
        assert!(SfConfig::new(1.0, 1, 1).is_ok());
    }

    #[test]
    fn constant_function_gives_zero_gradient() {
        let f = |_: &[f64]| 3.25;
        let cfg = SfConfig::new(0.3, 50, 4).unwrap();
        let g = sf_gradient_estimate(&f, &[0.1, 0.2, 0.3, 0.4], &cfg, &mut stream(5)).unwrap();
        assert!(g.grad.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn linear_function_is_exact_in_one_dimension() {
        let b = -1.7;
        let f = |t: &[f64]| b * t[0];
        for (seed, mu) in [(1u64, 0.01), (2, 0.5), (3, 1.0)] {
            let cfg = SfConfig::new(mu, 1, 1).unwrap();
            let g = sf_gradient_estimate(&f, &[0.3], &cfg, &mut stream(seed)).unwrap();
            assert!((g.grad[0] - b).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_function_mean_in_five_dimensions() {
        // Each direction contributes d (bᵀv) v, mean b; per-component
        // variance is estimated from the samples themselves.
        let b = [1.0, -2.0, 0.5, 0.0, 3.0];
        let f = |t: &[f64]| dot(&b, t);
        let theta = [0.0; 5];
        let n = 10_000;
        let mut rng = stream(6);
        let dirs: Vec<_> = (0..n).map(|_| sample_unit_sphere(&mut rng, 5).unwrap()).collect();
        let g = sf_gradient_from_directions(&f, &theta, 0.2, &dirs).unwrap();
        let mut per = vector_moments(5);
        for v in &dirs {
            let c = 5.0 * dot(&b, v);
            per.iter_mut().zip(v).for_each(|(m, vj)| m.push(c * vj));
        }
        for j in 0..5 {
            assert!((g.grad[j] - per[j].mean()).abs() < 1e-9);
            assert!(
                (g.grad[j] - b[j]).abs() < 4.0 * per[j].std_error(),
                "component {j}: {} vs {}",
                g.grad[j],
                b[j]
            );
        }
    }

    #[test]
    fn antithetic_directions_give_identical_estimates() {
        let f = |t: &[f64]| (t[0] * 1.3).sin() + t[1] * t[1] * t[2] - t[2].exp();
        let mut rng = stream(7);
        let dirs: Vec<_> = (0..40).map(|_| sample_unit_sphere(&mut rng, 3).unwrap()).collect();
        let flipped: Vec<Vec<f64>> = dirs
            .iter()
            .map(|v| v.iter().map(|x| -x).collect())
            .collect();
        let theta = [0.2, -0.4, 0.9];
        let a = sf_gradient_from_directions(&f, &theta, 0.3, &dirs).unwrap();
        let b = sf_gradient_from_directions(&f, &theta, 0.3, &flipped).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parallel_and_inline_paths_agree() {
        let f = |t: &[f64]| t.iter().map(|x| x.sin()).sum::<f64>();
        let mut rng = stream(8);
        let dirs: Vec<_> = (0..64).map(|_| sample_unit_sphere(&mut rng, 3).unwrap()).collect();
        let theta = [0.1, 0.2, 0.3];
        let whole = sf_gradient_from_directions(&f, &theta, 0.1, &dirs).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let single = pool.install(|| sf_gradient_from_directions(&f, &theta, 0.1, &dirs).unwrap());
        assert_eq!(whole, single);
    }

    #[test]
    fn smoothed_value_of_constant() {
        let f = |_: &[f64]| 2.5;
        let est = smoothed_value_oracle(&f, &[1.0, 2.0], 0.5, 1000, &mut stream(9)).unwrap();
        assert_eq!(est.mean, 2.5);
        assert_eq!(est.se, 0.0);
    }

    #[test]
    fn smoothed_value_of_linear_function_is_unchanged() {
        let f = |t: &[f64]| 2.0 * t[0] - t[1] + 0.5;
        let theta = [0.3, -0.2];
        let est = smoothed_value_oracle(&f, &theta, 0.8, 100_000, &mut stream(10)).unwrap();
        assert!((est.mean - f(&theta)).abs() < 4.0 * est.se);
    }

    #[test]
    fn smoothed_value_of_squared_norm() {
        // E‖u‖² over the unit disc. Radial quadrature of r² against the
        // radial density 2r on [0, 1] gives the reference value.
        let steps = 100_000;
        let h = 1.0 / steps as f64;
        let reference: f64 = (0..steps)
            .map(|i| {
                let r = (i as f64 + 0.5) * h;
                r * r * 2.0 * r * h
            })
            .sum();
        assert!((reference - 0.5).abs() < 1e-9);
        let f = |t: &[f64]| t.iter().map(|x| x * x).sum::<f64>();
        let est = smoothed_value_oracle(&f, &[0.0, 0.0], 1.0, 200_000, &mut stream(11)).unwrap();
        assert!((est.mean - reference).abs() < 4.0 * est.se, "{est:?}");
    }

    #[test]
    fn mean_oracle_on_constant_and_linear_functions() {
        let c = |_: &[f64]| 4.0;
        let est = sf_gradient_mean_oracle(&c, &[0.0, 1.0], 0.5, 1000, &mut stream(12)).unwrap();
        assert!(est.mean.iter().all(|g| *g == 0.0));

        let b = [0.7, -1.1, 2.0];
        let f = |t: &[f64]| dot(&b, t);
        let est = sf_gradient_mean_oracle(&f, &[0.5, 0.5, 0.5], 0.4, 100_000, &mut stream(13))
            .unwrap();
        for j in 0..3 {
            assert!((est.mean[j] - b[j]).abs() < 4.0 * est.se[j]);
        }
    }

    #[test]
    fn mean_oracle_on_quadratic() {
        // J_μ(θ) = ‖θ‖² + μ² d/(d+2), so ∇J_μ(1, 0) = (2, 0).
        let f = |t: &[f64]| t.iter().map(|x| x * x).sum::<f64>();
        let est = sf_gradient_mean_oracle(&f, &[1.0, 0.0], 0.1, 200_000, &mut stream(14)).unwrap();
        assert!((est.mean[0] - 2.0).abs() < 4.0 * est.se[0], "{est:?}");
        assert!(est.mean[1].abs() < 4.0 * est.se[1], "{est:?}");
    }

    #[test]
    fn finite_differences() {
        let b = [0.5, -3.0, 2.0];
        let lin = |t: &[f64]| dot(&b, t);
        for h in [1e-3, 0.1, 1.0] {
            let g = finite_diff_gradient(&lin, &[1.0, 2.0, 3.0], h).unwrap();
            for j in 0..3 {
                assert!((g[j] - b[j]).abs() < 1e-10);
            }
        }
        let quad = |t: &[f64]| t.iter().map(|x| x * x).sum::<f64>();
        let h = 1e-4;
        let g = finite_diff_gradient(&quad, &[1.0, 2.0], h).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-6 && (g[1] - 4.0).abs() < 1e-6);
        assert!(finite_diff_gradient(&quad, &[1.0], 0.0).is_err());
    }
}
