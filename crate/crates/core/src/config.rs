//! Run configuration files (TOML).
//!
//! ```toml
//! seed = 7                 # required: runs are never seeded from the clock
//! iterations = 200
//! repetitions = 10         # default 1
//! horizon_cap = 200        # default 200
//! theta0 = [0.0, 0.0]      # default: box center
//!
//! [mdp]
//! fixture = "bandit"       # or: file = "my.mdp", relative to this file
//!
//! [behavior]               # optional; uniform when `probs` is absent
//! probs = [[0.5, 0.5]]     # one row per non-terminal state
//! floor = 1e-3
//!
//! [box]
//! lower = -5.0             # scalar or one value per coordinate
//! upper = 5.0
//!
//! [schedule]
//! kind = "corollary"       # c1, c2, c3 default to 1, 1, 0.5
//! batch_size = 20
//! # kind = "asymptotic"; a0, mu0, n_growth, batch_size
//!
//! [diagnostics]            # optional
//! exact = true
//! bias_noise_samples = 10000
//! tolerance = 1e-3
//! window = 50
//! fd_step = 1e-5
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::fixtures;
use crate::mdp::{BehaviorPolicy, TabularMdp, DEFAULT_BEHAVIOR_FLOOR, DEFAULT_HORIZON_CAP};
use crate::mdp_file::read_mdp;
use crate::optimizer::{
    asymptotic_schedule, corollary_schedule, AscentConfig, BoxSet, Diagnostics, Schedule,
    DEFAULT_C1, DEFAULT_C2, DEFAULT_C3,
};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub iterations: usize,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_horizon")]
    pub horizon_cap: usize,
    #[serde(default)]
    pub theta0: Option<Vec<f64>>,
    pub mdp: MdpSource,
    #[serde(default)]
    pub behavior: BehaviorSpec,
    #[serde(rename = "box")]
    pub bounds: BoundsSpec,
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
    /// Directory relative `mdp.file` paths are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn default_repetitions() -> usize {
    1
}

fn default_horizon() -> usize {
    DEFAULT_HORIZON_CAP
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpSource {
    #[serde(default)]
    pub fixture: Option<String>,
    #[serde(default)]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorSpec {
    #[serde(default)]
    pub probs: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_floor")]
    pub floor: f64,
}

impl Default for BehaviorSpec {
    fn default() -> Self {
        BehaviorSpec {
            probs: None,
            floor: DEFAULT_BEHAVIOR_FLOOR,
        }
    }
}

fn default_floor() -> f64 {
    DEFAULT_BEHAVIOR_FLOOR
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Bound {
    Scalar(f64),
    PerCoordinate(Vec<f64>),
}

impl Bound {
    fn expand(&self, dim: usize) -> Result<Vec<f64>> {
        match self {
            Bound::Scalar(v) => Ok(vec![*v; dim]),
            Bound::PerCoordinate(v) if v.len() == dim => Ok(v.clone()),
            Bound::PerCoordinate(v) => Err(Error::config(format!(
                "box bound has {} entries, parameter dimension is {dim}",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    pub lower: Bound,
    pub upper: Bound,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScheduleSpec {
    Corollary {
        #[serde(default = "c1")]
        c1: f64,
        #[serde(default = "c2")]
        c2: f64,
        #[serde(default = "c3")]
        c3: f64,
        batch_size: usize,
    },
    Asymptotic {
        a0: f64,
        mu0: f64,
        n_growth: f64,
        batch_size: usize,
    },
}

fn c1() -> f64 {
    DEFAULT_C1
}
fn c2() -> f64 {
    DEFAULT_C2
}
fn c3() -> f64 {
    DEFAULT_C3
}

impl ScheduleSpec {
    pub fn build(&self, iterations: usize) -> Result<Schedule> {
        match *self {
            ScheduleSpec::Corollary {
                c1,
                c2,
                c3,
                batch_size,
            } => corollary_schedule(iterations, c1, c2, c3, batch_size),
            ScheduleSpec::Asymptotic {
                a0,
                mu0,
                n_growth,
                batch_size,
            } => asymptotic_schedule(a0, mu0, n_growth, batch_size),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSpec {
    #[serde(default = "yes")]
    pub exact: bool,
    #[serde(default)]
    pub bias_noise_samples: Option<usize>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        DiagnosticsSpec {
            exact: true,
            bias_noise_samples: None,
            tolerance: default_tolerance(),
            window: default_window(),
            fd_step: default_fd_step(),
        }
    }
}

fn yes() -> bool {
    true
}
fn default_tolerance() -> f64 {
    1e-3
}
fn default_window() -> usize {
    50
}
fn default_fd_step() -> f64 {
    1e-5
}

/// A configuration with every reference resolved and validated.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub mdp: TabularMdp,
    pub behavior: BehaviorPolicy,
    pub horizon_cap: usize,
    pub repetitions: usize,
    pub ascent: AscentConfig,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
            message: e.message().to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            Error::Parse { line, message } => Error::Parse {
                line,
                message: format!("{}: {message}", path.display()),
            },
            other => other,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn load_mdp(&self) -> Result<TabularMdp> {
        match (&self.mdp.fixture, &self.mdp.file) {
            (Some(name), None) => fixtures::by_name(name),
            (None, Some(file)) => {
                let path = match &self.base_dir {
                    Some(dir) if file.is_relative() => dir.join(file),
                    _ => file.clone(),
                };
                read_mdp(path)
            }
            _ => Err(Error::config("[mdp] needs exactly one of `fixture` or `file`")),
        }
    }

    pub fn resolve(&self) -> Result<ResolvedRun> {
        if self.repetitions == 0 {
            return Err(Error::config("repetitions must be at least 1"));
        }
        let mdp = self.load_mdp()?;
        mdp.ensure_horizon(self.horizon_cap)?;
        let behavior = match &self.behavior.probs {
            None if self.behavior.floor == DEFAULT_BEHAVIOR_FLOOR => BehaviorPolicy::uniform(&mdp),
            None => {
                let a = mdp.num_actions();
                BehaviorPolicy::new(vec![1.0 / a as f64; mdp.param_dim()], a, self.behavior.floor)?
            }
            Some(rows) => {
                if rows.len() != mdp.num_states() - 1 {
                    return Err(Error::config(format!(
                        "behavior needs {} rows (one per non-terminal state), got {}",
                        mdp.num_states() - 1,
                        rows.len()
                    )));
                }
                if rows.iter().any(|r| r.len() != mdp.num_actions()) {
                    return Err(Error::config(format!(
                        "every behavior row needs {} entries",
                        mdp.num_actions()
                    )));
                }
                BehaviorPolicy::new(rows.concat(), mdp.num_actions(), self.behavior.floor)?
            }
        };
        let d = mdp.param_dim();
        let bounds = BoxSet::new(self.bounds.lower.expand(d)?, self.bounds.upper.expand(d)?)?;
        let theta0 = match &self.theta0 {
            Some(t) => t.clone(),
            None => bounds.center(),
        };
        let schedule = self.schedule.build(self.iterations)?;
        let diagnostics = Diagnostics {
            exact: self.diagnostics.exact,
            bias_noise_samples: self.diagnostics.bias_noise_samples,
            fd_step: self.diagnostics.fd_step,
            convergence_tol: self.diagnostics.tolerance,
            convergence_window: self.diagnostics.window,
        };
        Ok(ResolvedRun {
            mdp,
            behavior,
            horizon_cap: self.horizon_cap,
            repetitions: self.repetitions,
            ascent: AscentConfig {
                bounds,
                schedule,
                theta0,
                iterations: self.iterations,
                seed: self.seed,
                diagnostics,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BANDIT: &str = r#"
        seed = 7
        iterations = 200
        repetitions = 10

        [mdp]
        fixture = "bandit"

        [box]
        lower = -5.0
        upper = 5.0

        [schedule]
        kind = "corollary"
        batch_size = 20
    "#;

    #[test]
    fn parses_and_resolves_defaults() {
        let cfg = RunConfig::parse(BANDIT).unwrap();
        let run = cfg.resolve().unwrap();
        assert_eq!(run.repetitions, 10);
        assert_eq!(run.horizon_cap, DEFAULT_HORIZON_CAP);
        assert_eq!(run.ascent.theta0, vec![0.0, 0.0]);
        assert!(run.ascent.diagnostics.exact);
        let s = &run.ascent.schedule;
        assert!((s.alpha(0) - 1.0 / 200f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.n(0), 100);
        assert_eq!(s.batch_size(), 20);
    }

    #[test]
    fn seed_is_required() {
        let text = BANDIT.replace("seed = 7", "");
        let err = RunConfig::parse(&text).unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn unknown_fixture_is_reported() {
        let text = BANDIT.replace("\"bandit\"", "\"nope\"");
        let err = RunConfig::parse(&text).unwrap().resolve().unwrap_err();
        assert!(matches!(err, Error::UnknownFixture(ref n) if n == "nope"));
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_line() {
        let text = BANDIT.replace("batch_size = 20", "batch_size = 20\nbogus = 1");
        match RunConfig::parse(&text) {
            Err(Error::Parse { line, .. }) => assert!(line > 10),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn per_coordinate_bounds_and_behavior_rows() {
        let text = r#"
            seed = 1
            iterations = 10
            [mdp]
            fixture = "chain3"
            [behavior]
            probs = [[0.3, 0.7], [0.5, 0.5], [0.9, 0.1]]
            [box]
            lower = [-1, -1, -2, -2, -3, -3]
            upper = 3.0
            [schedule]
            kind = "asymptotic"
            a0 = 1.0
            mu0 = 0.5
            n_growth = 4.0
            batch_size = 5
        "#;
        let run = RunConfig::parse(text).unwrap().resolve().unwrap();
        assert_eq!(run.behavior.prob(3, 0), 0.9);
        assert_eq!(run.ascent.bounds.lower()[4], -3.0);
        assert_eq!(run.ascent.theta0[0], 1.0);
        assert!(run.ascent.schedule.satisfies_asymptotic_conditions());
    }

    #[test]
    fn mdp_file_relative_to_config() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("b.mdp"),
            crate::mdp_file::format_mdp(&fixtures::bandit()),
        )
        .unwrap();
        let text = BANDIT.replace("fixture = \"bandit\"", "file = \"b.mdp\"");
        let path = dir.path().join("run.toml");
        std::fs::write(&path, text).unwrap();
        let run = RunConfig::load(&path).unwrap().resolve().unwrap();
        assert_eq!(run.mdp, fixtures::bandit());
    }

    #[test]
    fn bad_dimensions_are_config_errors() {
        let text = BANDIT.replace("lower = -5.0", "lower = [-5.0, -5.0, -5.0]");
        let err = RunConfig::parse(&text).unwrap().resolve().unwrap_err();
        assert!(err.is_config_error());
    }
}
