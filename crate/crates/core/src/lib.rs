//! Off-policy policy gradient with smoothed-functional gradient estimates.
//!
//! The pieces, bottom-up:
//!
//! * [`mdp`]: episodic tabular MDPs, softmax target policies, behavior
//!   policies, seeded trajectory sampling and the exact value oracle.
//! * [`ope`]: per-decision importance-sampling value estimates.
//! * [`sf`]: unit-sphere two-point gradient estimates and the Monte-Carlo and
//!   finite-difference oracles that check them.
//! * [`optimizer`]: box projection, the prox map, step-size schedules and the
//!   projected ascent loop.
//! * [`experiment`], [`config`], [`verify`]: configuration-driven runs, rate
//!   sweeps and property suites behind the `offpsf` command-line tool.

pub mod config;
pub mod error;
pub mod experiment;
pub mod fixtures;
pub mod mdp;
pub mod mdp_file;
pub mod ope;
pub mod optimizer;
pub mod rng;
pub mod sf;
pub mod verify;

pub use error::{Error, Result};
pub use mdp::{
    exact_value, sample_batch, sample_trajectory, target_policy_prob, BehaviorPolicy,
    PolicyParams, Step, TabularMdp, Trajectory,
};
pub use ope::{discounted_return, pdis_estimate, EvalBatch};
pub use optimizer::{
    asymptotic_schedule, corollary_schedule, offp_sf_run, project_box, prox_map, run_ascent,
    sample_stationarity_index, AscentConfig, BoxSet, Diagnostics, Objective, RunResult, Schedule,
};
pub use sf::{
    finite_diff_gradient, sample_unit_sphere, sf_gradient_estimate, sf_gradient_mean_oracle,
    smoothed_value_oracle, GradEstimate, SfConfig,
};
