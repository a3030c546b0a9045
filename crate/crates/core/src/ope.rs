//! Per-decision importance sampling: estimate the value of any softmax target
//! policy from episodes collected under a fixed behavior policy.

use crate::error::{Error, Result};
use crate::mdp::{log_softmax_table, BehaviorPolicy, PolicyParams, Trajectory};

#[derive(Debug, Clone, Copy)]
struct PreparedStep {
    /// Index of the (state, action) logit in θ.
    logit: usize,
    log_behavior: f64,
    /// γᵗ · r_{t+1}
    discounted_reward: f64,
}

/// A batch of behavior-policy episodes, validated and preprocessed so that
/// evaluating a new θ costs one log-softmax plus one pass over the steps.
#[derive(Debug, Clone)]
pub struct EvalBatch {
    trajectories: Vec<Trajectory>,
    prepared: Vec<Vec<PreparedStep>>,
    behavior: BehaviorPolicy,
    gamma: f64,
}

impl EvalBatch {
    pub fn new(trajectories: Vec<Trajectory>, behavior: &BehaviorPolicy, gamma: f64) -> Result<Self> {
        if trajectories.is_empty() {
            return Err(Error::domain("an evaluation batch needs at least one trajectory"));
        }
        let num_actions = behavior.num_actions();
        let rows = behavior.probs().len() / num_actions;
        let mut prepared = Vec::with_capacity(trajectories.len());
        for (n, traj) in trajectories.iter().enumerate() {
            if traj.behavior_tag() != behavior.fingerprint() {
                return Err(Error::DataIntegrity(format!(
                    "trajectory {n} was not generated by this behavior policy"
                )));
            }
            let mut discount = 1.0;
            let mut steps = Vec::with_capacity(traj.len());
            for (t, step) in traj.steps().iter().enumerate() {
                if step.state == 0 || step.state > rows || step.action >= num_actions {
                    return Err(Error::DataIntegrity(format!(
                        "trajectory {n} step {t} records (state {}, action {}) outside the policy table",
                        step.state, step.action
                    )));
                }
                let b = behavior.prob(step.state, step.action);
                if !(b >= behavior.floor()) {
                    return Err(Error::DataIntegrity(format!(
                        "trajectory {n} step {t}: behavior probability {b} below floor {}",
                        behavior.floor()
                    )));
                }
                steps.push(PreparedStep {
                    logit: (step.state - 1) * num_actions + step.action,
                    log_behavior: behavior.log_prob(step.state, step.action),
                    discounted_reward: discount * step.reward,
                });
                discount *= gamma;
            }
            prepared.push(steps);
        }
        Ok(EvalBatch {
            trajectories,
            prepared,
            behavior: behavior.clone(),
            gamma,
        })
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn behavior(&self) -> &BehaviorPolicy {
        &self.behavior
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn param_dim(&self) -> usize {
        self.behavior.probs().len()
    }

    /// Ĵ_m at raw logits `theta`. Cumulative ratios are kept in log space and
    /// exponentiated per step. Trajectories are summed in index order.
    pub fn value_at(&self, theta: &[f64]) -> f64 {
        debug_assert_eq!(theta.len(), self.param_dim());
        let log_pi = log_softmax_table(theta, self.behavior.num_actions());
        let mut total = 0.0;
        for steps in &self.prepared {
            let mut log_ratio = 0.0;
            let mut episode = 0.0;
            for step in steps {
                log_ratio += log_pi[step.logit] - step.log_behavior;
                episode += step.discounted_reward * log_ratio.exp();
            }
            total += episode;
        }
        total / self.prepared.len() as f64
    }

    /// Plain mean of the discounted returns, i.e. the estimate when π_θ = b.
    pub fn mean_discounted_return(&self) -> f64 {
        let total: f64 = self
            .trajectories
            .iter()
            .map(|t| discounted_return(t, self.gamma))
            .sum();
        total / self.trajectories.len() as f64
    }
}

/// Ĵ_m(θ), the per-decision importance-sampling estimate of J(θ).
pub fn pdis_estimate(batch: &EvalBatch, params: &PolicyParams) -> Result<f64> {
    if params.num_actions() != batch.behavior.num_actions() || params.dim() != batch.param_dim() {
        return Err(Error::config(format!(
            "parameter dimension {} does not match the batch's {}",
            params.dim(),
            batch.param_dim()
        )));
    }
    let value = batch.value_at(params.theta());
    if !value.is_finite() {
        return Err(Error::NumericOverflow(format!(
            "importance-weighted estimate is {value}"
        )));
    }
    Ok(value)
}

/// Σ_t γᵗ r_{t+1}.
pub fn discounted_return(trajectory: &Trajectory, gamma: f64) -> f64 {
    let mut discount = 1.0;
    let mut total = 0.0;
    for r in trajectory.rewards() {
        total += discount * r;
        discount *= gamma;
    }
    total
}
