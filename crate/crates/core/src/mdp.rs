//! Episodic tabular MDPs, softmax target policies, fixed behavior policies and
//! seeded trajectory sampling.
//!
//! State `0` is the absorbing termination state. Everything indexed by "state"
//! in a policy refers to the non-terminal states `1..num_states`.

use std::collections::hash_map::DefaultHasher;
use std::collections::VecDeque;
use std::hash::{Hash, Hasher};

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{derived_stream, Stream};

pub const TERMINAL: usize = 0;
pub const DEFAULT_HORIZON_CAP: usize = 200;
pub const DEFAULT_BEHAVIOR_FLOOR: f64 = 1e-3;

const ROW_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    transition: Vec<f64>,
    reward: Vec<f64>,
    start_state: usize,
    gamma: f64,
    termination_depth: usize,
}

impl TabularMdp {
    /// Build and validate an MDP. `transition` and `reward` are dense
    /// `(state, action, next_state)` tables in row-major order.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        start_state: usize,
        gamma: f64,
    ) -> Result<Self> {
        if num_states < 2 {
            return Err(Error::config("an MDP needs the terminal state and at least one other"));
        }
        if num_actions == 0 {
            return Err(Error::config("an MDP needs at least one action"));
        }
        let len = num_states * num_actions * num_states;
        if transition.len() != len || reward.len() != len {
            return Err(Error::config(format!(
                "tables must have {len} entries (got transition {}, reward {})",
                transition.len(),
                reward.len()
            )));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::config(format!("gamma must lie in (0, 1], got {gamma}")));
        }
        if start_state == TERMINAL || start_state >= num_states {
            return Err(Error::config(format!(
                "start state must be non-terminal and < {num_states}, got {start_state}"
            )));
        }
        for s in 0..num_states {
            for a in 0..num_actions {
                let base = (s * num_actions + a) * num_states;
                let row = &transition[base..base + num_states];
                if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(Error::config(format!(
                        "transition row ({s}, {a}) has a negative or non-finite entry"
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::config(format!(
                        "transition row ({s}, {a}) sums to {sum}"
                    )));
                }
                if let Some(r) = reward[base..base + num_states].iter().find(|r| !r.is_finite()) {
                    return Err(Error::config(format!("reward row ({s}, {a}) contains {r}")));
                }
            }
        }
        for a in 0..num_actions {
            let base = a * num_states;
            if transition[base] != 1.0 {
                return Err(Error::config("state 0 must be absorbing"));
            }
            if reward[base..base + num_states].iter().any(|r| *r != 0.0) {
                return Err(Error::config("state 0 must carry zero reward"));
            }
        }

        let mut mdp = TabularMdp {
            num_states,
            num_actions,
            transition,
            reward,
            start_state,
            gamma,
            termination_depth: 0,
        };
        mdp.termination_depth = mdp.compute_termination_depth()?;
        Ok(mdp)
    }

    /// Largest, over non-terminal states, of the fewest steps needed to reach
    /// state 0 with positive probability. Behavior policies have full support,
    /// so any action may be taken.
    fn compute_termination_depth(&self) -> Result<usize> {
        let mut dist = vec![usize::MAX; self.num_states];
        dist[TERMINAL] = 0;
        let mut queue = VecDeque::from([TERMINAL]);
        while let Some(t) = queue.pop_front() {
            for s in 0..self.num_states {
                if dist[s] != usize::MAX {
                    continue;
                }
                let leads_to_t = (0..self.num_actions).any(|a| self.p(s, a, t) > 0.0);
                if leads_to_t {
                    dist[s] = dist[t] + 1;
                    queue.push_back(s);
                }
            }
        }
        if let Some(s) = dist.iter().position(|d| *d == usize::MAX) {
            return Err(Error::config(format!("state {s} never reaches the terminal state")));
        }
        Ok(dist.into_iter().max().unwrap_or(0))
    }

    /// Reject horizon caps too short for every state to be able to terminate.
    pub fn ensure_horizon(&self, horizon_cap: usize) -> Result<()> {
        if horizon_cap == 0 {
            return Err(Error::domain("horizon_cap must be at least 1"));
        }
        if horizon_cap < self.termination_depth {
            return Err(Error::config(format!(
                "horizon_cap {horizon_cap} is shorter than the {} steps some state needs to terminate",
                self.termination_depth
            )));
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn start_state(&self) -> usize {
        self.start_state
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn termination_depth(&self) -> usize {
        self.termination_depth
    }

    /// Dimension of the tabular softmax parameter: one logit per
    /// non-terminal state-action pair.
    pub fn param_dim(&self) -> usize {
        (self.num_states - 1) * self.num_actions
    }

    #[inline]
    fn idx(&self, s: usize, a: usize, next: usize) -> usize {
        (s * self.num_actions + a) * self.num_states + next
    }

    #[inline]
    pub fn p(&self, s: usize, a: usize, next: usize) -> f64 {
        self.transition[self.idx(s, a, next)]
    }

    #[inline]
    pub fn r(&self, s: usize, a: usize, next: usize) -> f64 {
        self.reward[self.idx(s, a, next)]
    }

    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let base = self.idx(s, a, 0);
        &self.transition[base..base + self.num_states]
    }

    pub fn reward_row(&self, s: usize, a: usize) -> &[f64] {
        let base = self.idx(s, a, 0);
        &self.reward[base..base + self.num_states]
    }

    pub fn transition_table(&self) -> &[f64] {
        &self.transition
    }

    pub fn reward_table(&self) -> &[f64] {
        &self.reward
    }

    /// Largest absolute reward on any transition.
    pub fn max_abs_reward(&self) -> f64 {
        self.reward.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Exact finite-horizon value of the softmax policy with logits `theta`,
    /// by backward induction. Panics if `theta` has the wrong length; see
    /// [`exact_value`] for the checked entry point.
    pub fn value_of(&self, theta: &[f64], horizon_cap: usize) -> f64 {
        assert_eq!(theta.len(), self.param_dim(), "parameter dimension mismatch");
        let probs = softmax_table(theta, self.num_actions);
        let mut values = vec![0.0; self.num_states];
        let mut next_values = vec![0.0; self.num_states];
        for _ in 0..horizon_cap {
            for s in 1..self.num_states {
                let mut v = 0.0;
                for a in 0..self.num_actions {
                    let pa = probs[(s - 1) * self.num_actions + a];
                    let q: f64 = self
                        .transition_row(s, a)
                        .iter()
                        .zip(self.reward_row(s, a))
                        .zip(&values)
                        .map(|((p, r), vn)| p * (r + self.gamma * vn))
                        .sum();
                    v += pa * q;
                }
                next_values[s] = v;
            }
            // A fixed point of the backup stays fixed for the remaining steps.
            if next_values == values {
                break;
            }
            std::mem::swap(&mut values, &mut next_values);
        }
        values[self.start_state]
    }
}

/// Softmax logits `theta`, laid out as one block of `num_actions` logits per
/// non-terminal state.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    theta: Vec<f64>,
    num_actions: usize,
}

impl PolicyParams {
    pub fn new(theta: Vec<f64>, num_actions: usize) -> Result<Self> {
        if num_actions == 0 || theta.is_empty() || !theta.len().is_multiple_of(num_actions) {
            return Err(Error::config(format!(
                "{} logits cannot be split into blocks of {num_actions} actions",
                theta.len()
            )));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::config("policy parameters must be finite"));
        }
        Ok(PolicyParams { theta, num_actions })
    }

    /// Parameters sized for `mdp`, checked against it.
    pub fn for_mdp(mdp: &TabularMdp, theta: Vec<f64>) -> Result<Self> {
        let params = Self::new(theta, mdp.num_actions())?;
        params.check_mdp(mdp)?;
        Ok(params)
    }

    pub fn zeros(mdp: &TabularMdp) -> Self {
        PolicyParams {
            theta: vec![0.0; mdp.param_dim()],
            num_actions: mdp.num_actions(),
        }
    }

    pub fn check_mdp(&self, mdp: &TabularMdp) -> Result<()> {
        if self.num_actions != mdp.num_actions() || self.theta.len() != mdp.param_dim() {
            return Err(Error::config(format!(
                "parameter dimension {} does not match the MDP's {}",
                self.theta.len(),
                mdp.param_dim()
            )));
        }
        Ok(())
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn into_theta(self) -> Vec<f64> {
        self.theta
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_nonterminal_states(&self) -> usize {
        self.theta.len() / self.num_actions
    }

    /// Logits of non-terminal `state` (1-based state index).
    pub fn logits(&self, state: usize) -> &[f64] {
        let base = (state - 1) * self.num_actions;
        &self.theta[base..base + self.num_actions]
    }
}

/// Numerically stable log-softmax of each `num_actions`-sized block of `theta`.
pub fn log_softmax_table(theta: &[f64], num_actions: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(theta.len());
    for block in theta.chunks_exact(num_actions) {
        let max = block.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_z = max + block.iter().map(|t| (t - max).exp()).sum::<f64>().ln();
        out.extend(block.iter().map(|t| t - log_z));
    }
    out
}

pub fn softmax_table(theta: &[f64], num_actions: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(theta.len());
    for block in theta.chunks_exact(num_actions) {
        let max = block.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let start = out.len();
        out.extend(block.iter().map(|t| (t - max).exp()));
        let z: f64 = out[start..].iter().sum();
        out[start..].iter_mut().for_each(|p| *p /= z);
    }
    out
}

/// π_θ(action | state) for the tabular softmax policy.
pub fn target_policy_prob(
    mdp: &TabularMdp,
    params: &PolicyParams,
    state: usize,
    action: usize,
) -> Result<f64> {
    params.check_mdp(mdp)?;
    if state == TERMINAL {
        return Err(Error::domain("the terminal state has no policy"));
    }
    if state >= mdp.num_states() || action >= mdp.num_actions() {
        return Err(Error::domain(format!(
            "(state {state}, action {action}) is outside the MDP"
        )));
    }
    let probs = softmax_table(params.logits(state), params.num_actions());
    Ok(probs[action])
}

/// Fixed exploratory policy with every probability bounded below by `floor`.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorPolicy {
    probs: Vec<f64>,
    log_probs: Vec<f64>,
    num_actions: usize,
    floor: f64,
    fingerprint: u64,
}

impl BehaviorPolicy {
    /// `probs` holds one row of `num_actions` probabilities per non-terminal state.
    pub fn new(probs: Vec<f64>, num_actions: usize, floor: f64) -> Result<Self> {
        if !(floor > 0.0 && floor.is_finite()) {
            return Err(Error::config(format!("behavior floor must be positive, got {floor}")));
        }
        if num_actions == 0 || probs.is_empty() || !probs.len().is_multiple_of(num_actions) {
            return Err(Error::config("behavior table is not a whole number of rows"));
        }
        if num_actions as f64 * floor > 1.0 {
            return Err(Error::config(format!(
                "floor {floor} is infeasible with {num_actions} actions"
            )));
        }
        for (i, row) in probs.chunks_exact(num_actions).enumerate() {
            let state = i + 1;
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::config(format!(
                    "behavior row for state {state} sums to {sum}"
                )));
            }
            if let Some(p) = row.iter().find(|p| !(**p >= floor)) {
                return Err(Error::config(format!(
                    "behavior probability {p} at state {state} is below the floor {floor}"
                )));
            }
        }
        let log_probs = probs.iter().map(|p| p.ln()).collect();
        let mut hasher = DefaultHasher::new();
        num_actions.hash(&mut hasher);
        for p in &probs {
            p.to_bits().hash(&mut hasher);
        }
        let fingerprint = hasher.finish();
        Ok(BehaviorPolicy {
            probs,
            log_probs,
            num_actions,
            floor,
            fingerprint,
        })
    }

    pub fn uniform(mdp: &TabularMdp) -> Self {
        let a = mdp.num_actions();
        let probs = vec![1.0 / a as f64; mdp.param_dim()];
        // Rows of 1/a sum to 1 within a few ulps and every entry is >= 1/a.
        Self::new(probs, a, DEFAULT_BEHAVIOR_FLOOR.min(1.0 / a as f64))
            .expect("uniform behavior is always valid")
    }

    /// The softmax policy of `params`, frozen as a behavior policy.
    pub fn from_params(params: &PolicyParams, floor: f64) -> Result<Self> {
        let mut probs = softmax_table(params.theta(), params.num_actions());
        // Renormalize exactly so the row-sum check cannot trip on rounding.
        for row in probs.chunks_exact_mut(params.num_actions()) {
            let z: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= z);
        }
        Self::new(probs, params.num_actions(), floor)
    }

    pub fn check_mdp(&self, mdp: &TabularMdp) -> Result<()> {
        if self.num_actions != mdp.num_actions() || self.probs.len() != mdp.param_dim() {
            return Err(Error::config("behavior policy shape does not match the MDP"));
        }
        Ok(())
    }

    #[inline]
    pub fn prob(&self, state: usize, action: usize) -> f64 {
        self.probs[(state - 1) * self.num_actions + action]
    }

    #[inline]
    pub fn log_prob(&self, state: usize, action: usize) -> f64 {
        self.log_probs[(state - 1) * self.num_actions + action]
    }

    pub fn row(&self, state: usize) -> &[f64] {
        let base = (state - 1) * self.num_actions;
        &self.probs[base..base + self.num_actions]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// Identifies this exact probability table; stamped onto every trajectory
    /// sampled from it.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub state: usize,
    pub action: usize,
    /// Reward received on the transition out of `state`.
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    steps: Vec<Step>,
    terminated: bool,
    behavior_tag: u64,
}

impl Trajectory {
    pub fn new(steps: Vec<Step>, terminated: bool, behavior_tag: u64) -> Self {
        Trajectory {
            steps,
            terminated,
            behavior_tag,
        }
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Whether the episode reached state 0, as opposed to being cut at the horizon cap.
    pub fn terminated(&self) -> bool {
        self.terminated
    }

    pub fn behavior_tag(&self) -> u64 {
        self.behavior_tag
    }

    pub fn rewards(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.reward)
    }
}

fn sample_categorical<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left u above the cumulative sum; take the last positive entry.
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}

/// Roll out one episode of `policy` from the start state until state 0 or
/// `horizon_cap` steps.
pub fn sample_trajectory<R: Rng + ?Sized>(
    mdp: &TabularMdp,
    policy: &BehaviorPolicy,
    rng: &mut R,
    horizon_cap: usize,
) -> Result<Trajectory> {
    if horizon_cap == 0 {
        return Err(Error::domain("horizon_cap must be at least 1"));
    }
    policy.check_mdp(mdp)?;
    let mut steps = Vec::new();
    let mut state = mdp.start_state();
    let mut terminated = false;
    while steps.len() < horizon_cap {
        let action = sample_categorical(rng, policy.row(state));
        let next = sample_categorical(rng, mdp.transition_row(state, action));
        steps.push(Step {
            state,
            action,
            reward: mdp.r(state, action, next),
        });
        if next == TERMINAL {
            terminated = true;
            break;
        }
        state = next;
    }
    Ok(Trajectory::new(steps, terminated, policy.fingerprint()))
}

/// Sample `m` episodes; episode `j` uses its own stream derived from `seed`,
/// so the result does not depend on how the work is scheduled.
pub fn sample_batch(
    mdp: &TabularMdp,
    policy: &BehaviorPolicy,
    m: usize,
    horizon_cap: usize,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    (0..m)
        .into_par_iter()
        .map(|j| {
            let mut rng = derived_stream(seed, Stream::Trajectory, j as u64);
            sample_trajectory(mdp, policy, &mut rng, horizon_cap)
        })
        .collect()
}

/// J(θ): expected discounted return of π_θ over at most `horizon_cap` steps.
pub fn exact_value(mdp: &TabularMdp, params: &PolicyParams, horizon_cap: usize) -> Result<f64> {
    params.check_mdp(mdp)?;
    Ok(mdp.value_of(params.theta(), horizon_cap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    /// One non-terminal state, every action terminates with the given reward.
    fn bandit(rewards: &[f64]) -> TabularMdp {
        let a = rewards.len();
        let mut p = vec![0.0; 2 * a * 2];
        let mut r = vec![0.0; 2 * a * 2];
        for act in 0..a {
            p[act * 2] = 1.0;
            p[(a + act) * 2] = 1.0;
            r[(a + act) * 2] = rewards[act];
        }
        TabularMdp::new(2, a, p, r, 1, 1.0).unwrap()
    }

    #[test]
    fn symmetric_logits_give_uniform_probs() {
        let mdp = bandit(&[1.0, 0.0]);
        let params = PolicyParams::for_mdp(&mdp, vec![0.0, 0.0]).unwrap();
        assert_eq!(target_policy_prob(&mdp, &params, 1, 0).unwrap(), 0.5);
        assert_eq!(target_policy_prob(&mdp, &params, 1, 1).unwrap(), 0.5);
    }

    #[test]
    fn log_three_logit_gives_three_quarters() {
        let mdp = bandit(&[1.0, 0.0]);
        let params = PolicyParams::for_mdp(&mdp, vec![3f64.ln(), 0.0]).unwrap();
        let p = target_policy_prob(&mdp, &params, 1, 0).unwrap();
        assert!((p - 0.75).abs() < 1e-15);
    }

    #[test]
    fn softmax_shift_invariance() {
        let mdp = bandit(&[1.0, 0.0, 2.0]);
        let a = PolicyParams::for_mdp(&mdp, vec![0.3, -1.2, 2.0]).unwrap();
        let b = PolicyParams::for_mdp(&mdp, vec![7.3, 5.8, 9.0]).unwrap();
        for act in 0..3 {
            let pa = target_policy_prob(&mdp, &a, 1, act).unwrap();
            let pb = target_policy_prob(&mdp, &b, 1, act).unwrap();
            assert!((pa - pb).abs() < 1e-14);
        }
    }

    #[test]
    fn policy_prob_errors() {
        let mdp = bandit(&[1.0, 0.0]);
        let params = PolicyParams::zeros(&mdp);
        assert!(matches!(
            target_policy_prob(&mdp, &params, 0, 0),
            Err(Error::Domain(_))
        ));
        let wrong = PolicyParams::new(vec![0.0; 4], 2).unwrap();
        assert!(matches!(
            target_policy_prob(&mdp, &wrong, 1, 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn rejects_bad_tables() {
        // Row does not sum to one.
        let p = vec![1.0, 0.0, 0.6, 0.3];
        assert!(TabularMdp::new(2, 1, p, vec![0.0; 4], 1, 1.0).is_err());
        // Terminal state not absorbing.
        let p = vec![0.0, 1.0, 1.0, 0.0];
        assert!(TabularMdp::new(2, 1, p, vec![0.0; 4], 1, 1.0).is_err());
        // Reward on the terminal state.
        let p = vec![1.0, 0.0, 1.0, 0.0];
        assert!(TabularMdp::new(2, 1, p.clone(), vec![1.0, 0.0, 0.0, 0.0], 1, 1.0).is_err());
        // Non-finite reward.
        assert!(TabularMdp::new(2, 1, p.clone(), vec![0.0, 0.0, f64::NAN, 0.0], 1, 1.0).is_err());
        // Gamma out of range.
        assert!(TabularMdp::new(2, 1, p, vec![0.0; 4], 1, 0.0).is_err());
    }

    #[test]
    fn rejects_unreachable_terminal() {
        // State 2 loops forever.
        let mut p = vec![0.0; 9];
        p[0] = 1.0; // 0 -> 0
        p[3] = 1.0; // 1 -> 0
        p[6 + 2] = 1.0; // 2 -> 2
        let err = TabularMdp::new(3, 1, p, vec![0.0; 9], 1, 1.0).unwrap_err();
        assert!(err.to_string().contains("state 2"));
    }

    #[test]
    fn horizon_shorter_than_termination_depth_is_rejected() {
        // 1 -> 2 -> 3 -> 0 deterministically.
        let mdp = crate::fixtures::deterministic_chain(&[1.0, 2.0, 3.0], 1.0);
        assert_eq!(mdp.termination_depth(), 3);
        assert!(mdp.ensure_horizon(2).is_err());
        assert!(mdp.ensure_horizon(3).is_ok());
    }

    #[test]
    fn behavior_floor_enforced() {
        assert!(BehaviorPolicy::new(vec![0.9995, 0.0005], 2, 1e-3).is_err());
        assert!(BehaviorPolicy::new(vec![0.999, 0.001], 2, 1e-3).is_ok());
        assert!(BehaviorPolicy::new(vec![0.5, 0.4], 2, 1e-3).is_err());
    }

    #[test]
    fn forced_termination_gives_length_one() {
        let mdp = bandit(&[1.0, 0.0]);
        let b = BehaviorPolicy::uniform(&mdp);
        let mut rng = stream(1);
        for _ in 0..100 {
            let t = sample_trajectory(&mdp, &b, &mut rng, 10).unwrap();
            assert_eq!(t.len(), 1);
            assert!(t.terminated());
        }
    }

    #[test]
    fn sampling_is_deterministic_in_the_seed() {
        let mdp = crate::fixtures::chain3();
        let b = BehaviorPolicy::uniform(&mdp);
        let a = sample_trajectory(&mdp, &b, &mut stream(99), 200).unwrap();
        let c = sample_trajectory(&mdp, &b, &mut stream(99), 200).unwrap();
        assert_eq!(a, c);
        let x = sample_batch(&mdp, &b, 64, 200, 5).unwrap();
        let y = sample_batch(&mdp, &b, 64, 200, 5).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn horizon_cap_truncates() {
        // Self-loop with termination probability 0.01.
        let mut p = vec![0.0; 4];
        p[0] = 1.0;
        p[2] = 0.01;
        p[3] = 0.99;
        let mdp = TabularMdp::new(2, 1, p, vec![0.0, 0.0, 0.0, 1.0], 1, 1.0).unwrap();
        let b = BehaviorPolicy::uniform(&mdp);
        let mut rng = stream(3);
        let lens: Vec<_> = (0..200)
            .map(|_| sample_trajectory(&mdp, &b, &mut rng, 5).unwrap())
            .collect();
        assert!(lens.iter().all(|t| t.len() <= 5 && !t.is_empty()));
        assert!(lens.iter().any(|t| t.len() == 5 && !t.terminated()));
    }

    #[test]
    fn geometric_episode_length() {
        // Terminate with probability 0.5 each step: mean length 1 / 0.5 = 2,
        // variance (1 - p) / p^2 = 2.
        let mut p = vec![0.0; 4];
        p[0] = 1.0;
        p[2] = 0.5;
        p[3] = 0.5;
        let mdp = TabularMdp::new(2, 1, p, vec![0.0; 4], 1, 1.0).unwrap();
        let b = BehaviorPolicy::uniform(&mdp);
        let n = 100_000;
        let batch = sample_batch(&mdp, &b, n, 200, 11).unwrap();
        let mean = batch.iter().map(|t| t.len() as f64).sum::<f64>() / n as f64;
        let se = (2.0f64 / n as f64).sqrt();
        assert!((mean - 2.0).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn action_frequencies_follow_behavior() {
        let mdp = bandit(&[1.0, 0.0, 0.5]);
        let b = BehaviorPolicy::new(vec![0.2, 0.5, 0.3], 3, 1e-3).unwrap();
        let n = 100_000;
        let batch = sample_batch(&mdp, &b, n, 10, 17).unwrap();
        let mut counts = [0usize; 3];
        for t in &batch {
            counts[t.steps()[0].action] += 1;
        }
        for (a, c) in counts.iter().enumerate() {
            let p = b.prob(1, a);
            let freq = *c as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((freq - p).abs() < 4.0 * se, "action {a}: {freq} vs {p}");
        }
    }

    #[test]
    fn exact_value_one_step() {
        // Action 0 pays 1, action 1 pays 0.25: J = p + (1 - p) / 4.
        let mdp = bandit(&[1.0, 0.25]);
        let params = PolicyParams::for_mdp(&mdp, vec![3f64.ln(), 0.0]).unwrap();
        let j = exact_value(&mdp, &params, 10).unwrap();
        assert!((j - (0.75 + 0.25 * 0.25)).abs() < 1e-15);
    }

    #[test]
    fn exact_value_zero_rewards() {
        let mdp = bandit(&[0.0, 0.0]);
        let params = PolicyParams::for_mdp(&mdp, vec![1.0, -2.0]).unwrap();
        assert_eq!(exact_value(&mdp, &params, 50).unwrap(), 0.0);
    }

    #[test]
    fn exact_value_deterministic_chain() {
        let mdp = crate::fixtures::deterministic_chain(&[1.0, 2.0, 3.0], 1.0);
        let params = PolicyParams::zeros(&mdp);
        assert!((exact_value(&mdp, &params, 10).unwrap() - 6.0).abs() < 1e-12);
    }
}
