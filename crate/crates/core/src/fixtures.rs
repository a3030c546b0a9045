//! Built-in MDPs small enough for exact and brute-force oracles.

use crate::error::{Error, Result};
use crate::mdp::TabularMdp;

pub const FIXTURE_NAMES: &[&str] = &["bandit", "chain3", "gridlet", "zero-reward"];

pub fn by_name(name: &str) -> Result<TabularMdp> {
    match name {
        "bandit" => Ok(bandit()),
        "chain3" => Ok(chain3()),
        "gridlet" => Ok(gridlet()),
        "zero-reward" => Ok(zero_reward()),
        other => Err(Error::UnknownFixture(other.to_string())),
    }
}

struct Tables {
    s: usize,
    a: usize,
    p: Vec<f64>,
    r: Vec<f64>,
}

impl Tables {
    fn new(s: usize, a: usize) -> Self {
        let mut t = Tables {
            s,
            a,
            p: vec![0.0; s * a * s],
            r: vec![0.0; s * a * s],
        };
        for act in 0..a {
            t.set(0, act, 0, 1.0, 0.0);
        }
        t
    }

    fn set(&mut self, s: usize, a: usize, next: usize, p: f64, r: f64) {
        let i = (s * self.a + a) * self.s + next;
        self.p[i] += p;
        self.r[i] = r;
    }

    fn build(self, gamma: f64) -> TabularMdp {
        TabularMdp::new(self.s, self.a, self.p, self.r, 1, gamma).expect("fixture is valid")
    }
}

/// One state, two actions: action 0 pays 1, action 1 pays 0, both terminate.
pub fn bandit() -> TabularMdp {
    let mut t = Tables::new(2, 2);
    t.set(1, 0, 0, 1.0, 1.0);
    t.set(1, 1, 0, 1.0, 0.0);
    t.build(1.0)
}

/// States 1 -> 2 -> 3 with stochastic termination.
///
/// Action 0 advances w.p. 0.8 (reward 1) and terminates w.p. 0.2; from state 3
/// it terminates with reward 5. Action 1 terminates w.p. 0.5 with reward 0.5
/// and otherwise stays put.
pub fn chain3() -> TabularMdp {
    chain3_with_scale(1.0)
}

/// [`chain3`] with every reward multiplied by zero: J ≡ 0.
pub fn zero_reward() -> TabularMdp {
    chain3_with_scale(0.0)
}

fn chain3_with_scale(scale: f64) -> TabularMdp {
    let mut t = Tables::new(4, 2);
    for s in 1..=3 {
        if s < 3 {
            t.set(s, 0, s + 1, 0.8, scale);
            t.set(s, 0, 0, 0.2, 0.0);
        } else {
            t.set(s, 0, 0, 1.0, 5.0 * scale);
        }
        t.set(s, 1, 0, 0.5, 0.5 * scale);
        t.set(s, 1, s, 0.5, 0.0);
    }
    t.build(0.95)
}

/// A 2x2 grid (cells 1..=4, goal 4) with moves right/down and a distractor
/// action that pays a small reward but rarely reaches the goal.
///
/// Moves succeed w.p. 0.9, stay w.p. 0.05 and terminate w.p. 0.05; moving
/// into a wall stays put. Any action in the goal terminates with reward 1.
/// The distractor pays 0.1, stays w.p. 0.9 and terminates w.p. 0.1.
pub fn gridlet() -> TabularMdp {
    const RIGHT: usize = 0;
    const DOWN: usize = 1;
    const DISTRACT: usize = 2;
    let mut t = Tables::new(5, 3);
    // cell -> (row, col): 1 (0,0), 2 (0,1), 3 (1,0), 4 (1,1)
    let right = |s: usize| match s {
        1 => 2,
        3 => 4,
        other => other,
    };
    let down = |s: usize| match s {
        1 => 3,
        2 => 4,
        other => other,
    };
    for s in 1..=3 {
        for (act, target) in [(RIGHT, right(s)), (DOWN, down(s))] {
            t.set(s, act, target, 0.9, 0.0);
            t.set(s, act, s, 0.05, 0.0);
            t.set(s, act, 0, 0.05, 0.0);
        }
        t.set(s, DISTRACT, s, 0.9, 0.1);
        t.set(s, DISTRACT, 0, 0.1, 0.1);
    }
    for act in [RIGHT, DOWN, DISTRACT] {
        t.set(4, act, 0, 1.0, 1.0);
    }
    t.build(0.9)
}

/// Single-action chain 1 -> 2 -> ... -> 0 paying `rewards[i]` on step i.
pub fn deterministic_chain(rewards: &[f64], gamma: f64) -> TabularMdp {
    let n = rewards.len() + 1;
    let mut t = Tables::new(n, 1);
    for (i, r) in rewards.iter().enumerate() {
        let s = i + 1;
        let next = if s + 1 < n { s + 1 } else { 0 };
        t.set(s, 0, next, 1.0, *r);
    }
    t.build(gamma)
}
