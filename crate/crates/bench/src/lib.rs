//! Shared setup for the criterion benches.

use offpsf::{fixtures, sample_batch, BehaviorPolicy, EvalBatch, TabularMdp};

pub const SEED: u64 = 0xBE7C4;

/// A chain3 batch of `m` uniform-behavior episodes.
pub fn chain3_batch(m: usize) -> (TabularMdp, EvalBatch) {
    let mdp = fixtures::chain3();
    let behavior = BehaviorPolicy::uniform(&mdp);
    let trajs = sample_batch(&mdp, &behavior, m, 200, SEED).expect("fixture batch");
    let batch = EvalBatch::new(trajs, &behavior, mdp.gamma()).expect("fixture batch");
    (mdp, batch)
}
