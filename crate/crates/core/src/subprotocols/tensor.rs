//! `k` independent Equality instances.

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::cost::CostMeter;
use crate::error::{Error, Result};
use crate::noisytree::{augment, run_noisy, NoisyConfig};
use crate::randomness::SharedRandomness;
use crate::tree::{Label, LabelFn, PartyInput, ProtocolTree, TreeBuilder};

use super::equality::eq_repeated;
use super::hamming::check_delta;
use super::SubprotocolConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EqTensorStrategy {
    /// Each copy repeated until its one-sided error is at most `δ/k`.
    Repetition,
    /// The noisy-tree walk over the depth-`k` tree of single Equality queries.
    NoisyTree { c: f64 },
}

/// Repetitions per copy: `⌈log2(k/δ) / t⌉`, so `2^(-t·reps) ≤ δ/k`.
pub fn eq_tensor_repetitions(k: usize, delta: f64, config: &SubprotocolConfig) -> u32 {
    let need = (k.max(1) as f64 / delta).log2() / config.hash_bits as f64;
    (need - 1e-12).ceil().max(1.0) as u32
}

/// Tests every pair `(xs[i], ys[i])` for equality; the whole answer vector is
/// wrong with probability at most `delta`.
pub fn eq_tensor(
    xs: &[BitString],
    ys: &[BitString],
    delta: f64,
    strategy: &EqTensorStrategy,
    config: &SubprotocolConfig,
    rand: &mut SharedRandomness,
    meter: &mut CostMeter,
) -> Result<Vec<bool>> {
    if xs.len() != ys.len() {
        return Err(Error::domain("tensor arity mismatch"));
    }
    check_delta(delta, 1.0)?;
    match strategy {
        EqTensorStrategy::Repetition => {
            let reps = eq_tensor_repetitions(xs.len(), delta, config);
            Ok(xs
                .iter()
                .zip(ys)
                .map(|(x, y)| eq_repeated(x, y, reps, config, rand, meter).accepted)
                .collect())
        }
        EqTensorStrategy::NoisyTree { c } => {
            if xs.is_empty() {
                return Ok(Vec::new());
            }
            let mut trees = Vec::with_capacity(xs.len());
            let mut offset = 0;
            for (x, y) in xs.iter().zip(ys) {
                if x.len() != y.len() {
                    return Err(Error::domain("noisy-tree equality tensor needs matched lengths"));
                }
                let mut b = TreeBuilder::new();
                let yes = b.leaf(Label::Value(1));
                let no = b.leaf(Label::Value(0));
                let slice = LabelFn::Slice { start: offset, len: x.len() };
                let root = b.eq(slice.clone(), slice, yes, no);
                trees.push(b.finish(root));
                offset += x.len();
            }
            let tree = ProtocolTree::tensor(&trees);
            let noisy = NoisyConfig { c: *c, delta: delta.min(0.49), eq: config.clone(), ..NoisyConfig::default() };
            let aug = augment(&tree, &noisy)?;
            let refs: Vec<&BitString> = xs.iter().collect();
            let px = PartyInput::Bits(BitString::concat(&refs));
            let refs: Vec<&BitString> = ys.iter().collect();
            let py = PartyInput::Bits(BitString::concat(&refs));
            let (out, _) = run_noisy(&aug, &px, &py, &noisy, rand, meter)?;
            let values = out.values();
            if values.len() != xs.len() {
                // The walk ended outside every extension: the default label.
                return Ok(vec![false; xs.len()]);
            }
            Ok(values.into_iter().map(|v| v == 1).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subprotocols::eq_once;

    #[test]
    fn repetition_count() {
        let cfg = SubprotocolConfig::default();
        assert_eq!(eq_tensor_repetitions(1, 0.25, &cfg), 1);
        assert_eq!(eq_tensor_repetitions(16, 0.01, &cfg), 6);
    }

    #[test]
    fn single_copy_is_eq_once() {
        let cfg = SubprotocolConfig::default();
        let x: BitString = "1100".parse().unwrap();
        let y: BitString = "1101".parse().unwrap();
        for seed in 0..50 {
            let mut r1 = SharedRandomness::new(seed);
            let mut r2 = SharedRandomness::new(seed);
            let mut m1 = CostMeter::new();
            let mut m2 = CostMeter::new();
            let a = eq_tensor(std::slice::from_ref(&x), std::slice::from_ref(&y), 0.25, &EqTensorStrategy::Repetition, &cfg, &mut r1, &mut m1)
                .unwrap();
            let b = eq_once(&x, &y, &cfg, &mut r2, &mut m2);
            assert_eq!(a, vec![b.accepted]);
            assert_eq!(m1.bits(), m2.bits());
        }
    }

    #[test]
    fn all_equal_all_true() {
        let cfg = SubprotocolConfig::default();
        let mut rand = SharedRandomness::new(3);
        let mut meter = CostMeter::new();
        let xs: Vec<BitString> = (0..8).map(|i| BitString::from_u64(i, 5)).collect();
        for strategy in [EqTensorStrategy::Repetition, EqTensorStrategy::NoisyTree { c: 6.0 }] {
            for _ in 0..20 {
                let out = eq_tensor(&xs, &xs, 0.05, &strategy, &cfg, &mut rand, &mut meter).unwrap();
                assert!(out.iter().all(|&b| b), "{strategy:?}");
            }
        }
    }
}
