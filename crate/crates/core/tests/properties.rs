//! Randomized invariants over small random instances.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use noisytree_core::harness::{pair_at_distance, wilson, Z_99};
use noisytree_core::hdreduction::{default_schedule, reduce_hdk, ReductionConfig, ReductionMode, ScheduleFlavor};
use noisytree_core::protolib::{greater_than_tree, hd1_bsearch_tree};
use noisytree_core::subprotocols::{eq_once, hd1, hd1_once};
use noisytree_core::{
    augment, eval_tree, noisy_cost, run_noisy, BitString, CostMeter, NoisyConfig, PartyInput, SharedRandomness,
    SubprotocolConfig,
};

fn pair(n: usize, d: usize, seed: u64) -> (BitString, BitString) {
    pair_at_distance(n, d, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn walk_invariants_hold(n in 2usize..40, d in 0usize..4, delta in 0.01f64..0.45, gt in any::<bool>(), seed in any::<u64>()) {
        let d = d.min(n);
        let tree = if gt { greater_than_tree(n) } else { hd1_bsearch_tree(n) };
        let cfg = NoisyConfig::new(6.0, delta);
        let aug = augment(&tree, &cfg).unwrap();
        let (x, y) = pair(n, d, seed);
        let (x, y) = (PartyInput::Bits(x), PartyInput::Bits(y));
        let mut meter = CostMeter::new();
        let (out, stats) = run_noisy(&aug, &x, &y, &cfg, &mut SharedRandomness::new(seed), &mut meter).unwrap();
        prop_assert!(stats.violations(tree.depth()).is_empty(), "{:?}", stats.violations(tree.depth()));
        prop_assert_eq!(meter.bits(), noisy_cost(tree.depth(), &cfg));
        prop_assert_eq!(stats.bits, meter.bits());
        let exact = eval_tree(&tree, &x, &y).unwrap().output;
        prop_assert_eq!(stats.correct, out == exact);
    }

    #[test]
    fn equality_never_rejects_equal_strings(n in 1usize..300, seed in any::<u64>()) {
        let (x, _) = pair(n, 0, seed);
        let v = eq_once(&x, &x.clone(), &SubprotocolConfig::default(), &mut SharedRandomness::new(seed), &mut CostMeter::new());
        prop_assert!(v.accepted);
    }

    #[test]
    fn hd1_is_one_sided(n in 1usize..300, d in 0usize..8, seed in any::<u64>()) {
        let d = d.min(n);
        let (x, y) = pair(n, d, seed);
        let mut rand = SharedRandomness::new(seed);
        let once = hd1_once(&x, &y, 16, &mut rand, &mut CostMeter::new()).unwrap().accepted;
        let boosted = hd1(&x, &y, 0.01, &SubprotocolConfig::default(), &mut rand, &mut CostMeter::new()).unwrap().accepted;
        if d == 1 {
            prop_assert!(once && boosted);
        }
        if d % 2 == 0 {
            prop_assert!(!once && !boosted);
        }
    }

    #[test]
    fn oracle_reduction_is_exact_on_yes_instances(k in 1usize..12, extra in 0usize..200, frac in 0.0f64..1.0, seed in any::<u64>()) {
        let n = k + extra;
        let d = ((k as f64) * frac) as usize;
        let (x, y) = pair(n, d, seed);
        let cfg = ReductionConfig::new(default_schedule(k, ScheduleFlavor::Theorem5).unwrap());
        let mut meter = CostMeter::new();
        let (out, trace) = reduce_hdk(&x, &y, k, &cfg, ReductionMode::Oracle, &mut SharedRandomness::new(seed), &mut meter).unwrap();
        prop_assert!(out);
        prop_assert!(trace.violations(true).is_empty(), "{:?}", trace.violations(true));
        prop_assert_eq!(meter.bits(), 0);
    }

    #[test]
    fn wilson_brackets_the_point_estimate(trials in 1u64..100_000, frac in 0.0f64..=1.0) {
        let successes = ((trials as f64) * frac) as u64;
        let (lo, hi) = wilson(successes, trials, Z_99);
        let p = successes as f64 / trials as f64;
        prop_assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        prop_assert!(lo <= p + 1e-12 && p <= hi + 1e-12);
    }
}
