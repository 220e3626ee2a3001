//! Exact soundness bounds for the bucket-parity sketches.
//!
//! Throwing the `d` differing coordinates into `b` buckets, the number of
//! buckets holding an odd number of them is a Markov chain in `d`: a new
//! coordinate lands in an odd bucket with probability `odd / b` (making it
//! even) and in an even bucket otherwise. Iterating the chain gives the exact
//! distribution of the measured parity difference for every `d` at once.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Distribution of the odd-bucket count after each of `1..=horizon` balls;
/// calls `visit(d, dist)` for every `d`.
fn walk_odd_counts(buckets: usize, horizon: usize, mut visit: impl FnMut(usize, &[f64])) {
    let b = buckets as f64;
    let mut cur = vec![0.0f64; buckets + 1];
    let mut next = vec![0.0f64; buckets + 1];
    cur[0] = 1.0;
    for d in 1..=horizon {
        next.iter_mut().for_each(|p| *p = 0.0);
        for odd in 0..=buckets {
            let p = cur[odd];
            if p == 0.0 {
                continue;
            }
            if odd > 0 {
                next[odd - 1] += p * odd as f64 / b;
            }
            if odd < buckets {
                next[odd + 1] += p * (buckets - odd) as f64 / b;
            }
        }
        std::mem::swap(&mut cur, &mut next);
        visit(d, &cur);
    }
}

/// Probability that exactly one of `buckets` buckets receives an odd number
/// of `d` uniformly thrown balls.
pub fn exactly_one_odd(buckets: usize, d: usize) -> f64 {
    let mut out = if d == 0 { 0.0 } else { f64::NAN };
    walk_odd_counts(buckets, d, |k, dist| {
        if k == d {
            out = dist[1];
        }
    });
    out
}

type BoundCache = Mutex<HashMap<(u8, usize, usize, usize), f64>>;

fn cache() -> &'static BoundCache {
    static CACHE: OnceLock<BoundCache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

fn memo(key: (u8, usize, usize, usize), compute: impl FnOnce() -> f64) -> f64 {
    if let Some(&v) = cache().lock().expect("bound cache").get(&key) {
        return v;
    }
    let v = compute();
    cache().lock().expect("bound cache").insert(key, v);
    v
}

/// Per-trial false-accept bound of the HD1 sketch with `buckets` buckets on
/// strings of length `n`: the maximum over odd `3 ≤ d ≤ n` of the
/// exactly-one-odd-bucket probability. Even distances are never accepted and
/// distance 1 is the correct accept, so this covers every wrong answer.
pub fn hd1_false_accept(buckets: usize, n: usize) -> f64 {
    memo((1, buckets, n, 0), || {
        let mut worst = 0.0f64;
        walk_odd_counts(buckets, n, |d, dist| {
            if d >= 3 && d % 2 == 1 {
                worst = worst.max(dist[1]);
            }
        });
        worst
    })
}

/// Per-trial false-accept bound of the small-distance sketch: the maximum
/// over `threshold < d ≤ n` of the probability that at most `threshold`
/// buckets end up odd.
pub fn small_hd_false_accept(threshold: usize, buckets: usize, n: usize) -> f64 {
    memo((2, buckets, n, threshold), || {
        let mut worst = 0.0f64;
        walk_odd_counts(buckets, n, |d, dist| {
            if d > threshold {
                let mass: f64 = dist[..=threshold.min(buckets)].iter().sum();
                worst = worst.max(mass);
            }
        });
        worst.min(1.0)
    })
}

/// Smallest `t ≥ 1` with `p^t ≤ delta`.
pub fn repetitions_for(p: f64, delta: f64) -> u32 {
    if p <= 0.0 {
        return 1;
    }
    assert!(p < 1.0, "per-trial error {p} does not shrink under repetition");
    let t = (delta.ln() / p.ln()).ceil();
    let mut t = t.max(1.0) as u32;
    // Guard against ln rounding right at the boundary.
    while p.powi(t as i32) > delta {
        t += 1;
    }
    t
}
