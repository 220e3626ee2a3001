//! Bucket-parity sketches for small Hamming distances.
//!
//! The shared coin hashes every coordinate into one of `b` buckets; each party
//! sends the parities of its input over the buckets. Coordinates where the
//! inputs agree cancel, so the parity difference depends only on where the
//! differing coordinates land, and the number of odd buckets never exceeds
//! the true distance.

use crate::bits::BitString;
use crate::cost::CostMeter;
use crate::error::{Error, Result};
use crate::randomness::SharedRandomness;

use super::bounds::{hd1_false_accept, repetitions_for, small_hd_false_accept};
use super::{SubprotocolConfig, Verdict};

/// Largest distance threshold `hd_small` accepts.
pub const MAX_SMALL_THRESHOLD: usize = 32;

fn check_lengths(x: &BitString, y: &BitString) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::domain(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

/// Number of buckets whose parities differ under one shared bucket assignment.
fn parity_difference(x: &BitString, y: &BitString, buckets: usize, rand: &mut SharedRandomness) -> usize {
    let words = buckets.div_ceil(64);
    let mut alice = vec![0u64; words];
    let mut bob = vec![0u64; words];
    for i in 0..x.len() {
        let h = rand.below(buckets as u64) as usize;
        let mask = 1u64 << (h % 64);
        if x.get(i) {
            alice[h / 64] ^= mask;
        }
        if y.get(i) {
            bob[h / 64] ^= mask;
        }
    }
    alice
        .iter()
        .zip(&bob)
        .map(|(a, b)| (a ^ b).count_ones() as usize)
        .sum()
}

/// One run of the HD1 sketch: accept iff exactly one bucket parity differs.
/// Costs `buckets + 1` bits.
pub fn hd1_once(
    x: &BitString,
    y: &BitString,
    buckets: usize,
    rand: &mut SharedRandomness,
    meter: &mut CostMeter,
) -> Result<Verdict> {
    check_lengths(x, y)?;
    if buckets < 4 {
        return Err(Error::config(format!("hd1 needs at least 4 buckets, got {buckets}")));
    }
    let accepted = parity_difference(x, y, buckets, rand) == 1;
    let bits = buckets as u64 + 1;
    meter.charge(bits);
    Ok(Verdict { accepted, bits_used: bits })
}

/// Trials `hd1` runs for error `delta` on strings of length up to `horizon`.
pub fn hd1_trials(delta: f64, horizon: usize, config: &SubprotocolConfig) -> u32 {
    config.hd1_trials.unwrap_or_else(|| {
        repetitions_for(hd1_false_accept(config.hd1_buckets, horizon), delta)
    })
}

/// Exact cost of `hd1` at the given parameters.
pub fn hd1_cost(delta: f64, horizon: usize, config: &SubprotocolConfig) -> u64 {
    hd1_trials(delta, horizon, config) as u64 * config.hd1_buckets as u64 + 1
}

/// HD1 with one-sided error at most `delta`: independent sketches, accepting
/// only if every one accepts. Distance 1 is always accepted.
pub fn hd1(
    x: &BitString,
    y: &BitString,
    delta: f64,
    config: &SubprotocolConfig,
    rand: &mut SharedRandomness,
    meter: &mut CostMeter,
) -> Result<Verdict> {
    hd1_within(x, y, delta, x.len(), config, rand, meter)
}

/// `hd1` with the trial count fixed for all strings up to length `horizon`,
/// so the cost does not depend on the actual input length.
pub fn hd1_within(
    x: &BitString,
    y: &BitString,
    delta: f64,
    horizon: usize,
    config: &SubprotocolConfig,
    rand: &mut SharedRandomness,
    meter: &mut CostMeter,
) -> Result<Verdict> {
    check_lengths(x, y)?;
    check_delta(delta, 1.0)?;
    config.validate()?;
    if x.len() > horizon {
        return Err(Error::domain(format!("input length {} exceeds horizon {horizon}", x.len())));
    }
    let trials = hd1_trials(delta, horizon, config);
    let mut accepted = true;
    for _ in 0..trials {
        // Every trial runs; the sketches travel in one message.
        accepted &= parity_difference(x, y, config.hd1_buckets, rand) == 1;
    }
    let bits = trials as u64 * config.hd1_buckets as u64 + 1;
    meter.charge(bits);
    Ok(Verdict { accepted, bits_used: bits })
}

/// `k` independent HD1 instances, each at error `delta / k`.
pub fn hd1_tensor(
    xs: &[BitString],
    ys: &[BitString],
    delta: f64,
    config: &SubprotocolConfig,
    rand: &mut SharedRandomness,
    meter: &mut CostMeter,
) -> Result<Vec<bool>> {
    let horizon = xs.iter().map(BitString::len).max().unwrap_or(0);
    hd1_tensor_within(xs, ys, delta, horizon, config, rand, meter)
}

pub fn hd1_tensor_within(
    xs: &[BitString],
    ys: &[BitString],
    delta: f64,
    horizon: usize,
    config: &SubprotocolConfig,
    rand: &mut SharedRandomness,
    meter: &mut CostMeter,
) -> Result<Vec<bool>> {
    if xs.len() != ys.len() {
        return Err(Error::domain("tensor arity mismatch"));
    }
    check_delta(delta, 1.0)?;
    let per_copy = delta / xs.len().max(1) as f64;
    xs.iter()
        .zip(ys)
        .map(|(x, y)| hd1_within(x, y, per_copy, horizon, config, rand, meter).map(|v| v.accepted))
        .collect()
}

/// Buckets used by `hd_small` at a given threshold.
pub fn small_hd_buckets(threshold: usize, config: &SubprotocolConfig) -> usize {
    (config.smallhd_bucket_factor * threshold * threshold).max(4)
}

/// Repetitions `hd_small` uses for error `delta` up to length `horizon`.
pub fn small_hd_repetitions(threshold: usize, delta: f64, horizon: usize, config: &SubprotocolConfig) -> u32 {
    let b = small_hd_buckets(threshold, config);
    repetitions_for(small_hd_false_accept(threshold, b, horizon), delta)
}

/// Decides `dist(x, y) ≤ threshold` with one-sided error at most `delta`.
///
/// Each repetition measures the number of differing bucket parities, which
/// never exceeds the true distance; the answer is "yes" iff the largest
/// measurement is at most `threshold`.
pub fn hd_small(
    x: &BitString,
    y: &BitString,
    threshold: usize,
    delta: f64,
    config: &SubprotocolConfig,
    rand: &mut SharedRandomness,
    meter: &mut CostMeter,
) -> Result<Verdict> {
    hd_small_within(x, y, threshold, delta, x.len(), config, rand, meter)
}

#[allow(clippy::too_many_arguments)]
pub fn hd_small_within(
    x: &BitString,
    y: &BitString,
    threshold: usize,
    delta: f64,
    horizon: usize,
    config: &SubprotocolConfig,
    rand: &mut SharedRandomness,
    meter: &mut CostMeter,
) -> Result<Verdict> {
    check_lengths(x, y)?;
    check_delta(delta, 1.0)?;
    config.validate()?;
    if threshold > MAX_SMALL_THRESHOLD {
        return Err(Error::domain(format!(
            "threshold {threshold} exceeds the constant bound {MAX_SMALL_THRESHOLD}"
        )));
    }
    if x.len() > horizon {
        return Err(Error::domain(format!("input length {} exceeds horizon {horizon}", x.len())));
    }
    let buckets = small_hd_buckets(threshold, config);
    let reps = small_hd_repetitions(threshold, delta, horizon, config);
    let mut measured = 0;
    for _ in 0..reps {
        measured = measured.max(parity_difference(x, y, buckets, rand));
    }
    let bits = reps as u64 * buckets as u64 + 1;
    meter.charge(bits);
    Ok(Verdict { accepted: measured <= threshold, bits_used: bits })
}

/// Exact Hamming distance.
pub fn exact_hamming(x: &BitString, y: &BitString) -> Result<usize> {
    x.hamming(y)
}

/// Exact equality of two equal-length strings.
pub fn exact_eq(x: &BitString, y: &BitString) -> Result<bool> {
    Ok(exact_hamming(x, y)? == 0)
}

pub(crate) fn check_delta(delta: f64, upper: f64) -> Result<()> {
    if !(delta > 0.0 && delta < upper) {
        return Err(Error::config(format!("error parameter {delta} not in (0, {upper})")));
    }
    Ok(())
}
