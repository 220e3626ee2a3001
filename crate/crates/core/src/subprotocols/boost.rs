//! Majority-vote amplification for two-sided protocols.

use crate::cost::CostMeter;
use crate::error::{Error, Result};
use crate::randomness::SharedRandomness;

/// Repetitions needed to push a two-sided error of 1/4 down to `delta`:
/// `⌈18 · ln(1/δ)⌉`.
pub fn majority_repetitions(delta: f64) -> u32 {
    (18.0 * (1.0 / delta).ln()).ceil() as u32
}

/// Runs `trial` `majority_repetitions(delta)` times on fresh randomness and
/// returns the strict majority answer.
pub fn boost_majority<F>(
    delta: f64,
    rand: &mut SharedRandomness,
    meter: &mut CostMeter,
    mut trial: F,
) -> Result<bool>
where
    F: FnMut(&mut SharedRandomness, &mut CostMeter) -> bool,
{
    if !(delta > 0.0 && delta <= 0.25) {
        return Err(Error::config(format!("majority target error {delta} not in (0, 1/4]")));
    }
    let reps = majority_repetitions(delta);
    let yes = (0..reps).filter(|_| trial(rand, meter)).count() as u32;
    Ok(2 * yes > reps)
}
