//! Binomial confidence intervals and order-independent aggregates.

use serde::{Deserialize, Serialize};

/// Two-sided 99% normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BitsSummary {
    pub min: u64,
    pub mean: f64,
    pub max: u64,
}

/// Integer-only running sums so that merging in any order gives the same result.
#[derive(Clone, Debug, Default)]
pub struct Tally {
    pub runs: u64,
    pub errors: u64,
    pub bits_min: Option<u64>,
    pub bits_max: u64,
    pub bits_sum: u128,
    pub good: u64,
    pub bad: u64,
    pub mistakes: u64,
    pub violations: u64,
    /// Up to a few violation messages, smallest trial index first.
    pub examples: Vec<(u64, String)>,
}

pub const MAX_EXAMPLES: usize = 5;

impl Tally {
    pub fn merge(mut self, other: Tally) -> Tally {
        self.runs += other.runs;
        self.errors += other.errors;
        self.bits_min = match (self.bits_min, other.bits_min) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self.bits_max = self.bits_max.max(other.bits_max);
        self.bits_sum += other.bits_sum;
        self.good += other.good;
        self.bad += other.bad;
        self.mistakes += other.mistakes;
        self.violations += other.violations;
        self.examples.extend(other.examples);
        self.examples.sort();
        self.examples.truncate(MAX_EXAMPLES);
        self
    }

    pub fn bits(&self) -> BitsSummary {
        BitsSummary {
            min: self.bits_min.unwrap_or(0),
            mean: if self.runs == 0 { 0.0 } else { self.bits_sum as f64 / self.runs as f64 },
            max: self.bits_max,
        }
    }
}
