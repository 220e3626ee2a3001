//! Reduction from HD_k to batched HD1 and Equality instances.
//!
//! Each round splits the live coordinates `T` into `4ℓ` random cells, learns
//! which cells hold zero, one or several differences, throws away the cells
//! holding at most one, and lowers the remaining budget `ℓ` accordingly. Once
//! `ℓ` is a constant, a direct small-distance test finishes the job.

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::cost::CostMeter;
use crate::error::{Error, Result};
use crate::randomness::SharedRandomness;
use crate::subprotocols::{
    eq_tensor, exact_hamming, hd1_tensor_within, hd_small_within, EqTensorStrategy, SubprotocolConfig,
    MAX_SMALL_THRESHOLD,
};

/// Shrink factor of the distance budget per round.
pub const SHRINK: f64 = 0.9;

/// Which proof's error schedule to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleFlavor {
    /// Geometric `δ_i = c^i / 200`.
    Theorem2,
    /// Uniform `δ_i = 1 / (11 R)`.
    Theorem5,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub c: f64,
    /// Error of the round-`i` subprotocols, `i = 0..=R`.
    pub deltas: Vec<f64>,
    /// The loop stops once `ℓ ≤ c_red`.
    pub c_red: usize,
}

impl Schedule {
    pub fn rounds(&self) -> usize {
        self.deltas.len().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.c_red == 0 {
            return Err(Error::config("reduction cutoff must be at least 1"));
        }
        if self.c_red > MAX_SMALL_THRESHOLD {
            return Err(Error::config(format!(
                "reduction cutoff {} exceeds the small-distance limit {MAX_SMALL_THRESHOLD}",
                self.c_red
            )));
        }
        if let Some(d) = self.deltas.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
            return Err(Error::config(format!("schedule error {d} not in (0, 1)")));
        }
        let total: f64 = self.deltas.iter().sum();
        if total > 0.1 + 1e-12 {
            return Err(Error::Invariant(format!("schedule errors sum to {total} > 1/10")));
        }
        Ok(())
    }
}

/// Rounds the loop can run: `⌈log_{10/9} k⌉`.
pub fn iteration_bound(k: usize) -> usize {
    if k <= 1 {
        return 0;
    }
    let r = (k as f64).ln() / (1.0 / SHRINK).ln();
    (r - 1e-9).ceil() as usize
}

pub const DEFAULT_CUTOFF: usize = 4;

pub fn default_schedule(k: usize, flavor: ScheduleFlavor) -> Result<Schedule> {
    if k == 0 {
        return Err(Error::config("k must be at least 1"));
    }
    let r = iteration_bound(k);
    let deltas = match flavor {
        ScheduleFlavor::Theorem2 => (0..=r).map(|i| SHRINK.powi(i as i32) / 200.0).collect(),
        ScheduleFlavor::Theorem5 => {
            let mut denom = 11.0 * r.max(1) as f64;
            // R + 1 terms of 1/(11R) overshoot 1/10 while R < 10.
            if (r + 1) as f64 / denom > 0.1 {
                denom = 11.0 * (r + 1) as f64;
            }
            vec![1.0 / denom; r + 1]
        }
    };
    let s = Schedule { c: SHRINK, deltas, c_red: DEFAULT_CUTOFF };
    s.validate()?;
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReductionMode {
    Randomized,
    /// Exact distances stand in for the subprotocols; the partitions stay random.
    Oracle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionConfig {
    pub schedule: Schedule,
    pub subprotocols: SubprotocolConfig,
    pub eq_strategy: EqTensorStrategy,
    /// Error of the closing small-distance test.
    pub base_delta: f64,
}

impl ReductionConfig {
    pub fn new(schedule: Schedule) -> Self {
        ReductionConfig {
            schedule,
            subprotocols: SubprotocolConfig::default(),
            eq_strategy: EqTensorStrategy::Repetition,
            base_delta: 0.05,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Halt {
    /// More than `ℓ` differences seen.
    Zero,
    /// Too few singleton cells.
    One,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub ell_before: usize,
    pub ell_after: usize,
    pub t_size: usize,
    pub s: usize,
    pub sum_w: usize,
    pub halt: Option<Halt>,
    /// True differences outside `T` at the start of the round.
    pub outside_diffs: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionTrace {
    pub k: usize,
    pub iterations: Vec<IterationRecord>,
    pub final_ell: usize,
    pub final_t_size: usize,
    /// True differences outside `T` when the loop ended.
    pub final_outside_diffs: usize,
    pub halt: Option<Halt>,
    pub output: bool,
    pub bits: u64,
}

impl ReductionTrace {
    /// Loop iterations performed.
    pub fn loops(&self) -> usize {
        self.iterations.len()
    }

    /// One JSON object per iteration.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for rec in &self.iterations {
            out.push_str(&serde_json::to_string(rec).expect("trace record serializes"));
            out.push('\n');
        }
        out
    }

    /// Checks the bookkeeping claims. The outside-`T` identity only holds when
    /// every `w_i` is exact, so it is checked only when `exact` is set.
    pub fn violations(&self, exact: bool) -> Vec<String> {
        let mut out = Vec::new();
        if self.loops() > iteration_bound(self.k) {
            out.push(format!("{} loops exceed bound {}", self.loops(), iteration_bound(self.k)));
        }
        for rec in &self.iterations {
            if rec.halt.is_none() && (rec.ell_after >= rec.ell_before || rec.ell_before - rec.ell_after != rec.s) {
                out.push(format!("iteration {}: ℓ {} -> {} with s = {}", rec.iteration, rec.ell_before, rec.ell_after, rec.s));
            }
            if exact && rec.outside_diffs + rec.ell_before != self.k {
                out.push(format!(
                    "iteration {}: {} differences outside T, expected {}",
                    rec.iteration,
                    rec.outside_diffs,
                    self.k - rec.ell_before
                ));
            }
        }
        if exact && self.halt.is_none() && self.final_outside_diffs + self.final_ell != self.k {
            out.push(format!("final: {} differences outside T with ℓ = {}", self.final_outside_diffs, self.final_ell));
        }
        out
    }
}

/// Assigns every index independently and uniformly to one of `parts` cells.
pub fn random_partition(indices: &[usize], parts: usize, rand: &mut SharedRandomness) -> Result<Vec<Vec<usize>>> {
    if parts == 0 {
        return Err(Error::config("partition needs at least one cell"));
    }
    let mut cells = vec![Vec::new(); parts];
    for &i in indices {
        cells[rand.below(parts as u64) as usize].push(i);
    }
    Ok(cells)
}

fn substring(x: &BitString, cell: &[usize]) -> BitString {
    BitString::from_bits(cell.iter().map(|&i| x.get(i)))
}

/// Decides `dist(x, y) ≤ k`.
pub fn reduce_hdk(
    x: &BitString,
    y: &BitString,
    k: usize,
    config: &ReductionConfig,
    mode: ReductionMode,
    rand: &mut SharedRandomness,
    meter: &mut CostMeter,
) -> Result<(bool, ReductionTrace)> {
    if x.len() != y.len() {
        return Err(Error::domain(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    config.schedule.validate()?;
    let n = x.len();
    let start_bits = meter.bits();
    let diff_at = |i: usize| x.get(i) != y.get(i);

    let mut t: Vec<usize> = (0..n).collect();
    let mut ell = k;
    let mut outside = 0usize;
    let mut trace = ReductionTrace {
        k,
        iterations: Vec::new(),
        final_ell: k,
        final_t_size: n,
        final_outside_diffs: 0,
        halt: None,
        output: false,
        bits: 0,
    };

    let mut j = 0;
    while ell > config.schedule.c_red {
        let delta = *config.schedule.deltas.get(j).ok_or_else(|| {
            Error::config(format!("schedule has {} entries, round {j} needs another", config.schedule.deltas.len()))
        })?;
        if j >= iteration_bound(k) {
            return Err(Error::Invariant(format!("round {j} exceeds the iteration bound {}", iteration_bound(k))));
        }
        let cells = random_partition(&t, 4 * ell, rand)?;
        let w: Vec<usize> = match mode {
            ReductionMode::Oracle => cells
                .iter()
                .map(|c| c.iter().filter(|&&i| diff_at(i)).count().min(2))
                .collect(),
            ReductionMode::Randomized => {
                let us: Vec<BitString> = cells.iter().map(|c| substring(x, c)).collect();
                let vs: Vec<BitString> = cells.iter().map(|c| substring(y, c)).collect();
                let sub = &config.subprotocols;
                let eq = eq_tensor(&us, &vs, delta, &config.eq_strategy, sub, rand, meter)?;
                let one = hd1_tensor_within(&us, &vs, delta, n, sub, rand, meter)?;
                eq.iter().zip(&one).map(|(&e, &o)| if e { 0 } else if o { 1 } else { 2 }).collect()
            }
        };
        let sum_w: usize = w.iter().sum();
        let s = w.iter().filter(|&&v| v == 1).count();
        let mut rec = IterationRecord {
            iteration: j,
            ell_before: ell,
            ell_after: ell,
            t_size: t.len(),
            s,
            sum_w,
            halt: None,
            outside_diffs: outside,
        };
        let halt = if sum_w > ell {
            Some(Halt::Zero)
        } else if 10 * s < ell {
            Some(Halt::One)
        } else {
            None
        };
        if let Some(h) = halt {
            rec.halt = Some(h);
            trace.iterations.push(rec);
            trace.halt = Some(h);
            trace.output = h == Halt::One;
            trace.final_ell = ell;
            trace.final_t_size = t.len();
            trace.final_outside_diffs = outside;
            trace.bits = meter.bits() - start_bits;
            return Ok((trace.output, trace));
        }
        let mut kept = Vec::new();
        for (cell, &wi) in cells.iter().zip(&w) {
            if wi == 2 {
                kept.extend_from_slice(cell);
            } else {
                outside += cell.iter().filter(|&&i| diff_at(i)).count();
            }
        }
        kept.sort_unstable();
        t = kept;
        ell -= s;
        rec.ell_after = ell;
        trace.iterations.push(rec);
        j += 1;
    }

    let xt = substring(x, &t);
    let yt = substring(y, &t);
    let output = match mode {
        ReductionMode::Oracle => exact_hamming(&xt, &yt)? <= ell,
        ReductionMode::Randomized => {
            hd_small_within(&xt, &yt, ell, config.base_delta, n, &config.subprotocols, rand, meter)?.accepted
        }
    };
    trace.final_ell = ell;
    trace.final_t_size = t.len();
    trace.final_outside_diffs = outside;
    trace.output = output;
    trace.bits = meter.bits() - start_bits;
    Ok((output, trace))
}

/// Fraction of `trials` colourings of `ℓ` balls into `4ℓ` buckets that use
/// at most `0.6ℓ` distinct colours.
pub fn haltone_tail(ell: usize, trials: u64, rand: &mut SharedRandomness) -> Result<f64> {
    if ell == 0 {
        return Err(Error::domain("ℓ must be at least 1"));
    }
    if trials == 0 {
        return Ok(0.0);
    }
    let buckets = 4 * ell;
    let mut stamp = vec![0u64; buckets];
    let mut hits = 0u64;
    for trial in 1..=trials {
        let mut unique = 0;
        for _ in 0..ell {
            let c = rand.below(buckets as u64) as usize;
            if stamp[c] != trial {
                stamp[c] = trial;
                unique += 1;
            }
        }
        if 10 * unique <= 6 * ell {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pair_at_distance(n: usize, d: usize, rng: &mut ChaCha8Rng) -> (BitString, BitString) {
        let x = BitString::random(n, rng);
        let mut y = x.clone();
        let picks = rand::seq::index::sample(rng, n, d);
        for i in picks {
            y.flip(i);
        }
        (x, y)
    }

    #[test]
    fn bounds_and_schedules() {
        assert_eq!(iteration_bound(1), 0);
        assert_eq!(iteration_bound(2), 7);
        assert_eq!(iteration_bound(8), 20);
        let s = default_schedule(2, ScheduleFlavor::Theorem5).unwrap();
        assert_eq!(s.deltas.len(), 8);
        assert!((s.deltas[0] - 1.0 / 88.0).abs() < 1e-15);
        let s = default_schedule(8, ScheduleFlavor::Theorem5).unwrap();
        assert!((s.deltas[0] - 1.0 / 220.0).abs() < 1e-15);
        let s = default_schedule(100, ScheduleFlavor::Theorem2).unwrap();
        assert_eq!(s.deltas[0], 1.0 / 200.0);
        assert!(s.deltas.iter().sum::<f64>() <= 1.0 / 20.0);
        assert!(default_schedule(1, ScheduleFlavor::Theorem5).is_ok());
        let bad = Schedule { c: SHRINK, deltas: vec![0.06, 0.06], c_red: 4 };
        assert!(matches!(bad.validate(), Err(Error::Invariant(_))));
    }

    #[test]
    fn partition_edges() {
        let mut r = SharedRandomness::new(1);
        let idx: Vec<usize> = (0..10).collect();
        assert_eq!(random_partition(&idx, 1, &mut r).unwrap(), vec![idx.clone()]);
        let cells = random_partition(&[], 5, &mut r).unwrap();
        assert!(cells.iter().all(Vec::is_empty));
        assert!(random_partition(&idx, 0, &mut r).is_err());
        let cells = random_partition(&idx, 3, &mut r).unwrap();
        let mut all: Vec<usize> = cells.concat();
        all.sort();
        assert_eq!(all, idx);
    }

    #[test]
    fn k_one_skips_loop() {
        let cfg = ReductionConfig::new(default_schedule(1, ScheduleFlavor::Theorem5).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (x, y) = pair_at_distance(64, 1, &mut rng);
        let mut r = SharedRandomness::new(0);
        let mut m = CostMeter::new();
        let (out, trace) = reduce_hdk(&x, &y, 1, &cfg, ReductionMode::Randomized, &mut r, &mut m).unwrap();
        assert!(out);
        assert_eq!(trace.loops(), 0);
    }

    #[test]
    fn oracle_mode_is_one_sided() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for case in 0..2000u64 {
            let k = rng.gen_range(1..=16);
            let n = rng.gen_range(k.max(8)..=128);
            let d = rng.gen_range(0..=n.min(2 * k + 2));
            let (x, y) = pair_at_distance(n, d, &mut rng);
            let cfg = ReductionConfig::new(default_schedule(k, ScheduleFlavor::Theorem5).unwrap());
            let mut r = SharedRandomness::new(case);
            let mut m = CostMeter::new();
            let (out, trace) = reduce_hdk(&x, &y, k, &cfg, ReductionMode::Oracle, &mut r, &mut m).unwrap();
            if d <= k {
                assert!(out, "case {case}: d={d} k={k}");
            }
            if trace.halt == Some(Halt::Zero) {
                assert!(d > k);
            }
            assert!(trace.violations(true).is_empty(), "{:?}", trace.violations(true));
            assert_eq!(m.bits(), 0);
        }
    }

    #[test]
    fn trace_lines_parse() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (x, y) = pair_at_distance(256, 12, &mut rng);
        let cfg = ReductionConfig::new(default_schedule(12, ScheduleFlavor::Theorem2).unwrap());
        let mut r = SharedRandomness::new(5);
        let mut m = CostMeter::new();
        let (_, trace) = reduce_hdk(&x, &y, 12, &cfg, ReductionMode::Randomized, &mut r, &mut m).unwrap();
        for line in trace.to_json_lines().lines() {
            let rec: IterationRecord = serde_json::from_str(line).unwrap();
            assert!(rec.ell_before <= 12);
        }
        assert_eq!(trace.bits, m.bits());
    }

    #[test]
    fn tail_single_ball_never_hits() {
        let mut r = SharedRandomness::new(0);
        assert_eq!(haltone_tail(1, 1000, &mut r).unwrap(), 0.0);
        assert!(haltone_tail(0, 10, &mut r).is_err());
    }
}
