//! Public-coin Equality: inner products of the inputs with shared random
//! vectors over GF(2). Equal inputs are always accepted; unequal inputs are
//! accepted with probability exactly `2^-t` for `t` hash bits.
//!
//! The parties agree on a hash bit iff `<r, a ⊕ b> = 0`, so a word where both
//! encodings coincide contributes nothing whatever its coins are. The
//! simulator skips drawing coins for such words: every outcome keeps exactly
//! the distribution of the full protocol, and long equal prefixes (the common
//! case in batched re-checks) cost nothing to simulate.

use crate::bits::BitString;
use crate::cost::CostMeter;
use crate::error::{Error, Result};
use crate::randomness::SharedRandomness;

use super::{SubprotocolConfig, Verdict};

/// Width of the length prefix written before each encoded element.
const LEN_PREFIX_BITS: u32 = 32;

/// Running GF(2) inner products of both parties' encodings with the same
/// random vector, consumed from the shared stream in encoding order.
struct PairHasher<'r> {
    rand: &'r mut SharedRandomness,
    /// Parity of `<r, a ⊕ b>` so far.
    diff: u32,
}

impl<'r> PairHasher<'r> {
    fn new(rand: &'r mut SharedRandomness) -> Self {
        PairHasher { rand, diff: 0 }
    }

    #[inline]
    fn word(&mut self, a: u64, b: u64, width: u32) {
        let d = a ^ b;
        if d == 0 {
            return;
        }
        let r = self.rand.next_bits(width);
        self.diff ^= (r & d).count_ones();
    }

    fn length_prefix(&mut self, a: usize, b: usize) {
        self.word(a as u64 & 0xFFFF_FFFF, b as u64 & 0xFFFF_FFFF, LEN_PREFIX_BITS);
    }

    /// Both elements must have equal length here.
    fn element(&mut self, a: &BitString, b: &BitString) {
        debug_assert_eq!(a.len(), b.len());
        self.length_prefix(a.len(), b.len());
        let full = a.len() / 64;
        let (aw, bw) = (a.words(), b.words());
        for k in 0..full {
            self.word(aw[k], bw[k], 64);
        }
        let tail = (a.len() % 64) as u32;
        if tail > 0 {
            self.word(aw[full], bw[full], tail);
        }
    }

    fn agree(&self) -> bool {
        self.diff & 1 == 0
    }
}

/// Concatenated length-prefixed encoding, materialized. Only needed when the
/// two sides' element lengths differ and the streams fall out of step.
fn encode(items: &[&BitString], with_count: bool) -> BitString {
    let mut out = BitString::zeros(0);
    if with_count {
        out.extend(&BitString::from_u64(items.len() as u64, LEN_PREFIX_BITS as usize));
    }
    for it in items {
        out.extend(&BitString::from_u64(it.len() as u64, LEN_PREFIX_BITS as usize));
        out.extend(it);
    }
    out
}

fn hash_bit_materialized(a: &BitString, b: &BitString, rand: &mut SharedRandomness) -> bool {
    let len = a.len().max(b.len());
    let (aw, bw) = (a.words(), b.words());
    let mut h = PairHasher::new(rand);
    for k in 0..len.div_ceil(64) {
        let width = if (k + 1) * 64 <= len { 64 } else { (len % 64) as u32 };
        h.word(aw.get(k).copied().unwrap_or(0), bw.get(k).copied().unwrap_or(0), width);
    }
    h.agree()
}

/// One hash bit per pass; true when all `t` passes agree.
fn hashes_agree<'a, I>(items: I, count: Option<usize>, t: u32, rand: &mut SharedRandomness) -> bool
where
    I: Iterator<Item = (&'a BitString, &'a BitString)> + Clone,
{
    let aligned = items.clone().all(|(a, b)| a.len() == b.len());
    if !aligned {
        let (xs, ys): (Vec<_>, Vec<_>) = items.unzip();
        let ea = encode(&xs, count.is_some());
        let eb = encode(&ys, count.is_some());
        let mut all = true;
        for _ in 0..t {
            all &= hash_bit_materialized(&ea, &eb, rand);
        }
        return all;
    }
    // Equal pairs (and the shared count prefix) never need coins.
    let differing: Vec<(&BitString, &BitString)> = items.filter(|(a, b)| a != b).collect();
    if differing.is_empty() {
        return true;
    }
    let mut all = true;
    for _ in 0..t {
        let mut h = PairHasher::new(rand);
        for &(a, b) in &differing {
            h.element(a, b);
        }
        all &= h.agree();
    }
    all
}

/// Cost of one Equality invocation: `t` hash bits plus one verdict bit.
pub fn eq_cost(config: &SubprotocolConfig) -> u64 {
    config.hash_bits as u64 + 1
}

/// Equality on a single pair of strings.
pub fn eq_once(
    x: &BitString,
    y: &BitString,
    config: &SubprotocolConfig,
    rand: &mut SharedRandomness,
    meter: &mut CostMeter,
) -> Verdict {
    let accepted = hashes_agree(std::iter::once((x, y)), None, config.hash_bits, rand);
    let bits = eq_cost(config);
    meter.charge(bits);
    Verdict { accepted, bits_used: bits }
}

/// Equality of two sequences, tested as one Equality on their length-prefixed
/// concatenations. Cost does not depend on the sequence length.
pub fn eq_batch(
    xs: &[&BitString],
    ys: &[&BitString],
    config: &SubprotocolConfig,
    rand: &mut SharedRandomness,
    meter: &mut CostMeter,
) -> Result<Verdict> {
    if xs.len() != ys.len() {
        return Err(Error::domain(format!(
            "sequence length mismatch: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    Ok(eq_batch_pairs(
        xs.iter().copied().zip(ys.iter().copied()),
        config,
        rand,
        meter,
    ))
}

/// `eq_batch` over an iterator of pairs; avoids collecting the sides.
pub fn eq_batch_pairs<'a, I>(
    pairs: I,
    config: &SubprotocolConfig,
    rand: &mut SharedRandomness,
    meter: &mut CostMeter,
) -> Verdict
where
    I: Iterator<Item = (&'a BitString, &'a BitString)> + Clone,
{
    let count = pairs.clone().count();
    let accepted = hashes_agree(pairs, Some(count), config.hash_bits, rand);
    let bits = eq_cost(config);
    meter.charge(bits);
    Verdict { accepted, bits_used: bits }
}

/// `eq_batch_pairs` when the caller already knows which pairs differ. Gives
/// the same outcome distribution without comparing the equal pairs.
pub fn eq_batch_differing(
    pairs: &[(BitString, BitString)],
    differing: &[usize],
    config: &SubprotocolConfig,
    rand: &mut SharedRandomness,
    meter: &mut CostMeter,
) -> Verdict {
    debug_assert!(differing.iter().all(|&i| pairs[i].0 != pairs[i].1));
    let diff = differing.iter().map(|&i| (&pairs[i].0, &pairs[i].1));
    let accepted = if differing.is_empty() {
        true
    } else if diff.clone().all(|(a, b)| a.len() == b.len()) {
        hashes_agree(diff, None, config.hash_bits, rand)
    } else {
        // Misaligned lengths shift the encodings, so hash everything.
        hashes_agree(pairs.iter().map(|(a, b)| (a, b)), Some(pairs.len()), config.hash_bits, rand)
    };
    let bits = eq_cost(config);
    meter.charge(bits);
    Verdict { accepted, bits_used: bits }
}

/// Equality repeated `reps` times, accepting only if every repetition accepts.
/// All hash bits travel in one message, answered by one verdict bit.
pub fn eq_repeated(
    x: &BitString,
    y: &BitString,
    reps: u32,
    config: &SubprotocolConfig,
    rand: &mut SharedRandomness,
    meter: &mut CostMeter,
) -> Verdict {
    let mut accepted = true;
    for _ in 0..reps {
        accepted &= hashes_agree(std::iter::once((x, y)), None, config.hash_bits, rand);
    }
    let bits = reps as u64 * config.hash_bits as u64 + 1;
    meter.charge(bits);
    Verdict { accepted, bits_used: bits }
}
