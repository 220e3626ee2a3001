//! Fixed-length binary words.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A fixed-length string over {0,1}, packed little-endian into 64-bit words.
///
/// Bit `i` lives in word `i / 64` at position `i % 64`. Bits past `len` in the
/// last word are always zero, so word-wise comparisons and popcounts are exact.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut out = BitString::zeros(0);
        for b in bits {
            out.push(b);
        }
        out
    }

    /// The low `width` bits of `value`, least significant first.
    pub fn from_u64(value: u64, width: usize) -> Self {
        assert!(width <= 64);
        let mut out = BitString::zeros(width);
        if width > 0 {
            out.words[0] = if width == 64 { value } else { value & ((1u64 << width) - 1) };
        }
        out
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut out = BitString::zeros(len);
        for w in &mut out.words {
            *w = rng.gen();
        }
        out.clear_tail();
        out
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        let v = self.get(i);
        self.set(i, !v);
    }

    pub fn push(&mut self, value: bool) {
        if self.len.is_multiple_of(64) {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, value);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of positions where `self` and `other` differ.
    pub fn hamming(&self, other: &BitString) -> Result<usize> {
        if self.len != other.len {
            return Err(Error::domain(format!(
                "length mismatch: {} vs {}",
                self.len, other.len
            )));
        }
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    /// Bits `start..start + len`, as a new string.
    pub fn slice(&self, start: usize, len: usize) -> Result<BitString> {
        if start.checked_add(len).is_none_or(|end| end > self.len) {
            return Err(Error::domain(format!(
                "slice {start}+{len} out of range for length {}",
                self.len
            )));
        }
        let mut out = BitString::zeros(len);
        let shift = start % 64;
        let first = start / 64;
        for (k, w) in out.words.iter_mut().enumerate() {
            let lo = self.words[first + k] >> shift;
            let hi = if shift == 0 {
                0
            } else {
                self.words.get(first + k + 1).map_or(0, |&h| h << (64 - shift))
            };
            *w = lo | hi;
        }
        out.clear_tail();
        Ok(out)
    }

    /// The substring on the given coordinates, in the order given.
    pub fn gather(&self, indices: &[usize]) -> BitString {
        BitString::from_bits(indices.iter().map(|&i| self.get(i)))
    }

    pub fn concat(parts: &[&BitString]) -> BitString {
        let total = parts.iter().map(|p| p.len).sum::<usize>();
        let mut out = BitString { words: Vec::with_capacity(total.div_ceil(64)), len: 0 };
        for p in parts {
            out.extend(p);
        }
        out
    }

    pub fn extend(&mut self, other: &BitString) {
        let shift = self.len % 64;
        let new_len = self.len + other.len;
        if shift == 0 {
            self.words.extend_from_slice(&other.words);
        } else {
            // The tail of our last word is zero, so OR-ing in is safe.
            for &w in &other.words {
                *self.words.last_mut().expect("shift > 0 implies a partial word") |= w << shift;
                self.words.push(w >> (64 - shift));
            }
        }
        self.words.truncate(new_len.div_ceil(64));
        self.len = new_len;
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Big-endian unsigned value of the string (bit 0 most significant).
    /// Only defined for strings of at most 128 bits.
    pub fn to_u128_be(&self) -> Option<u128> {
        if self.len > 128 {
            return None;
        }
        Some(self.iter().fold(0u128, |acc, b| (acc << 1) | b as u128))
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString(\"{self}\")")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .filter(|c| !c.is_whitespace() && *c != '_')
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitString::from_bits)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
