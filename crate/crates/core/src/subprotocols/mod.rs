//! Constant-cost randomized building blocks with exact bit accounting.
//!
//! Every invocation charges the bits both parties send, including one verdict
//! bit so that both sides learn the outcome.

mod boost;
pub mod bounds;
mod equality;
mod hamming;
mod tensor;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use boost::{boost_majority, majority_repetitions};
pub use equality::{eq_batch, eq_batch_differing, eq_batch_pairs, eq_cost, eq_once, eq_repeated};
pub use hamming::{
    exact_eq, exact_hamming, hd1, hd1_cost, hd1_once, hd1_tensor, hd1_tensor_within, hd1_trials,
    hd1_within, hd_small, hd_small_within, small_hd_buckets, small_hd_repetitions,
    MAX_SMALL_THRESHOLD,
};
pub use tensor::{eq_tensor, eq_tensor_repetitions, EqTensorStrategy};

/// Outcome of one subprotocol invocation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub accepted: bool,
    pub bits_used: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubprotocolConfig {
    /// Inner-product hash bits per Equality test (`t`).
    pub hash_bits: u32,
    /// Buckets of the HD1 sketch (`b`).
    pub hd1_buckets: usize,
    /// Fixed HD1 trial count; derived from the target error when unset.
    pub hd1_trials: Option<u32>,
    /// `hd_small` uses `factor · ℓ²` buckets.
    pub smallhd_bucket_factor: usize,
}

impl Default for SubprotocolConfig {
    fn default() -> Self {
        SubprotocolConfig {
            hash_bits: 2,
            hd1_buckets: 16,
            hd1_trials: None,
            smallhd_bucket_factor: 8,
        }
    }
}

impl SubprotocolConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=64).contains(&self.hash_bits) {
            return Err(Error::config(format!("hash_bits must be in 1..=64, got {}", self.hash_bits)));
        }
        if self.hd1_buckets < 4 {
            return Err(Error::config(format!("hd1_buckets must be at least 4, got {}", self.hd1_buckets)));
        }
        if self.hd1_trials == Some(0) {
            return Err(Error::config("hd1_trials must be at least 1"));
        }
        if self.smallhd_bucket_factor == 0 {
            return Err(Error::config("smallhd_bucket_factor must be positive"));
        }
        Ok(())
    }
}
