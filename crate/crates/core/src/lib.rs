//! Noisy protocol-tree simulation, the HD_k reduction and their experiment harness.

pub mod bits;
pub mod cost;
pub mod error;
pub mod harness;
pub mod hdreduction;
pub mod matrix;
pub mod noisytree;
pub mod protolib;
pub mod querysets;
pub mod randomness;
pub mod subprotocols;
pub mod tree;

pub use bits::BitString;
pub use cost::CostMeter;
pub use error::{Error, Result};
pub use matrix::ProblemMatrix;
pub use noisytree::{augment, noisy_cost, run_noisy, AugmentedTree, NoisyConfig, NoisyRunStats};
pub use randomness::{mix_seed, SharedRandomness};
pub use subprotocols::{SubprotocolConfig, Verdict};
pub use tree::{eval_tree, Label, LabelFn, PartyInput, ProtocolTree, Query};
