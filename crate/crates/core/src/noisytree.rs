//! Error reduction for Equality-oracle protocol trees by a backtracking walk.
//!
//! Every leaf of the deterministic tree is extended by a chain of copies of
//! its parent's query. A pointer then walks the extended tree for a fixed
//! number of rounds. Each round first re-checks, with a single batched
//! Equality test, every earlier answer that sent the walk left ("equal"); if
//! that fails the pointer backs up one level, otherwise it tests the current
//! node and descends. One-sided hashing means a pointer on the correct path
//! is never pushed back up, so the walk only loses ground on mistakes.

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::cost::CostMeter;
use crate::error::{Error, Result};
use crate::randomness::SharedRandomness;
use crate::subprotocols::{eq_batch_differing, eq_cost, eq_once, SubprotocolConfig};
use crate::tree::{
    eval_tree, EqQueryLabeling, Label, LabelFn, PartyInput, PathStep, Pos, ProtocolTree, Query,
    TreeBuilder,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisyConfig {
    /// The constant in the extension depth `⌈C·log2(1/δ)⌉`.
    pub c: f64,
    /// Target error.
    pub delta: f64,
    /// Output when the walk ends outside every leaf extension.
    pub default_label: Label,
    pub eq: SubprotocolConfig,
}

impl Default for NoisyConfig {
    fn default() -> Self {
        NoisyConfig {
            c: 6.0,
            delta: 0.25,
            default_label: Label::Value(0),
            eq: SubprotocolConfig::default(),
        }
    }
}

impl NoisyConfig {
    pub fn new(c: f64, delta: f64) -> Self {
        NoisyConfig { c, delta, ..NoisyConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c >= 1.0 && self.c.is_finite()) {
            return Err(Error::config(format!("C must be at least 1, got {}", self.c)));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::config(format!("delta must lie in (0, 1/2), got {}", self.delta)));
        }
        self.eq.validate()
    }

    /// Depth of each leaf extension: `⌈C·log2(1/δ)⌉`.
    pub fn extension_depth(&self) -> usize {
        // Round before ceil so exact products such as 6·log2(2^10) = 60 stay exact.
        let raw = self.c * (1.0 / self.delta).log2();
        let snapped = (raw * 1e9).round() / 1e9;
        snapped.ceil() as usize
    }
}

/// `R = 4·max{d, ⌈C·log2(1/δ)⌉}`.
pub fn rounds_for(depth: usize, config: &NoisyConfig) -> usize {
    4 * depth.max(config.extension_depth())
}

/// Exact number of bits `run_noisy` charges on a tree of the given depth:
/// two Equality invocations in every round.
pub fn noisy_cost(depth: usize, config: &NoisyConfig) -> u64 {
    2 * eq_cost(&config.eq) * rounds_for(depth, config) as u64
}

/// A protocol tree whose leaves are replaced by extension chains.
///
/// The extensions are implicit: a position below leaf `v` is identified by the
/// query node above `v`, the branch into `v` and the depth inside the chain.
/// Every extension node carries the same query as that parent node.
#[derive(Clone, Debug)]
pub struct AugmentedTree {
    base: ProtocolTree,
    base_depth: usize,
    extension_depth: usize,
}

impl AugmentedTree {
    pub fn base(&self) -> &ProtocolTree {
        &self.base
    }

    pub fn extension_depth(&self) -> usize {
        self.extension_depth
    }

    pub fn base_depth(&self) -> usize {
        self.base_depth
    }

    /// One extension per leaf of the base tree.
    pub fn extension_count(&self) -> u128 {
        self.base.leaf_count()
    }
}

/// Builds the extended tree. Trees without queries get a synthetic,
/// always-true root query whose two leaves both carry the original label.
pub fn augment(tree: &ProtocolTree, config: &NoisyConfig) -> Result<AugmentedTree> {
    config.validate()?;
    if let Some(q) = tree.queries().find(|q| q.as_eq().is_none()) {
        return Err(Error::UnsupportedQuery(format!(
            "noisy-tree walks need Equality queries, found {q:?}"
        )));
    }
    let base = if tree.root().is_none() {
        let label = eval_tree(tree, &PartyInput::Index(0), &PartyInput::Index(0))?.output;
        let mut b = TreeBuilder::new();
        let l = b.leaf(label.clone());
        let r = b.leaf(label);
        let empty = BitString::zeros(0);
        let root = b.eq(LabelFn::Const(empty.clone()), LabelFn::Const(empty), l, r);
        b.finish(root)
    } else {
        tree.clone()
    };
    Ok(AugmentedTree { base_depth: base.depth(), base, extension_depth: config.extension_depth() })
}

/// Per-run bookkeeping of the walk, measured against the exact answers.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoisyRunStats {
    /// Rounds that start and end on the correct path or its leaf extension.
    pub good: usize,
    pub bad: usize,
    /// Rounds in which an Equality test wrongly reported "equal".
    pub mistakes: usize,
    pub rounds: usize,
    pub bits: u64,
    /// Depth of the final pointer in the extended tree.
    pub final_depth: usize,
    /// Whether the final pointer lies inside some leaf extension.
    pub final_in_extension: bool,
    pub output: Option<Label>,
    pub correct: bool,
    /// Rounds that began exactly on the correct path yet moved the pointer up.
    pub moved_up_on_path: usize,
}

impl NoisyRunStats {
    /// Names of the walk invariants this run violates (empty when none do).
    pub fn violations(&self, base_depth: usize) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.good + self.bad != self.rounds {
            v.push("good+bad=R");
        }
        if self.bad > 2 * self.mistakes {
            v.push("bad<=2*mistakes");
        }
        if self.good > base_depth && !self.correct {
            v.push("good>d=>correct");
        }
        if self.moved_up_on_path > 0 {
            v.push("never-move-up-on-correct-path");
        }
        v
    }
}

/// The Equality implementation the walk uses for its two tests per round.
pub trait EqualityChannel {
    /// Batched test over `(a_q(i), b_q(j))` pairs. `differing` lists the
    /// indices whose two sides differ, which the walk already knows; equal
    /// pairs cannot influence a hash outcome, so channels may skip them.
    fn batch(
        &mut self,
        pairs: &[(BitString, BitString)],
        differing: &[usize],
        rand: &mut SharedRandomness,
        meter: &mut CostMeter,
    ) -> bool;

    fn single(
        &mut self,
        a: &BitString,
        b: &BitString,
        rand: &mut SharedRandomness,
        meter: &mut CostMeter,
    ) -> bool;
}

/// Public-coin inner-product hashing (the real protocol).
#[derive(Clone, Debug)]
pub struct HashedEquality {
    pub config: SubprotocolConfig,
}

impl EqualityChannel for HashedEquality {
    fn batch(
        &mut self,
        pairs: &[(BitString, BitString)],
        differing: &[usize],
        rand: &mut SharedRandomness,
        meter: &mut CostMeter,
    ) -> bool {
        eq_batch_differing(pairs, differing, &self.config, rand, meter).accepted
    }

    fn single(
        &mut self,
        a: &BitString,
        b: &BitString,
        rand: &mut SharedRandomness,
        meter: &mut CostMeter,
    ) -> bool {
        eq_once(a, b, &self.config, rand, meter).accepted
    }
}

/// Never errs, but charges what the hashed protocol would.
#[derive(Clone, Debug)]
pub struct PerfectEquality {
    pub config: SubprotocolConfig,
}

impl EqualityChannel for PerfectEquality {
    fn batch(
        &mut self,
        _pairs: &[(BitString, BitString)],
        differing: &[usize],
        _rand: &mut SharedRandomness,
        meter: &mut CostMeter,
    ) -> bool {
        meter.charge(eq_cost(&self.config));
        differing.is_empty()
    }

    fn single(
        &mut self,
        a: &BitString,
        b: &BitString,
        _rand: &mut SharedRandomness,
        meter: &mut CostMeter,
    ) -> bool {
        meter.charge(eq_cost(&self.config));
        a == b
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Place {
    Base(Pos),
    /// Inside the extension below the leaf reached from `parent`; depth 0 is
    /// the extension's root, which sits where the leaf was.
    Ext { parent: Pos, depth: usize },
}

struct Frame {
    place: Place,
    left: bool,
    /// Whether the node's query truly answers "equal" on these inputs.
    truth: bool,
    labels: (BitString, BitString),
}

struct Walk<'t> {
    aug: &'t AugmentedTree,
    x: &'t PartyInput,
    y: &'t PartyInput,
    frames: Vec<Frame>,
    /// Labels of left frames, in path order; the batch re-checks exactly these.
    left_labels: Vec<(BitString, BitString)>,
    /// Indices into `left_labels` whose two sides differ.
    left_differing: Vec<usize>,
    base_wrong: usize,
    ext_wrong: usize,
}

impl<'t> Walk<'t> {
    fn current(&self) -> Place {
        match self.frames.last() {
            None => Place::Base(self.aug.base.root().expect("augmented trees have a root query")),
            Some(f) => match f.place {
                Place::Base(pos) => match self.aug.base.child(pos, f.left) {
                    Some(next) => Place::Base(next),
                    None => Place::Ext { parent: pos, depth: 0 },
                },
                Place::Ext { parent, depth } => Place::Ext { parent, depth: depth + 1 },
            },
        }
    }

    fn query_of(&self, place: Place) -> &'t EqQueryLabeling {
        let pos = match place {
            Place::Base(p) => p,
            Place::Ext { parent, .. } => parent,
        };
        match self.aug.base.query_at(pos) {
            Query::Eq(q) => q,
            Query::Predicate(_) => unreachable!("augment rejects non-Equality trees"),
        }
    }

    fn labels_at(&self, place: Place) -> Result<(BitString, BitString)> {
        let q = self.query_of(place);
        Ok((q.a.eval(self.x)?, q.b.eval(self.y)?))
    }

    fn is_extension_leaf(&self, place: Place) -> bool {
        matches!(place, Place::Ext { depth, .. } if depth >= self.aug.extension_depth)
    }

    fn push(&mut self, place: Place, left: bool, labels: (BitString, BitString)) {
        let truth = labels.0 == labels.1;
        if left {
            if !truth {
                self.left_differing.push(self.left_labels.len());
            }
            self.left_labels.push(labels.clone());
        }
        if left != truth {
            match place {
                Place::Base(_) => self.base_wrong += 1,
                Place::Ext { .. } => self.ext_wrong += 1,
            }
        }
        self.frames.push(Frame { place, left, truth, labels });
    }

    fn pop(&mut self) -> Option<Frame> {
        let f = self.frames.pop()?;
        if f.left {
            self.left_labels.pop();
            if !f.truth {
                self.left_differing.pop();
            }
        }
        if f.left != f.truth {
            match f.place {
                Place::Base(_) => self.base_wrong -= 1,
                Place::Ext { .. } => self.ext_wrong -= 1,
            }
        }
        Some(f)
    }

    /// On the correct path or anywhere in the correct leaf's extension.
    fn in_correct_region(&self) -> bool {
        self.base_wrong == 0
    }

    /// Exactly on the correct path, extension steps included.
    fn on_correct_path(&self) -> bool {
        self.base_wrong == 0 && self.ext_wrong == 0
    }
}

/// Runs the walk on inputs `(x, y)` with hashed Equality tests.
pub fn run_noisy(
    aug: &AugmentedTree,
    x: &PartyInput,
    y: &PartyInput,
    config: &NoisyConfig,
    rand: &mut SharedRandomness,
    meter: &mut CostMeter,
) -> Result<(Label, NoisyRunStats)> {
    let mut channel = HashedEquality { config: config.eq.clone() };
    run_noisy_with(aug, x, y, config, &mut channel, rand, meter)
}

/// Runs the walk with an arbitrary Equality channel.
pub fn run_noisy_with<C: EqualityChannel + ?Sized>(
    aug: &AugmentedTree,
    x: &PartyInput,
    y: &PartyInput,
    config: &NoisyConfig,
    channel: &mut C,
    rand: &mut SharedRandomness,
    meter: &mut CostMeter,
) -> Result<(Label, NoisyRunStats)> {
    let truth = eval_tree(&aug.base, x, y)?;
    let rounds = rounds_for(aug.base_depth(), config);
    let start_bits = meter.bits();
    let mut walk = Walk {
        aug,
        x,
        y,
        frames: Vec::with_capacity(rounds),
        left_labels: Vec::new(),
        left_differing: Vec::new(),
        base_wrong: 0,
        ext_wrong: 0,
    };
    let mut stats = NoisyRunStats { rounds, ..NoisyRunStats::default() };
    let mut current_labels: Option<(BitString, BitString)> = None;

    for _ in 0..rounds {
        let place = walk.current();
        let started_in = walk.in_correct_region();
        let started_on_path = walk.on_correct_path();
        let labels = match current_labels.take() {
            Some(l) => l,
            None => walk.labels_at(place)?,
        };
        let current_true = labels.0 == labels.1;
        let batch_true = walk.left_differing.is_empty();

        // Both tests travel in the same round so every round costs the same.
        let batch_ok = channel.batch(&walk.left_labels, &walk.left_differing, rand, meter);
        let current_ok = channel.single(&labels.0, &labels.1, rand, meter);

        let mistake = if batch_true { !current_true && current_ok } else { batch_ok };
        stats.mistakes += usize::from(mistake);

        if !batch_ok {
            // The batch is one-sided, so this only happens off the correct path;
            // at the root the batch is empty and always passes.
            if let Some(f) = walk.pop() {
                if started_on_path {
                    stats.moved_up_on_path += 1;
                }
                // The pointer is back at the popped node; reuse its labels.
                current_labels = Some(f.labels);
            }
        } else if walk.is_extension_leaf(place) {
            current_labels = Some(labels);
        } else {
            walk.push(place, current_ok, labels);
        }

        if started_in && walk.in_correct_region() {
            stats.good += 1;
        } else {
            stats.bad += 1;
        }
    }

    let end = walk.current();
    stats.final_depth = walk.frames.len();
    stats.final_in_extension = matches!(end, Place::Ext { .. });
    let output = if stats.final_in_extension {
        let path: Vec<PathStep> = walk
            .frames
            .iter()
            .filter_map(|f| match f.place {
                Place::Base(pos) => Some(PathStep { pos, left: f.left }),
                Place::Ext { .. } => None,
            })
            .collect();
        aug.base.output_of(&path)?
    } else {
        config.default_label.clone()
    };
    stats.correct = output == truth.output;
    stats.output = Some(output.clone());
    stats.bits = meter.bits() - start_bits;
    Ok((output, stats))
}

/// One CSV row of per-run instrumentation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NoisyRunRecord {
    pub seed: u64,
    pub d: usize,
    pub delta: f64,
    pub c: f64,
    pub rounds: usize,
    pub bits: u64,
    pub good: usize,
    pub bad: usize,
    pub mistakes: usize,
    pub correct: bool,
}

impl NoisyRunRecord {
    pub fn new(seed: u64, depth: usize, config: &NoisyConfig, stats: &NoisyRunStats) -> Self {
        NoisyRunRecord {
            seed,
            d: depth,
            delta: config.delta,
            c: config.c,
            rounds: stats.rounds,
            bits: stats.bits,
            good: stats.good,
            bad: stats.bad,
            mistakes: stats.mistakes,
            correct: stats.correct,
        }
    }
}
