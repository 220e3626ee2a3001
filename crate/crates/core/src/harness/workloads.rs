//! Named workloads: a protocol tree, an input sampler and an exact answer.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::protolib::{adjacency_tree, greater_than, greater_than_tree, hd1_bsearch_tree, hd1_tensor_tree, TreeGraph};
use crate::randomness::mix_seed;
use crate::tree::{Label, PartyInput, ProtocolTree};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WorkloadKind {
    AdjTree,
    Gt,
    Hd1Bsearch,
    Hd1Tensor,
}

impl WorkloadKind {
    pub const ALL: [WorkloadKind; 4] =
        [WorkloadKind::AdjTree, WorkloadKind::Gt, WorkloadKind::Hd1Bsearch, WorkloadKind::Hd1Tensor];

    pub fn name(self) -> &'static str {
        match self {
            WorkloadKind::AdjTree => "adj-tree",
            WorkloadKind::Gt => "gt",
            WorkloadKind::Hd1Bsearch => "hd1-bsearch",
            WorkloadKind::Hd1Tensor => "hd1-tensor",
        }
    }
}

impl fmt::Display for WorkloadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WorkloadKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        WorkloadKind::ALL
            .into_iter()
            .find(|w| w.name() == s)
            .ok_or_else(|| Error::config(format!("unknown workload {s:?}; expected one of adj-tree, gt, hd1-bsearch, hd1-tensor")))
    }
}

/// How experiment inputs are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputDistribution {
    Uniform,
    /// Cycles through the structured distance families `{0, 1, 2, 3, k, k+1}`.
    WorstCase,
    /// Every pair at Hamming distance exactly `d`.
    Distance(usize),
}

impl fmt::Display for InputDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputDistribution::Uniform => f.write_str("uniform"),
            InputDistribution::WorstCase => f.write_str("worst-case"),
            InputDistribution::Distance(d) => write!(f, "dist:{d}"),
        }
    }
}

impl FromStr for InputDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(InputDistribution::Uniform),
            "worst-case" => Ok(InputDistribution::WorstCase),
            _ => s
                .strip_prefix("dist:")
                .and_then(|d| d.parse().ok())
                .map(InputDistribution::Distance)
                .ok_or_else(|| Error::config(format!("unknown input distribution {s:?}; expected uniform, worst-case or dist:D"))),
        }
    }
}

/// Distances probed by the worst-case family for threshold `k`.
pub fn distance_families(k: usize) -> [usize; 6] {
    [0, 1, 2, 3, k, k + 1]
}

/// `x` and a copy with exactly `d` random coordinates flipped.
pub fn pair_at_distance<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<(BitString, BitString)> {
    if d > n {
        return Err(Error::config(format!("distance {d} exceeds length {n}")));
    }
    let x = BitString::random(n, rng);
    let mut y = x.clone();
    for i in sample(rng, n, d) {
        y.flip(i);
    }
    Ok((x, y))
}

/// Seed for the input sampler of trial `index`, kept apart from the protocol's stream.
pub fn input_seed(seed: u64, index: u64) -> u64 {
    mix_seed(seed ^ 0x1d8e_4e27_c47d_124f, index)
}

/// A workload with its tree built.
#[derive(Clone, Debug)]
pub struct Workload {
    pub kind: WorkloadKind,
    pub n: usize,
    pub k: usize,
    tree: ProtocolTree,
    graph: Option<TreeGraph>,
}

impl Workload {
    /// `n` is the string length (vertex count for `adj-tree`); `k` is the
    /// tensor arity for `hd1-tensor` and the large distance family otherwise.
    /// The adjacency graph is a random tree drawn from `seed`.
    pub fn new(kind: WorkloadKind, n: usize, k: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("n must be at least 1"));
        }
        let (tree, graph) = match kind {
            WorkloadKind::AdjTree => {
                let g = TreeGraph::random(n, &mut ChaCha8Rng::seed_from_u64(seed));
                (adjacency_tree(&g), Some(g))
            }
            WorkloadKind::Gt => (greater_than_tree(n), None),
            WorkloadKind::Hd1Bsearch => (hd1_bsearch_tree(n), None),
            WorkloadKind::Hd1Tensor => {
                if k == 0 {
                    return Err(Error::config("hd1-tensor needs k ≥ 1"));
                }
                (hd1_tensor_tree(n, k), None)
            }
        };
        Ok(Workload { kind, n, k, tree, graph })
    }

    pub fn tree(&self) -> &ProtocolTree {
        &self.tree
    }

    pub fn graph(&self) -> Option<&TreeGraph> {
        self.graph.as_ref()
    }

    /// Queries on the longest path.
    pub fn depth(&self) -> usize {
        self.tree.depth()
    }

    /// Draws the inputs of trial `index`.
    pub fn sample(&self, dist: InputDistribution, seed: u64, index: u64) -> Result<(PartyInput, PartyInput)> {
        let mut rng = ChaCha8Rng::seed_from_u64(input_seed(seed, index));
        let families = distance_families(self.k);
        let family_distance = match dist {
            InputDistribution::WorstCase => families[(index % families.len() as u64) as usize],
            InputDistribution::Distance(d) => d,
            InputDistribution::Uniform => 0,
        };
        match self.kind {
            WorkloadKind::AdjTree => {
                let g = self.graph.as_ref().expect("adjacency workload has a graph");
                let n = g.len();
                let (u, v) = match dist {
                    InputDistribution::Uniform => (rng.gen_range(0..n), rng.gen_range(0..n)),
                    // Edges in both orientations, then arbitrary pairs.
                    _ => {
                        let u = rng.gen_range(0..n);
                        match index % 3 {
                            0 => (u, g.parent(u)),
                            1 => (g.parent(u), u),
                            _ => (u, rng.gen_range(0..n)),
                        }
                    }
                };
                Ok((PartyInput::Index(u), PartyInput::Index(v)))
            }
            WorkloadKind::Gt | WorkloadKind::Hd1Bsearch => {
                let (x, y) = match dist {
                    InputDistribution::Uniform => (BitString::random(self.n, &mut rng), BitString::random(self.n, &mut rng)),
                    _ => {
                        pair_at_distance(self.n, family_distance.min(self.n), &mut rng)?
                    }
                };
                Ok((PartyInput::Bits(x), PartyInput::Bits(y)))
            }
            WorkloadKind::Hd1Tensor => {
                // Block distances are drawn independently; only 0..=3 matter to HD1.
                let mut xs = Vec::with_capacity(self.k);
                let mut ys = Vec::with_capacity(self.k);
                for _ in 0..self.k {
                    let (x, y) = match dist {
                        InputDistribution::Uniform => {
                            (BitString::random(self.n, &mut rng), BitString::random(self.n, &mut rng))
                        }
                        InputDistribution::WorstCase => {
                            let d = rng.gen_range(0..=3usize).min(self.n);
                            pair_at_distance(self.n, d, &mut rng)?
                        }
                        InputDistribution::Distance(d) => pair_at_distance(self.n, d.min(self.n), &mut rng)?,
                    };
                    xs.push(x);
                    ys.push(y);
                }
                let xr: Vec<&BitString> = xs.iter().collect();
                let yr: Vec<&BitString> = ys.iter().collect();
                Ok((PartyInput::Bits(BitString::concat(&xr)), PartyInput::Bits(BitString::concat(&yr))))
            }
        }
    }

    /// The correct output, computed without the tree.
    pub fn exact(&self, x: &PartyInput, y: &PartyInput) -> Result<Label> {
        match self.kind {
            WorkloadKind::AdjTree => {
                let g = self.graph.as_ref().expect("adjacency workload has a graph");
                match (x, y) {
                    (PartyInput::Index(u), PartyInput::Index(v)) if *u < g.len() && *v < g.len() => {
                        Ok(Label::bit(g.adjacent(*u, *v)))
                    }
                    _ => Err(Error::domain("adjacency inputs are vertex indices")),
                }
            }
            WorkloadKind::Gt => Ok(Label::bit(greater_than(x.bits()?, y.bits()?)?)),
            WorkloadKind::Hd1Bsearch => Ok(Label::bit(x.bits()?.hamming(y.bits()?)? == 1)),
            WorkloadKind::Hd1Tensor => {
                let (x, y) = (x.bits()?, y.bits()?);
                let blocks = (0..self.k)
                    .map(|i| {
                        let d = x.slice(i * self.n, self.n)?.hamming(&y.slice(i * self.n, self.n)?)?;
                        Ok(Label::bit(d == 1))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Label::Tuple(blocks))
            }
        }
    }
}
