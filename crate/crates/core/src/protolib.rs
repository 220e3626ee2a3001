//! Concrete Equality-oracle protocol trees used as workloads.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::tree::{Label, LabelFn, NodeId, ProtocolTree, TreeBuilder};

/// A rooted tree on vertices `0..n`, given by parent pointers; the root is its
/// own parent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeGraph {
    parent: Vec<usize>,
    root: usize,
}

impl TreeGraph {
    pub fn new(parent: Vec<usize>) -> Result<Self> {
        let n = parent.len();
        if n == 0 {
            return Err(Error::domain("tree graph needs at least one vertex"));
        }
        if let Some(&p) = parent.iter().find(|&&p| p >= n) {
            return Err(Error::domain(format!("parent {p} out of range")));
        }
        let roots: Vec<usize> = (0..n).filter(|&v| parent[v] == v).collect();
        let [root] = roots[..] else {
            return Err(Error::domain(format!("expected one root, found {}", roots.len())));
        };
        // Every vertex must reach the root within n steps.
        for v in 0..n {
            let mut u = v;
            let mut steps = 0;
            while u != root {
                u = parent[u];
                steps += 1;
                if steps > n {
                    return Err(Error::domain(format!("parent pointers from {v} form a cycle")));
                }
            }
        }
        Ok(TreeGraph { parent, root })
    }

    /// The path `0 - 1 - … - (n-1)` rooted at 0.
    pub fn path(n: usize) -> Self {
        TreeGraph::new((0..n).map(|v| v.saturating_sub(1)).collect()).expect("path is a tree")
    }

    /// A random recursive tree with shuffled vertex names.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        assert!(n >= 1);
        let mut names: Vec<usize> = (0..n).collect();
        names.shuffle(rng);
        let mut parent = vec![0; n];
        parent[names[0]] = names[0];
        for i in 1..n {
            parent[names[i]] = names[rng.gen_range(0..i)];
        }
        TreeGraph::new(parent).expect("random recursive tree is a tree")
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, v: usize) -> usize {
        self.parent[v]
    }

    /// Brute-force adjacency.
    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        u != v && (self.parent[u] == v || self.parent[v] == u)
    }
}

/// Two Equality queries: "is x the parent of y?" then "is y the parent of x?".
/// The root's parent is mapped to a label no vertex carries, so the root's
/// self-loop never reads as an edge.
pub fn adjacency_tree(g: &TreeGraph) -> ProtocolTree {
    let n = g.len() as u64;
    let ids: Vec<u64> = (0..n).collect();
    let parent_or = |sentinel: u64| -> Vec<u64> {
        (0..g.len())
            .map(|v| if v == g.root() { sentinel } else { g.parent(v) as u64 })
            .collect()
    };
    let mut b = TreeBuilder::new();
    let yes1 = b.leaf(Label::Value(1));
    let yes2 = b.leaf(Label::Value(1));
    let no = b.leaf(Label::Value(0));
    let second = b.eq(LabelFn::Table(parent_or(n + 1)), LabelFn::Table(ids.clone()), yes2, no);
    let root = b.eq(LabelFn::Table(ids), LabelFn::Table(parent_or(n)), yes1, second);
    b.finish(root)
}

/// Strict Greater-Than on big-endian unsigned `n`-bit strings.
///
/// After a full Equality test, a binary search over prefix lengths finds the
/// first differing position `m`; then `x > y` iff `x_m = 1`.
pub fn greater_than_tree(n: usize) -> ProtocolTree {
    assert!(n >= 1);
    let mut b = TreeBuilder::new();
    // Invariant: the prefix of length `lo` agrees, the prefix of length `hi` does not.
    fn search(b: &mut TreeBuilder, lo: usize, hi: usize) -> NodeId {
        if hi - lo == 1 {
            let yes = b.leaf(Label::Value(1));
            let no = b.leaf(Label::Value(0));
            let one: BitString = BitString::from_u64(1, 1);
            return b.eq(LabelFn::Bit { pos: lo }, LabelFn::Const(one), yes, no);
        }
        let mid = (lo + hi) / 2;
        let equal = search(b, mid, hi);
        let differ = search(b, lo, mid);
        let prefix = LabelFn::Slice { start: 0, len: mid };
        b.eq(prefix.clone(), prefix, equal, differ)
    }
    let eq_leaf = b.leaf(Label::Value(0));
    let rest = search(&mut b, 0, n);
    let all = LabelFn::Slice { start: 0, len: n };
    let root = b.eq(all.clone(), all, eq_leaf, rest);
    b.finish(root)
}

/// Exact strict comparison of big-endian unsigned strings.
pub fn greater_than(x: &BitString, y: &BitString) -> Result<bool> {
    if x.len() != y.len() {
        return Err(Error::domain("length mismatch"));
    }
    Ok(x.iter()
        .zip(y.iter())
        .find(|(a, b)| a != b)
        .is_some_and(|(a, _)| a))
}

/// HD1 by binary search over the block `offset..offset+n`.
///
/// The root tests the whole block for equality (equal → 0). Inside an
/// interval known to differ, the halves are tested: both differ → 0, exactly
/// one differs → recurse into it, and a single differing coordinate → 1.
pub fn hd1_bsearch_tree_at(offset: usize, n: usize) -> ProtocolTree {
    assert!(n >= 1);
    fn interval(b: &mut TreeBuilder, start: usize, len: usize) -> NodeId {
        if len == 1 {
            return b.leaf(Label::Value(1));
        }
        let h = len / 2;
        let left = LabelFn::Slice { start, len: h };
        let right = LabelFn::Slice { start: start + h, len: len - h };
        let in_right = interval(b, start + h, len - h);
        let in_left = interval(b, start, h);
        let both = b.leaf(Label::Value(0));
        let check_right = b.eq(right.clone(), right, in_left, both);
        b.eq(left.clone(), left, in_right, check_right)
    }
    let mut b = TreeBuilder::new();
    let equal = b.leaf(Label::Value(0));
    let differ = interval(&mut b, offset, n);
    let block = LabelFn::Slice { start: offset, len: n };
    let root = b.eq(block.clone(), block, equal, differ);
    b.finish(root)
}

pub fn hd1_bsearch_tree(n: usize) -> ProtocolTree {
    hd1_bsearch_tree_at(0, n)
}

/// `k` copies of the HD1 search tree over consecutive `n`-bit blocks.
pub fn hd1_tensor_tree(n: usize, k: usize) -> ProtocolTree {
    assert!(k >= 1);
    let copies: Vec<ProtocolTree> = (0..k).map(|c| hd1_bsearch_tree_at(c * n, n)).collect();
    ProtocolTree::tensor(&copies)
}

/// Depth bound of the HD1 search tree: `1 + 2⌈log2 n⌉`.
pub fn hd1_depth_bound(n: usize) -> usize {
    1 + 2 * ceil_log2(n)
}

/// Depth bound of the Greater-Than tree: `⌈log2 n⌉ + 2`.
pub fn gt_depth_bound(n: usize) -> usize {
    ceil_log2(n) + 2
}

pub(crate) fn ceil_log2(n: usize) -> usize {
    assert!(n >= 1);
    (usize::BITS - (n - 1).leading_zeros()) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randomness::SharedRandomness;
    use crate::tree::{eval_tree, PartyInput};

    fn run(t: &ProtocolTree, x: &str, y: &str) -> Label {
        eval_tree(t, &PartyInput::Bits(x.parse().unwrap()), &PartyInput::Bits(y.parse().unwrap()))
            .unwrap()
            .output
    }

    #[test]
    fn graph_validation() {
        assert!(TreeGraph::new(vec![]).is_err());
        assert!(TreeGraph::new(vec![1, 0]).is_err());
        assert!(TreeGraph::new(vec![0, 1]).is_err());
        assert!(TreeGraph::new(vec![0, 2, 1]).is_err());
        assert!(TreeGraph::new(vec![0, 0, 1]).is_ok());
    }

    #[test]
    fn adjacency_examples() {
        let g = TreeGraph::path(2);
        let t = adjacency_tree(&g);
        assert_eq!(t.depth(), 2);
        let e = |u: usize, v: usize| eval_tree(&t, &PartyInput::Index(u), &PartyInput::Index(v)).unwrap().output;
        assert_eq!(e(0, 1), Label::Value(1));
        assert_eq!(e(1, 0), Label::Value(1));
        assert_eq!(e(0, 0), Label::Value(0));
        assert_eq!(e(1, 1), Label::Value(0));

        let p3 = adjacency_tree(&TreeGraph::path(3));
        let r = eval_tree(&p3, &PartyInput::Index(0), &PartyInput::Index(2)).unwrap();
        assert_eq!(r.output, Label::Value(0));
    }

    #[test]
    fn adjacency_random_graphs() {
        let mut rng = SharedRandomness::new(8);
        for _ in 0..5 {
            let g = TreeGraph::random(30, &mut rng);
            let t = adjacency_tree(&g);
            for u in 0..30 {
                for v in 0..30 {
                    let out = eval_tree(&t, &PartyInput::Index(u), &PartyInput::Index(v)).unwrap().output;
                    assert_eq!(out, Label::bit(g.adjacent(u, v)), "({u},{v})");
                }
            }
        }
    }

    #[test]
    fn gt_examples() {
        let t = greater_than_tree(8);
        assert!(t.depth() <= gt_depth_bound(8));
        assert_eq!(run(&t, "10000000", "01111111"), Label::Value(1));
        assert_eq!(run(&t, "01111111", "10000000"), Label::Value(0));
        assert_eq!(run(&t, "10101010", "10101010"), Label::Value(0));
    }

    #[test]
    fn gt_small_exhaustive() {
        for n in 1..=5usize {
            let t = greater_than_tree(n);
            assert!(t.depth() <= gt_depth_bound(n));
            for a in 0..(1u64 << n) {
                for b in 0..(1u64 << n) {
                    let x = BitString::from_bits((0..n).map(|i| (a >> (n - 1 - i)) & 1 == 1));
                    let y = BitString::from_bits((0..n).map(|i| (b >> (n - 1 - i)) & 1 == 1));
                    let out = eval_tree(&t, &PartyInput::Bits(x), &PartyInput::Bits(y)).unwrap().output;
                    assert_eq!(out, Label::bit(a > b));
                }
            }
        }
    }

    #[test]
    fn hd1_examples() {
        let t = hd1_bsearch_tree(4);
        assert_eq!(run(&t, "0001", "0000"), Label::Value(1));
        assert_eq!(run(&t, "0000", "0000"), Label::Value(0));
        assert_eq!(run(&t, "1001", "0000"), Label::Value(0));
        assert_eq!(hd1_bsearch_tree(256).depth(), 17);
        for n in [1, 3, 5, 6, 7, 100] {
            assert!(hd1_bsearch_tree(n).depth() <= hd1_depth_bound(n), "n={n}");
        }
    }

    #[test]
    fn hd1_opposite_halves_stop_early() {
        let t = hd1_bsearch_tree(8);
        let e = eval_tree(
            &t,
            &PartyInput::Bits("10000001".parse().unwrap()),
            &PartyInput::Bits("00000000".parse().unwrap()),
        )
        .unwrap();
        assert_eq!(e.output, Label::Value(0));
        assert_eq!(e.path.len(), 3);
    }

    #[test]
    fn tensor_tree_depth() {
        assert_eq!(hd1_tensor_tree(256, 16).depth(), 272);
        assert!(hd1_tensor_tree(16, 4).depth() <= 36);
    }

    #[test]
    fn log2_ceiling() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(5), 3);
        assert_eq!(ceil_log2(256), 8);
    }
}
