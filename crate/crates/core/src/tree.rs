//! Oracle protocol trees: deterministic binary trees whose inner nodes are
//! queries and whose leaves carry output labels.
//!
//! A tree is stored as a sequence of *parts*, each an arena of nodes. A plain
//! tree has one part. The tensor of several trees is the concatenation of
//! their parts: reaching a leaf in one part continues at the root of the next,
//! so a product of `k` trees costs the sum of their sizes rather than the
//! product. The `layout` records how per-part leaf labels nest into the output.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::matrix::ProblemMatrix;

/// What one party holds: a row/column index of a matrix, or a bit string.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PartyInput {
    Index(usize),
    Bits(BitString),
}

impl PartyInput {
    pub fn bits(&self) -> Result<&BitString> {
        match self {
            PartyInput::Bits(b) => Ok(b),
            PartyInput::Index(i) => Err(Error::domain(format!(
                "bit-string labeling applied to index input {i}"
            ))),
        }
    }
}

impl From<BitString> for PartyInput {
    fn from(b: BitString) -> Self {
        PartyInput::Bits(b)
    }
}

impl From<usize> for PartyInput {
    fn from(i: usize) -> Self {
        PartyInput::Index(i)
    }
}

/// One side of an Equality query: maps a party's input to a label.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelFn {
    /// `input index → table[index]`, encoded as a 64-bit word.
    Table(Vec<u64>),
    /// The substring `start..start+len` of a bit-string input.
    Slice { start: usize, len: usize },
    /// A single bit of a bit-string input.
    Bit { pos: usize },
    /// The same label for every input.
    Const(BitString),
}

impl LabelFn {
    pub fn eval(&self, input: &PartyInput) -> Result<BitString> {
        match self {
            LabelFn::Table(table) => match input {
                PartyInput::Index(i) => table
                    .get(*i)
                    .map(|&v| BitString::from_u64(v, 64))
                    .ok_or_else(|| {
                        Error::domain(format!("index {i} out of range for table of {}", table.len()))
                    }),
                PartyInput::Bits(_) => Err(Error::domain("table labeling applied to bit-string input")),
            },
            LabelFn::Slice { start, len } => input.bits()?.slice(*start, *len),
            LabelFn::Bit { pos } => input.bits()?.slice(*pos, 1),
            LabelFn::Const(bits) => Ok(bits.clone()),
        }
    }
}

/// An Equality query `Q(i, j) = [a(i) = b(j)]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EqQueryLabeling {
    pub a: LabelFn,
    pub b: LabelFn,
}

impl EqQueryLabeling {
    pub fn new(a: LabelFn, b: LabelFn) -> Self {
        EqQueryLabeling { a, b }
    }

    pub fn exact(&self, x: &PartyInput, y: &PartyInput) -> Result<bool> {
        Ok(self.a.eval(x)? == self.b.eval(y)?)
    }
}

/// Oracle predicates other than Equality, evaluated exactly.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedPredicate {
    /// The two blocks `start..start+len` differ in exactly one position.
    Hd1 { start: usize, len: usize },
}

impl NamedPredicate {
    pub fn exact(&self, x: &PartyInput, y: &PartyInput) -> Result<bool> {
        match self {
            NamedPredicate::Hd1 { start, len } => {
                let xs = x.bits()?.slice(*start, *len)?;
                let ys = y.bits()?.slice(*start, *len)?;
                Ok(xs.hamming(&ys)? == 1)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Query {
    Eq(EqQueryLabeling),
    Predicate(NamedPredicate),
}

impl Query {
    pub fn exact(&self, x: &PartyInput, y: &PartyInput) -> Result<bool> {
        match self {
            Query::Eq(q) => q.exact(x, y),
            Query::Predicate(p) => p.exact(x, y),
        }
    }

    pub fn as_eq(&self) -> Option<&EqQueryLabeling> {
        match self {
            Query::Eq(q) => Some(q),
            Query::Predicate(_) => None,
        }
    }

    /// The Boolean matrix this query induces on the given row and column inputs.
    pub fn matrix_on(&self, rows: &[PartyInput], cols: &[PartyInput]) -> Result<ProblemMatrix<bool>> {
        let mut m = ProblemMatrix::filled(rows.len(), cols.len(), false);
        for (i, x) in rows.iter().enumerate() {
            for (j, y) in cols.iter().enumerate() {
                m.set(i, j, self.exact(x, y)?);
            }
        }
        Ok(m)
    }
}

/// Output labels. Equality of labels is the only operation protocols need.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Value(u64),
    Tuple(Vec<Label>),
}

impl Label {
    pub fn bit(b: bool) -> Self {
        Label::Value(b as u64)
    }

    /// Flattened leaf values, left to right.
    pub fn values(&self) -> Vec<u64> {
        match self {
            Label::Value(v) => vec![*v],
            Label::Tuple(items) => items.iter().flat_map(Label::values).collect(),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Value(v) => write!(f, "{v}"),
            Label::Tuple(items) => {
                f.write_str("(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{it}")?;
                }
                f.write_str(")")
            }
        }
    }
}

pub type NodeId = u32;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf(Label),
    /// `left` is taken when the query answers 1 ("equal"), `right` on 0.
    Query { query: Query, left: NodeId, right: NodeId },
}

/// One arena-allocated binary tree. Children always precede their parent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Part {
    nodes: Vec<Node>,
    root: NodeId,
}

impl Part {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    fn depth(&self) -> usize {
        let mut depth = vec![0usize; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            if let Node::Query { left, right, .. } = n {
                depth[i] = 1 + depth[*left as usize].max(depth[*right as usize]);
            }
        }
        depth[self.root as usize]
    }

    fn leaf_count(&self) -> u128 {
        let mut count = vec![0u128; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            count[i] = match n {
                Node::Leaf(_) => 1,
                Node::Query { left, right, .. } => {
                    count[*left as usize].saturating_add(count[*right as usize])
                }
            };
        }
        count[self.root as usize]
    }

    fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if (self.root as usize) >= n {
            return Err(Error::Parse("root out of range".into()));
        }
        let mut refs = vec![0u32; n];
        for (i, node) in self.nodes.iter().enumerate() {
            if let Node::Query { left, right, .. } = node {
                for &c in [left, right] {
                    if c as usize >= i {
                        return Err(Error::Parse(format!(
                            "node {i} has child {c}; children must precede parents"
                        )));
                    }
                    refs[c as usize] += 1;
                }
            }
        }
        for (i, &r) in refs.iter().enumerate() {
            let expect = u32::from(i != self.root as usize);
            if r != expect {
                return Err(Error::Parse(format!(
                    "node {i} referenced {r} times (expected {expect})"
                )));
            }
        }
        Ok(())
    }
}

/// Bottom-up constructor for a single-part tree.
#[derive(Default)]
pub struct TreeBuilder {
    nodes: Vec<Node>,
}

impl TreeBuilder {
    pub fn new() -> Self {
        TreeBuilder::default()
    }

    pub fn leaf(&mut self, label: Label) -> NodeId {
        self.nodes.push(Node::Leaf(label));
        (self.nodes.len() - 1) as NodeId
    }

    pub fn query(&mut self, query: Query, left: NodeId, right: NodeId) -> NodeId {
        self.nodes.push(Node::Query { query, left, right });
        (self.nodes.len() - 1) as NodeId
    }

    pub fn eq(&mut self, a: LabelFn, b: LabelFn, left: NodeId, right: NodeId) -> NodeId {
        self.query(Query::Eq(EqQueryLabeling::new(a, b)), left, right)
    }

    pub fn finish(self, root: NodeId) -> ProtocolTree {
        let part = Part { nodes: self.nodes, root };
        debug_assert!(part.validate().is_ok());
        ProtocolTree {
            parts: vec![part],
            layout: Layout::Single,
        }
    }
}

/// How per-part leaf labels assemble into the tree's output label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    Single,
    Tuple(Vec<Layout>),
}

impl Layout {
    fn part_count(&self) -> usize {
        match self {
            Layout::Single => 1,
            Layout::Tuple(items) => items.iter().map(Layout::part_count).sum(),
        }
    }

    fn assemble(&self, labels: &mut impl Iterator<Item = Label>) -> Label {
        match self {
            Layout::Single => labels.next().expect("one label per part"),
            Layout::Tuple(items) => Label::Tuple(items.iter().map(|l| l.assemble(labels)).collect()),
        }
    }
}

/// Position of an inner node: which part, and which node inside it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Pos {
    pub part: u32,
    pub node: NodeId,
}

/// One step of a root-to-leaf walk: the query node visited and the branch taken.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PathStep {
    pub pos: Pos,
    pub left: bool,
}

/// Result of evaluating a tree with exact query answers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Evaluation {
    pub output: Label,
    /// The visited query nodes with the exact answers (the correct path).
    pub path: Vec<PathStep>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolTree {
    parts: Vec<Part>,
    layout: Layout,
}

/// Answers queries during a deterministic tree walk.
pub trait QueryOracle {
    fn answer(&mut self, query: &Query, x: &PartyInput, y: &PartyInput) -> Result<bool>;
}

/// Evaluates every query exactly.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExactOracle;

impl QueryOracle for ExactOracle {
    fn answer(&mut self, query: &Query, x: &PartyInput, y: &PartyInput) -> Result<bool> {
        query.exact(x, y)
    }
}

impl ProtocolTree {
    pub fn leaf(label: Label) -> Self {
        let mut b = TreeBuilder::new();
        let root = b.leaf(label);
        b.finish(root)
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    /// Longest root-to-leaf path, counted in query nodes.
    pub fn depth(&self) -> usize {
        self.parts.iter().map(Part::depth).sum()
    }

    /// Number of leaves of the (conceptual, fully expanded) tree, saturating.
    pub fn leaf_count(&self) -> u128 {
        self.parts
            .iter()
            .fold(1u128, |acc, p| acc.saturating_mul(p.leaf_count()))
    }

    pub fn queries(&self) -> impl Iterator<Item = &Query> {
        self.parts.iter().flat_map(|p| {
            p.nodes.iter().filter_map(|n| match n {
                Node::Query { query, .. } => Some(query),
                Node::Leaf(_) => None,
            })
        })
    }

    /// True when every inner node is an Equality query.
    pub fn is_equality_tree(&self) -> bool {
        self.queries().all(|q| q.as_eq().is_some())
    }

    fn first_query_from(&self, part: usize) -> Option<Pos> {
        (part..self.parts.len()).find_map(|p| match self.parts[p].node(self.parts[p].root) {
            Node::Query { .. } => Some(Pos { part: p as u32, node: self.parts[p].root }),
            Node::Leaf(_) => None,
        })
    }

    /// The first query node, or `None` when the tree is a single leaf.
    pub fn root(&self) -> Option<Pos> {
        self.first_query_from(0)
    }

    pub fn query_at(&self, pos: Pos) -> &Query {
        match self.parts[pos.part as usize].node(pos.node) {
            Node::Query { query, .. } => query,
            Node::Leaf(_) => panic!("position {pos:?} is a leaf"),
        }
    }

    /// The query node reached from `pos` along the given branch, or `None`
    /// if that branch ends at a leaf of the whole tree.
    pub fn child(&self, pos: Pos, left: bool) -> Option<Pos> {
        let part = &self.parts[pos.part as usize];
        let Node::Query { left: l, right: r, .. } = part.node(pos.node) else {
            panic!("position {pos:?} is a leaf");
        };
        let next = if left { *l } else { *r };
        match part.node(next) {
            Node::Query { .. } => Some(Pos { part: pos.part, node: next }),
            Node::Leaf(_) => self.first_query_from(pos.part as usize + 1),
        }
    }

    /// The output label at the end of a complete root-to-leaf walk.
    pub fn output_of(&self, path: &[PathStep]) -> Result<Label> {
        let mut labels = Vec::with_capacity(self.parts.len());
        let mut steps = path.iter().peekable();
        for (pi, part) in self.parts.iter().enumerate() {
            let mut id = part.root;
            loop {
                match part.node(id) {
                    Node::Leaf(l) => {
                        labels.push(l.clone());
                        break;
                    }
                    Node::Query { left, right, .. } => {
                        let step = steps
                            .next()
                            .ok_or_else(|| Error::Invariant("walk ends before a leaf".into()))?;
                        if step.pos != (Pos { part: pi as u32, node: id }) {
                            return Err(Error::Invariant(format!(
                                "walk step {:?} does not follow the tree",
                                step.pos
                            )));
                        }
                        id = if step.left { *left } else { *right };
                    }
                }
            }
        }
        if steps.peek().is_some() {
            return Err(Error::Invariant("walk continues past a leaf".into()));
        }
        Ok(self.layout.assemble(&mut labels.into_iter()))
    }

    /// Tensor product: the output is the tuple of component outputs.
    pub fn tensor(trees: &[ProtocolTree]) -> ProtocolTree {
        ProtocolTree {
            parts: trees.iter().flat_map(|t| t.parts.iter().cloned()).collect(),
            layout: Layout::Tuple(trees.iter().map(|t| t.layout.clone()).collect()),
        }
    }

    /// Checks structural invariants; used after deserialization.
    pub fn validate(&self) -> Result<()> {
        for p in &self.parts {
            p.validate()?;
        }
        if self.layout.part_count() != self.parts.len() {
            return Err(Error::Parse("layout does not match part count".into()));
        }
        Ok(())
    }

    /// Serializes to the versioned JSON tree format (see `docs/tree-format.md`).
    pub fn to_text(&self) -> String {
        let doc = TreeDocument {
            format: TREE_FORMAT_VERSION,
            depth: self.depth(),
            tree: self.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("tree serializes") + "\n"
    }

    pub fn from_text(text: &str) -> Result<ProtocolTree> {
        let doc: TreeDocument =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if doc.format != TREE_FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported tree format {}", doc.format)));
        }
        doc.tree.validate()?;
        Ok(doc.tree)
    }
}

pub const TREE_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TreeDocument {
    format: u32,
    depth: usize,
    tree: ProtocolTree,
}

/// Walks the tree from the root, answering each query with `oracle`.
pub fn eval_tree_with<O: QueryOracle + ?Sized>(
    tree: &ProtocolTree,
    x: &PartyInput,
    y: &PartyInput,
    oracle: &mut O,
) -> Result<Evaluation> {
    let mut path = Vec::new();
    let mut cur = tree.root();
    while let Some(pos) = cur {
        let left = oracle.answer(tree.query_at(pos), x, y)?;
        path.push(PathStep { pos, left });
        cur = tree.child(pos, left);
    }
    let output = tree.output_of(&path)?;
    Ok(Evaluation { output, path })
}

/// Evaluates the tree with exact query answers.
pub fn eval_tree(tree: &ProtocolTree, x: &PartyInput, y: &PartyInput) -> Result<Evaluation> {
    eval_tree_with(tree, x, y, &mut ExactOracle)
}

pub fn tree_depth(tree: &ProtocolTree) -> usize {
    tree.depth()
}

pub fn tensor_tree(trees: &[ProtocolTree]) -> ProtocolTree {
    ProtocolTree::tensor(trees)
}
