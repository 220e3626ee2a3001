//! Structure of query sets: Equality (blocky) matrices, VC dimension, the
//! NAND-conjunction embedding and bounded closure membership.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::matrix::ProblemMatrix;
use crate::tree::{EqQueryLabeling, LabelFn};

/// Boolean query matrix.
pub type QueryMatrix = ProblemMatrix<bool>;

/// Widest matrix `vc_dimension` will search.
pub const VC_MAX_WIDTH: usize = 24;

/// Row/column labels realizing a blocky matrix as `M(i, j) = [a(i) = b(j)]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockyWitness {
    pub rows: Vec<u64>,
    pub cols: Vec<u64>,
}

impl BlockyWitness {
    pub fn labeling(&self) -> EqQueryLabeling {
        EqQueryLabeling::new(LabelFn::Table(self.rows.clone()), LabelFn::Table(self.cols.clone()))
    }

    pub fn realizes(&self, m: &QueryMatrix) -> bool {
        self.rows.len() == m.rows()
            && self.cols.len() == m.cols()
            && (0..m.rows()).all(|i| (0..m.cols()).all(|j| *m.get(i, j) == (self.rows[i] == self.cols[j])))
    }
}

/// Decides whether `m` is an Equality query matrix and, if so, returns labels.
///
/// `m` is blocky iff any two row supports are equal or disjoint. Rows sharing
/// a support share a label; every other row and column gets a fresh label.
pub fn is_blocky(m: &QueryMatrix) -> Option<BlockyWitness> {
    let mut owner: Vec<Option<usize>> = vec![None; m.cols()];
    let mut group_of_support: HashMap<&[bool], u64> = HashMap::new();
    let mut rows = Vec::with_capacity(m.rows());
    let mut next = 0u64;
    for i in 0..m.rows() {
        let support = m.row(i);
        if !support.iter().any(|&b| b) {
            rows.push(u64::MAX); // patched below to a fresh label
            continue;
        }
        if let Some(&g) = group_of_support.get(support) {
            rows.push(g);
            continue;
        }
        // A new support must not overlap any earlier one.
        for (j, &b) in support.iter().enumerate() {
            if b {
                if owner[j].is_some() {
                    return None;
                }
                owner[j] = Some(i);
            }
        }
        group_of_support.insert(support, next);
        rows.push(next);
        next += 1;
    }
    let mut fresh = next;
    for r in rows.iter_mut().filter(|r| **r == u64::MAX) {
        *r = fresh;
        fresh += 1;
    }
    let cols = owner
        .iter()
        .map(|o| match o {
            Some(i) => rows[*i],
            None => {
                fresh += 1;
                fresh - 1
            }
        })
        .collect();
    Some(BlockyWitness { rows, cols })
}

/// Largest number of columns shattered by the rows of `m`.
pub fn vc_dimension(m: &QueryMatrix) -> Result<usize> {
    if m.cols() > VC_MAX_WIDTH {
        return Err(Error::Feasibility(format!(
            "vc_dimension brute force limited to width {VC_MAX_WIDTH}, got {}",
            m.cols()
        )));
    }
    let rows: Vec<u32> = (0..m.rows())
        .map(|i| m.row(i).iter().enumerate().fold(0u32, |acc, (j, &b)| acc | ((b as u32) << j)))
        .collect();
    let mut best = 0;
    // Shattering is inherited by subsets, so stop at the first size with no witness.
    for d in 1..=m.cols() {
        if (1usize << d) > rows.len() {
            break;
        }
        if !subsets_of_size(m.cols(), d).any(|cols| shatters(&rows, cols)) {
            break;
        }
        best = d;
    }
    Ok(best)
}

fn shatters(rows: &[u32], cols: u32) -> bool {
    let d = cols.count_ones();
    let mut seen = vec![false; 1 << d];
    let mut count = 0;
    for &r in rows {
        let p = pext(r, cols) as usize;
        if !seen[p] {
            seen[p] = true;
            count += 1;
            if count == seen.len() {
                return true;
            }
        }
    }
    false
}

fn pext(value: u32, mask: u32) -> u32 {
    let mut out = 0;
    let mut k = 0;
    let mut m = mask;
    while m != 0 {
        let bit = m.trailing_zeros();
        out |= ((value >> bit) & 1) << k;
        k += 1;
        m &= m - 1;
    }
    out
}

/// All `d`-subsets of `0..n` as bitmasks (Gosper's hack).
fn subsets_of_size(n: usize, d: usize) -> impl Iterator<Item = u32> {
    let limit = 1u64 << n;
    let mut cur = if d == 0 { 0u64 } else { (1u64 << d) - 1 };
    let mut done = d > n;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let out = cur as u32;
        if cur == 0 {
            done = true;
        } else {
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            cur = (((r ^ cur) >> 2) / c) | r;
            if cur >= limit {
                done = true;
            }
        }
        Some(out)
    })
}

/// The 2×2 NAND matrix over labels {1, 2}: zero only at (2, 2).
pub fn nand(a: u8, b: u8) -> bool {
    !(a == 2 && b == 2)
}

/// Row and column label vectors embedding `m` into the `N`-fold conjunction
/// of NAND matrices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NandEmbedding {
    pub rows: Vec<Vec<u8>>,
    pub cols: Vec<Vec<u8>>,
}

impl NandEmbedding {
    /// `∧_k NAND(v(x)_k, w(y)_k)`.
    pub fn conjunction(&self, x: usize, y: usize) -> bool {
        self.rows[x].iter().zip(&self.cols[y]).all(|(&a, &b)| nand(a, b))
    }

    /// The submatrix of the conjunction picked out by the embedding.
    pub fn conjunction_matrix(&self) -> QueryMatrix {
        ProblemMatrix::from_fn(self.rows.len(), self.cols.len(), |x, y| self.conjunction(x, y))
    }

    pub fn verifies(&self, m: &QueryMatrix) -> bool {
        self.conjunction_matrix() == *m
    }
}

/// `v(x)_j = 1` if `M(x, j) = 1` else 2; `w(y)_j = 2` if `j = y` else 1.
pub fn nand_embed(m: &QueryMatrix) -> Result<NandEmbedding> {
    if !m.is_square() {
        return Err(Error::domain(format!("nand_embed needs a square matrix, got {}×{}", m.rows(), m.cols())));
    }
    let n = m.rows();
    let rows = (0..n)
        .map(|x| (0..n).map(|j| if *m.get(x, j) { 1 } else { 2 }).collect())
        .collect();
    let cols = (0..n)
        .map(|y| (0..n).map(|j| if j == y { 2 } else { 1 }).collect())
        .collect();
    Ok(NandEmbedding { rows, cols })
}

/// Size limits for `closure_member`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClosureLimits {
    pub max_base: usize,
    pub max_target: usize,
}

impl Default for ClosureLimits {
    fn default() -> Self {
        ClosureLimits { max_base: 4, max_target: 6 }
    }
}

/// Whether `m` arises from `base` by taking submatrices, permuting and copying
/// rows and columns: equivalently, whether some maps `r`, `c` satisfy
/// `M(i, j) = base(r(i), c(j))`.
pub fn closure_member(m: &QueryMatrix, base: &QueryMatrix, limits: ClosureLimits) -> Result<bool> {
    if base.rows().max(base.cols()) > limits.max_base || m.rows().max(m.cols()) > limits.max_target {
        return Err(Error::Feasibility(format!(
            "closure search limited to base ≤ {0}×{0} and target ≤ {1}×{1}",
            limits.max_base, limits.max_target
        )));
    }
    if m.rows() == 0 || m.cols() == 0 {
        return Ok(true);
    }
    if base.rows() == 0 || base.cols() == 0 {
        return Ok(false);
    }
    let br = base.rows();
    let mut row_map = vec![0usize; m.rows()];
    loop {
        // Given the row map, each column can be placed independently.
        let feasible = (0..m.cols()).all(|j| {
            (0..base.cols()).any(|c| (0..m.rows()).all(|i| *m.get(i, j) == *base.get(row_map[i], c)))
        });
        if feasible {
            return Ok(true);
        }
        // Next row map in lexicographic order.
        let mut k = 0;
        loop {
            if k == row_map.len() {
                return Ok(false);
            }
            row_map[k] += 1;
            if row_map[k] < br {
                break;
            }
            row_map[k] = 0;
            k += 1;
        }
    }
}
