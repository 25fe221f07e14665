//! History propositions and windows.
//!
//! A history proposition is a projector on the history space `V`; the
//! orthoalgebra operations are disjoint sum, negation and the
//! coarse-graining partial order. A window is an exclusive and exhaustive
//! set of nonzero propositions: mutually orthogonal projectors summing to
//! the identity. Homogeneous histories carry one projector per time slot
//! and induce propositions on `V` by tensor product; a window may retain
//! those per-time decompositions so that chain-recipe evaluation stays
//! possible after coarse-graining.

use thiserror::Error;

use crate::matrix::{
    C64, ComplexMatrix, MatrixError, is_projector, kron, proj_dim_with_tol, projector_residual,
};

#[derive(Debug, Error)]
pub enum HistoryError {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("propositions live on different spaces: dim {left} vs dim {right}")]
    SpaceMismatch { left: usize, right: usize },
    #[error("propositions are not disjoint: |pq| = {residual:.3e} exceeds {tol:.3e}")]
    NotDisjoint { residual: f64, tol: f64 },
    #[error("window blocks are not mutually orthogonal: residual {residual:.3e}")]
    NotOrthogonal { residual: f64 },
    #[error("window blocks do not resolve the identity: residual {residual:.3e}")]
    Incomplete { residual: f64 },
    #[error("window contains a zero block")]
    ZeroBlock,
    #[error("window has no blocks")]
    EmptyWindow,
    #[error("time index {position} out of range 0..={n_times}")]
    BadTimeIndex { position: usize, n_times: usize },
    #[error("homogeneous history has no time slots")]
    EmptyHistory,
    #[error("coarse-graining enumeration capped at {cap} blocks, window has {blocks}")]
    TooManyBlocks { blocks: usize, cap: usize },
    #[error("window carries no per-time decomposition")]
    NoDecomposition,
    #[error("cell assignment must cover 0..{cells} with no gaps")]
    BadPartition { cells: usize },
}

/// Hard cap on exhaustive set-partition enumeration (Bell(12) ~ 4.2e6).
pub const COARSE_GRAINING_BLOCK_CAP: usize = 12;

/// A projector on the history space `V`, together with its rank.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryProposition {
    matrix: ComplexMatrix,
    dim_v: usize,
    dim: usize,
}

impl HistoryProposition {
    /// Validate a matrix as a proposition within `tol`.
    pub fn new(matrix: ComplexMatrix, tol: f64) -> Result<Self, HistoryError> {
        let dim = proj_dim_with_tol(&matrix, tol)?;
        let dim_v = matrix.dim();
        Ok(Self { matrix, dim_v, dim })
    }

    /// Wrap a matrix already known to be a projector of rank `dim`.
    pub(crate) fn trusted(matrix: ComplexMatrix, dim: usize) -> Self {
        let dim_v = matrix.dim();
        Self { matrix, dim_v, dim }
    }

    pub fn unit(dim_v: usize) -> Self {
        Self::trusted(ComplexMatrix::identity(dim_v), dim_v)
    }

    pub fn zero(dim_v: usize) -> Self {
        Self::trusted(ComplexMatrix::zeros(dim_v, dim_v), 0)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Rank of the projector: the dimension of the proposition.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dim_v(&self) -> usize {
        self.dim_v
    }

    pub fn is_zero(&self) -> bool {
        self.dim == 0
    }
}

/// Negation: `1 - p`.
pub fn negation(p: &HistoryProposition) -> HistoryProposition {
    let matrix = ComplexMatrix::identity(p.dim_v).sub(&p.matrix);
    HistoryProposition::trusted(matrix, p.dim_v - p.dim)
}

/// Disjoint sum: `p + q`, defined only when `pq = 0` within `tol`.
pub fn oplus(
    p: &HistoryProposition,
    q: &HistoryProposition,
    tol: f64,
) -> Result<HistoryProposition, HistoryError> {
    if p.dim_v != q.dim_v {
        return Err(HistoryError::SpaceMismatch { left: p.dim_v, right: q.dim_v });
    }
    let residual = p.matrix.mul(&q.matrix).norm_max();
    if residual > tol {
        return Err(HistoryError::NotDisjoint { residual, tol });
    }
    Ok(HistoryProposition::trusted(
        p.matrix.add(&q.matrix),
        p.dim + q.dim,
    ))
}

/// Coarse-graining order: true iff `p <= q`, i.e. `qp = p` within `tol`.
pub fn coarser_eq(
    p: &HistoryProposition,
    q: &HistoryProposition,
    tol: f64,
) -> Result<bool, HistoryError> {
    if p.dim_v != q.dim_v {
        return Err(HistoryError::SpaceMismatch { left: p.dim_v, right: q.dim_v });
    }
    Ok(q.matrix.mul(&p.matrix).max_abs_diff(&p.matrix) <= tol)
}

/// An n-time homogeneous history: one projector per time slot on `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousHistory {
    per_time: Vec<ComplexMatrix>,
    dim_h: usize,
}

impl HomogeneousHistory {
    pub fn new(per_time: Vec<ComplexMatrix>, tol: f64) -> Result<Self, HistoryError> {
        if per_time.is_empty() {
            return Err(HistoryError::EmptyHistory);
        }
        let dim_h = per_time[0].dim();
        for p in &per_time {
            if p.dim() != dim_h {
                return Err(HistoryError::SpaceMismatch { left: dim_h, right: p.dim() });
            }
            if !is_projector(p, tol) {
                return Err(MatrixError::NotProjector {
                    residual: projector_residual(p),
                    tol,
                }
                .into());
            }
        }
        Ok(Self { per_time, dim_h })
    }

    pub fn per_time(&self) -> &[ComplexMatrix] {
        &self.per_time
    }

    pub fn n_times(&self) -> usize {
        self.per_time.len()
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    /// Dimension of the induced proposition: the product of per-time ranks.
    pub fn dim(&self) -> usize {
        self.per_time
            .iter()
            .map(|p| p.trace().re.round() as usize)
            .product()
    }

    /// The induced proposition on `V = H^(⊗n)`: the tensor product of the
    /// per-time projectors.
    pub fn to_proposition(&self) -> HistoryProposition {
        let mut acc = self.per_time[0].clone();
        for p in &self.per_time[1..] {
            acc = kron(&acc, p).expect("projectors are square");
        }
        HistoryProposition::trusted(acc, self.dim())
    }
}

/// Insert the unit projector at `position` (0 = before the first time).
pub fn insert_trivial_time(
    h: &HomogeneousHistory,
    position: usize,
) -> Result<HomogeneousHistory, HistoryError> {
    if position > h.n_times() {
        return Err(HistoryError::BadTimeIndex { position, n_times: h.n_times() });
    }
    let mut per_time = h.per_time.clone();
    per_time.insert(position, ComplexMatrix::identity(h.dim_h));
    Ok(HomogeneousHistory { per_time, dim_h: h.dim_h })
}

/// An explicit disjoint sum of homogeneous histories.
///
/// Chain-recipe evaluation is defined on sums like these; a raw projector
/// on `V` carries no per-time structure to feed the chain formula.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousSum {
    terms: Vec<HomogeneousHistory>,
    dim_h: usize,
    n_times: usize,
}

impl HomogeneousSum {
    pub fn new(terms: Vec<HomogeneousHistory>, tol: f64) -> Result<Self, HistoryError> {
        if terms.is_empty() {
            return Err(HistoryError::EmptyHistory);
        }
        let dim_h = terms[0].dim_h();
        let n_times = terms[0].n_times();
        for t in &terms {
            if t.dim_h() != dim_h || t.n_times() != n_times {
                return Err(HistoryError::SpaceMismatch {
                    left: dim_h.pow(n_times as u32),
                    right: t.dim_h().pow(t.n_times() as u32),
                });
            }
        }
        let props: Vec<HistoryProposition> = terms.iter().map(|t| t.to_proposition()).collect();
        for i in 0..props.len() {
            for j in 0..i {
                let residual = props[i].matrix().mul(props[j].matrix()).norm_max();
                if residual > tol {
                    return Err(HistoryError::NotDisjoint { residual, tol });
                }
            }
        }
        Ok(Self { terms, dim_h, n_times })
    }

    pub fn single(h: HomogeneousHistory) -> Self {
        let dim_h = h.dim_h();
        let n_times = h.n_times();
        Self { terms: vec![h], dim_h, n_times }
    }

    pub fn terms(&self) -> &[HomogeneousHistory] {
        &self.terms
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    /// Sum of the induced propositions of all terms.
    pub fn to_proposition(&self) -> HistoryProposition {
        let dim_v = self.dim_h.pow(self.n_times as u32);
        let mut acc = ComplexMatrix::zeros(dim_v, dim_v);
        let mut dim = 0;
        for t in &self.terms {
            let p = t.to_proposition();
            dim += p.dim();
            acc = acc.add(p.matrix());
        }
        HistoryProposition::trusted(acc, dim)
    }

    fn merge(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self { terms, dim_h: self.dim_h, n_times: self.n_times }
    }

    fn insert_trivial_time(&self, position: usize) -> Result<Self, HistoryError> {
        let terms = self
            .terms
            .iter()
            .map(|t| insert_trivial_time(t, position))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { terms, dim_h: self.dim_h, n_times: self.n_times + 1 })
    }
}

/// An exclusive and exhaustive set of propositions: nonzero, mutually
/// orthogonal projectors that sum to the identity on `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    blocks: Vec<HistoryProposition>,
    dim_v: usize,
    sums: Option<Vec<HomogeneousSum>>,
}

/// Validate a list of propositions as a window.
pub fn make_window(blocks: Vec<HistoryProposition>, tol: f64) -> Result<Window, HistoryError> {
    if blocks.is_empty() {
        return Err(HistoryError::EmptyWindow);
    }
    let dim_v = blocks[0].dim_v();
    for b in &blocks {
        if b.dim_v() != dim_v {
            return Err(HistoryError::SpaceMismatch { left: dim_v, right: b.dim_v() });
        }
        if b.is_zero() {
            return Err(HistoryError::ZeroBlock);
        }
    }
    for i in 0..blocks.len() {
        for j in 0..i {
            let residual = blocks[i].matrix().mul(blocks[j].matrix()).norm_max();
            if residual > tol {
                return Err(HistoryError::NotOrthogonal { residual });
            }
        }
    }
    let mut total = ComplexMatrix::zeros(dim_v, dim_v);
    for b in &blocks {
        total = total.add(b.matrix());
    }
    let residual = total.max_abs_diff(&ComplexMatrix::identity(dim_v));
    if residual > tol {
        return Err(HistoryError::Incomplete { residual });
    }
    Ok(Window { blocks, dim_v, sums: None })
}

impl Window {
    /// The coarsest window `{1}` (the zero block is never represented).
    pub fn trivial(dim_v: usize) -> Self {
        Window {
            blocks: vec![HistoryProposition::unit(dim_v)],
            dim_v,
            sums: None,
        }
    }

    /// Window whose blocks are explicit sums of homogeneous histories; the
    /// decompositions are retained for chain-recipe evaluation.
    pub fn from_homogeneous(sums: Vec<HomogeneousSum>, tol: f64) -> Result<Self, HistoryError> {
        let blocks: Vec<HistoryProposition> =
            sums.iter().map(|s| s.to_proposition()).collect();
        let mut w = make_window(blocks, tol)?;
        w.sums = Some(sums);
        Ok(w)
    }

    pub(crate) fn trusted(
        blocks: Vec<HistoryProposition>,
        dim_v: usize,
        sums: Option<Vec<HomogeneousSum>>,
    ) -> Self {
        Window { blocks, dim_v, sums }
    }

    pub fn blocks(&self) -> &[HistoryProposition] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn dim_v(&self) -> usize {
        self.dim_v
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.dim()).collect()
    }

    /// Per-time decompositions of the blocks, if the window carries them.
    pub fn sums(&self) -> Option<&[HomogeneousSum]> {
        self.sums.as_deref()
    }

    /// True when every block is the trivial proposition (single-block window).
    pub fn is_trivial(&self) -> bool {
        self.blocks.len() == 1 && self.blocks[0].dim() == self.dim_v
    }

    /// Insert the unit projector at `position` in every homogeneous term of
    /// every block. Requires the per-time decompositions.
    pub fn insert_trivial_time(&self, position: usize) -> Result<Window, HistoryError> {
        let sums = self.sums.as_ref().ok_or(HistoryError::NoDecomposition)?;
        let new_sums = sums
            .iter()
            .map(|s| s.insert_trivial_time(position))
            .collect::<Result<Vec<_>, _>>()?;
        let blocks: Vec<HistoryProposition> =
            new_sums.iter().map(|s| s.to_proposition()).collect();
        let dim_h = new_sums[0].dim_h();
        Ok(Window {
            blocks,
            dim_v: self.dim_v * dim_h,
            sums: Some(new_sums),
        })
    }

    /// Coarse-grain by merging blocks that share a cell index. `assignment`
    /// names a cell for each block; cells must form a contiguous range
    /// starting at 0. The per-time decompositions, when present, are merged
    /// along.
    pub fn merge_blocks(&self, assignment: &[usize]) -> Result<Window, HistoryError> {
        if assignment.len() != self.len() {
            return Err(HistoryError::SpaceMismatch {
                left: self.len(),
                right: assignment.len(),
            });
        }
        let cells = assignment.iter().copied().max().unwrap_or(0) + 1;
        let mut seen = vec![false; cells];
        for &c in assignment {
            seen[c] = true;
        }
        if !seen.iter().all(|&s| s) {
            return Err(HistoryError::BadPartition { cells });
        }
        let mut blocks: Vec<Option<HistoryProposition>> = vec![None; cells];
        let mut sums: Vec<Option<HomogeneousSum>> = vec![None; cells];
        for (idx, &cell) in assignment.iter().enumerate() {
            let block = &self.blocks[idx];
            blocks[cell] = Some(match blocks[cell].take() {
                None => block.clone(),
                Some(acc) => HistoryProposition::trusted(
                    acc.matrix().add(block.matrix()),
                    acc.dim() + block.dim(),
                ),
            });
            if let Some(ws) = &self.sums {
                sums[cell] = Some(match sums[cell].take() {
                    None => ws[idx].clone(),
                    Some(acc) => acc.merge(&ws[idx]),
                });
            }
        }
        let blocks: Vec<HistoryProposition> = blocks.into_iter().flatten().collect();
        let sums = if self.sums.is_some() {
            Some(sums.into_iter().flatten().collect())
        } else {
            None
        };
        Ok(Window::trusted(blocks, self.dim_v, sums))
    }

    /// Stream every coarse-graining of this window: one per set partition of
    /// the block list, cells merged by disjoint sum. The stream starts with
    /// the trivial window (all blocks merged) and ends with the window
    /// itself. Fails above [`COARSE_GRAINING_BLOCK_CAP`] blocks.
    pub fn coarse_grainings(&self) -> Result<CoarseGrainings<'_>, HistoryError> {
        if self.len() > COARSE_GRAINING_BLOCK_CAP {
            return Err(HistoryError::TooManyBlocks {
                blocks: self.len(),
                cap: COARSE_GRAINING_BLOCK_CAP,
            });
        }
        Ok(CoarseGrainings::new(self))
    }
}

/// True iff `fine` refines `coarse`: every block of `fine` lies below a
/// block of `coarse`, and each block of `coarse` is exactly the disjoint
/// sum of the fine blocks below it.
pub fn is_refinement(fine: &Window, coarse: &Window, tol: f64) -> Result<bool, HistoryError> {
    if fine.dim_v != coarse.dim_v {
        return Err(HistoryError::SpaceMismatch { left: fine.dim_v, right: coarse.dim_v });
    }
    let mut assigned: Vec<Vec<usize>> = vec![Vec::new(); coarse.len()];
    for (fi, fb) in fine.blocks.iter().enumerate() {
        let mut home = None;
        for (ci, cb) in coarse.blocks.iter().enumerate() {
            if coarser_eq(fb, cb, tol)? {
                home = Some(ci);
                break;
            }
        }
        match home {
            Some(ci) => assigned[ci].push(fi),
            None => return Ok(false),
        }
    }
    for (ci, members) in assigned.iter().enumerate() {
        let mut total = ComplexMatrix::zeros(fine.dim_v, fine.dim_v);
        for &fi in members {
            total = total.add(fine.blocks[fi].matrix());
        }
        if total.max_abs_diff(coarse.blocks[ci].matrix()) > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Iterator over set partitions of the window's blocks, encoded as
/// restricted growth strings in lexicographic order.
pub struct CoarseGrainings<'a> {
    window: &'a Window,
    state: Option<Vec<usize>>,
}

impl<'a> CoarseGrainings<'a> {
    fn new(window: &'a Window) -> Self {
        CoarseGrainings {
            window,
            state: Some(vec![0; window.len()]),
        }
    }

    fn build(&self, assignment: &[usize]) -> Window {
        self.window
            .merge_blocks(assignment)
            .expect("restricted growth strings index contiguous cells")
    }
}

impl Iterator for CoarseGrainings<'_> {
    type Item = Window;

    fn next(&mut self) -> Option<Window> {
        let assignment = self.state.take()?;
        let result = self.build(&assignment);
        // advance the restricted growth string
        let n = assignment.len();
        let mut next = assignment;
        let mut pos = n;
        while pos > 1 {
            pos -= 1;
            let max_prefix = next[..pos].iter().copied().max().unwrap_or(0);
            if next[pos] <= max_prefix {
                next[pos] += 1;
                for v in next[pos + 1..].iter_mut() {
                    *v = 0;
                }
                self.state = Some(next);
                return Some(result);
            }
        }
        self.state = None;
        Some(result)
    }
}

/// Number of set partitions of `n` items (Bell number), for test cross-checks.
pub fn bell_number(n: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 1..=n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for &v in &row {
            let last = *next.last().unwrap();
            next.push(last + v);
        }
        row = next;
    }
    row[0]
}

/// Convenience: the basis-diagonal proposition with ones at `indices`.
pub fn basis_proposition(dim_v: usize, indices: &[usize]) -> HistoryProposition {
    let mut m = ComplexMatrix::zeros(dim_v, dim_v);
    for &i in indices {
        m.set(i, i, C64::new(1.0, 0.0));
    }
    HistoryProposition::trusted(m, indices.len())
}
