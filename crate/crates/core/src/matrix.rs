//! Dense complex matrix algebra.
//!
//! Everything downstream — projectors, density matrices, decoherence
//! operators on the doubled space — is carried by [`ComplexMatrix`], a
//! row-major dense matrix of `Complex<f64>` entries. The module provides
//! Kronecker products, Hermitian eigendecomposition with explicit
//! eigenvalue grouping, the swap and four-factor cyclic-shift permutation
//! operators, von Neumann entropy, and validated projector predicates.
//!
//! All logarithms are natural logarithms and the convention
//! `0 * ln 0 = 0` is used throughout.

use nalgebra::DMatrix;
use num_complex::Complex;
use thiserror::Error;

/// Complex scalar with `f64` components.
pub type C64 = Complex<f64>;

/// Default numerical tolerance for predicates and validation checks.
///
/// Dimensions stay small (at most a few thousand on the doubled space),
/// so double precision leaves a wide margin around this threshold. Every
/// predicate also accepts an explicit tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Relative threshold below which two eigenvalues are treated as degenerate
/// and grouped into a single spectral projector.
pub const EIG_GROUP_REL_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("matrix is not Hermitian: residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { residual: f64, tol: f64 },
    #[error("matrix is not a projector: residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    NotProjector { residual: f64, tol: f64 },
    #[error("projector trace {trace:.6} is not close to an integer (tolerance {tol:.3e})")]
    NonIntegerRank { trace: f64, tol: f64 },
    #[error("not a density matrix: {reason}")]
    NotDensity { reason: String },
    #[error("non-finite entry at ({row},{col})")]
    NonFinite { row: usize, col: usize },
    #[error("eigenvalue {value:.3e} below -{tol:.3e}")]
    NegativeEigenvalue { value: f64, tol: f64 },
}

/// Dense complex matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    /// Create a matrix from row-major data. Panics if `data.len() != rows * cols`.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must match dimensions");
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    /// Build from nested rows; fails if the rows are ragged.
    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self, MatrixError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in &rows {
            if row.len() != c {
                return Err(MatrixError::DimensionMismatch {
                    left: c,
                    right: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { rows: r, cols: c, data })
    }

    /// Diagonal matrix from real entries.
    pub fn diag_real(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, C64::new(v, 0.0));
        }
        m
    }

    pub fn diag(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Side length of a square matrix. Panics on non-square input.
    pub fn dim(&self) -> usize {
        assert!(self.is_square(), "dim() requires a square matrix");
        self.rows
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Index of the first non-finite entry, if any.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
            .map(|k| (k / self.cols, k % self.cols))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, factor: C64) -> Self {
        let data = self.data.iter().map(|a| a * factor).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    /// Matrix product. Panics on inner-dimension mismatch.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        assert!(self.is_square(), "trace requires a square matrix");
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    /// Largest entry modulus.
    pub fn norm_max(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry modulus of `self - self^dagger`.
    pub fn hermiticity_residual(&self) -> f64 {
        assert!(self.is_square());
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in 0..=i {
                let d = (self.get(i, j) - self.get(j, i).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.hermiticity_residual() <= tol
    }

    /// Largest entry modulus of `self^dagger * self - I`.
    pub fn unitarity_residual(&self) -> f64 {
        assert!(self.is_square());
        let n = self.rows;
        self.adjoint().mul(self).max_abs_diff(&Self::identity(n))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.is_square() && self.unitarity_residual() <= tol
    }
}

/// Kronecker (tensor) product of two square matrices.
///
/// The result acts on the tensor-product space with the row index of the
/// first factor varying slowest: `(a ⊗ b)[(i*m+j),(k*m+l)] = a[i,k] b[j,l]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, MatrixError> {
    if !a.is_square() {
        return Err(MatrixError::NotSquare { rows: a.rows, cols: a.cols });
    }
    if !b.is_square() {
        return Err(MatrixError::NotSquare { rows: b.rows, cols: b.cols });
    }
    let n = a.rows;
    let m = b.rows;
    let size = n * m;
    let mut out = ComplexMatrix::zeros(size, size);
    for i in 0..n {
        for k in 0..n {
            let aik = a.get(i, k);
            if aik == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..m {
                for l in 0..m {
                    out.set(i * m + j, k * m + l, aik * b.get(j, l));
                }
            }
        }
    }
    Ok(out)
}

/// `tr((a ⊗ b) x)` without materialising the Kronecker product.
///
/// `x` must be square with side `a.dim() * b.dim()`. Panics on mismatch.
pub fn kron_trace(a: &ComplexMatrix, b: &ComplexMatrix, x: &ComplexMatrix) -> C64 {
    let n = a.dim();
    let m = b.dim();
    assert_eq!(x.dim(), n * m, "operand must act on the product space");
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            let aik = a.get(i, k);
            if aik == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..m {
                for l in 0..m {
                    acc += aik * b.get(j, l) * x.get(k * m + l, i * m + j);
                }
            }
        }
    }
    acc
}

/// Partial trace over the second tensor factor of a `(dim_a*dim_b)`-square matrix.
pub fn partial_trace_second(m: &ComplexMatrix, dim_a: usize, dim_b: usize) -> ComplexMatrix {
    assert_eq!(m.dim(), dim_a * dim_b);
    let mut out = ComplexMatrix::zeros(dim_a, dim_a);
    for i in 0..dim_a {
        for k in 0..dim_a {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..dim_b {
                acc += m.get(i * dim_b + j, k * dim_b + j);
            }
            out.set(i, k, acc);
        }
    }
    out
}

/// Swap operator `M` on the doubled space: `M(u ⊗ v) = v ⊗ u`.
///
/// The result is an exact 0/1 permutation matrix of side `n*n` satisfying
/// `M^2 = I` and `tr(M (A ⊗ B)) = tr(A B)`.
pub fn swap_operator(n: usize) -> ComplexMatrix {
    let one = C64::new(1.0, 0.0);
    let mut m = ComplexMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            // column e_i ⊗ e_j maps to e_j ⊗ e_i
            m.set(j * n + i, i * n + j, one);
        }
    }
    m
}

/// Cyclic shift on the four-fold tensor power:
/// `S(u1 ⊗ u2 ⊗ u3 ⊗ u4) = u2 ⊗ u3 ⊗ u4 ⊗ u1`.
///
/// Exact 0/1 permutation matrix of side `n^4` with `S^4 = I` and
/// `tr((A ⊗ B ⊗ C ⊗ D) S) = tr(A B C D)`.
pub fn cyclic_shift_4(n: usize) -> ComplexMatrix {
    let one = C64::new(1.0, 0.0);
    let size = n * n * n * n;
    let mut m = ComplexMatrix::zeros(size, size);
    let n3 = n * n * n;
    let n2 = n * n;
    for i1 in 0..n {
        for i2 in 0..n {
            for i3 in 0..n {
                for i4 in 0..n {
                    let col = i1 * n3 + i2 * n2 + i3 * n + i4;
                    let row = i2 * n3 + i3 * n2 + i4 * n + i1;
                    m.set(row, col, one);
                }
            }
        }
    }
    m
}

/// How the eigendecomposition packages degenerate eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EigMode {
    /// One projector per cluster of eigenvalues closer than
    /// `rel_threshold * max|lambda|`; the reported eigenvalue is the
    /// cluster mean.
    Grouped { rel_threshold: f64 },
    /// One rank-1 projector per eigenvector, even inside degenerate
    /// eigenspaces (the orthonormal refinement is the solver's choice).
    RankOne,
}

/// Spectral decomposition of a Hermitian matrix.
///
/// Eigenvalues are sorted descending; `sum_i eigenvalues[i] * eigenprojectors[i]`
/// reconstructs the input and the projectors are mutually orthogonal.
#[derive(Debug, Clone)]
pub struct HermitianEigensystem {
    pub eigenvalues: Vec<f64>,
    pub eigenprojectors: Vec<ComplexMatrix>,
}

impl HermitianEigensystem {
    /// `sum_i lambda_i P_i`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.eigenprojectors[0].dim();
        let mut out = ComplexMatrix::zeros(n, n);
        for (lambda, p) in self.eigenvalues.iter().zip(&self.eigenprojectors) {
            out = out.add(&p.scale_real(*lambda));
        }
        out
    }
}

/// Eigenvalues (descending) and matching orthonormal eigenvectors (as columns).
pub(crate) fn hermitian_eigenpairs(
    h: &ComplexMatrix,
    tol: f64,
) -> Result<(Vec<f64>, ComplexMatrix), MatrixError> {
    if !h.is_square() {
        return Err(MatrixError::NotSquare { rows: h.rows, cols: h.cols });
    }
    if let Some((row, col)) = h.first_non_finite() {
        return Err(MatrixError::NonFinite { row, col });
    }
    let residual = h.hermiticity_residual();
    if residual > tol {
        return Err(MatrixError::NotHermitian { residual, tol });
    }
    let n = h.dim();
    if n == 1 {
        return Ok((
            vec![h.get(0, 0).re],
            ComplexMatrix::identity(1),
        ));
    }
    // Symmetrise exactly before handing off to the solver so that the
    // within-tolerance skew part cannot leak into complex eigenvalues.
    let mut dm = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            dm[(i, j)] = (h.get(i, j) + h.get(j, i).conj()) * C64::new(0.5, 0.0);
        }
    }
    let se = dm.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        se.eigenvalues[b]
            .partial_cmp(&se.eigenvalues[a])
            .expect("finite eigenvalues")
    });
    let values: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        for row in 0..n {
            vectors.set(row, col, se.eigenvectors[(row, k)]);
        }
    }
    Ok((values, vectors))
}

fn rank1_from_column(vectors: &ComplexMatrix, col: usize) -> ComplexMatrix {
    let n = vectors.rows();
    let mut p = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        let vi = vectors.get(i, col);
        for j in 0..n {
            p.set(i, j, vi * vectors.get(j, col).conj());
        }
    }
    p
}

/// Hermitian eigendecomposition with the given degeneracy handling.
pub fn herm_eig_with(
    h: &ComplexMatrix,
    tol: f64,
    mode: EigMode,
) -> Result<HermitianEigensystem, MatrixError> {
    let (values, vectors) = hermitian_eigenpairs(h, tol)?;
    let n = values.len();
    match mode {
        EigMode::RankOne => {
            let eigenprojectors = (0..n).map(|c| rank1_from_column(&vectors, c)).collect();
            Ok(HermitianEigensystem { eigenvalues: values, eigenprojectors })
        }
        EigMode::Grouped { rel_threshold } => {
            let max_abs = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let gap = rel_threshold * max_abs;
            let mut eigenvalues = Vec::new();
            let mut eigenprojectors = Vec::new();
            let mut start = 0;
            while start < n {
                let mut end = start + 1;
                while end < n && (values[end - 1] - values[end]).abs() <= gap {
                    end += 1;
                }
                let mut p = ComplexMatrix::zeros(n, n);
                for c in start..end {
                    p = p.add(&rank1_from_column(&vectors, c));
                }
                eigenvalues.push(values[start..end].iter().sum::<f64>() / (end - start) as f64);
                eigenprojectors.push(p);
                start = end;
            }
            Ok(HermitianEigensystem { eigenvalues, eigenprojectors })
        }
    }
}

/// Hermitian eigendecomposition with the default degeneracy grouping.
pub fn herm_eig(h: &ComplexMatrix, tol: f64) -> Result<HermitianEigensystem, MatrixError> {
    herm_eig_with(h, tol, EigMode::Grouped { rel_threshold: EIG_GROUP_REL_TOL })
}

/// Von Neumann entropy `-tr(rho ln rho)` in nats.
///
/// `rho` must be Hermitian, positive semidefinite and of unit trace within
/// `tol`; eigenvalues in `[-tol, 0]` are treated as exact zeros.
pub fn vn_entropy_with_tol(rho: &ComplexMatrix, tol: f64) -> Result<f64, MatrixError> {
    let (values, _) = hermitian_eigenpairs(rho, tol)?;
    if let Some(&worst) = values.last() {
        if worst < -tol {
            return Err(MatrixError::NegativeEigenvalue { value: worst, tol });
        }
    }
    let total: f64 = values.iter().sum();
    if (total - 1.0).abs() > tol {
        return Err(MatrixError::NotDensity {
            reason: format!("trace {total:.12} deviates from 1"),
        });
    }
    Ok(values
        .iter()
        .filter(|&&r| r > 0.0)
        .map(|&r| -r * r.ln())
        .sum())
}

/// Von Neumann entropy at the default tolerance.
pub fn vn_entropy(rho: &ComplexMatrix) -> Result<f64, MatrixError> {
    vn_entropy_with_tol(rho, DEFAULT_TOL)
}

/// Largest of the idempotency and Hermiticity residuals of `p`.
pub fn projector_residual(p: &ComplexMatrix) -> f64 {
    let idem = p.mul(p).max_abs_diff(p);
    idem.max(p.hermiticity_residual())
}

/// True iff `p` is a Hermitian idempotent within `tol`.
pub fn is_projector(p: &ComplexMatrix, tol: f64) -> bool {
    p.is_square() && p.all_finite() && projector_residual(p) <= tol
}

/// Rank of a projector, read off the trace.
pub fn proj_dim(p: &ComplexMatrix) -> Result<usize, MatrixError> {
    proj_dim_with_tol(p, DEFAULT_TOL)
}

pub fn proj_dim_with_tol(p: &ComplexMatrix, tol: f64) -> Result<usize, MatrixError> {
    if !p.is_square() {
        return Err(MatrixError::NotSquare { rows: p.rows, cols: p.cols });
    }
    let residual = projector_residual(p);
    if residual > tol {
        return Err(MatrixError::NotProjector { residual, tol });
    }
    let trace = p.trace().re;
    let rounded = trace.round();
    if (trace - rounded).abs() > tol {
        return Err(MatrixError::NonIntegerRank { trace, tol });
    }
    Ok(rounded.max(0.0) as usize)
}

/// Orthonormal basis of the range of a projector, returned as the columns
/// of an `n x rank` matrix.
pub fn projector_basis(p: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix, MatrixError> {
    let rank = proj_dim_with_tol(p, tol)?;
    let (values, vectors) = hermitian_eigenpairs(p, tol)?;
    let n = p.dim();
    let mut basis = ComplexMatrix::zeros(n, rank);
    let mut col = 0;
    for (k, &v) in values.iter().enumerate() {
        if v > 0.5 {
            for row in 0..n {
                basis.set(row, col, vectors.get(row, k));
            }
            col += 1;
        }
    }
    if col != rank {
        return Err(MatrixError::NotProjector { residual: projector_residual(p), tol });
    }
    Ok(basis)
}

/// Validate a density matrix: Hermitian, positive semidefinite, unit trace.
pub fn check_density(rho: &ComplexMatrix, tol: f64) -> Result<(), MatrixError> {
    let (values, _) = hermitian_eigenpairs(rho, tol).map_err(|e| match e {
        MatrixError::NotHermitian { residual, .. } => MatrixError::NotDensity {
            reason: format!("not Hermitian (residual {residual:.3e})"),
        },
        other => other,
    })?;
    if let Some(&worst) = values.last() {
        if worst < -tol {
            return Err(MatrixError::NotDensity {
                reason: format!("negative eigenvalue {worst:.3e}"),
            });
        }
    }
    let trace = rho.trace().re;
    if (trace - 1.0).abs() > tol {
        return Err(MatrixError::NotDensity {
            reason: format!("trace {trace:.12} deviates from 1"),
        });
    }
    Ok(())
}
