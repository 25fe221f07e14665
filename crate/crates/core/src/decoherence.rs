//! Decoherence functions and decoherence operators.
//!
//! A decoherence function `d` assigns a complex value to every pair of
//! history propositions, subject to Hermiticity, positivity on the
//! diagonal, additivity over disjoint sums and `d(1,1) = 1`. On a
//! finite-dimensional history space every such function is represented by
//! a decoherence operator `X` on `V ⊗ V` through `d(a,b) = tr((a ⊗ b) X)`,
//! where `X` satisfies
//!
//! 1. `M X M = X^dagger` for the swap `M(u ⊗ v) = v ⊗ u`,
//! 2. `tr((a ⊗ a) X) >= 0` for every projector `a`,
//! 3. `tr(X) = 1`.
//!
//! `X` need not be Hermitian, let alone positive, so condition 2 is not an
//! eigenvalue statement; validation samples it over projectors of every
//! rank. Standard n-time quantum mechanics enters through chain recipes:
//! an initial state plus evolution operators evaluated on homogeneous
//! histories.

use thiserror::Error;

use crate::histories::{
    HistoryError, HistoryProposition, HomogeneousHistory, HomogeneousSum, Window,
};
use crate::matrix::{
    C64, ComplexMatrix, MatrixError, check_density, kron, kron_trace,
};
use crate::sample::{projector_from_columns, random_unitary, seeded_rng};

#[derive(Debug, Error)]
pub enum DecoherenceError {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    History(#[from] HistoryError),
    #[error("operator acts on dim {side} but dim_v^2 = {expected}")]
    OperatorShape { side: usize, expected: usize },
    #[error("proposition lives on dim {got}, decoherence function on dim {expected}")]
    SpaceMismatch { expected: usize, got: usize },
    #[error("expected {expected} evolution operators (n_times + 1), got {got}")]
    EvolutionCount { expected: usize, got: usize },
    #[error("chain recipes evaluate only explicit sums of homogeneous histories")]
    InhomogeneousChainEval,
    #[error("mixing weight {0} outside [0, 1]")]
    InvalidLambda(f64),
    #[error("operand is not Hermitian: residual {residual:.3e}")]
    NotHermitian { residual: f64 },
    #[error("window is not consistent: off-diagonal residual {residual:.3e} exceeds {tol:.3e}")]
    InconsistentWindow { residual: f64, tol: f64 },
    #[error("single-time operator bridge check failed: residual {residual:.3e}")]
    BridgeCheck { residual: f64 },
}

/// Operator `X` on `V ⊗ V` representing a decoherence function.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceOperator {
    x: ComplexMatrix,
    dim_v: usize,
}

impl DecoherenceOperator {
    /// Wrap an operator on the doubled space. Shape and finiteness are
    /// checked here; the defining conditions are checked by [`validate`].
    pub fn new(x: ComplexMatrix, dim_v: usize) -> Result<Self, DecoherenceError> {
        if !x.is_square() || x.rows() != dim_v * dim_v {
            return Err(DecoherenceError::OperatorShape {
                side: x.rows(),
                expected: dim_v * dim_v,
            });
        }
        if let Some((row, col)) = x.first_non_finite() {
            return Err(MatrixError::NonFinite { row, col }.into());
        }
        Ok(Self { x, dim_v })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.x
    }

    pub fn dim_v(&self) -> usize {
        self.dim_v
    }

    /// `d(a, b) = tr((a ⊗ b) X)`.
    pub fn eval(
        &self,
        a: &HistoryProposition,
        b: &HistoryProposition,
    ) -> Result<C64, DecoherenceError> {
        if a.dim_v() != self.dim_v || b.dim_v() != self.dim_v {
            return Err(DecoherenceError::SpaceMismatch {
                expected: self.dim_v,
                got: a.dim_v().max(b.dim_v()),
            });
        }
        Ok(kron_trace(a.matrix(), b.matrix(), &self.x))
    }

    /// Largest entry modulus of `M X M - X^dagger`; computed by index
    /// shuffling, no matrix product.
    pub fn swap_symmetry_residual(&self) -> f64 {
        let n = self.dim_v;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let lhs = self.x.get(j * n + i, l * n + k);
                        let rhs = self.x.get(k * n + l, i * n + j).conj();
                        worst = worst.max((lhs - rhs).norm());
                    }
                }
            }
        }
        worst
    }
}

/// Initial state plus evolution operators: the data of standard n-time
/// quantum mechanics. `evolutions[k]` carries the system from slot `k` to
/// slot `k+1`, with `evolutions[0]` leading in from the initial time and
/// `evolutions[n]` closing the loop back to it; the operators need not be
/// unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainRecipe {
    rho: ComplexMatrix,
    evolutions: Vec<ComplexMatrix>,
    n_times: usize,
    dim_h: usize,
}

impl ChainRecipe {
    pub fn new(
        rho: ComplexMatrix,
        evolutions: Vec<ComplexMatrix>,
        n_times: usize,
        tol: f64,
    ) -> Result<Self, DecoherenceError> {
        check_density(&rho, tol)?;
        let dim_h = rho.dim();
        if evolutions.len() != n_times + 1 {
            return Err(DecoherenceError::EvolutionCount {
                expected: n_times + 1,
                got: evolutions.len(),
            });
        }
        for u in &evolutions {
            if !u.is_square() || u.dim() != dim_h {
                return Err(DecoherenceError::SpaceMismatch {
                    expected: dim_h,
                    got: u.rows(),
                });
            }
        }
        Ok(Self { rho, evolutions, n_times, dim_h })
    }

    pub fn rho(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn evolutions(&self) -> &[ComplexMatrix] {
        &self.evolutions
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn dim_v(&self) -> usize {
        self.dim_h.pow(self.n_times as u32)
    }

    pub fn evolutions_unitary(&self, tol: f64) -> bool {
        self.evolutions.iter().all(|u| u.is_unitary(tol))
    }

    /// Chain operator `U_0 P^1 U_1 P^2 ... P^n U_n` on `H`.
    fn chain_from_parts(&self, parts: &[&ComplexMatrix]) -> ComplexMatrix {
        let mut acc = self.evolutions[0].clone();
        for (k, p) in parts.iter().enumerate() {
            acc = acc.mul(p).mul(&self.evolutions[k + 1]);
        }
        acc
    }

    pub fn chain_operator(
        &self,
        h: &HomogeneousHistory,
    ) -> Result<ComplexMatrix, DecoherenceError> {
        if h.dim_h() != self.dim_h || h.n_times() != self.n_times {
            return Err(DecoherenceError::SpaceMismatch {
                expected: self.dim_v(),
                got: h.dim_h().pow(h.n_times() as u32),
            });
        }
        let parts: Vec<&ComplexMatrix> = h.per_time().iter().collect();
        Ok(self.chain_from_parts(&parts))
    }

    /// `d(a, b) = tr(C_a^dagger rho C_b)` for homogeneous histories.
    pub fn eval_homogeneous(
        &self,
        a: &HomogeneousHistory,
        b: &HomogeneousHistory,
    ) -> Result<C64, DecoherenceError> {
        let ca = self.chain_operator(a)?;
        let cb = self.chain_operator(b)?;
        Ok(ca.adjoint().mul(&self.rho).mul(&cb).trace())
    }

    /// Extension to disjoint sums by additivity.
    pub fn eval_sums(
        &self,
        a: &HomogeneousSum,
        b: &HomogeneousSum,
    ) -> Result<C64, DecoherenceError> {
        let mut acc = C64::new(0.0, 0.0);
        for ta in a.terms() {
            for tb in b.terms() {
                acc += self.eval_homogeneous(ta, tb)?;
            }
        }
        Ok(acc)
    }

    fn eval_raw_pair(&self, a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
        let ca = self.chain_from_parts(&[a]);
        let cb = self.chain_from_parts(&[b]);
        ca.adjoint().mul(&self.rho).mul(&cb).trace()
    }
}

/// Evaluation strategy behind a [`DecoherenceFunction`].
#[derive(Debug, Clone)]
pub enum Backend {
    /// Explicit operator on `V ⊗ V`.
    Explicit(DecoherenceOperator),
    /// Chain-operator recipe; evaluates on homogeneous sums only.
    Chain(ChainRecipe),
    /// Pointwise convex combination of two decoherence functions.
    Convex {
        first: Box<DecoherenceFunction>,
        second: Box<DecoherenceFunction>,
        lambda: f64,
    },
}

/// A decoherence function, evaluated through one of the [`Backend`]s.
#[derive(Debug, Clone)]
pub struct DecoherenceFunction {
    backend: Backend,
    recipe: Option<ChainRecipe>,
    dim_v: usize,
}

impl DecoherenceFunction {
    pub fn from_explicit(op: DecoherenceOperator) -> Self {
        let dim_v = op.dim_v();
        Self { backend: Backend::Explicit(op), recipe: None, dim_v }
    }

    /// Single-time theory for a density matrix: `d(P, Q) = tr(P rho Q)`,
    /// realised by the explicit operator with entries
    /// `X[(i,j),(k,l)] = delta_{jk} rho[i,l]` (the swap applied to
    /// `1 ⊗ rho`). Construction cross-checks the operator against the
    /// direct formula on a few random projector pairs.
    pub fn from_single_time(rho: ComplexMatrix, tol: f64) -> Result<Self, DecoherenceError> {
        check_density(&rho, tol)?;
        let n = rho.dim();
        let mut x = ComplexMatrix::zeros(n * n, n * n);
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    x.set(i * n + j, j * n + l, rho.get(i, l));
                }
            }
        }
        let op = DecoherenceOperator::new(x, n)?;

        let mut rng = seeded_rng(0);
        let mut worst = 0.0_f64;
        for _ in 0..4 {
            let u = random_unitary(&mut rng, n);
            let p = HistoryProposition::new(projector_from_columns(&u, 0..1), tol)?;
            let v = random_unitary(&mut rng, n);
            let q = HistoryProposition::new(projector_from_columns(&v, 0..1), tol)?;
            let via_operator = op.eval(&p, &q)?;
            let direct = p.matrix().mul(&rho).mul(q.matrix()).trace();
            worst = worst.max((via_operator - direct).norm());
        }
        if worst > 1e-10 * n as f64 {
            return Err(DecoherenceError::BridgeCheck { residual: worst });
        }

        let identity = ComplexMatrix::identity(n);
        let recipe = ChainRecipe::new(rho, vec![identity.clone(), identity], 1, tol)?;
        Ok(Self {
            backend: Backend::Explicit(op),
            recipe: Some(recipe),
            dim_v: n,
        })
    }

    /// Two-time theory with trivial evolution on `V = H ⊗ H`, as the
    /// explicit operator
    /// `X = [R ⊗ 1] S4 [1 ⊗ (rho ⊗ 1)] [R ⊗ 1]`
    /// built from the pair swap `R` on `V` and the cyclic shift `S4` on the
    /// four-fold tensor power of `H`.
    pub fn from_two_time(rho: ComplexMatrix, tol: f64) -> Result<Self, DecoherenceError> {
        check_density(&rho, tol)?;
        let n = rho.dim();
        let dim_v = n * n;
        let r2 = crate::matrix::swap_operator(n);
        let id_v = ComplexMatrix::identity(dim_v);
        let id_h = ComplexMatrix::identity(n);
        let r2_ext = kron(&r2, &id_v)?;
        let s4 = crate::matrix::cyclic_shift_4(n);
        let core = kron(&id_v, &kron(&rho, &id_h)?)?;
        let x = r2_ext.mul(&s4).mul(&core).mul(&r2_ext);
        let op = DecoherenceOperator::new(x, dim_v)?;
        let recipe = ChainRecipe::new(
            rho,
            vec![id_h.clone(), id_h.clone(), id_h],
            2,
            tol,
        )?;
        Ok(Self {
            backend: Backend::Explicit(op),
            recipe: Some(recipe),
            dim_v,
        })
    }

    /// n-time theory evaluated through the chain-operator formula. The
    /// evolutions need not be unitary; `d(1,1)` then deviates from 1 and
    /// validation reports it, but no renormalisation is applied.
    pub fn from_chain(
        rho: ComplexMatrix,
        evolutions: Vec<ComplexMatrix>,
        n_times: usize,
        tol: f64,
    ) -> Result<Self, DecoherenceError> {
        let recipe = ChainRecipe::new(rho, evolutions, n_times, tol)?;
        let dim_v = recipe.dim_v();
        Ok(Self { backend: Backend::Chain(recipe), recipe: None, dim_v })
    }

    pub fn dim_v(&self) -> usize {
        self.dim_v
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    /// The state-plus-evolutions data behind this function, when it was
    /// built from one.
    pub fn recipe(&self) -> Option<&ChainRecipe> {
        match &self.backend {
            Backend::Chain(r) => Some(r),
            _ => self.recipe.as_ref(),
        }
    }

    pub fn explicit_operator(&self) -> Option<&DecoherenceOperator> {
        match &self.backend {
            Backend::Explicit(op) => Some(op),
            _ => None,
        }
    }

    /// `d(a, b)` on raw propositions. Chain recipes accept these only in
    /// the single-time case, where every projector is homogeneous; for
    /// more times, use [`Self::eval_sum`].
    pub fn eval(
        &self,
        a: &HistoryProposition,
        b: &HistoryProposition,
    ) -> Result<C64, DecoherenceError> {
        if a.dim_v() != self.dim_v || b.dim_v() != self.dim_v {
            return Err(DecoherenceError::SpaceMismatch {
                expected: self.dim_v,
                got: a.dim_v().max(b.dim_v()),
            });
        }
        match &self.backend {
            Backend::Explicit(op) => op.eval(a, b),
            Backend::Chain(r) => {
                if r.n_times() == 1 {
                    Ok(r.eval_raw_pair(a.matrix(), b.matrix()))
                } else {
                    Err(DecoherenceError::InhomogeneousChainEval)
                }
            }
            Backend::Convex { first, second, lambda } => {
                let one = first.eval(a, b)?;
                let two = second.eval(a, b)?;
                Ok(one * C64::new(*lambda, 0.0) + two * C64::new(1.0 - lambda, 0.0))
            }
        }
    }

    /// `d(a, b)` on explicit disjoint sums of homogeneous histories; works
    /// for every backend.
    pub fn eval_sum(
        &self,
        a: &HomogeneousSum,
        b: &HomogeneousSum,
    ) -> Result<C64, DecoherenceError> {
        match &self.backend {
            Backend::Chain(r) => r.eval_sums(a, b),
            Backend::Explicit(_) => self.eval(&a.to_proposition(), &b.to_proposition()),
            Backend::Convex { first, second, lambda } => {
                let one = first.eval_sum(a, b)?;
                let two = second.eval_sum(a, b)?;
                Ok(one * C64::new(*lambda, 0.0) + two * C64::new(1.0 - lambda, 0.0))
            }
        }
    }

    /// `d(alpha_i, alpha_j)` for every pair of window blocks.
    pub fn window_gram(&self, w: &Window) -> Result<Vec<Vec<C64>>, DecoherenceError> {
        if w.dim_v() != self.dim_v {
            return Err(DecoherenceError::SpaceMismatch {
                expected: self.dim_v,
                got: w.dim_v(),
            });
        }
        match &self.backend {
            Backend::Explicit(op) => {
                let blocks = w.blocks();
                let mut gram = vec![vec![C64::new(0.0, 0.0); blocks.len()]; blocks.len()];
                for (i, a) in blocks.iter().enumerate() {
                    for (j, b) in blocks.iter().enumerate() {
                        gram[i][j] = op.eval(a, b)?;
                    }
                }
                Ok(gram)
            }
            Backend::Chain(r) => {
                if r.n_times() == 1 {
                    let blocks = w.blocks();
                    let mut gram =
                        vec![vec![C64::new(0.0, 0.0); blocks.len()]; blocks.len()];
                    for (i, a) in blocks.iter().enumerate() {
                        for (j, b) in blocks.iter().enumerate() {
                            gram[i][j] = r.eval_raw_pair(a.matrix(), b.matrix());
                        }
                    }
                    return Ok(gram);
                }
                let sums = w.sums().ok_or(DecoherenceError::InhomogeneousChainEval)?;
                let mut gram = vec![vec![C64::new(0.0, 0.0); sums.len()]; sums.len()];
                for (i, a) in sums.iter().enumerate() {
                    for (j, b) in sums.iter().enumerate() {
                        gram[i][j] = r.eval_sums(a, b)?;
                    }
                }
                Ok(gram)
            }
            Backend::Convex { first, second, lambda } => {
                let g1 = first.window_gram(w)?;
                let g2 = second.window_gram(w)?;
                let mut gram = g1;
                for (row1, row2) in gram.iter_mut().zip(&g2) {
                    for (v1, &v2) in row1.iter_mut().zip(row2) {
                        *v1 = *v1 * C64::new(*lambda, 0.0) + v2 * C64::new(1.0 - lambda, 0.0);
                    }
                }
                Ok(gram)
            }
        }
    }
}

/// Pointwise convex combination `lambda d1 + (1 - lambda) d2`. Two explicit
/// backends combine at the operator level; anything else combines at the
/// evaluator level.
pub fn convex_combine(
    d1: &DecoherenceFunction,
    d2: &DecoherenceFunction,
    lambda: f64,
) -> Result<DecoherenceFunction, DecoherenceError> {
    if !(0.0..=1.0).contains(&lambda) || !lambda.is_finite() {
        return Err(DecoherenceError::InvalidLambda(lambda));
    }
    if d1.dim_v() != d2.dim_v() {
        return Err(DecoherenceError::SpaceMismatch {
            expected: d1.dim_v(),
            got: d2.dim_v(),
        });
    }
    if let (Backend::Explicit(a), Backend::Explicit(b)) = (&d1.backend, &d2.backend) {
        let x = a
            .matrix()
            .scale_real(lambda)
            .add(&b.matrix().scale_real(1.0 - lambda));
        let op = DecoherenceOperator::new(x, d1.dim_v())?;
        return Ok(DecoherenceFunction::from_explicit(op));
    }
    Ok(DecoherenceFunction {
        backend: Backend::Convex {
            first: Box::new(d1.clone()),
            second: Box::new(d2.clone()),
            lambda,
        },
        recipe: None,
        dim_v: d1.dim_v(),
    })
}

/// Split `X` into the pair `(X + Y, X - Y)` with
/// `Y = i (s1 ⊗ s2 - s2 ⊗ s1)` for Hermitian `s1`, `s2`.
///
/// `Y` satisfies the swap condition and has `tr((a ⊗ a) Y) = 0` for every
/// projector `a`, so both halves are again decoherence operators and
/// `X = (X+Y)/2 + (X-Y)/2` recovers the original pointwise.
pub fn impurity_split(
    x: &DecoherenceOperator,
    s1: &ComplexMatrix,
    s2: &ComplexMatrix,
    tol: f64,
) -> Result<(DecoherenceOperator, DecoherenceOperator), DecoherenceError> {
    for s in [s1, s2] {
        if !s.is_square() || s.dim() != x.dim_v() {
            return Err(DecoherenceError::SpaceMismatch {
                expected: x.dim_v(),
                got: s.rows(),
            });
        }
        let residual = s.hermiticity_residual();
        if residual > tol {
            return Err(DecoherenceError::NotHermitian { residual });
        }
    }
    let y = kron(s1, s2)?
        .sub(&kron(s2, s1)?)
        .scale(C64::new(0.0, 1.0));
    let plus = DecoherenceOperator::new(x.matrix().add(&y), x.dim_v())?;
    let minus = DecoherenceOperator::new(x.matrix().sub(&y), x.dim_v())?;
    Ok((plus, minus))
}

pub(crate) fn gram_offdiag_residual(gram: &[Vec<C64>]) -> f64 {
    let mut worst = 0.0_f64;
    for (i, row) in gram.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if i != j {
                worst = worst.max(v.norm());
            }
        }
    }
    worst
}

/// Canonical representative of the window-equivalence class of `d`:
/// `X~ = sum_i d(a_i, a_i) / (dim a_i)^2  a_i ⊗ a_i`,
/// a positive self-adjoint operator reproducing `d` on the window's blocks.
/// Requires `w` to be consistent within `tol`.
pub fn canonical_operator(
    d: &DecoherenceFunction,
    w: &Window,
    tol: f64,
) -> Result<DecoherenceOperator, DecoherenceError> {
    let gram = d.window_gram(w)?;
    let residual = gram_offdiag_residual(&gram);
    if residual > tol {
        return Err(DecoherenceError::InconsistentWindow { residual, tol });
    }
    let dim_v = w.dim_v();
    let mut x = ComplexMatrix::zeros(dim_v * dim_v, dim_v * dim_v);
    for (i, block) in w.blocks().iter().enumerate() {
        let p = gram[i][i].re;
        let weight = p / (block.dim() as f64).powi(2);
        x = x.add(&kron(block.matrix(), block.matrix())?.scale_real(weight));
    }
    DecoherenceOperator::new(x, dim_v)
}

/// Consistency and diagonal data of a decoherence function on a window.
#[derive(Debug, Clone)]
pub struct WEquivalenceClass {
    window: Window,
    diagonal: Vec<f64>,
    tol: f64,
}

impl WEquivalenceClass {
    pub fn new(
        d: &DecoherenceFunction,
        w: &Window,
        tol: f64,
    ) -> Result<Self, DecoherenceError> {
        let gram = d.window_gram(w)?;
        let residual = gram_offdiag_residual(&gram);
        if residual > tol {
            return Err(DecoherenceError::InconsistentWindow { residual, tol });
        }
        let diagonal: Vec<f64> = gram.iter().enumerate().map(|(i, row)| row[i].re).collect();
        let total: f64 = diagonal.iter().sum();
        if (total - 1.0).abs() > tol * w.len() as f64
            || diagonal.iter().any(|&p| p < -tol)
        {
            return Err(DecoherenceError::InconsistentWindow {
                residual: (total - 1.0).abs(),
                tol,
            });
        }
        Ok(Self { window: w.clone(), diagonal, tol })
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }
}

/// True iff exactly one diagonal entry is nonzero (that entry then carries
/// the whole unit of probability).
pub fn is_w_pure(cls: &WEquivalenceClass) -> bool {
    cls.diagonal.iter().filter(|&&p| p.abs() > cls.tol).count() == 1
}

/// True iff `w` is consistent for both functions and their diagonals agree
/// within `tol`.
pub fn w_equivalent(
    d1: &DecoherenceFunction,
    d2: &DecoherenceFunction,
    w: &Window,
    tol: f64,
) -> Result<bool, DecoherenceError> {
    let g1 = d1.window_gram(w)?;
    let g2 = d2.window_gram(w)?;
    if gram_offdiag_residual(&g1) > tol || gram_offdiag_residual(&g2) > tol {
        return Ok(false);
    }
    Ok(g1
        .iter()
        .zip(&g2)
        .enumerate()
        .all(|(i, (r1, r2))| (r1[i].re - r2[i].re).abs() <= tol))
}

/// Outcome of checking the defining conditions of a decoherence operator.
///
/// Conditions 1 and 3 are deterministic full-matrix checks; condition 2 is
/// sampled over all standard-basis projectors, any supplied window blocks,
/// and seeded pseudo-random projectors of every rank.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub swap_symmetry_residual: f64,
    pub trace_deviation: f64,
    /// Smallest sampled `Re tr((a ⊗ a) X)`.
    pub min_diagonal: f64,
    /// Largest sampled `|Im tr((a ⊗ a) X)|`.
    pub max_diagonal_imag: f64,
    pub samples: usize,
    pub tol: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations().is_empty()
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.swap_symmetry_residual > self.tol {
            out.push(format!(
                "swap-symmetry: |MXM - X^dagger| = {:.3e}",
                self.swap_symmetry_residual
            ));
        }
        if self.trace_deviation > self.tol {
            out.push(format!("normalization: |tr X - 1| = {:.3e}", self.trace_deviation));
        }
        if self.min_diagonal < -self.tol {
            out.push(format!(
                "diagonal-positivity: min sampled tr((a⊗a)X) = {:.3e}",
                self.min_diagonal
            ));
        }
        if self.max_diagonal_imag > self.tol {
            out.push(format!(
                "diagonal-reality: max sampled |Im tr((a⊗a)X)| = {:.3e}",
                self.max_diagonal_imag
            ));
        }
        out
    }
}

/// Check the defining conditions of `x`, sampling condition 2 with
/// `sample_count` seeded random projectors spread over every rank.
pub fn validate(
    x: &DecoherenceOperator,
    sample_count: usize,
    tol: f64,
    seed: u64,
) -> ValidationReport {
    validate_with_windows(x, &[], sample_count, tol, seed)
}

/// [`validate`], additionally sampling every block of the given windows.
pub fn validate_with_windows(
    x: &DecoherenceOperator,
    windows: &[&Window],
    sample_count: usize,
    tol: f64,
    seed: u64,
) -> ValidationReport {
    let n = x.dim_v();
    let swap_symmetry_residual = x.swap_symmetry_residual();
    let trace_deviation = (x.matrix().trace() - C64::new(1.0, 0.0)).norm();

    let mut min_diagonal = f64::INFINITY;
    let mut max_diagonal_imag = 0.0_f64;
    let mut samples = 0usize;
    let mut record = |value: C64| {
        min_diagonal = min_diagonal.min(value.re);
        max_diagonal_imag = max_diagonal_imag.max(value.im.abs());
        samples += 1;
    };

    // standard-basis projectors
    for i in 0..n {
        let mut e = ComplexMatrix::zeros(n, n);
        e.set(i, i, C64::new(1.0, 0.0));
        record(kron_trace(&e, &e, x.matrix()));
    }
    // identity (doubles as the normalization diagonal)
    let id = ComplexMatrix::identity(n);
    record(kron_trace(&id, &id, x.matrix()));
    // user-supplied window blocks
    for w in windows {
        for b in w.blocks() {
            record(kron_trace(b.matrix(), b.matrix(), x.matrix()));
        }
    }
    // seeded random projectors of every rank
    if n > 1 {
        let mut rng = seeded_rng(seed);
        let per_rank = (sample_count / (n - 1)).max(1);
        for rank in 1..n {
            for _ in 0..per_rank {
                let p = crate::sample::random_projector(&mut rng, n, rank);
                record(kron_trace(&p, &p, x.matrix()));
            }
        }
    }

    ValidationReport {
        swap_symmetry_residual,
        trace_deviation,
        min_diagonal,
        max_diagonal_imag,
        samples,
        tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histories::{basis_proposition, make_window};
    use crate::matrix::{DEFAULT_TOL, herm_eig};
    use crate::sample::{
        projector_from_vector, random_density, random_hermitian, random_projector,
        random_unit_vector,
    };
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// The pair-exchange operator `(a⊗b + b⊗a)/2` on `C^2 ⊗ C^2` built from
    /// the two basis projectors.
    pub(crate) fn x_mixer() -> DecoherenceOperator {
        let alpha = ComplexMatrix::diag_real(&[1.0, 0.0]);
        let beta = ComplexMatrix::diag_real(&[0.0, 1.0]);
        let x = kron(&alpha, &beta)
            .unwrap()
            .add(&kron(&beta, &alpha).unwrap())
            .scale_real(0.5);
        DecoherenceOperator::new(x, 2).unwrap()
    }

    /// The rank-one operator `a ⊗ a` for `a = diag(1, 0)`.
    pub(crate) fn x_peaked() -> DecoherenceOperator {
        let alpha = ComplexMatrix::diag_real(&[1.0, 0.0]);
        let x = kron(&alpha, &alpha).unwrap();
        DecoherenceOperator::new(x, 2).unwrap()
    }

    fn bloch_projector(a: f64, phase: f64) -> HistoryProposition {
        let b = (a * (1.0 - a)).sqrt() * C64::new(phase.cos(), phase.sin());
        let m = ComplexMatrix::from_rows(vec![
            vec![c(a, 0.0), b],
            vec![b.conj(), c(1.0 - a, 0.0)],
        ])
        .unwrap();
        HistoryProposition::new(m, DEFAULT_TOL).unwrap()
    }

    #[test]
    fn normalization_for_every_backend() {
        let one = HistoryProposition::unit(2);
        let mixer = DecoherenceFunction::from_explicit(x_mixer());
        assert!((mixer.eval(&one, &one).unwrap() - c(1.0, 0.0)).norm() < 1e-12);

        let mut rng = seeded_rng(1);
        let st = DecoherenceFunction::from_single_time(random_density(&mut rng, 2), DEFAULT_TOL)
            .unwrap();
        assert!((st.eval(&one, &one).unwrap() - c(1.0, 0.0)).norm() < 1e-12);

        let tt = DecoherenceFunction::from_two_time(random_density(&mut rng, 2), DEFAULT_TOL)
            .unwrap();
        let one4 = HistoryProposition::unit(4);
        assert!((tt.eval(&one4, &one4).unwrap() - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn mixer_diagonal_from_bloch_parameter() {
        // d(P, 1-P) = (a^2 + (1-a)^2)/2 for the general one-dimensional
        // projector with diagonal (a, 1-a)
        let d = DecoherenceFunction::from_explicit(x_mixer());
        for &(a, phase) in &[(1.0, 0.0), (0.25, 0.7), (0.5, 1.9), (0.8, 4.0)] {
            let p = bloch_projector(a, phase);
            let q = crate::histories::negation(&p);
            let got = d.eval(&p, &q).unwrap();
            let expected = 0.5 * (a * a + (1.0 - a) * (1.0 - a));
            assert_abs_diff_eq!(got.re, expected, epsilon = 1e-12);
            assert!(got.im.abs() < 1e-12);
        }
        // at a = 1 the value is 1/2
        let p = bloch_projector(1.0, 0.0);
        let q = crate::histories::negation(&p);
        assert_abs_diff_eq!(d.eval(&p, &q).unwrap().re, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn single_time_matches_direct_formula() {
        let rho = ComplexMatrix::diag_real(&[0.75, 0.25]);
        let d = DecoherenceFunction::from_single_time(rho.clone(), DEFAULT_TOL).unwrap();
        let p = basis_proposition(2, &[0]);
        assert_abs_diff_eq!(d.eval(&p, &p).unwrap().re, 0.75, epsilon = 1e-14);

        let mut rng = seeded_rng(5);
        for _ in 0..200 {
            let rho = random_density(&mut rng, 3);
            let d = DecoherenceFunction::from_single_time(rho.clone(), DEFAULT_TOL).unwrap();
            let p = HistoryProposition::new(random_projector(&mut rng, 3, 1), DEFAULT_TOL)
                .unwrap();
            let q = HistoryProposition::new(random_projector(&mut rng, 3, 2), DEFAULT_TOL)
                .unwrap();
            let direct = p.matrix().mul(&rho).mul(q.matrix()).trace();
            let got = d.eval(&p, &q).unwrap();
            assert!((got - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn single_time_examples() {
        let d = DecoherenceFunction::from_single_time(
            ComplexMatrix::diag_real(&[1.0, 0.0]),
            DEFAULT_TOL,
        )
        .unwrap();
        let e1 = basis_proposition(2, &[0]);
        let e2 = basis_proposition(2, &[1]);
        assert_abs_diff_eq!(d.eval(&e1, &e1).unwrap().re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d.eval(&e2, &e2).unwrap().re, 0.0, epsilon = 1e-14);
        // orthogonal pairs decohere exactly
        assert!(d.eval(&e1, &e2).unwrap().norm() < 1e-14);

        // maximally mixed: every one-dimensional projector has probability 1/2
        let d = DecoherenceFunction::from_single_time(
            ComplexMatrix::diag_real(&[0.5, 0.5]),
            DEFAULT_TOL,
        )
        .unwrap();
        let mut rng = seeded_rng(9);
        for _ in 0..20 {
            let p = HistoryProposition::new(random_projector(&mut rng, 2, 1), DEFAULT_TOL)
                .unwrap();
            assert_abs_diff_eq!(d.eval(&p, &p).unwrap().re, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn validate_passes_peaked_and_mixer() {
        let report = validate(&x_peaked(), 50, DEFAULT_TOL, 0);
        assert!(report.passed(), "violations: {:?}", report.violations());

        let report = validate(&x_mixer(), 50, DEFAULT_TOL, 0);
        assert!(report.passed(), "violations: {:?}", report.violations());

        // the mixer happens to be diagonal (0, 1/2, 1/2, 0) and therefore
        // positive as an operator; non-positive examples need a skew shift
        let es = herm_eig(x_mixer().matrix(), DEFAULT_TOL).unwrap();
        assert!(es.eigenvalues.iter().all(|&v| v >= -1e-12));
    }

    #[test]
    fn validate_flags_broken_trace() {
        let scaled = DecoherenceOperator::new(x_peaked().matrix().scale_real(0.9), 2).unwrap();
        let report = validate(&scaled, 20, DEFAULT_TOL, 0);
        assert!(!report.passed());
        assert!(report.violations().iter().any(|v| v.contains("normalization")));
    }

    #[test]
    fn skew_shift_is_valid_but_not_hermitian() {
        // a decoherence operator need not be positive, or even Hermitian:
        // shifting by i(s1⊗s2 - s2⊗s1) preserves all three conditions
        let mut rng = seeded_rng(11);
        let s1 = random_hermitian(&mut rng, 2);
        let s2 = random_hermitian(&mut rng, 2);
        let (plus, _) = impurity_split(&x_peaked(), &s1, &s2, DEFAULT_TOL).unwrap();
        let report = validate(&plus, 100, 1e-8, 3);
        assert!(report.passed(), "violations: {:?}", report.violations());
        assert!(plus.matrix().hermiticity_residual() > 1e-3);
    }

    #[test]
    fn two_time_rank1_probability_formula() {
        // d(1, P_v) = (1 - sum_{i<j} |v_ij - v_ji|^2) / N for the maximally
        // mixed two-time theory
        for n in [2usize, 3] {
            let rho = ComplexMatrix::diag_real(&vec![1.0 / n as f64; n]);
            let d = DecoherenceFunction::from_two_time(rho, DEFAULT_TOL).unwrap();
            let one = HistoryProposition::unit(n * n);
            let mut rng = seeded_rng(n as u64);
            for _ in 0..25 {
                let v = random_unit_vector(&mut rng, n * n);
                let pv =
                    HistoryProposition::new(projector_from_vector(&v), DEFAULT_TOL).unwrap();
                let mut asym = 0.0;
                for i in 0..n {
                    for j in (i + 1)..n {
                        asym += (v[i * n + j] - v[j * n + i]).norm_sqr();
                    }
                }
                let expected = (1.0 - asym) / n as f64;
                let got = d.eval(&one, &pv).unwrap();
                assert_abs_diff_eq!(got.re, expected, epsilon = 1e-10);
                assert!(got.im.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn two_time_agrees_with_chain_recipe() {
        let mut rng = seeded_rng(21);
        let rho = random_density(&mut rng, 2);
        let tt = DecoherenceFunction::from_two_time(rho.clone(), DEFAULT_TOL).unwrap();
        let id = ComplexMatrix::identity(2);
        let chain = DecoherenceFunction::from_chain(
            rho,
            vec![id.clone(), id.clone(), id],
            2,
            DEFAULT_TOL,
        )
        .unwrap();
        for _ in 0..50 {
            let a = HomogeneousHistory::new(
                vec![random_projector(&mut rng, 2, 1), random_projector(&mut rng, 2, 1)],
                DEFAULT_TOL,
            )
            .unwrap();
            let b = HomogeneousHistory::new(
                vec![random_projector(&mut rng, 2, 1), random_projector(&mut rng, 2, 2)],
                DEFAULT_TOL,
            )
            .unwrap();
            let sa = HomogeneousSum::single(a);
            let sb = HomogeneousSum::single(b);
            let lhs = tt.eval_sum(&sa, &sb).unwrap();
            let rhs = chain.eval_sum(&sa, &sb).unwrap();
            assert!((lhs - rhs).norm() < 1e-10, "mismatch {lhs} vs {rhs}");
        }
    }

    #[test]
    fn chain_single_time_reduces_to_heisenberg_values() {
        let mut rng = seeded_rng(31);
        let rho = random_density(&mut rng, 3);
        let u = crate::sample::random_unitary(&mut rng, 3);
        // closing evolution returns to the initial time
        let d = DecoherenceFunction::from_chain(
            rho.clone(),
            vec![u.clone(), u.adjoint()],
            1,
            DEFAULT_TOL,
        )
        .unwrap();
        for _ in 0..20 {
            let p = random_projector(&mut rng, 3, 1);
            let q = random_projector(&mut rng, 3, 1);
            let pa = HistoryProposition::new(p.clone(), DEFAULT_TOL).unwrap();
            let qa = HistoryProposition::new(q.clone(), DEFAULT_TOL).unwrap();
            let got = d.eval(&pa, &qa).unwrap();
            // direct formula with Heisenberg conjugation
            let ca = u.mul(&p).mul(&u.adjoint());
            let cb = u.mul(&q).mul(&u.adjoint());
            let direct = ca.adjoint().mul(&rho).mul(&cb).trace();
            assert!((got - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn chain_all_identity_projectors_normalise() {
        let mut rng = seeded_rng(37);
        let rho = random_density(&mut rng, 2);
        let u1 = crate::sample::random_unitary(&mut rng, 2);
        let u2 = crate::sample::random_unitary(&mut rng, 2);
        let u3 = crate::sample::random_unitary(&mut rng, 2);
        let d = DecoherenceFunction::from_chain(rho, vec![u1, u2, u3], 2, DEFAULT_TOL).unwrap();
        let id = ComplexMatrix::identity(2);
        let ones = HomogeneousSum::single(
            HomogeneousHistory::new(vec![id.clone(), id], DEFAULT_TOL).unwrap(),
        );
        let got = d.eval_sum(&ones, &ones).unwrap();
        assert!((got - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn chain_spectral_histories_have_state_probabilities() {
        let mut rng = seeded_rng(41);
        let u = crate::sample::random_unitary(&mut rng, 3);
        let diag = ComplexMatrix::diag_real(&[0.5, 0.3, 0.2]);
        let rho = u.mul(&diag).mul(&u.adjoint());
        let ev = crate::sample::random_unitary(&mut rng, 3);
        let d = DecoherenceFunction::from_chain(
            rho.clone(),
            vec![ev.clone(), ev.adjoint()],
            1,
            DEFAULT_TOL,
        )
        .unwrap();
        let es = crate::matrix::herm_eig(&rho, DEFAULT_TOL).unwrap();
        // Heisenberg-rotated spectral projectors undo the evolution
        for (k, p) in es.eigenprojectors.iter().enumerate() {
            let rotated = ev.adjoint().mul(p).mul(&ev);
            let prop = HistoryProposition::new(rotated, 1e-8).unwrap();
            let got = d.eval(&prop, &prop).unwrap();
            assert_abs_diff_eq!(got.re, es.eigenvalues[k], epsilon = 1e-10);
        }
    }

    #[test]
    fn chain_rejects_raw_projectors_beyond_one_time() {
        let rho = ComplexMatrix::diag_real(&[0.5, 0.5]);
        let id = ComplexMatrix::identity(2);
        let d =
            DecoherenceFunction::from_chain(rho, vec![id.clone(), id.clone(), id], 2, DEFAULT_TOL)
                .unwrap();
        let p = basis_proposition(4, &[0]);
        assert!(matches!(
            d.eval(&p, &p),
            Err(DecoherenceError::InhomogeneousChainEval)
        ));
    }

    #[test]
    fn chain_window_probabilities_sum_to_one() {
        // per-time resolutions tensor into a full homogeneous window
        let mut rng = seeded_rng(47);
        let rho = random_density(&mut rng, 2);
        let u1 = crate::sample::random_unitary(&mut rng, 2);
        let u2 = crate::sample::random_unitary(&mut rng, 2);
        let u3 = crate::sample::random_unitary(&mut rng, 2);
        let d =
            DecoherenceFunction::from_chain(rho, vec![u1, u2, u3], 2, DEFAULT_TOL).unwrap();
        let basis1 = crate::sample::random_unitary(&mut rng, 2);
        let basis2 = crate::sample::random_unitary(&mut rng, 2);
        let mut sums = Vec::new();
        for i in 0..2 {
            for j in 0..2 {
                let h = HomogeneousHistory::new(
                    vec![
                        projector_from_columns(&basis1, i..i + 1),
                        projector_from_columns(&basis2, j..j + 1),
                    ],
                    DEFAULT_TOL,
                )
                .unwrap();
                sums.push(HomogeneousSum::single(h));
            }
        }
        let w = Window::from_homogeneous(sums, DEFAULT_TOL).unwrap();
        let gram = d.window_gram(&w).unwrap();
        let total: f64 = (0..4).map(|i| gram[i][i].re).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn convex_combination_endpoints_and_midpoint() {
        let d1 = DecoherenceFunction::from_explicit(x_peaked());
        // swap-conjugated copy: beta ⊗ beta
        let beta = ComplexMatrix::diag_real(&[0.0, 1.0]);
        let d2 = DecoherenceFunction::from_explicit(
            DecoherenceOperator::new(kron(&beta, &beta).unwrap(), 2).unwrap(),
        );
        let mut rng = seeded_rng(51);
        let pairs: Vec<(HistoryProposition, HistoryProposition)> = (0..20)
            .map(|_| {
                (
                    HistoryProposition::new(random_projector(&mut rng, 2, 1), DEFAULT_TOL)
                        .unwrap(),
                    HistoryProposition::new(random_projector(&mut rng, 2, 1), DEFAULT_TOL)
                        .unwrap(),
                )
            })
            .collect();

        let all_one = convex_combine(&d1, &d2, 1.0).unwrap();
        let all_two = convex_combine(&d1, &d2, 0.0).unwrap();
        let half = convex_combine(&d1, &d2, 0.5).unwrap();
        for (a, b) in &pairs {
            let v1 = d1.eval(a, b).unwrap();
            let v2 = d2.eval(a, b).unwrap();
            assert!((all_one.eval(a, b).unwrap() - v1).norm() < 1e-14);
            assert!((all_two.eval(a, b).unwrap() - v2).norm() < 1e-14);
            let expected = (v1 + v2) * c(0.5, 0.0);
            assert!((half.eval(a, b).unwrap() - expected).norm() < 1e-13);
        }
        assert!(matches!(
            convex_combine(&d1, &d2, 1.5),
            Err(DecoherenceError::InvalidLambda(_))
        ));
    }

    #[test]
    fn impurity_split_degenerate_and_pointwise() {
        let mut rng = seeded_rng(61);
        let s = random_hermitian(&mut rng, 2);
        let x = x_peaked();
        // s1 = s2 gives Y = 0 and X+ = X- = X, entrywise
        let (plus, minus) = impurity_split(&x, &s, &s, DEFAULT_TOL).unwrap();
        assert_eq!(plus.matrix(), x.matrix());
        assert_eq!(minus.matrix(), x.matrix());

        for _ in 0..20 {
            let s1 = random_hermitian(&mut rng, 2);
            let s2 = random_hermitian(&mut rng, 2);
            let (plus, minus) = impurity_split(&x, &s1, &s2, DEFAULT_TOL).unwrap();
            // reconstruction to machine precision
            let recombined = plus
                .matrix()
                .scale_real(0.5)
                .add(&minus.matrix().scale_real(0.5));
            assert!(recombined.max_abs_diff(x.matrix()) < 1e-15);
            // the skew part never contributes on the diagonal
            for _ in 0..10 {
                let p = HistoryProposition::new(
                    random_projector(&mut rng, 2, 1),
                    DEFAULT_TOL,
                )
                .unwrap();
                let y_diag = plus.eval(&p, &p).unwrap() - x.eval(&p, &p).unwrap();
                assert!(y_diag.norm() < 1e-12);
            }
            // pointwise halves
            let dp = DecoherenceFunction::from_explicit(plus);
            let dm = DecoherenceFunction::from_explicit(minus);
            let dx = DecoherenceFunction::from_explicit(x.clone());
            for _ in 0..10 {
                let a = HistoryProposition::new(random_projector(&mut rng, 2, 1), DEFAULT_TOL)
                    .unwrap();
                let b = HistoryProposition::new(random_projector(&mut rng, 2, 1), DEFAULT_TOL)
                    .unwrap();
                let lhs = dx.eval(&a, &b).unwrap();
                let rhs = (dp.eval(&a, &b).unwrap() + dm.eval(&a, &b).unwrap()) * c(0.5, 0.0);
                assert!((lhs - rhs).norm() < 1e-12);
            }
        }

        let skew = ComplexMatrix::from_rows(vec![
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        assert!(matches!(
            impurity_split(&x, &skew, &s, DEFAULT_TOL),
            Err(DecoherenceError::NotHermitian { .. })
        ));
    }

    #[test]
    fn canonical_operator_cases() {
        // trivial window: X~ = 1 / (dim V)^2
        let d = DecoherenceFunction::from_explicit(x_mixer());
        let w = Window::trivial(2);
        let canon = canonical_operator(&d, &w, DEFAULT_TOL).unwrap();
        let expected = ComplexMatrix::identity(4).scale_real(0.25);
        assert!(canon.matrix().max_abs_diff(&expected) < 1e-14);
        assert!(validate(&canon, 20, DEFAULT_TOL, 0).passed());

        // peaked operator: the two-block window reproduces a ⊗ a
        let d = DecoherenceFunction::from_explicit(x_peaked());
        let w = make_window(
            vec![basis_proposition(2, &[0]), basis_proposition(2, &[1])],
            DEFAULT_TOL,
        )
        .unwrap();
        let canon = canonical_operator(&d, &w, DEFAULT_TOL).unwrap();
        assert!(canon.matrix().max_abs_diff(x_peaked().matrix()) < 1e-14);

        // spectral window of a random single-time state: diagonals reproduced
        let mut rng = seeded_rng(71);
        let rho = random_density(&mut rng, 3);
        let d = DecoherenceFunction::from_single_time(rho.clone(), DEFAULT_TOL).unwrap();
        let es = herm_eig(&rho, DEFAULT_TOL).unwrap();
        let blocks: Vec<HistoryProposition> = es
            .eigenprojectors
            .iter()
            .map(|p| HistoryProposition::new(p.clone(), 1e-8).unwrap())
            .collect();
        let w = make_window(blocks, 1e-8).unwrap();
        let canon = canonical_operator(&d, &w, DEFAULT_TOL).unwrap();
        let dc = DecoherenceFunction::from_explicit(canon.clone());
        for b in w.blocks() {
            let lhs = dc.eval(b, b).unwrap();
            let rhs = d.eval(b, b).unwrap();
            assert!((lhs - rhs).norm() < 1e-10);
        }
        // positive self-adjoint
        let es = herm_eig(canon.matrix(), 1e-8).unwrap();
        assert!(es.eigenvalues.iter().all(|&v| v >= -1e-10));

        // inconsistent window rejected
        let d = DecoherenceFunction::from_explicit(x_mixer());
        let w = make_window(
            vec![basis_proposition(2, &[0]), basis_proposition(2, &[1])],
            DEFAULT_TOL,
        )
        .unwrap();
        assert!(matches!(
            canonical_operator(&d, &w, DEFAULT_TOL),
            Err(DecoherenceError::InconsistentWindow { .. })
        ));
    }

    #[test]
    fn purity_and_equivalence() {
        let d = DecoherenceFunction::from_explicit(x_peaked());
        let w = make_window(
            vec![basis_proposition(2, &[0]), basis_proposition(2, &[1])],
            DEFAULT_TOL,
        )
        .unwrap();
        let cls = WEquivalenceClass::new(&d, &w, DEFAULT_TOL).unwrap();
        assert_eq!(cls.diagonal().len(), 2);
        assert!(is_w_pure(&cls));

        let half = DecoherenceFunction::from_single_time(
            ComplexMatrix::diag_real(&[0.5, 0.5]),
            DEFAULT_TOL,
        )
        .unwrap();
        let cls = WEquivalenceClass::new(&half, &w, DEFAULT_TOL).unwrap();
        assert!(!is_w_pure(&cls));

        // a function is equivalent to its own canonical representative
        let mut rng = seeded_rng(81);
        let rho = random_density(&mut rng, 2);
        let d = DecoherenceFunction::from_single_time(rho, DEFAULT_TOL).unwrap();
        let canon = canonical_operator(&d, &w, DEFAULT_TOL).unwrap();
        let dc = DecoherenceFunction::from_explicit(canon);
        assert!(w_equivalent(&d, &dc, &w, 1e-9).unwrap());

        // the mixer is not consistent there, so never equivalent
        let mixer = DecoherenceFunction::from_explicit(x_mixer());
        assert!(!w_equivalent(&mixer, &dc, &w, 1e-9).unwrap());
    }

    #[test]
    fn axioms_hold_for_chain_backends() {
        let mut rng = seeded_rng(87);
        let rho = random_density(&mut rng, 2);
        let evolutions: Vec<ComplexMatrix> =
            (0..3).map(|_| crate::sample::random_unitary(&mut rng, 2)).collect();
        let d = DecoherenceFunction::from_chain(rho, evolutions, 2, DEFAULT_TOL).unwrap();

        let id = ComplexMatrix::identity(2);
        let ones = HomogeneousSum::single(
            HomogeneousHistory::new(vec![id.clone(), id], DEFAULT_TOL).unwrap(),
        );
        assert!((d.eval_sum(&ones, &ones).unwrap() - c(1.0, 0.0)).norm() < 1e-10);

        for _ in 0..200 {
            let mk = |rng: &mut rand_chacha::ChaCha8Rng, rank: usize| {
                HomogeneousSum::single(
                    HomogeneousHistory::new(
                        vec![
                            random_projector(rng, 2, rank),
                            random_projector(rng, 2, 1),
                        ],
                        DEFAULT_TOL,
                    )
                    .unwrap(),
                )
            };
            let rank = 1 + rng.random_range(0..2usize);
            let a = mk(&mut rng, rank);
            let b = mk(&mut rng, 1);
            let ab = d.eval_sum(&a, &b).unwrap();
            let ba = d.eval_sum(&b, &a).unwrap();
            assert!((ab - ba.conj()).norm() < 1e-10);

            // additivity over a disjoint pair of homogeneous histories
            let u = random_unitary(&mut rng, 2);
            let second = random_projector(&mut rng, 2, 1);
            let h1 = HomogeneousHistory::new(
                vec![projector_from_columns(&u, 0..1), second.clone()],
                DEFAULT_TOL,
            )
            .unwrap();
            let h2 = HomogeneousHistory::new(
                vec![projector_from_columns(&u, 1..2), second],
                DEFAULT_TOL,
            )
            .unwrap();
            let joined = HomogeneousSum::new(vec![h1.clone(), h2.clone()], DEFAULT_TOL).unwrap();
            let lhs = d.eval_sum(&joined, &b).unwrap();
            let rhs = d.eval_sum(&HomogeneousSum::single(h1), &b).unwrap()
                + d.eval_sum(&HomogeneousSum::single(h2), &b).unwrap();
            assert!((lhs - rhs).norm() < 1e-10);
        }
    }

    #[test]
    fn axioms_hold_on_random_pairs_for_every_backend() {
        let mut rng = seeded_rng(91);
        let rho = random_density(&mut rng, 3);
        let single =
            DecoherenceFunction::from_single_time(rho.clone(), DEFAULT_TOL).unwrap();
        let skew1 = random_hermitian(&mut rng, 3);
        let skew2 = random_hermitian(&mut rng, 3);
        let shifted = {
            let (plus, _) = impurity_split(
                single.explicit_operator().unwrap(),
                &skew1,
                &skew2,
                DEFAULT_TOL,
            )
            .unwrap();
            DecoherenceFunction::from_explicit(plus)
        };
        let mixed = convex_combine(&single, &shifted, 0.3).unwrap();

        for d in [&single, &shifted, &mixed] {
            let one = HistoryProposition::unit(3);
            assert!((d.eval(&one, &one).unwrap() - c(1.0, 0.0)).norm() < 1e-10);
            for _ in 0..200 {
                let rank = 1 + rng.random_range(0..2usize);
                let a = HistoryProposition::new(
                    random_projector(&mut rng, 3, rank),
                    DEFAULT_TOL,
                )
                .unwrap();
                let b = HistoryProposition::new(
                    random_projector(&mut rng, 3, 1),
                    DEFAULT_TOL,
                )
                .unwrap();
                // Hermiticity
                let ab = d.eval(&a, &b).unwrap();
                let ba = d.eval(&b, &a).unwrap();
                assert!((ab - ba.conj()).norm() < 1e-10);
            }
            // additivity over random disjoint splits
            for _ in 0..200 {
                let u = random_unitary(&mut rng, 3);
                let a = HistoryProposition::new(projector_from_columns(&u, 0..1), DEFAULT_TOL)
                    .unwrap();
                let b = HistoryProposition::new(projector_from_columns(&u, 1..2), DEFAULT_TOL)
                    .unwrap();
                let g = HistoryProposition::new(
                    random_projector(&mut rng, 3, 1),
                    DEFAULT_TOL,
                )
                .unwrap();
                let joined = crate::histories::oplus(&a, &b, DEFAULT_TOL).unwrap();
                let lhs = d.eval(&joined, &g).unwrap();
                let rhs = d.eval(&a, &g).unwrap() + d.eval(&b, &g).unwrap();
                assert!((lhs - rhs).norm() < 1e-10);
            }
        }
    }
}
