//! Minimisation of the information-entropy over consistent windows.
//!
//! The global minimum over all windows is out of reach in general; each
//! strategy here either attains a provable value (spectral windows for
//! state-plus-unitary-evolution recipes) or reports the best consistent
//! window it found, which is an upper bound on the true minimum.

use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::decoherence::{Backend, DecoherenceError, DecoherenceFunction};
use crate::entropy::{self, EntropyError};
use crate::histories::{
    HistoryError, HistoryProposition, HomogeneousHistory, HomogeneousSum, Window,
};
use crate::matrix::{
    C64, ComplexMatrix, EigMode, MatrixError, herm_eig_with, kron, partial_trace_second,
    projector_basis,
};
use crate::sample::{
    projector_from_vector, random_unit_vector, random_unitary, seeded_rng,
};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    History(#[from] HistoryError),
    #[error(transparent)]
    Decoherence(#[from] DecoherenceError),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error("spectral strategy needs a state-plus-evolutions recipe behind the function")]
    SpectralNeedsRecipe,
    #[error("spectral strategy needs unitary evolutions; a non-unitary step breaks the Heisenberg window")]
    NonUnitaryEvolution,
    #[error("greedy refinement needs an explicit-operator backend")]
    GreedyNeedsExplicit,
    #[error("chain recipe with {n_times} time slots cannot evaluate arbitrary rank-1 windows")]
    IncompatibleBackend { n_times: usize },
    #[error("candidate family is empty")]
    EmptyFamily,
    #[error("basis matrix is not unitary: residual {residual:.3e}")]
    NotUnitary { residual: f64 },
}

/// Which minimisation strategy produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Heisenberg spectral window; attains the provable minimum for
    /// unitary recipes.
    Spectral,
    /// Grid plus coordinate descent over windows of rank-1 projectors.
    Param1d,
    /// Step-wise block splitting guided by the compressed operator.
    Greedy,
    /// Exact minimum over a caller-supplied window family.
    Exhaustive,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Strategy::Spectral => "spectral",
            Strategy::Param1d => "param1d",
            Strategy::Greedy => "greedy",
            Strategy::Exhaustive => "exhaustive",
        };
        f.write_str(name)
    }
}

/// Outcome of a minimisation run. Except for [`Strategy::Spectral`] on
/// unitary recipes the value is an upper bound on the true minimum.
#[derive(Debug, Clone)]
pub struct SearchResult {
    pub best_value: f64,
    pub best_window: Window,
    pub strategy: Strategy,
    /// Number of windows whose entropy was evaluated.
    pub evaluations: usize,
    pub seed: u64,
}

/// Resolution of the parametrised search.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    /// Polar steps of the Bloch grid (dimension 2).
    pub theta_steps: usize,
    /// Azimuthal steps of the Bloch grid (dimension 2).
    pub phi_steps: usize,
    /// Seeded basis samples above dimension 2.
    pub basis_samples: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { theta_steps: 49, phi_steps: 48, basis_samples: 200 }
    }
}

fn try_window(
    d: &DecoherenceFunction,
    w: &Window,
    tol: f64,
    evaluations: &mut usize,
) -> Result<Option<f64>, SearchError> {
    *evaluations += 1;
    match entropy::report(d, w, tol) {
        Ok(rep) => Ok(Some(rep.i_norm)),
        Err(EntropyError::InconsistentWindow { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn trivial_result(
    d: &DecoherenceFunction,
    strategy: Strategy,
    evaluations: usize,
    seed: u64,
    tol: f64,
) -> Result<SearchResult, SearchError> {
    let w = Window::trivial(d.dim_v());
    let value = entropy::report(d, &w, tol)?.i_norm;
    Ok(SearchResult {
        best_value: value,
        best_window: w,
        strategy,
        evaluations: evaluations + 1,
        seed,
    })
}

/// Minimise over the Heisenberg spectral window of the recipe behind `d`.
///
/// The per-time projectors are the rank-1 spectral projectors of the
/// initial state, conjugated by the accumulated evolution so that the
/// chain telescopes; degenerate eigenspaces are split into the solver's
/// orthonormal refinement. For unitary evolutions the resulting value is
/// `-tr(rho ln rho) - 2 ln(dim V)`, the provable minimum over homogeneous
/// windows.
pub fn minimize_spectral(
    d: &DecoherenceFunction,
    tol: f64,
) -> Result<SearchResult, SearchError> {
    let recipe = d.recipe().ok_or(SearchError::SpectralNeedsRecipe)?;
    if !recipe.evolutions_unitary(tol.max(1e-12)) {
        return Err(SearchError::NonUnitaryEvolution);
    }
    let eig = herm_eig_with(recipe.rho(), tol, EigMode::RankOne)?;
    let n = recipe.dim_h();
    let n_times = recipe.n_times();

    // accumulated evolutions G_k = U_0 U_1 ... U_{k-1}
    let mut accumulated = Vec::with_capacity(n_times);
    let mut g = recipe.evolutions()[0].clone();
    accumulated.push(g.clone());
    for k in 1..n_times {
        g = g.mul(&recipe.evolutions()[k]);
        accumulated.push(g.clone());
    }
    let per_time: Vec<Vec<ComplexMatrix>> = accumulated
        .iter()
        .map(|gk| {
            eig.eigenprojectors
                .iter()
                .map(|p| gk.adjoint().mul(p).mul(gk))
                .collect()
        })
        .collect();

    let block_count = n.pow(n_times as u32);
    let mut sums = Vec::with_capacity(block_count);
    for flat in 0..block_count {
        let mut rest = flat;
        let mut parts = Vec::with_capacity(n_times);
        for slot in &per_time {
            parts.push(slot[rest % n].clone());
            rest /= n;
        }
        let history = HomogeneousHistory::new(parts, tol.max(1e-10))?;
        sums.push(HomogeneousSum::single(history));
    }
    let window = Window::from_homogeneous(sums, tol.max(1e-10))?;
    let rep = entropy::report(d, &window, tol)?;
    Ok(SearchResult {
        best_value: rep.i_norm,
        best_window: window,
        strategy: Strategy::Spectral,
        evaluations: 1,
        seed: 0,
    })
}

fn bloch_columns(theta: f64, phi: f64) -> (Vec<C64>, Vec<C64>) {
    let c = (theta / 2.0).cos();
    let s = (theta / 2.0).sin();
    let phase = C64::new(phi.cos(), phi.sin());
    let first = vec![C64::new(c, 0.0), phase * s];
    let second = vec![-phase.conj() * s, C64::new(c, 0.0)];
    (first, second)
}

fn window_from_bloch(theta: f64, phi: f64) -> Window {
    let (c1, c2) = bloch_columns(theta, phi);
    let blocks = vec![
        HistoryProposition::trusted(projector_from_vector(&c1), 1),
        HistoryProposition::trusted(projector_from_vector(&c2), 1),
    ];
    Window::trusted(blocks, 2, None)
}

fn window_from_unitary(u: &ComplexMatrix) -> Window {
    let n = u.dim();
    let blocks = (0..n)
        .map(|c| {
            let col: Vec<C64> = (0..n).map(|r| u.get(r, c)).collect();
            HistoryProposition::trusted(projector_from_vector(&col), 1)
        })
        .collect();
    Window::trusted(blocks, n, None)
}

fn givens(n: usize, p: usize, q: usize, angle: f64, phase: bool) -> ComplexMatrix {
    let mut g = ComplexMatrix::identity(n);
    let c = C64::new(angle.cos(), 0.0);
    let s = if phase {
        C64::new(0.0, angle.sin())
    } else {
        C64::new(angle.sin(), 0.0)
    };
    g.set(p, p, c);
    g.set(q, q, c);
    g.set(p, q, -s.conj());
    g.set(q, p, s);
    g
}

/// Search windows of rank-1 projectors parametrised by unitaries: the
/// Bloch grid in dimension 2, the identity plus seeded random bases above,
/// followed by `refine_steps` rounds of coordinate descent around the best
/// consistent grid point. Returns the trivial window with value 0 when no
/// candidate is consistent.
pub fn minimize_parametrized_1d(
    d: &DecoherenceFunction,
    grid: &GridSpec,
    refine_steps: usize,
    seed: u64,
    tol: f64,
) -> Result<SearchResult, SearchError> {
    if let Backend::Chain(recipe) = d.backend() {
        if recipe.n_times() > 1 {
            return Err(SearchError::IncompatibleBackend { n_times: recipe.n_times() });
        }
    }
    let dim = d.dim_v();
    let mut evaluations = 0usize;
    if dim == 1 {
        return trivial_result(d, Strategy::Param1d, evaluations, seed, tol);
    }

    enum Best {
        Bloch { theta: f64, phi: f64 },
        Basis(ComplexMatrix),
    }
    let mut best: Option<(f64, Window, Best)> = None;
    let consider =
        |value: f64, window: Window, point: Best, best: &mut Option<(f64, Window, Best)>| {
            let better = match best {
                None => true,
                Some((current, _, _)) => value < *current,
            };
            if better {
                *best = Some((value, window, point));
            }
        };

    if dim == 2 {
        let t_steps = grid.theta_steps.max(2);
        let p_steps = grid.phi_steps.max(1);
        for i in 0..t_steps {
            let theta = std::f64::consts::PI * i as f64 / (t_steps - 1) as f64;
            for j in 0..p_steps {
                let phi = 2.0 * std::f64::consts::PI * j as f64 / p_steps as f64;
                let w = window_from_bloch(theta, phi);
                if let Some(v) = try_window(d, &w, tol, &mut evaluations)? {
                    consider(v, w, Best::Bloch { theta, phi }, &mut best);
                }
            }
        }
    } else {
        let mut rng = seeded_rng(seed);
        let identity = ComplexMatrix::identity(dim);
        let mut candidates = vec![identity];
        for _ in 0..grid.basis_samples {
            candidates.push(random_unitary(&mut rng, dim));
        }
        for u in candidates {
            let w = window_from_unitary(&u);
            if let Some(v) = try_window(d, &w, tol, &mut evaluations)? {
                consider(v, w, Best::Basis(u), &mut best);
            }
        }
    }

    let Some((mut best_value, mut best_window, mut point)) = best else {
        return trivial_result(d, Strategy::Param1d, evaluations, seed, tol);
    };

    // coordinate descent around the best grid point
    match &mut point {
        Best::Bloch { theta, phi } => {
            let mut dt = std::f64::consts::PI / grid.theta_steps.max(2) as f64;
            let mut dp = 2.0 * std::f64::consts::PI / grid.phi_steps.max(1) as f64;
            for _ in 0..refine_steps {
                let mut improved = false;
                let moves = [(dt, 0.0), (-dt, 0.0), (0.0, dp), (0.0, -dp)];
                for (mt, mp) in moves {
                    let nt = (*theta + mt).clamp(0.0, std::f64::consts::PI);
                    let np = *phi + mp;
                    let w = window_from_bloch(nt, np);
                    if let Some(v) = try_window(d, &w, tol, &mut evaluations)? {
                        if v < best_value - 1e-15 {
                            best_value = v;
                            best_window = w;
                            *theta = nt;
                            *phi = np;
                            improved = true;
                        }
                    }
                }
                if !improved {
                    dt /= 2.0;
                    dp /= 2.0;
                }
            }
        }
        Best::Basis(u) => {
            let mut delta = 0.2_f64;
            for _ in 0..refine_steps {
                let mut improved = false;
                'pairs: for p in 0..dim {
                    for q in (p + 1)..dim {
                        for phase in [false, true] {
                            for sign in [1.0, -1.0] {
                                let rotated = u.mul(&givens(dim, p, q, sign * delta, phase));
                                let w = window_from_unitary(&rotated);
                                if let Some(v) = try_window(d, &w, tol, &mut evaluations)? {
                                    if v < best_value - 1e-15 {
                                        best_value = v;
                                        best_window = w;
                                        *u = rotated;
                                        improved = true;
                                        continue 'pairs;
                                    }
                                }
                            }
                        }
                    }
                }
                if !improved {
                    delta /= 2.0;
                }
            }
        }
    }

    Ok(SearchResult {
        best_value,
        best_window,
        strategy: Strategy::Param1d,
        evaluations,
        seed,
    })
}

/// Step-wise refinement from the trivial window: each round proposes
/// splitting every block along the spectral projectors of the operator's
/// Hermitian part compressed onto that block, plus seeded random splits,
/// and keeps the consistent split with the largest entropy decrease.
pub fn minimize_greedy_refinement(
    d: &DecoherenceFunction,
    max_rounds: usize,
    candidates_per_block: usize,
    seed: u64,
    tol: f64,
) -> Result<SearchResult, SearchError> {
    let op = d.explicit_operator().ok_or(SearchError::GreedyNeedsExplicit)?;
    let hermitian_part = op.matrix().add(&op.matrix().adjoint()).scale_real(0.5);
    let dim = d.dim_v();
    let mut rng = seeded_rng(seed);

    let mut evaluations = 0usize;
    let mut window = Window::trivial(dim);
    let mut value = try_window(d, &window, tol, &mut evaluations)?
        .expect("trivial window is consistent");

    for _ in 0..max_rounds {
        let mut best_split: Option<(f64, Window)> = None;
        for (bi, block) in window.blocks().iter().enumerate() {
            let m = block.dim();
            if m < 2 {
                continue;
            }
            let basis = projector_basis(block.matrix(), tol.max(1e-8))?;
            let mut split_projectors: Vec<(ComplexMatrix, usize)> = Vec::new();

            // spectral splits of the compressed Hermitian part
            let big = kron(block.matrix(), block.matrix())?;
            let compressed = big.mul(&hermitian_part).mul(&big);
            let reduced = partial_trace_second(&compressed, dim, dim);
            let inner = basis.adjoint().mul(&reduced).mul(&basis);
            if inner.hermiticity_residual() <= 1e-8 {
                let es = herm_eig_with(
                    &inner,
                    1e-8,
                    EigMode::Grouped { rel_threshold: 1e-8 },
                )?;
                for p_in in &es.eigenprojectors {
                    let rank = p_in.trace().re.round() as usize;
                    if rank == 0 || rank >= m {
                        continue;
                    }
                    let lifted = basis.mul(p_in).mul(&basis.adjoint());
                    split_projectors.push((lifted, rank));
                }
            }
            // seeded random splits inside the block
            for _ in 0..candidates_per_block {
                let w_in = random_unitary(&mut rng, m);
                let rank = rng.random_range(1..m);
                let p_in = crate::sample::projector_from_columns(&w_in, 0..rank);
                let lifted = basis.mul(&p_in).mul(&basis.adjoint());
                split_projectors.push((lifted, rank));
            }

            for (sub, rank) in split_projectors {
                let first = HistoryProposition::trusted(sub, rank);
                let second = HistoryProposition::trusted(
                    block.matrix().sub(first.matrix()),
                    m - rank,
                );
                let mut blocks = window.blocks().to_vec();
                blocks[bi] = first;
                blocks.insert(bi + 1, second);
                let candidate = Window::trusted(blocks, dim, None);
                if let Some(v) = try_window(d, &candidate, tol, &mut evaluations)? {
                    let better = match &best_split {
                        None => v < value - 1e-12,
                        Some((current, _)) => v < *current,
                    };
                    if better {
                        best_split = Some((v, candidate));
                    }
                }
            }
        }
        match best_split {
            Some((v, w)) if v < value - 1e-12 => {
                value = v;
                window = w;
            }
            _ => break,
        }
    }

    Ok(SearchResult {
        best_value: value,
        best_window: window,
        strategy: Strategy::Greedy,
        evaluations,
        seed,
    })
}

/// Exact minimum over a caller-supplied family of candidate windows.
/// Inconsistent members are skipped; if nothing in the family is
/// consistent the trivial window is returned with value 0. Ties keep the
/// earliest family member.
pub fn minimize_exhaustive(
    d: &DecoherenceFunction,
    family: &[Window],
    tol: f64,
) -> Result<SearchResult, SearchError> {
    if family.is_empty() {
        return Err(SearchError::EmptyFamily);
    }
    let mut evaluations = 0usize;
    let mut best: Option<(f64, Window)> = None;
    for w in family {
        if let Some(v) = try_window(d, w, tol, &mut evaluations)? {
            let better = match &best {
                None => true,
                Some((current, _)) => v < *current,
            };
            if better {
                best = Some((v, w.clone()));
            }
        }
    }
    match best {
        Some((best_value, best_window)) => Ok(SearchResult {
            best_value,
            best_window,
            strategy: Strategy::Exhaustive,
            evaluations,
            seed: 0,
        }),
        None => trivial_result(d, Strategy::Exhaustive, evaluations, 0, tol),
    }
}

/// Every window generated by a fixed orthonormal basis: the rank-1 window
/// of its columns together with all of its coarse-grainings.
pub fn windows_from_basis(
    u: &ComplexMatrix,
    tol: f64,
) -> Result<Vec<Window>, SearchError> {
    let residual = u.unitarity_residual();
    if residual > tol {
        return Err(SearchError::NotUnitary { residual });
    }
    let finest = window_from_unitary(u);
    Ok(finest.coarse_grainings()?.collect())
}

/// Scan seeded random unit vectors (plus, on doubled spaces, their
/// index-transposed symmetrisations) for the largest rank-1 diagonal value
/// `d(P_v, P_v)`. Returns the maximum and the achieving amplitudes.
pub fn max_rank1_probability(
    d: &DecoherenceFunction,
    samples: usize,
    seed: u64,
) -> Result<(f64, Vec<C64>), SearchError> {
    let dim = d.dim_v();
    let mut rng = seeded_rng(seed);
    let side = (1..=dim).find(|k| k * k == dim);
    let mut best = f64::NEG_INFINITY;
    let mut best_vector = Vec::new();
    let mut consider = |v: Vec<C64>, d: &DecoherenceFunction| -> Result<(), SearchError> {
        let p = HistoryProposition::trusted(projector_from_vector(&v), 1);
        let value = d.eval(&p, &p)?.re;
        if value > best {
            best = value;
            best_vector = v;
        }
        Ok(())
    };
    for _ in 0..samples {
        let v = random_unit_vector(&mut rng, dim);
        if let Some(n) = side {
            // symmetrise the two tensor slots
            let mut sym: Vec<C64> = (0..dim)
                .map(|idx| {
                    let (i, j) = (idx / n, idx % n);
                    (v[i * n + j] + v[j * n + i]) * C64::new(0.5, 0.0)
                })
                .collect();
            let norm: f64 = sym.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-8 {
                for z in &mut sym {
                    *z /= norm;
                }
                consider(sym, d)?;
            }
            // aligned product amplitudes u ⊗ u: symmetric of unit rank
            let u = random_unit_vector(&mut rng, n);
            let mut prod = Vec::with_capacity(dim);
            for i in 0..n {
                for j in 0..n {
                    prod.push(u[i] * u[j]);
                }
            }
            consider(prod, d)?;
        }
        consider(v, d)?;
    }
    Ok((best, best_vector))
}
