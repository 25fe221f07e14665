//! Information-entropy of a decoherence function on a window.
//!
//! On a consistent window the diagonal values `p_i = d(a_i, a_i)` form a
//! probability distribution and the dimension-weighted entropy
//!
//! ```text
//! i_hat  = -sum_i p_i ln( p_i / (dim a_i)^2 )
//! i_norm = i_hat - 2 ln(dim V)
//!        = -sum_i p_i ln( p_i / (dim a_i / dim V)^2 )
//! ```
//!
//! is non-increasing under refinement of the window. `i_norm` is 0 on the
//! trivial window and at least `-2 ln(dim V)` everywhere, the relative
//! dimension making it insensitive to trivial time insertions. The
//! one-parameter family `i_x` replaces the square of the relative dimension
//! by its `x`-th power; refinement monotonicity is guaranteed for `x >= 1`
//! (at `x = 0` it degenerates to the plain Shannon entropy of the
//! distribution, which rewards coarse questions instead).

use thiserror::Error;

use crate::decoherence::{DecoherenceError, DecoherenceFunction, gram_offdiag_residual};
use crate::histories::{HistoryError, Window};
use crate::matrix::C64;

#[derive(Debug, Error)]
pub enum EntropyError {
    #[error(transparent)]
    Decoherence(#[from] DecoherenceError),
    #[error(transparent)]
    History(#[from] HistoryError),
    #[error("window is not consistent: off-diagonal residual {residual:.3e} exceeds {tol:.3e}")]
    InconsistentWindow { residual: f64, tol: f64 },
    #[error("argument out of domain: {0}")]
    Domain(String),
}

/// Result of a consistency check; the residual is reported either way.
#[derive(Debug, Clone, Copy)]
pub struct ConsistencyCheck {
    pub consistent: bool,
    /// `max_{i != j} |d(a_i, a_j)|`.
    pub residual: f64,
}

/// Entropy data of one window under one decoherence function.
#[derive(Debug, Clone)]
pub struct EntropyReport {
    pub window_block_dims: Vec<usize>,
    /// Diagonal values `d(a_i, a_i)` as measured (no clamping).
    pub probabilities: Vec<f64>,
    /// Dimension-weighted entropy, in nats; at least 0 on consistent windows.
    pub i_hat: f64,
    /// `i_hat - 2 ln(dim V)`, in `[-2 ln(dim V), 0]` on consistent windows.
    pub i_norm: f64,
    pub consistency_residual: f64,
    pub dim_v: usize,
}

fn gram_data(
    d: &DecoherenceFunction,
    w: &Window,
) -> Result<(Vec<f64>, f64), EntropyError> {
    let gram: Vec<Vec<C64>> = d.window_gram(w)?;
    let residual = gram_offdiag_residual(&gram);
    let probabilities = gram.iter().enumerate().map(|(i, row)| row[i].re).collect();
    Ok((probabilities, residual))
}

/// `max_{i != j} |d(a_i, a_j)|` over the window's blocks.
pub fn consistency_residual(
    d: &DecoherenceFunction,
    w: &Window,
) -> Result<f64, EntropyError> {
    Ok(gram_data(d, w)?.1)
}

/// Consistency of `w` under `d` at tolerance `tol`.
pub fn is_consistent(
    d: &DecoherenceFunction,
    w: &Window,
    tol: f64,
) -> Result<ConsistencyCheck, EntropyError> {
    let residual = consistency_residual(d, w)?;
    Ok(ConsistencyCheck { consistent: residual <= tol, residual })
}

/// One term of `i_hat`: `p (2 ln(dim) - ln p)`, with `0 ln 0 = 0` and
/// probabilities inside the negative tolerance band clamped to zero.
fn hat_term(p: f64, dim: usize) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    p * (2.0 * (dim as f64).ln() - p.ln())
}

fn x_term(p: f64, dim: usize, dim_v: usize, x: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    p * (x * (dim as f64 / dim_v as f64).ln() - p.ln())
}

fn entropy_report_inner(
    probabilities: Vec<f64>,
    residual: f64,
    w: &Window,
) -> EntropyReport {
    let dims = w.block_dims();
    let i_hat: f64 = probabilities
        .iter()
        .zip(&dims)
        .map(|(&p, &dim)| hat_term(p, dim))
        .sum();
    let i_norm = i_hat - 2.0 * (w.dim_v() as f64).ln();
    EntropyReport {
        window_block_dims: dims,
        probabilities,
        i_hat,
        i_norm,
        consistency_residual: residual,
        dim_v: w.dim_v(),
    }
}

/// Full entropy data for a consistent window; fails with the residual when
/// the window is not consistent within `tol`.
pub fn report(
    d: &DecoherenceFunction,
    w: &Window,
    tol: f64,
) -> Result<EntropyReport, EntropyError> {
    let (probabilities, residual) = gram_data(d, w)?;
    if residual > tol {
        return Err(EntropyError::InconsistentWindow { residual, tol });
    }
    Ok(entropy_report_inner(probabilities, residual, w))
}

/// `-sum_i p_i ln(p_i / (dim a_i)^2)` on a consistent window.
pub fn i_hat(d: &DecoherenceFunction, w: &Window, tol: f64) -> Result<f64, EntropyError> {
    Ok(report(d, w, tol)?.i_hat)
}

/// `i_hat - 2 ln(dim V)` on a consistent window.
pub fn i_norm(d: &DecoherenceFunction, w: &Window, tol: f64) -> Result<f64, EntropyError> {
    Ok(report(d, w, tol)?.i_norm)
}

/// `-sum_i p_i ln(p_i / (dim a_i / dim V)^x)` on a consistent window.
///
/// `x = 2` recovers [`i_norm`]; `x = 0` is the plain Shannon entropy of the
/// window distribution. Refinement monotonicity holds for `x >= 1`.
pub fn i_x(
    d: &DecoherenceFunction,
    w: &Window,
    x: f64,
    tol: f64,
) -> Result<f64, EntropyError> {
    if x.is_nan() || x < 0.0 {
        return Err(EntropyError::Domain(format!("exponent x = {x} must be >= 0")));
    }
    let (probabilities, residual) = gram_data(d, w)?;
    if residual > tol {
        return Err(EntropyError::InconsistentWindow { residual, tol });
    }
    Ok(probabilities
        .iter()
        .zip(w.block_dims())
        .map(|(&p, dim)| x_term(p, dim, w.dim_v(), x))
        .sum())
}

/// The scalar gap governing one refinement step,
/// `a ln(a/b^2) - (1+a) ln((1+a)/(1+b)^2)`,
/// non-negative for `a >= 0`, `b >= 1` (with `0 ln 0 = 0`).
pub fn monotonicity_gap(a: f64, b: f64) -> Result<f64, EntropyError> {
    if !a.is_finite() || a < 0.0 {
        return Err(EntropyError::Domain(format!("a = {a} must be finite and >= 0")));
    }
    if !b.is_finite() || b < 1.0 {
        return Err(EntropyError::Domain(format!("b = {b} must be finite and >= 1")));
    }
    let first = if a > 0.0 { a * (a / (b * b)).ln() } else { 0.0 };
    let second = (1.0 + a) * ((1.0 + a) / ((1.0 + b) * (1.0 + b))).ln();
    Ok(first - second)
}

/// Localised entropy of an arbitrary window: the minimum of `i_norm` over
/// its consistent coarse-grainings, together with the minimiser. The
/// trivial window is always consistent, so the minimum exists; ties keep
/// the first window in enumeration order.
pub fn localized_i(
    d: &DecoherenceFunction,
    w0: &Window,
    tol: f64,
) -> Result<(f64, Window), EntropyError> {
    let mut best: Option<(f64, Window)> = None;
    for candidate in w0.coarse_grainings()? {
        let (probabilities, residual) = gram_data(d, &candidate)?;
        if residual > tol {
            continue;
        }
        let value = entropy_report_inner(probabilities, residual, &candidate).i_norm;
        let better = match &best {
            None => true,
            Some((current, _)) => value < *current,
        };
        if better {
            best = Some((value, candidate));
        }
    }
    Ok(best.expect("the all-merged coarse-graining is always consistent"))
}
