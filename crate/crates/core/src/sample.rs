//! Seeded random matrices: Ginibre draws, unitaries by orthonormalisation,
//! projectors of prescribed rank, and density matrices.
//!
//! Every generator takes the RNG explicitly so that validation sampling and
//! the search strategies stay reproducible for a given seed.

use num_complex::Complex;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_distr::StandardNormal;

use crate::histories::{HistoryProposition, Window, make_window};
use crate::matrix::{C64, ComplexMatrix};

/// Deterministic RNG for a given seed; the single RNG flavour used crate-wide.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal_c64<R: Rng>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(re, im)
}

/// Square matrix with independent standard complex Gaussian entries.
pub fn random_matrix<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    let data = (0..n * n).map(|_| normal_c64(rng)).collect();
    ComplexMatrix::new(n, n, data)
}

/// Random Hermitian matrix `(A + A^dagger)/2`.
pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    let a = random_matrix(rng, n);
    a.add(&a.adjoint()).scale_real(0.5)
}

/// Haar-like random unitary, built by orthonormalising the columns of a
/// random complex matrix (modified Gram-Schmidt with one re-pass).
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    loop {
        let g = random_matrix(rng, n);
        if let Some(u) = orthonormalize_columns(&g) {
            return u;
        }
        // near-singular draw; extremely unlikely, just redraw
    }
}

fn orthonormalize_columns(g: &ComplexMatrix) -> Option<ComplexMatrix> {
    let n = g.dim();
    let mut cols: Vec<Vec<C64>> = (0..n)
        .map(|c| (0..n).map(|r| g.get(r, c)).collect())
        .collect();
    for pass in 0..2 {
        for c in 0..n {
            let (done, rest) = cols.split_at_mut(c);
            let current = &mut rest[0];
            for prev in done.iter() {
                let dot: C64 = prev
                    .iter()
                    .zip(current.iter())
                    .map(|(p, x)| p.conj() * x)
                    .sum();
                for (x, p) in current.iter_mut().zip(prev) {
                    *x -= dot * p;
                }
            }
            let norm: f64 = current.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-8 && pass == 0 {
                return None;
            }
            for x in current.iter_mut() {
                *x /= norm;
            }
        }
    }
    let mut u = ComplexMatrix::zeros(n, n);
    for (c, col) in cols.iter().enumerate() {
        for (r, &value) in col.iter().enumerate() {
            u.set(r, c, value);
        }
    }
    Some(u)
}

/// Random rank-`rank` projector: sum of outer products of `rank` columns of
/// a random unitary.
pub fn random_projector<R: Rng>(rng: &mut R, n: usize, rank: usize) -> ComplexMatrix {
    assert!(rank <= n, "rank must not exceed dimension");
    let u = random_unitary(rng, n);
    projector_from_columns(&u, 0..rank)
}

/// Projector onto the span of the selected columns of a unitary.
pub fn projector_from_columns(
    u: &ComplexMatrix,
    columns: impl IntoIterator<Item = usize>,
) -> ComplexMatrix {
    let n = u.dim();
    let mut p = ComplexMatrix::zeros(n, n);
    for col in columns {
        for i in 0..n {
            let vi = u.get(i, col);
            for j in 0..n {
                let v = p.get(i, j) + vi * u.get(j, col).conj();
                p.set(i, j, v);
            }
        }
    }
    p
}

/// Random density matrix `G G^dagger / tr(G G^dagger)`.
pub fn random_density<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = random_matrix(rng, n);
    let positive = g.mul(&g.adjoint());
    let trace = positive.trace().re;
    positive.scale_real(1.0 / trace)
}

/// Random unit vector in `C^n`.
pub fn random_unit_vector<R: Rng>(rng: &mut R, n: usize) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..n).map(|_| normal_c64(rng)).collect();
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// Rank-1 projector `|v><v|` from a unit vector.
pub fn projector_from_vector(v: &[C64]) -> ComplexMatrix {
    let n = v.len();
    let mut p = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            p.set(i, j, v[i] * v[j].conj());
        }
    }
    p
}

/// Split `n` basis slots into `blocks` nonempty groups, uniformly at random.
/// Returns the group index of each slot.
pub fn random_composition<R: Rng>(rng: &mut R, n: usize, blocks: usize) -> Vec<usize> {
    assert!(blocks >= 1 && blocks <= n);
    loop {
        let assignment: Vec<usize> = (0..n).map(|_| rng.random_range(0..blocks)).collect();
        let mut seen = vec![false; blocks];
        for &a in &assignment {
            seen[a] = true;
        }
        if seen.iter().all(|&s| s) {
            return assignment;
        }
    }
}

/// Random window of `blocks` projectors on `C^dim`: the columns of a random
/// unitary, partitioned into nonempty groups.
pub fn random_window<R: Rng>(rng: &mut R, dim: usize, blocks: usize) -> Window {
    let u = random_unitary(rng, dim);
    let assignment = random_composition(rng, dim, blocks);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); blocks];
    for (slot, &b) in assignment.iter().enumerate() {
        groups[b].push(slot);
    }
    let props: Vec<HistoryProposition> = groups
        .into_iter()
        .map(|cols| {
            let p = projector_from_columns(&u, cols.iter().copied());
            HistoryProposition::new(p, 1e-8).expect("unitary columns span a projector")
        })
        .collect();
    make_window(props, 1e-8).expect("orthonormal columns resolve the identity")
}
