//! Shared generators for the acceptance suite.
//!
//! The dyadic generators draw every entry from the grid `k / 2^10`, so
//! sums, Kronecker products of two factors, and halving stay exact in
//! double precision. Identities that hold exactly in algebra can then be
//! checked bitwise, with no rounding slack hiding sign or indexing bugs.

use histent::{C64, ComplexMatrix};
use rand::Rng;

const GRID: f64 = 1024.0;

pub fn dyadic_scalar<R: Rng>(rng: &mut R) -> f64 {
    rng.random_range(-1024..=1024i32) as f64 / GRID
}

pub fn dyadic_c64<R: Rng>(rng: &mut R) -> C64 {
    C64::new(dyadic_scalar(rng), dyadic_scalar(rng))
}

/// Hermitian matrix with all entries on the dyadic grid.
pub fn dyadic_hermitian<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        h.set(i, i, C64::new(dyadic_scalar(rng), 0.0));
        for j in 0..i {
            let z = dyadic_c64(rng);
            h.set(i, j, z);
            h.set(j, i, z.conj());
        }
    }
    h
}

/// Density matrix with exactly representable entries and trace exactly 1.
///
/// `rho = H H^dagger / 32 + c I` with `c = (1 - tr(H H^dagger)/32) / n`;
/// every step stays on a dyadic grid, so the trace is exactly one and the
/// operator is positive semidefinite. Requires `n` to be a power of two.
pub fn dyadic_density<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    assert!(n.is_power_of_two(), "exact normalisation needs a power-of-two dimension");
    let h = dyadic_hermitian(rng, n);
    let positive = h.mul(&h.adjoint()).scale_real(1.0 / 32.0);
    let s = positive.trace().re;
    let c = (1.0 - s) / n as f64;
    let mut rho = positive;
    for i in 0..n {
        let v = rho.get(i, i) + C64::new(c, 0.0);
        rho.set(i, i, v);
    }
    rho
}
