//! Seeded samplers for states, unitaries and observables.
//!
//! Used by verifiers and multi-start solvers. All samplers draw from the
//! caller's RNG, so results are reproducible given the seed.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::numerics::{c64, fix_phase, CMatrix, CVector, HermitianMatrix};

/// Deterministic RNG stream for a seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform sample from the probability simplex (flat Dirichlet).
pub fn random_probability<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c64(re, im)
    })
}

/// Hermitian matrix with i.i.d. Gaussian entries (GUE up to scale).
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> HermitianMatrix {
    let g = ginibre(d, d, rng);
    HermitianMatrix::new((&g + g.adjoint()) * c64(0.5, 0.0)).expect("symmetrized")
}

/// Haar-random unitary via QR of a Ginibre matrix with phase correction.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(d, d, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..d {
        let z = r[(k, k)];
        let n = z.norm();
        if n > 0.0 {
            let ph = z / n;
            for x in q.column_mut(k).iter_mut() {
                *x *= ph;
            }
        }
    }
    q
}

/// Haar-random unit vector.
pub fn random_pure<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVector {
    let g = ginibre(d, 1, rng);
    let mut v = g.column(0).into_owned();
    let n = v.norm();
    v /= c64(n, 0.0);
    fix_phase(&mut v);
    v
}

/// Density matrix from the Hilbert–Schmidt ensemble (G G† / tr).
pub fn random_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> HermitianMatrix {
    let g = ginibre(d, d, rng);
    let m = &g * g.adjoint();
    let t: f64 = m.diagonal().iter().map(|z| z.re).sum();
    HermitianMatrix::new(m / c64(t, 0.0)).expect("Gram matrix")
}

/// Density matrix of a given rank (induced measure).
pub fn random_density_rank<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> HermitianMatrix {
    let g = ginibre(d, rank.max(1), rng);
    let m = &g * g.adjoint();
    let t: f64 = m.diagonal().iter().map(|z| z.re).sum();
    HermitianMatrix::new(m / c64(t, 0.0)).expect("Gram matrix")
}

/// Orthonormal basis (columns of a Haar unitary).
pub fn random_basis<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<CVector> {
    let u = random_unitary(d, rng);
    (0..d).map(|k| u.column(k).into_owned()).collect()
}

/// Projector onto the span of the first `rank` columns of a Haar unitary.
pub fn random_projector<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> HermitianMatrix {
    let u = random_unitary(d, rng);
    let v = u.columns(0, rank).into_owned();
    HermitianMatrix::new(&v * v.adjoint()).expect("projector")
}

/// Uniformly random permutation of 0..n.
pub fn random_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}
