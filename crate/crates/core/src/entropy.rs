//! Shannon, von Neumann and measurement entropy (natural log, 0 ln 0 = 0).

use rand::Rng;

use crate::error::{Error, Result};
use crate::event::{prob, Event, State, ORTHOGONALITY_TOL};
use crate::numerics::{eig_hermitian, orthonormality_defect, unitary_exp, xlnx, CMatrix, CVector, HermitianMatrix};

/// Which entropy functional a problem maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EntropyKind {
    Shannon,
    VonNeumann,
    /// Infimum of outcome entropies over rank-one projective measurements.
    #[default]
    Measurement,
}

/// A projective measurement: a partition of outcomes, or an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub enum Measurement {
    Partition(Vec<Vec<usize>>),
    Basis(Vec<CVector>),
}

impl Measurement {
    pub fn atomic(n: usize) -> Self {
        Measurement::Partition((0..n).map(|i| vec![i]).collect())
    }

    /// Outcome events, validating disjointness/coverage or orthonormality.
    pub fn events(&self, dim: usize) -> Result<Vec<Event>> {
        match self {
            Measurement::Partition(blocks) => {
                let mut seen = vec![false; dim];
                for b in blocks {
                    for &i in b {
                        if i >= dim || seen[i] {
                            return Err(Error::InvalidEvent(format!("partition blocks overlap or exceed n at {i}")));
                        }
                        seen[i] = true;
                    }
                }
                if seen.iter().any(|s| !s) {
                    return Err(Error::InvalidEvent("partition does not cover the sample space".into()));
                }
                blocks.iter().map(|b| Event::subset(dim, b)).collect()
            }
            Measurement::Basis(vs) => {
                if vs.len() != dim || vs.iter().any(|v| v.len() != dim) {
                    return Err(Error::SpaceMismatch {
                        expected: format!("basis of {dim} vectors"),
                        got: format!("{} vectors", vs.len()),
                    });
                }
                let defect = orthonormality_defect(vs);
                if defect > ORTHOGONALITY_TOL {
                    return Err(Error::NotOrthonormal(defect));
                }
                Ok(vs.iter().map(Event::ray).collect())
            }
        }
    }
}

/// −Σ p ln p.
pub fn shannon(p: &[f64]) -> f64 {
    let h = -p.iter().map(|&x| xlnx(x)).sum::<f64>();
    h.max(0.0)
}

/// −tr ρ ln ρ, via the spectrum. Eigenvalues within the PSD slack are clipped.
pub fn von_neumann(rho: &HermitianMatrix) -> f64 {
    shannon(&eig_hermitian(rho).eigenvalues)
}

/// Shannon entropy of the outcome distribution of `m` in `state`.
pub fn measurement_entropy_for(state: &State, m: &Measurement) -> Result<f64> {
    let space = state.space();
    let is_basis = matches!(m, Measurement::Basis(_));
    if is_basis != space.is_quantum() {
        return Err(Error::SpaceMismatch {
            expected: space.to_string(),
            got: if is_basis { "basis measurement".into() } else { "partition measurement".into() },
        });
    }
    let events = m.events(space.size())?;
    let mut dist = Vec::with_capacity(events.len());
    for e in &events {
        dist.push(prob(state, e)?);
    }
    Ok(shannon(&dist))
}

/// Measurement entropy together with a measurement attaining it.
///
/// Classical states attain it on the atomic partition, quantum states on
/// the eigenbasis of ρ.
pub fn measurement_entropy(state: &State) -> (f64, Measurement) {
    match state {
        State::Classical(p) => (shannon(p), Measurement::atomic(p.len())),
        State::Quantum(r) => {
            let sd = eig_hermitian(r);
            let basis = (0..sd.dim()).map(|k| sd.vector(k)).collect();
            (shannon(&sd.eigenvalues), Measurement::Basis(basis))
        }
    }
}

/// Entropy of `state` under the selected functional.
pub fn entropy(state: &State, kind: EntropyKind) -> f64 {
    match (kind, state) {
        (EntropyKind::Measurement, s) => measurement_entropy(s).0,
        (_, State::Classical(p)) => shannon(p),
        (_, State::Quantum(r)) => von_neumann(r),
    }
}

/// Stochastic upper estimate of the measurement-entropy infimum.
///
/// Draws `samples` Haar-random bases, then refines the best one with
/// `samples` random local rotations of shrinking size. Every value it
/// reports is the entropy of an actual measurement, so it can never fall
/// below the true infimum.
pub fn sampled_measurement_entropy<R: Rng + ?Sized>(rho: &HermitianMatrix, samples: usize, rng: &mut R) -> f64 {
    let d = rho.dim();
    let state = State::Quantum(rho.clone());
    let eval = |u: &CMatrix| {
        let basis: Vec<CVector> = (0..d).map(|k| u.column(k).into_owned()).collect();
        measurement_entropy_for(&state, &Measurement::Basis(basis)).expect("orthonormal basis")
    };
    let mut best_u = crate::random::random_unitary(d, rng);
    let mut best = eval(&best_u);
    for _ in 1..samples {
        let u = crate::random::random_unitary(d, rng);
        let h = eval(&u);
        if h < best {
            best = h;
            best_u = u;
        }
    }
    let mut step = 0.1;
    for _ in 0..samples {
        let gen = crate::random::random_hermitian(d, rng);
        let u = unitary_exp(&gen, step) * &best_u;
        let h = eval(&u);
        if h < best {
            best = h;
            best_u = u;
        } else {
            step = (step * 0.97).max(1e-6);
        }
    }
    best
}
