use crate::error::{Error, Result};
use crate::event::{EventSpace, SpaceKind, State};
use crate::numerics::{c64, eig_hermitian, hermitian_coords, CMatrix, HermitianMatrix};

/// A real random variable on outcomes, or a Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    Classical(Vec<f64>),
    Quantum(HermitianMatrix),
}

impl Observable {
    pub fn space(&self) -> EventSpace {
        match self {
            Observable::Classical(f) => EventSpace::classical(f.len()),
            Observable::Quantum(a) => EventSpace::quantum(a.dim()),
        }
        .expect("non-empty observable")
    }

    pub fn identity(space: EventSpace) -> Self {
        match space.kind() {
            SpaceKind::Classical => Observable::Classical(vec![1.0; space.size()]),
            SpaceKind::Quantum => Observable::Quantum(HermitianMatrix::identity(space.size())),
        }
    }

    pub fn zeros(space: EventSpace) -> Self {
        match space.kind() {
            SpaceKind::Classical => Observable::Classical(vec![0.0; space.size()]),
            SpaceKind::Quantum => Observable::Quantum(HermitianMatrix::zeros(space.size())),
        }
    }

    /// ⟨A⟩ in `state`.
    pub fn expectation(&self, state: &State) -> Result<f64> {
        self.space().check(&state.space())?;
        Ok(match (self, state) {
            (Observable::Classical(f), State::Classical(p)) => f.iter().zip(p).map(|(a, b)| a * b).sum(),
            (Observable::Quantum(a), State::Quantum(r)) => a.inner(r),
            _ => unreachable!("space checked"),
        })
    }

    /// Pointwise square (classical) or operator square.
    pub fn square(&self) -> Self {
        match self {
            Observable::Classical(f) => Observable::Classical(f.iter().map(|x| x * x).collect()),
            Observable::Quantum(a) => Observable::Quantum(a.square()),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        match self {
            Observable::Classical(f) => Observable::Classical(f.iter().map(|x| s * x).collect()),
            Observable::Quantum(a) => Observable::Quantum(a.scale(s)),
        }
    }

    /// self + s * other. Panics on mismatched spaces.
    pub fn add_scaled(&self, s: f64, other: &Observable) -> Self {
        match (self, other) {
            (Observable::Classical(a), Observable::Classical(b)) => {
                assert_eq!(a.len(), b.len());
                Observable::Classical(a.iter().zip(b).map(|(x, y)| x + s * y).collect())
            }
            (Observable::Quantum(a), Observable::Quantum(b)) => Observable::Quantum(a.add(&b.scale(s))),
            _ => panic!("observable kinds differ"),
        }
    }

    /// Euclidean / Hilbert–Schmidt inner product.
    pub fn inner(&self, other: &Observable) -> f64 {
        match (self, other) {
            (Observable::Classical(a), Observable::Classical(b)) => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            (Observable::Quantum(a), Observable::Quantum(b)) => a.inner(b),
            _ => panic!("observable kinds differ"),
        }
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    /// Real coordinates in an orthonormal basis of the observable space.
    pub fn coords(&self) -> Vec<f64> {
        match self {
            Observable::Classical(f) => f.clone(),
            Observable::Quantum(a) => hermitian_coords(a.as_matrix()).iter().cloned().collect(),
        }
    }

    /// Smallest and largest value the observable can take in any state.
    pub fn range(&self) -> (f64, f64) {
        match self {
            Observable::Classical(f) => (
                f.iter().cloned().fold(f64::INFINITY, f64::min),
                f.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            ),
            Observable::Quantum(a) => {
                let ev = eig_hermitian(a).eigenvalues;
                (ev[0], ev[ev.len() - 1])
            }
        }
    }

    /// If self = c·I, return c and the norm of self − c·I.
    pub fn scalar_part(&self) -> (f64, f64) {
        let id = Observable::identity(self.space());
        let c = self.inner(&id) / id.inner(&id);
        (c, self.add_scaled(-c, &id).norm())
    }

    pub fn commutes_with(&self, other: &Observable, tol: f64) -> bool {
        match (self, other) {
            (Observable::Quantum(a), Observable::Quantum(b)) => {
                let ab = a.as_matrix() * b.as_matrix();
                let ba = b.as_matrix() * a.as_matrix();
                (ab - ba).norm() <= tol * (1.0 + a.frobenius_norm() * b.frobenius_norm())
            }
            _ => true,
        }
    }

    pub fn as_quantum(&self) -> Option<&HermitianMatrix> {
        match self {
            Observable::Quantum(a) => Some(a),
            Observable::Classical(_) => None,
        }
    }

    pub fn as_classical(&self) -> Option<&[f64]> {
        match self {
            Observable::Classical(f) => Some(f),
            Observable::Quantum(_) => None,
        }
    }

    /// Diagonal observable in the given orthonormal basis (columns of `v`):
    /// f_i = ⟨v_i|A|v_i⟩.
    pub fn diagonal_in(&self, v: &CMatrix) -> Result<Vec<f64>> {
        match self {
            Observable::Quantum(a) => {
                let t = v.adjoint() * a.as_matrix() * v;
                Ok(t.diagonal().iter().map(|z| z.re).collect())
            }
            Observable::Classical(_) => Err(Error::BadObservable("expected quantum observable".into())),
        }
    }

    /// Builds a Hermitian observable from real diagonal entries.
    pub fn diagonal(d: &[f64]) -> Self {
        Observable::Quantum(HermitianMatrix::from_real_diagonal(d))
    }

    pub fn quantum_from_real(rows: usize, data: &[f64]) -> Result<Self> {
        let m = CMatrix::from_row_slice(rows, rows, &data.iter().map(|&x| c64(x, 0.0)).collect::<Vec<_>>());
        Ok(Observable::Quantum(HermitianMatrix::new(m)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expectation_and_range() {
        let f = Observable::Classical(vec![0.0, 1.0, 2.0]);
        let p = State::classical(vec![0.2, 0.3, 0.5]).unwrap();
        assert!((f.expectation(&p).unwrap() - 1.3).abs() < 1e-15);
        assert_eq!(f.range(), (0.0, 2.0));
        let z = Observable::diagonal(&[1.0, -1.0]);
        assert_eq!(z.range(), (-1.0, 1.0));
        let (c, rest) = Observable::Classical(vec![2.0, 2.0, 2.0]).scalar_part();
        assert!((c - 2.0).abs() < 1e-15 && rest < 1e-15);
    }
}
