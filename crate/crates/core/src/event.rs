//! Event lattices and states for the two concrete cases: the Boolean
//! algebra of subsets of a finite sample space, and the lattice of
//! projectors on a finite-dimensional Hilbert space.

use std::fmt;

use crate::error::{Error, Result};
use crate::numerics::{c64, eig_hermitian, hermitian_defect, orthonormality_defect, CMatrix, CVector, HermitianMatrix};

/// Normalization slack for states.
pub const NORMALIZATION_TOL: f64 = 1e-10;
/// Most negative probability accepted for a classical state.
pub const CLASSICAL_POSITIVITY_TOL: f64 = 1e-12;
/// Most negative eigenvalue accepted for a density matrix.
pub const QUANTUM_POSITIVITY_TOL: f64 = 1e-10;
/// Idempotence / Hermiticity slack for projectors.
pub const PROJECTOR_TOL: f64 = 1e-10;
/// Slack for orthogonality of event families and orthonormality of bases.
pub const ORTHOGONALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    Classical,
    Quantum,
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceKind::Classical => f.write_str("classical"),
            SpaceKind::Quantum => f.write_str("quantum"),
        }
    }
}

/// A finite sample space (n outcomes) or a Hilbert space of dimension d.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventSpace {
    kind: SpaceKind,
    size: usize,
}

impl EventSpace {
    pub fn new(kind: SpaceKind, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::BadDimension("event space size must be at least 1".into()));
        }
        Ok(EventSpace { kind, size })
    }

    pub fn classical(n: usize) -> Result<Self> {
        Self::new(SpaceKind::Classical, n)
    }

    pub fn quantum(d: usize) -> Result<Self> {
        Self::new(SpaceKind::Quantum, d)
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn is_quantum(&self) -> bool {
        self.kind == SpaceKind::Quantum
    }

    pub(crate) fn check(&self, other: &EventSpace) -> Result<()> {
        if self != other {
            return Err(Error::SpaceMismatch {
                expected: self.to_string(),
                got: other.to_string(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for EventSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.kind, self.size)
    }
}

/// An element of the event lattice.
#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    /// Outcome subset as a membership mask.
    Classical(Vec<bool>),
    /// Orthogonal projector.
    Quantum(HermitianMatrix),
}

impl Event {
    pub fn from_mask(mask: Vec<bool>) -> Result<Self> {
        if mask.is_empty() {
            return Err(Error::InvalidEvent("empty sample space".into()));
        }
        Ok(Event::Classical(mask))
    }

    pub fn subset(n: usize, members: &[usize]) -> Result<Self> {
        let mut mask = vec![false; n];
        for &i in members {
            if i >= n {
                return Err(Error::InvalidEvent(format!("outcome {i} out of range for n={n}")));
            }
            mask[i] = true;
        }
        Self::from_mask(mask)
    }

    /// Validates P² = P within [`PROJECTOR_TOL`].
    pub fn projector(p: HermitianMatrix) -> Result<Self> {
        let m = p.as_matrix();
        let defect = (m * m - m).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if defect > PROJECTOR_TOL {
            return Err(Error::InvalidEvent(format!("projector not idempotent (defect {defect:e})")));
        }
        Ok(Event::Quantum(p))
    }

    /// Projector onto the ray spanned by `v`.
    pub fn ray(v: &CVector) -> Self {
        Event::Quantum(HermitianMatrix::projector(v))
    }

    pub fn empty(space: EventSpace) -> Self {
        match space.kind() {
            SpaceKind::Classical => Event::Classical(vec![false; space.size()]),
            SpaceKind::Quantum => Event::Quantum(HermitianMatrix::zeros(space.size())),
        }
    }

    pub fn full(space: EventSpace) -> Self {
        match space.kind() {
            SpaceKind::Classical => Event::Classical(vec![true; space.size()]),
            SpaceKind::Quantum => Event::Quantum(HermitianMatrix::identity(space.size())),
        }
    }

    pub fn space(&self) -> EventSpace {
        match self {
            Event::Classical(m) => EventSpace {
                kind: SpaceKind::Classical,
                size: m.len(),
            },
            Event::Quantum(p) => EventSpace {
                kind: SpaceKind::Quantum,
                size: p.dim(),
            },
        }
    }

    pub fn members(&self) -> Option<Vec<usize>> {
        match self {
            Event::Classical(m) => Some(m.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()),
            Event::Quantum(_) => None,
        }
    }

    /// Indicator vector (classical) or projector (quantum) as an observable.
    pub fn as_observable(&self) -> crate::observable::Observable {
        match self {
            Event::Classical(m) => crate::observable::Observable::Classical(m.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()),
            Event::Quantum(p) => crate::observable::Observable::Quantum(p.clone()),
        }
    }

    /// Overlap measure: shared outcomes, or ‖P Q‖_F.
    pub fn overlap(&self, other: &Event) -> Result<f64> {
        self.space().check(&other.space())?;
        Ok(match (self, other) {
            (Event::Classical(a), Event::Classical(b)) => a.iter().zip(b).filter(|(x, y)| **x && **y).count() as f64,
            (Event::Quantum(p), Event::Quantum(q)) => (p.as_matrix() * q.as_matrix()).norm(),
            _ => unreachable!("space checked"),
        })
    }

    /// Join of a pairwise orthogonal family.
    pub fn join_orthogonal(events: &[Event]) -> Result<Event> {
        let first = events
            .first()
            .ok_or_else(|| Error::InvalidEvent("empty family".into()))?;
        let space = first.space();
        for (i, a) in events.iter().enumerate() {
            space.check(&a.space())?;
            for b in &events[i + 1..] {
                let ov = a.overlap(b)?;
                if ov > ORTHOGONALITY_TOL {
                    return Err(Error::NotOrthogonal(ov));
                }
            }
        }
        Ok(match space.kind() {
            SpaceKind::Classical => {
                let mut mask = vec![false; space.size()];
                for e in events {
                    if let Event::Classical(m) = e {
                        for (acc, &b) in mask.iter_mut().zip(m) {
                            *acc |= b;
                        }
                    }
                }
                Event::Classical(mask)
            }
            SpaceKind::Quantum => {
                let mut sum = HermitianMatrix::zeros(space.size());
                for e in events {
                    if let Event::Quantum(p) = e {
                        sum = sum.add(p);
                    }
                }
                Event::Quantum(sum)
            }
        })
    }
}

/// Orthocomplement: set complement, or I − P.
pub fn orthocomplement(event: &Event) -> Event {
    match event {
        Event::Classical(m) => Event::Classical(m.iter().map(|b| !b).collect()),
        Event::Quantum(p) => Event::Quantum(HermitianMatrix::identity(p.dim()).sub(p)),
    }
}

/// A normalized measure on the event lattice.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Classical(Vec<f64>),
    Quantum(HermitianMatrix),
}

impl State {
    pub fn classical(p: Vec<f64>) -> Result<Self> {
        let report = validate_state(StateCandidate::Probabilities(&p));
        if !report.is_ok() {
            return Err(Error::InvalidState(report.to_string()));
        }
        Ok(State::Classical(p))
    }

    pub fn quantum(rho: HermitianMatrix) -> Result<Self> {
        let report = validate_state(StateCandidate::Density(rho.as_matrix()));
        if !report.is_ok() {
            return Err(Error::InvalidState(report.to_string()));
        }
        Ok(State::Quantum(rho))
    }

    /// Normalized pure state |v⟩⟨v|.
    pub fn pure(v: &CVector) -> Self {
        State::Quantum(HermitianMatrix::projector(v))
    }

    pub fn maximally_mixed(space: EventSpace) -> Self {
        let n = space.size();
        match space.kind() {
            SpaceKind::Classical => State::Classical(vec![1.0 / n as f64; n]),
            SpaceKind::Quantum => State::Quantum(HermitianMatrix::identity(n).scale(1.0 / n as f64)),
        }
    }

    pub fn space(&self) -> EventSpace {
        match self {
            State::Classical(p) => EventSpace {
                kind: SpaceKind::Classical,
                size: p.len(),
            },
            State::Quantum(r) => EventSpace {
                kind: SpaceKind::Quantum,
                size: r.dim(),
            },
        }
    }

    pub fn probabilities(&self) -> Option<&[f64]> {
        match self {
            State::Classical(p) => Some(p),
            State::Quantum(_) => None,
        }
    }

    pub fn density(&self) -> Option<&HermitianMatrix> {
        match self {
            State::Classical(_) => None,
            State::Quantum(r) => Some(r),
        }
    }

    /// Spectrum (quantum) or the probability vector itself.
    pub fn spectrum(&self) -> Vec<f64> {
        match self {
            State::Classical(p) => p.clone(),
            State::Quantum(r) => eig_hermitian(r).eigenvalues,
        }
    }

    /// ‖s − t‖₁ (L1 or trace norm).
    pub fn distance(&self, other: &State) -> Result<f64> {
        self.space().check(&other.space())?;
        Ok(match (self, other) {
            (State::Classical(a), State::Classical(b)) => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            (State::Quantum(a), State::Quantum(b)) => crate::numerics::trace_norm(&a.sub(b)),
            _ => unreachable!("space checked"),
        })
    }

    /// ⟨ψ|ρ|ψ⟩.
    pub fn fidelity_with_pure(&self, psi: &CVector) -> Result<f64> {
        match self {
            State::Quantum(r) => {
                if r.dim() != psi.len() {
                    return Err(Error::SpaceMismatch {
                        expected: format!("quantum({})", r.dim()),
                        got: format!("vector of length {}", psi.len()),
                    });
                }
                let n2 = psi.norm_squared();
                Ok((psi.adjoint() * r.as_matrix() * psi)[(0, 0)].re / n2)
            }
            State::Classical(_) => Err(Error::SpaceMismatch {
                expected: "quantum state".into(),
                got: "classical state".into(),
            }),
        }
    }
}

/// ν(E): Σ_{i∈E} p_i, or tr(ρ P).
pub fn prob(state: &State, event: &Event) -> Result<f64> {
    state.space().check(&event.space())?;
    let raw = match (state, event) {
        (State::Classical(p), Event::Classical(m)) => p.iter().zip(m).filter(|(_, &b)| b).map(|(x, _)| x).sum::<f64>(),
        (State::Quantum(r), Event::Quantum(pr)) => r.inner(pr),
        _ => unreachable!("space checked"),
    };
    Ok(clip_unit(raw))
}

fn clip_unit(x: f64) -> f64 {
    if (-NORMALIZATION_TOL..0.0).contains(&x) {
        0.0
    } else if x > 1.0 && x <= 1.0 + NORMALIZATION_TOL {
        1.0
    } else {
        x
    }
}

/// Input to [`validate_state`].
#[derive(Debug, Clone, Copy)]
pub enum StateCandidate<'a> {
    Probabilities(&'a [f64]),
    Density(&'a CMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Empty,
    NonFinite,
    NotSquare { rows: usize, cols: usize },
    Hermiticity { residual: f64 },
    Normalization { residual: f64 },
    Positivity { min_value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => f.write_str("empty state"),
            Violation::NonFinite => f.write_str("non-finite entries"),
            Violation::NotSquare { rows, cols } => write!(f, "matrix is {rows}x{cols}"),
            Violation::Hermiticity { residual } => write!(f, "Hermiticity violated by {residual:e}"),
            Violation::Normalization { residual } => write!(f, "normalization off by {residual:e}"),
            Violation::Positivity { min_value } => write!(f, "negative weight {min_value:e}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn normalization_residual(&self) -> Option<f64> {
        self.violations.iter().find_map(|v| match v {
            Violation::Normalization { residual } => Some(*residual),
            _ => None,
        })
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("ok");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

/// Check normalization, positivity and (quantum) Hermiticity.
pub fn validate_state(candidate: StateCandidate<'_>) -> ValidationReport {
    let mut violations = Vec::new();
    match candidate {
        StateCandidate::Probabilities(p) => {
            if p.is_empty() {
                violations.push(Violation::Empty);
            } else if p.iter().any(|x| !x.is_finite()) {
                violations.push(Violation::NonFinite);
            } else {
                let s: f64 = p.iter().sum();
                if (s - 1.0).abs() > NORMALIZATION_TOL {
                    violations.push(Violation::Normalization { residual: (s - 1.0).abs() });
                }
                let min = p.iter().cloned().fold(f64::INFINITY, f64::min);
                if min < -CLASSICAL_POSITIVITY_TOL {
                    violations.push(Violation::Positivity { min_value: min });
                }
            }
        }
        StateCandidate::Density(m) => {
            if m.nrows() == 0 {
                violations.push(Violation::Empty);
            } else if m.nrows() != m.ncols() {
                violations.push(Violation::NotSquare {
                    rows: m.nrows(),
                    cols: m.ncols(),
                });
            } else if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                violations.push(Violation::NonFinite);
            } else {
                let defect = hermitian_defect(m);
                if defect > NORMALIZATION_TOL {
                    violations.push(Violation::Hermiticity { residual: defect });
                }
                let tr: f64 = m.diagonal().iter().map(|z| z.re).sum();
                if (tr - 1.0).abs() > NORMALIZATION_TOL {
                    violations.push(Violation::Normalization { residual: (tr - 1.0).abs() });
                }
                let sym = (m + m.adjoint()) * c64(0.5, 0.0);
                let h = HermitianMatrix::new(sym).expect("symmetrized");
                let min = eig_hermitian(&h).eigenvalues[0];
                if min < -QUANTUM_POSITIVITY_TOL {
                    violations.push(Violation::Positivity { min_value: min });
                }
            }
        }
    }
    ValidationReport { violations }
}

/// |ν(∨E_j) − Σ ν(E_j)| for a pairwise orthogonal family.
pub fn additivity_check(state: &State, events: &[Event]) -> Result<f64> {
    let join = Event::join_orthogonal(events)?;
    let whole = prob(state, &join)?;
    let mut parts = 0.0;
    for e in events {
        parts += prob(state, e)?;
    }
    Ok((whole - parts).abs())
}

/// The frame function x ↦ ⟨x|ρ|x⟩ on unit vectors.
#[derive(Debug, Clone)]
pub struct FrameFunction {
    rho: HermitianMatrix,
}

impl FrameFunction {
    pub fn new(state: &State) -> Result<Self> {
        match state {
            State::Quantum(r) => Ok(FrameFunction { rho: r.clone() }),
            State::Classical(_) => Err(Error::SpaceMismatch {
                expected: "quantum state".into(),
                got: "classical state".into(),
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn eval(&self, x: &CVector) -> f64 {
        (x.adjoint() * self.rho.as_matrix() * x)[(0, 0)].re
    }
}

/// |Σ_i f(x_i) − 1| over an orthonormal basis.
pub fn frame_sum_check(f: &FrameFunction, basis: &[CVector]) -> Result<f64> {
    if basis.len() != f.dim() || basis.iter().any(|v| v.len() != f.dim()) {
        return Err(Error::SpaceMismatch {
            expected: format!("basis of {} vectors in dimension {}", f.dim(), f.dim()),
            got: format!("{} vectors", basis.len()),
        });
    }
    let defect = orthonormality_defect(basis);
    if defect > ORTHOGONALITY_TOL {
        return Err(Error::NotOrthonormal(defect));
    }
    let s: f64 = basis.iter().map(|x| f.eval(x)).sum();
    Ok((s - 1.0).abs())
}
