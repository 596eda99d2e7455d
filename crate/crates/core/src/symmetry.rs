//! Symmetry groups acting on event lattices and states: closure, twirling,
//! invariance and covariance checks, and the fixed-point (commutant) basis
//! used to shrink the search space of the solvers.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::event::{prob, Event, EventSpace, SpaceKind, State};
use crate::numerics::{
    c64, eig_hermitian, hermitian_basis, hermitian_coords, hermitian_from_coords, nullspace, nullspace_scaled, CMatrix, HermitianMatrix,
    DEFAULT_RANK_TOL,
};
use crate::observable::Observable;

pub const DEFAULT_CLOSURE_CAP: usize = 10_000;
/// Two unitaries are identified when they agree up to a global phase within this.
pub const PHASE_DEDUP_TOL: f64 = 1e-8;
const UNITARITY_TOL: f64 = 1e-10;
/// Relative gap below which eigenvalues of a generator are treated as degenerate.
const EIGEN_CLUSTER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Generators {
    Trivial,
    /// Permutations of 0..n, `p[i]` is the image of `i`.
    Permutations(Vec<Vec<usize>>),
    Unitaries(Vec<CMatrix>),
    /// Invariance under e^{iθG} for all real θ, for every listed G.
    OneParameter(Vec<HermitianMatrix>),
}

/// A symmetry group given by generators, with a cap on finite closures.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec {
    generators: Generators,
    closure_cap: usize,
}

impl Default for GroupSpec {
    fn default() -> Self {
        Self::trivial()
    }
}

impl GroupSpec {
    pub fn trivial() -> Self {
        GroupSpec {
            generators: Generators::Trivial,
            closure_cap: DEFAULT_CLOSURE_CAP,
        }
    }

    pub fn permutations(gens: Vec<Vec<usize>>) -> Result<Self> {
        let n = gens
            .first()
            .map(|g| g.len())
            .ok_or_else(|| Error::InvalidGroup("no generators".into()))?;
        for g in &gens {
            if g.len() != n {
                return Err(Error::InvalidGroup("generators act on different sizes".into()));
            }
            let mut seen = vec![false; n];
            for &x in g {
                if x >= n || seen[x] {
                    return Err(Error::InvalidGroup(format!("{g:?} is not a bijection of 0..{n}")));
                }
                seen[x] = true;
            }
        }
        Ok(GroupSpec {
            generators: Generators::Permutations(gens),
            closure_cap: DEFAULT_CLOSURE_CAP,
        })
    }

    pub fn unitaries(gens: Vec<CMatrix>) -> Result<Self> {
        let d = gens
            .first()
            .map(|g| g.nrows())
            .ok_or_else(|| Error::InvalidGroup("no generators".into()))?;
        for u in &gens {
            if u.nrows() != d || u.ncols() != d {
                return Err(Error::InvalidGroup("generators must be square of equal size".into()));
            }
            let defect = (u.adjoint() * u - CMatrix::identity(d, d)).norm();
            if defect > UNITARITY_TOL {
                return Err(Error::InvalidGroup(format!("generator not unitary (defect {defect:e})")));
            }
        }
        Ok(GroupSpec {
            generators: Generators::Unitaries(gens),
            closure_cap: DEFAULT_CLOSURE_CAP,
        })
    }

    pub fn one_parameter(generator: HermitianMatrix) -> Self {
        GroupSpec {
            generators: Generators::OneParameter(vec![generator]),
            closure_cap: DEFAULT_CLOSURE_CAP,
        }
    }

    /// Group generated by several one-parameter subgroups.
    pub fn one_parameter_family(gens: Vec<HermitianMatrix>) -> Result<Self> {
        let d = gens
            .first()
            .map(|g| g.dim())
            .ok_or_else(|| Error::InvalidGroup("no generators".into()))?;
        if gens.iter().any(|g| g.dim() != d) {
            return Err(Error::InvalidGroup("generators of different dimension".into()));
        }
        Ok(GroupSpec {
            generators: Generators::OneParameter(gens),
            closure_cap: DEFAULT_CLOSURE_CAP,
        })
    }

    pub fn with_closure_cap(mut self, cap: usize) -> Self {
        self.closure_cap = cap;
        self
    }

    pub fn closure_cap(&self) -> usize {
        self.closure_cap
    }

    pub fn generators(&self) -> &Generators {
        &self.generators
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self.generators, Generators::Trivial)
    }

    /// Name used in problem files.
    pub fn kind_name(&self) -> &'static str {
        match self.generators {
            Generators::Trivial => "trivial",
            Generators::Permutations(_) => "permutations",
            Generators::Unitaries(_) => "unitaries",
            Generators::OneParameter(_) => "one_parameter",
        }
    }

    /// Checks that the generators act on `space`.
    pub fn check_space(&self, space: EventSpace) -> Result<()> {
        let mismatch = |what: String| Error::SpaceMismatch {
            expected: space.to_string(),
            got: what,
        };
        match &self.generators {
            Generators::Trivial => Ok(()),
            Generators::Permutations(g) => {
                if g[0].len() != space.size() {
                    return Err(mismatch(format!("permutations of {}", g[0].len())));
                }
                Ok(())
            }
            Generators::Unitaries(u) => {
                if space.kind() != SpaceKind::Quantum || u[0].nrows() != space.size() {
                    return Err(mismatch(format!("{}x{} unitaries", u[0].nrows(), u[0].nrows())));
                }
                Ok(())
            }
            Generators::OneParameter(g) => {
                if space.kind() != SpaceKind::Quantum || g[0].dim() != space.size() {
                    return Err(mismatch(format!("one-parameter generator of dimension {}", g[0].dim())));
                }
                Ok(())
            }
        }
    }
}

/// A permutation or a unitary.
#[derive(Debug, Clone, PartialEq)]
pub enum GroupElement {
    Permutation(Vec<usize>),
    Unitary(CMatrix),
}

impl GroupElement {
    /// self ∘ other.
    pub fn compose(&self, other: &GroupElement) -> Result<GroupElement> {
        match (self, other) {
            (GroupElement::Permutation(g), GroupElement::Permutation(h)) if g.len() == h.len() => {
                Ok(GroupElement::Permutation(h.iter().map(|&i| g[i]).collect()))
            }
            (GroupElement::Unitary(u), GroupElement::Unitary(v)) if u.nrows() == v.nrows() => {
                Ok(GroupElement::Unitary(u * v))
            }
            _ => Err(Error::InvalidGroup("cannot compose elements of different kinds or sizes".into())),
        }
    }

    fn size(&self) -> usize {
        match self {
            GroupElement::Permutation(p) => p.len(),
            GroupElement::Unitary(u) => u.nrows(),
        }
    }

    /// Unitary representing the element on a Hilbert space (permutation matrix for permutations).
    pub fn as_unitary(&self) -> CMatrix {
        match self {
            GroupElement::Permutation(p) => permutation_matrix(p),
            GroupElement::Unitary(u) => u.clone(),
        }
    }

    fn same_up_to_phase(&self, other: &GroupElement) -> bool {
        match (self, other) {
            (GroupElement::Permutation(a), GroupElement::Permutation(b)) => a == b,
            (GroupElement::Unitary(u), GroupElement::Unitary(v)) => {
                let t: crate::numerics::C64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                let n = t.norm();
                if n < 1e-12 {
                    return false;
                }
                let phase = t / n;
                u.iter()
                    .zip(v.iter())
                    .all(|(a, b)| (a * phase - b).norm() <= PHASE_DEDUP_TOL)
            }
            _ => false,
        }
    }

    fn check(&self, space: EventSpace) -> Result<()> {
        let ok = match self {
            GroupElement::Permutation(p) => p.len() == space.size(),
            GroupElement::Unitary(u) => space.kind() == SpaceKind::Quantum && u.nrows() == space.size(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::SpaceMismatch {
                expected: space.to_string(),
                got: format!("group element on {} points", self.size()),
            })
        }
    }
}

fn permutation_matrix(p: &[usize]) -> CMatrix {
    let n = p.len();
    let mut m = CMatrix::zeros(n, n);
    for (i, &j) in p.iter().enumerate() {
        m[(j, i)] = c64(1.0, 0.0);
    }
    m
}

fn generator_elements(spec: &GroupSpec) -> Result<Vec<GroupElement>> {
    match &spec.generators {
        Generators::Permutations(g) => Ok(g.iter().cloned().map(GroupElement::Permutation).collect()),
        Generators::Unitaries(u) => Ok(u.iter().cloned().map(GroupElement::Unitary).collect()),
        _ => Err(Error::InvalidGroup(format!("{} groups have no finite closure", spec.kind_name()))),
    }
}

/// All group elements, by breadth-first products of the generators.
///
/// Identity first; unitaries are deduplicated modulo global phase.
pub fn group_closure(spec: &GroupSpec) -> Result<Vec<GroupElement>> {
    let gens = generator_elements(spec)?;
    let identity = match &gens[0] {
        GroupElement::Permutation(p) => GroupElement::Permutation((0..p.len()).collect()),
        GroupElement::Unitary(u) => GroupElement::Unitary(CMatrix::identity(u.nrows(), u.nrows())),
    };
    let mut elements = vec![identity];
    let mut head = 0;
    while head < elements.len() {
        let current = elements[head].clone();
        head += 1;
        for g in &gens {
            let next = g.compose(&current)?;
            if !elements.iter().any(|e| e.same_up_to_phase(&next)) {
                if elements.len() >= spec.closure_cap {
                    return Err(Error::ClosureCapExceeded(spec.closure_cap));
                }
                elements.push(next);
            }
        }
    }
    Ok(elements)
}

/// g·E.
pub fn act_on_event(g: &GroupElement, e: &Event) -> Result<Event> {
    g.check(e.space())?;
    Ok(match (g, e) {
        (GroupElement::Permutation(p), Event::Classical(mask)) => {
            let mut out = vec![false; mask.len()];
            for (i, &b) in mask.iter().enumerate() {
                out[p[i]] = b;
            }
            Event::Classical(out)
        }
        (_, Event::Quantum(proj)) => Event::Quantum(proj.conjugate_by(&g.as_unitary())),
        (GroupElement::Unitary(_), Event::Classical(_)) => unreachable!("checked"),
    })
}

/// g·s.
pub fn act_on_state(g: &GroupElement, s: &State) -> Result<State> {
    g.check(s.space())?;
    Ok(match (g, s) {
        (GroupElement::Permutation(p), State::Classical(v)) => State::Classical(permute(p, v)),
        (_, State::Quantum(rho)) => State::Quantum(rho.conjugate_by(&g.as_unitary())),
        (GroupElement::Unitary(_), State::Classical(_)) => unreachable!("checked"),
    })
}

/// g·A under the same action as states.
pub fn act_on_observable(g: &GroupElement, a: &Observable) -> Result<Observable> {
    g.check(a.space())?;
    Ok(match (g, a) {
        (GroupElement::Permutation(p), Observable::Classical(v)) => Observable::Classical(permute(p, v)),
        (_, Observable::Quantum(m)) => Observable::Quantum(m.conjugate_by(&g.as_unitary())),
        (GroupElement::Unitary(_), Observable::Classical(_)) => unreachable!("checked"),
    })
}

fn permute(p: &[usize], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for (i, &x) in v.iter().enumerate() {
        out[p[i]] = x;
    }
    out
}

/// |ν(E) − (g·ν)(g·E)|.
pub fn covariance_check(s: &State, e: &Event, g: &GroupElement) -> Result<f64> {
    let before = prob(s, e)?;
    let after = prob(&act_on_state(g, s)?, &act_on_event(g, e)?)?;
    Ok((before - after).abs())
}

/// Spectral projectors of a Hermitian generator, eigenvalues clustered.
fn eigenspace_projectors(g: &HermitianMatrix) -> Vec<CMatrix> {
    eigenspace_bases(g)
        .into_iter()
        .map(|v| &v * v.adjoint())
        .collect()
}

/// Orthonormal bases (as column blocks) of the eigenspaces of `g`.
fn eigenspace_bases(g: &HermitianMatrix) -> Vec<CMatrix> {
    let sd = eig_hermitian(g);
    let scale = sd.eigenvalues.iter().map(|x| x.abs()).fold(1.0, f64::max);
    let mut blocks = Vec::new();
    let mut start = 0;
    let d = sd.dim();
    for k in 1..=d {
        if k == d || sd.eigenvalues[k] - sd.eigenvalues[k - 1] > EIGEN_CLUSTER_TOL * scale {
            blocks.push(sd.eigenvectors.columns(start, k - start).into_owned());
            start = k;
        }
    }
    blocks
}

/// A group specification resolved against a space, ready for repeated use.
#[derive(Debug, Clone)]
pub struct PreparedGroup {
    space: EventSpace,
    action: Action,
}

#[derive(Debug, Clone)]
enum Action {
    Identity,
    /// Permutation groups average uniformly over each orbit.
    Orbits(Vec<Vec<usize>>),
    Finite(Vec<GroupElement>),
    Dephase(Vec<CMatrix>),
    /// Orthogonal projection onto a commutant given by an orthonormal basis.
    Commutant(Vec<HermitianMatrix>),
}

impl PreparedGroup {
    pub fn new(spec: &GroupSpec, space: EventSpace) -> Result<Self> {
        spec.check_space(space)?;
        let action = match &spec.generators {
            Generators::Trivial => Action::Identity,
            Generators::Permutations(g) => Action::Orbits(orbits(g, space.size())),
            Generators::Unitaries(_) => Action::Finite(group_closure(spec)?),
            Generators::OneParameter(gens) if gens.len() == 1 => Action::Dephase(eigenspace_projectors(&gens[0])),
            Generators::OneParameter(_) => {
                let basis = invariant_basis(spec, space)?;
                Action::Commutant(basis.into_iter().map(|b| b.as_quantum().cloned().expect("quantum")).collect())
            }
        };
        Ok(PreparedGroup { space, action })
    }

    pub fn space(&self) -> EventSpace {
        self.space
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.action, Action::Identity)
    }

    /// Group average of a real vector on outcomes.
    pub fn average_vector(&self, v: &[f64]) -> Vec<f64> {
        match &self.action {
            Action::Orbits(orbs) => {
                let mut out = vec![0.0; v.len()];
                for o in orbs {
                    let mean = o.iter().map(|&i| v[i]).sum::<f64>() / o.len() as f64;
                    for &i in o {
                        out[i] = mean;
                    }
                }
                out
            }
            _ => v.to_vec(),
        }
    }

    /// Group average (or commutant projection) of a Hermitian matrix.
    pub fn average_hermitian(&self, m: &HermitianMatrix) -> HermitianMatrix {
        match &self.action {
            Action::Identity | Action::Orbits(_) => m.clone(),
            Action::Finite(elems) => {
                let d = m.dim();
                let mut acc = CMatrix::zeros(d, d);
                for g in elems {
                    let u = g.as_unitary();
                    acc += &u * m.as_matrix() * u.adjoint();
                }
                acc /= c64(elems.len() as f64, 0.0);
                HermitianMatrix::new((&acc + acc.adjoint()) * c64(0.5, 0.0)).expect("average of Hermitian")
            }
            Action::Dephase(projs) => {
                let d = m.dim();
                let mut acc = CMatrix::zeros(d, d);
                for p in projs {
                    acc += p * m.as_matrix() * p;
                }
                HermitianMatrix::new((&acc + acc.adjoint()) * c64(0.5, 0.0)).expect("pinching of Hermitian")
            }
            Action::Commutant(basis) => {
                let mut acc = HermitianMatrix::zeros(m.dim());
                for b in basis {
                    acc = acc.add(&b.scale(b.inner(m)));
                }
                acc
            }
        }
    }

    pub fn twirl_state(&self, s: &State) -> Result<State> {
        self.space.check(&s.space())?;
        Ok(match s {
            State::Classical(p) => State::Classical(self.average_vector(p)),
            State::Quantum(r) => State::Quantum(self.average_hermitian(r)),
        })
    }

    pub fn twirl_observable(&self, a: &Observable) -> Result<Observable> {
        self.space.check(&a.space())?;
        Ok(match a {
            Observable::Classical(f) => Observable::Classical(self.average_vector(f)),
            Observable::Quantum(m) => Observable::Quantum(self.average_hermitian(m)),
        })
    }
}

/// Average of a state over the group: the invariant state closest to `s`.
pub fn twirl(s: &State, spec: &GroupSpec) -> Result<State> {
    PreparedGroup::new(spec, s.space())?.twirl_state(s)
}

/// Group average of an observable; adjoint to [`twirl`].
pub fn twirl_observable(a: &Observable, spec: &GroupSpec) -> Result<Observable> {
    PreparedGroup::new(spec, a.space())?.twirl_observable(a)
}

/// Whether `s` is invariant, with the largest generator residual
/// (L1 distance classically, trace norm quantum).
pub fn is_invariant(s: &State, spec: &GroupSpec, tol: f64) -> Result<(bool, f64)> {
    spec.check_space(s.space())?;
    let residual = match &spec.generators {
        Generators::Trivial => 0.0,
        Generators::Permutations(_) | Generators::Unitaries(_) => {
            let mut worst = 0.0f64;
            for g in generator_elements(spec)? {
                worst = worst.max(act_on_state(&g, s)?.distance(s)?);
            }
            worst
        }
        Generators::OneParameter(gens) => {
            let mut worst = 0.0f64;
            for g in gens {
                let single = GroupSpec::one_parameter(g.clone());
                worst = worst.max(twirl(s, &single)?.distance(s)?);
            }
            worst
        }
    };
    Ok((residual <= tol, residual))
}

/// Orbits of a permutation group, each sorted, ordered by smallest member.
pub fn orbits(gens: &[Vec<usize>], n: usize) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut y = x;
        while parent[y] != r {
            let next = parent[y];
            parent[y] = r;
            y = next;
        }
        r
    }
    for g in gens {
        for (i, &j) in g.iter().enumerate() {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut index_of_root = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if index_of_root[r] == usize::MAX {
            index_of_root[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[index_of_root[r]].push(i);
    }
    groups
}

/// Orthonormal basis of the invariant observables (equivalently, of the
/// span of invariant states).
///
/// Classical: normalized orbit indicators. Quantum: Hermitian matrices
/// commuting with every generator.
pub fn invariant_basis(spec: &GroupSpec, space: EventSpace) -> Result<Vec<Observable>> {
    spec.check_space(space)?;
    let n = space.size();
    match space.kind() {
        SpaceKind::Classical => {
            let orbs = match &spec.generators {
                Generators::Permutations(g) => orbits(g, n),
                _ => (0..n).map(|i| vec![i]).collect(),
            };
            Ok(orbs
                .into_iter()
                .map(|o| {
                    let w = 1.0 / (o.len() as f64).sqrt();
                    let mut v = vec![0.0; n];
                    for i in o {
                        v[i] = w;
                    }
                    Observable::Classical(v)
                })
                .collect())
        }
        SpaceKind::Quantum => {
            let herm = |m: CMatrix| Observable::Quantum(HermitianMatrix::new(m).expect("basis element Hermitian"));
            match &spec.generators {
                Generators::Trivial => Ok(hermitian_basis(n).into_iter().map(herm).collect()),
                Generators::OneParameter(g) if g.len() == 1 => {
                    let mut out = Vec::new();
                    for v in eigenspace_bases(&g[0]) {
                        for b in hermitian_basis(v.ncols()) {
                            out.push(herm(&v * b * v.adjoint()));
                        }
                    }
                    Ok(out)
                }
                _ => {
                    let gens: Vec<CMatrix> = match &spec.generators {
                        Generators::OneParameter(g) => g.iter().map(|x| x.as_matrix().clone()).collect(),
                        _ => generator_elements(spec)?.iter().map(|g| g.as_unitary()).collect(),
                    };
                    let basis = hermitian_basis(n);
                    let d2 = n * n;
                    let rows = 2 * d2 * gens.len();
                    let mut map = DMatrix::<f64>::zeros(rows, d2);
                    for (col, b) in basis.iter().enumerate() {
                        for (k, g) in gens.iter().enumerate() {
                            let c = g * b - b * g;
                            for (idx, z) in c.iter().enumerate() {
                                map[(2 * d2 * k + 2 * idx, col)] = z.re;
                                map[(2 * d2 * k + 2 * idx + 1, col)] = z.im;
                            }
                        }
                    }
                    // ‖gB − Bg‖ ≤ 2‖g‖ for unit B, so anything far below that is round-off
                    let scale = 2.0 * gens.iter().map(|g| g.norm()).fold(0.0, f64::max);
                    Ok(nullspace_scaled(&map, DEFAULT_RANK_TOL, scale)
                        .into_iter()
                        .map(|x| herm(hermitian_from_coords(&x, n)))
                        .collect())
                }
            }
        }
    }
}

/// Orthonormal basis of the orthogonal complement of [`invariant_basis`].
///
/// A state is invariant iff ⟨X⟩ = 0 for every X returned here, which lets
/// invariance be imposed as explicit linear constraints.
pub fn non_invariant_basis(spec: &GroupSpec, space: EventSpace) -> Result<Vec<Observable>> {
    let inv = invariant_basis(spec, space)?;
    let n = space.size();
    let dim = match space.kind() {
        SpaceKind::Classical => n,
        SpaceKind::Quantum => n * n,
    };
    let mut rows = DMatrix::<f64>::zeros(inv.len().max(1), dim);
    for (r, b) in inv.iter().enumerate() {
        for (c, x) in b.coords().into_iter().enumerate() {
            rows[(r, c)] = x;
        }
    }
    Ok(nullspace(&rows, DEFAULT_RANK_TOL)
        .into_iter()
        .map(|x| match space.kind() {
            SpaceKind::Classical => Observable::Classical(x.iter().cloned().collect()),
            SpaceKind::Quantum => Observable::Quantum(HermitianMatrix::new(hermitian_from_coords(&x, n)).expect("Hermitian")),
        })
        .collect())
}

/// Real dimensions of the full and the invariant state sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReducedDimension {
    pub full: usize,
    pub invariant: usize,
}

pub fn reduced_dimension(spec: &GroupSpec, space: EventSpace) -> Result<ReducedDimension> {
    let n = space.size();
    let full = match space.kind() {
        SpaceKind::Classical => n - 1,
        SpaceKind::Quantum => n * n - 1,
    };
    let invariant = invariant_basis(spec, space)?.len() - 1;
    Ok(ReducedDimension { full, invariant })
}

/// Residual of `x` after projecting onto the span of an orthonormal basis.
pub fn span_residual(x: &Observable, basis: &[Observable]) -> f64 {
    let mut r = x.clone();
    for b in basis {
        r = r.add_scaled(-b.inner(x), b);
    }
    r.norm()
}

/// Coordinates of an observable in an orthonormal basis.
pub fn coordinates_in(x: &Observable, basis: &[Observable]) -> Vec<f64> {
    basis.iter().map(|b| b.inner(x)).collect()
}

/// Quantum space Hermitian basis coordinate count; helper for callers.
pub fn observable_dimension(space: EventSpace) -> usize {
    match space.kind() {
        SpaceKind::Classical => space.size(),
        SpaceKind::Quantum => space.size() * space.size(),
    }
}

#[allow(dead_code)]
fn coords_of(m: &HermitianMatrix) -> Vec<f64> {
    hermitian_coords(m.as_matrix()).iter().cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::{shannon, von_neumann};
    use crate::numerics::CVector;
    use crate::random::{random_density, random_probability, rng_from_seed};

    fn pauli_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)])
    }

    fn pauli_z() -> HermitianMatrix {
        HermitianMatrix::from_real_diagonal(&[1.0, -1.0])
    }

    #[test]
    fn closure_examples() {
        let swap = GroupSpec::permutations(vec![vec![1, 0]]).unwrap();
        assert_eq!(group_closure(&swap).unwrap().len(), 2);
        let z4 = GroupSpec::permutations(vec![vec![1, 2, 3, 0]]).unwrap();
        assert_eq!(group_closure(&z4).unwrap().len(), 4);
        let x = GroupSpec::unitaries(vec![pauli_x()]).unwrap();
        assert_eq!(group_closure(&x).unwrap().len(), 2);
        // i·X squares to −I, which equals I modulo phase
        let ix = GroupSpec::unitaries(vec![pauli_x() * c64(0.0, 1.0)]).unwrap();
        assert_eq!(group_closure(&ix).unwrap().len(), 2);
    }

    #[test]
    fn closure_cap_enforced() {
        let s5 = GroupSpec::permutations(vec![vec![1, 2, 3, 4, 0], vec![1, 0, 2, 3, 4]])
            .unwrap()
            .with_closure_cap(50);
        assert!(matches!(group_closure(&s5), Err(Error::ClosureCapExceeded(50))));
        let s5 = s5.with_closure_cap(120);
        assert_eq!(group_closure(&s5).unwrap().len(), 120);
    }

    #[test]
    fn invalid_generators() {
        assert!(GroupSpec::permutations(vec![vec![0, 0]]).is_err());
        let not_unitary = CMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)]);
        assert!(GroupSpec::unitaries(vec![not_unitary]).is_err());
    }

    #[test]
    fn action_examples() {
        let id = GroupElement::Permutation(vec![0, 1]);
        let e = Event::subset(2, &[0]).unwrap();
        assert_eq!(act_on_event(&id, &e).unwrap(), e);
        let swap = GroupElement::Permutation(vec![1, 0]);
        assert_eq!(act_on_event(&swap, &e).unwrap().members().unwrap(), vec![1]);
        let x = GroupElement::Unitary(pauli_x());
        let zero = CVector::from_vec(vec![c64(1.0, 0.0), c64(0.0, 0.0)]);
        match act_on_event(&x, &Event::ray(&zero)).unwrap() {
            Event::Quantum(p) => {
                assert!((p.as_matrix()[(1, 1)].re - 1.0).abs() < 1e-15);
                assert!(p.as_matrix()[(0, 0)].norm() < 1e-15);
            }
            _ => panic!(),
        }
        let s = State::classical(vec![0.3, 0.7]).unwrap();
        assert_eq!(act_on_state(&swap, &s).unwrap(), State::Classical(vec![0.7, 0.3]));
        let d = State::Quantum(HermitianMatrix::from_real_diagonal(&[0.7, 0.3]));
        let xd = act_on_state(&x, &d).unwrap();
        assert!(xd.distance(&State::Quantum(HermitianMatrix::from_real_diagonal(&[0.3, 0.7]))).unwrap() < 1e-14);
        assert!(matches!(act_on_state(&x, &s), Err(Error::SpaceMismatch { .. })));
    }

    #[test]
    fn twirl_examples() {
        let swap = GroupSpec::permutations(vec![vec![1, 0]]).unwrap();
        let t = twirl(&State::classical(vec![0.9, 0.1]).unwrap(), &swap).unwrap();
        assert_eq!(t, State::Classical(vec![0.5, 0.5]));
        let z3 = GroupSpec::permutations(vec![vec![1, 2, 0]]).unwrap();
        let t = twirl(&State::classical(vec![0.6, 0.3, 0.1]).unwrap(), &z3).unwrap();
        for x in t.probabilities().unwrap() {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
        let g = GroupSpec::one_parameter(HermitianMatrix::from_real_diagonal(&[0.0, 1.0]));
        let rho = HermitianMatrix::new(CMatrix::from_row_slice(
            2,
            2,
            &[c64(0.6, 0.0), c64(0.2, 0.1), c64(0.2, -0.1), c64(0.4, 0.0)],
        ))
        .unwrap();
        let t = twirl(&State::Quantum(rho), &g).unwrap();
        let m = t.density().unwrap().as_matrix();
        assert!(m[(0, 1)].norm() < 1e-15 && (m[(0, 0)].re - 0.6).abs() < 1e-15);
    }

    #[test]
    fn twirl_observable_examples() {
        let z3 = GroupSpec::permutations(vec![vec![1, 2, 0]]).unwrap();
        let t = twirl_observable(&Observable::Classical(vec![1.0, 2.0, 3.0]), &z3).unwrap();
        for x in t.as_classical().unwrap() {
            assert!((x - 2.0).abs() < 1e-15);
        }
        let g = GroupSpec::one_parameter(pauli_z());
        let x = Observable::Quantum(HermitianMatrix::new(pauli_x()).unwrap());
        assert!(twirl_observable(&x, &g).unwrap().norm() < 1e-15);
        let z = Observable::Quantum(pauli_z());
        assert_eq!(twirl_observable(&z, &g).unwrap(), z);
    }

    #[test]
    fn invariance_examples() {
        let z4 = GroupSpec::permutations(vec![vec![1, 2, 3, 0]]).unwrap();
        assert!(is_invariant(&State::classical(vec![0.25; 4]).unwrap(), &z4, 1e-12).unwrap().0);
        let swap = GroupSpec::permutations(vec![vec![1, 0]]).unwrap();
        let (ok, r) = is_invariant(&State::classical(vec![0.7, 0.3]).unwrap(), &swap, 1e-10).unwrap();
        assert!(!ok && (r - 0.8).abs() < 1e-14);
        let mut rng = rng_from_seed(4);
        let g = GroupSpec::unitaries(vec![pauli_x()]).unwrap();
        let t = twirl(&State::Quantum(random_density(2, &mut rng)), &g).unwrap();
        assert!(is_invariant(&t, &g, 1e-10).unwrap().0);
    }

    #[test]
    fn invariant_basis_examples() {
        let q2 = EventSpace::quantum(2).unwrap();
        assert_eq!(invariant_basis(&GroupSpec::trivial(), q2).unwrap().len(), 4);
        let g = GroupSpec::one_parameter(HermitianMatrix::from_real_diagonal(&[0.0, 1.0, 2.0]));
        let q3 = EventSpace::quantum(3).unwrap();
        assert_eq!(invariant_basis(&g, q3).unwrap().len(), 3);
        let swap = GroupSpec::permutations(vec![vec![1, 0]]).unwrap();
        assert_eq!(invariant_basis(&swap, EventSpace::classical(2).unwrap()).unwrap().len(), 1);
    }

    #[test]
    fn reduced_dimension_examples() {
        let g = GroupSpec::one_parameter(HermitianMatrix::from_real_diagonal(&[0.0, 1.0, 2.0]));
        let r = reduced_dimension(&g, EventSpace::quantum(3).unwrap()).unwrap();
        assert_eq!(r, ReducedDimension { full: 8, invariant: 2 });
        let r = reduced_dimension(&GroupSpec::trivial(), EventSpace::classical(5).unwrap()).unwrap();
        assert_eq!(r, ReducedDimension { full: 4, invariant: 4 });
        let z4 = GroupSpec::permutations(vec![vec![1, 2, 3, 0]]).unwrap();
        let r = reduced_dimension(&z4, EventSpace::classical(4).unwrap()).unwrap();
        assert_eq!(r, ReducedDimension { full: 3, invariant: 0 });
    }

    #[test]
    fn commutant_via_nullspace_matches_dephasing() {
        // same generator through the generic nullspace path
        let g = HermitianMatrix::from_real_diagonal(&[0.0, 1.0, 1.0]);
        let fam = GroupSpec::one_parameter_family(vec![g.clone(), g.clone()]).unwrap();
        let q3 = EventSpace::quantum(3).unwrap();
        assert_eq!(invariant_basis(&fam, q3).unwrap().len(), 5);
        assert_eq!(invariant_basis(&GroupSpec::one_parameter(g), q3).unwrap().len(), 5);
    }

    #[test]
    fn unitary_group_commutant() {
        // {I, X}: commutant spanned by I and X
        let g = GroupSpec::unitaries(vec![pauli_x()]).unwrap();
        let b = invariant_basis(&g, EventSpace::quantum(2).unwrap()).unwrap();
        assert_eq!(b.len(), 2);
        let comp = non_invariant_basis(&g, EventSpace::quantum(2).unwrap()).unwrap();
        assert_eq!(comp.len(), 2);
        for c in &comp {
            for v in &b {
                assert!(c.inner(v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn twirl_properties_on_random_states() {
        let mut rng = rng_from_seed(8);
        let g = GroupSpec::one_parameter(HermitianMatrix::from_real_diagonal(&[0.0, 1.0, 1.0, 3.0]));
        let q4 = EventSpace::quantum(4).unwrap();
        let basis = invariant_basis(&g, q4).unwrap();
        let z4 = GroupSpec::permutations(vec![vec![1, 2, 3, 0]]).unwrap();
        for _ in 0..50 {
            let rho = State::Quantum(random_density(4, &mut rng));
            let t = twirl(&rho, &g).unwrap();
            assert!(twirl(&t, &g).unwrap().distance(&t).unwrap() < 1e-10);
            let tr = t.density().unwrap();
            assert!((tr.trace() - 1.0).abs() < 1e-12);
            assert!(eig_hermitian(tr).eigenvalues[0] >= -1e-10);
            assert!(von_neumann(tr) >= von_neumann(rho.density().unwrap()) - 1e-9);
            let obs = Observable::Quantum(tr.clone());
            assert!(span_residual(&obs, &basis) < 1e-9);

            let p = State::classical(random_probability(4, &mut rng)).unwrap();
            let tp = twirl(&p, &z4).unwrap();
            assert!(shannon(tp.probabilities().unwrap()) >= shannon(p.probabilities().unwrap()) - 1e-9);
        }
    }
}
