//! Coherent states two ways: as states saturating the uncertainty relation
//! with equal variances on a truncated Fock space, and as the SU(2) orbit of
//! a reference spin state.
//!
//! The two constructions are kept separate; they are not equivalent in
//! finite dimension.

use std::f64::consts::PI;

use crate::error::{Error, Infeasibility, Result};
use crate::event::{EventSpace, State};
use crate::maxent::{solve_general, Constraint, Problem, Solution, SolverOptions};
use crate::numerics::{c64, fix_phase, sphere_quadrature, unitary_exp, CMatrix, CVector, HermitianMatrix, QuadratureNode, C64};
use crate::observable::Observable;
use crate::symmetry::{invariant_basis, GroupSpec};

pub const DEFAULT_TRUNCATION: usize = 40;
/// Largest spin dimension 2j+1 accepted.
pub const MAX_SPIN_DIM: usize = 64;

/// Position, momentum and number operators on the first N Fock levels.
#[derive(Debug, Clone)]
pub struct OscillatorOps {
    pub n: usize,
    pub hbar: f64,
    pub annihilation: CMatrix,
    pub q: HermitianMatrix,
    pub p: HermitianMatrix,
    pub number: HermitianMatrix,
}

pub fn build_oscillator(n: usize, hbar: f64) -> Result<OscillatorOps> {
    if n < 4 {
        return Err(Error::BadDimension(format!("truncation must be at least 4, got {n}")));
    }
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::InvalidProblem(format!("hbar must be positive, got {hbar}")));
    }
    let mut a = CMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = c64((k as f64).sqrt(), 0.0);
    }
    let ad = a.adjoint();
    let s = (hbar / 2.0).sqrt();
    let q = HermitianMatrix::new((&a + &ad) * c64(s, 0.0))?;
    let p = HermitianMatrix::new((&ad - &a) * c64(0.0, s))?;
    let number = HermitianMatrix::from_real_diagonal(&(0..n).map(|k| k as f64).collect::<Vec<_>>());
    Ok(OscillatorOps {
        n,
        hbar,
        annihilation: a,
        q,
        p,
        number,
    })
}

fn density(state: &State, dim: usize) -> Result<&HermitianMatrix> {
    match state.density() {
        Some(r) if r.dim() == dim => Ok(r),
        _ => Err(Error::SpaceMismatch {
            expected: format!("quantum state of dimension {dim}"),
            got: state.space().to_string(),
        }),
    }
}

/// ⟨A²⟩ − ⟨A⟩², never negative.
pub fn variance(state: &State, a: &HermitianMatrix) -> Result<f64> {
    let rho = density(state, a.dim())?;
    let m = a.inner(rho);
    Ok((a.square().inner(rho) - m * m).max(0.0))
}

/// (ΔQ² − ħ/2, ΔP² − ħ/2).
pub fn saturation_residual(state: &State, ops: &OscillatorOps) -> Result<(f64, f64)> {
    let rho = density(state, ops.n)?;
    let raw = |a: &HermitianMatrix| {
        let m = a.inner(rho);
        a.square().inner(rho) - m * m
    };
    let half = ops.hbar / 2.0;
    Ok((raw(&ops.q) - half, raw(&ops.p) - half))
}

/// Gradients of the two saturation residuals with respect to ρ
/// (Frobenius pairing): A² − 2⟨A⟩A.
pub fn saturation_gradient(state: &State, ops: &OscillatorOps) -> Result<(HermitianMatrix, HermitianMatrix)> {
    let rho = density(state, ops.n)?;
    let grad = |a: &HermitianMatrix| a.square().sub(&a.scale(2.0 * a.inner(rho)));
    Ok((grad(&ops.q), grad(&ops.p)))
}

fn check_truncation(alpha_sq: f64, n: usize) -> Result<()> {
    let limit = n as f64 / 4.0;
    if alpha_sq > limit {
        return Err(Error::TruncationTooSmall { alpha_sq, limit });
    }
    Ok(())
}

/// Normalized truncation of e^{−|α|²/2} Σ αⁿ/√(n!) |n⟩.
pub fn coherent_state_vector(alpha: C64, ops: &OscillatorOps) -> Result<CVector> {
    check_truncation(alpha.norm_sqr(), ops.n)?;
    let mut v = CVector::zeros(ops.n);
    let mut c = c64((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    v[0] = c;
    for k in 1..ops.n {
        c = c * alpha / (k as f64).sqrt();
        v[k] = c;
    }
    let norm = v.norm();
    Ok(v / c64(norm, 0.0))
}

/// α = (q + i p)/√(2ħ).
pub fn alpha_from_means(q: f64, p: f64, hbar: f64) -> C64 {
    c64(q, p) / (2.0 * hbar).sqrt()
}

/// Maximum-entropy state with means (q0, p0) saturating ΔQ = ΔP = √(ħ/2).
pub fn solve_saturated(ops: &OscillatorOps, q0: f64, p0: f64) -> Result<Solution> {
    solve_saturated_with(ops, q0, p0, SolverOptions::default())
}

pub fn solve_saturated_with(ops: &OscillatorOps, q0: f64, p0: f64, options: SolverOptions) -> Result<Solution> {
    let alpha_sq = (q0 * q0 + p0 * p0) / (2.0 * ops.hbar);
    let limit = ops.n as f64 / 4.0;
    if alpha_sq > limit {
        return Err(Error::Infeasible(Infeasibility::TruncationGuard { alpha_sq, limit }));
    }
    let q = Observable::Quantum(ops.q.clone());
    let p = Observable::Quantum(ops.p.clone());
    let half = ops.hbar / 2.0;
    let problem = Problem::new(EventSpace::quantum(ops.n)?)
        .with_constraint(Constraint::moment(q.clone(), q0))
        .with_constraint(Constraint::moment(p.clone(), p0))
        .with_constraint(Constraint::variance(q, half))
        .with_constraint(Constraint::variance(p, half))
        .with_options(options);
    solve_general(&problem)
}

/// Jz, J± and the Cartesian components for spin j; index k holds m = −j + k.
#[derive(Debug, Clone)]
pub struct SpinOps {
    pub two_j: usize,
    pub jx: HermitianMatrix,
    pub jy: HermitianMatrix,
    pub jz: HermitianMatrix,
    pub raising: CMatrix,
}

impl SpinOps {
    pub fn new(two_j: usize) -> Result<Self> {
        if two_j == 0 || two_j + 1 > MAX_SPIN_DIM {
            return Err(Error::BadSpin(format!("2j = {two_j}")));
        }
        let d = two_j + 1;
        let j = two_j as f64 / 2.0;
        let ms: Vec<f64> = (0..d).map(|k| -j + k as f64).collect();
        let mut jp = CMatrix::zeros(d, d);
        for k in 0..d - 1 {
            let m = ms[k];
            jp[(k + 1, k)] = c64((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
        }
        let jm = jp.adjoint();
        let jx = HermitianMatrix::new((&jp + &jm) * c64(0.5, 0.0))?;
        let jy = HermitianMatrix::new((&jp - &jm) * c64(0.0, -0.5))?;
        Ok(SpinOps {
            two_j,
            jx,
            jy,
            jz: HermitianMatrix::from_real_diagonal(&ms),
            raising: jp,
        })
    }

    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    pub fn dim(&self) -> usize {
        self.two_j + 1
    }

    /// n·J.
    pub fn along(&self, n: [f64; 3]) -> HermitianMatrix {
        self.jx.scale(n[0]).add(&self.jy.scale(n[1])).add(&self.jz.scale(n[2]))
    }

    /// e^{−iφJz} e^{−iθJy}: carries the z axis to the direction (θ, φ).
    pub fn rotation(&self, theta: f64, phi: f64) -> CMatrix {
        unitary_exp(&self.jz, phi) * unitary_exp(&self.jy, theta)
    }
}

/// Converts a spin value to 2j, rejecting non-half-integers.
pub fn two_j_from(j: f64) -> Result<usize> {
    let t = 2.0 * j;
    if !(t.is_finite() && t >= 1.0 && (t - t.round()).abs() < 1e-12) {
        return Err(Error::BadSpin(format!("j = {j} is not a positive half-integer")));
    }
    Ok(t.round() as usize)
}

#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub node: QuadratureNode,
    pub vector: CVector,
}

/// SU(2) coherent states s_g = g·s₀ at the nodes of a sphere quadrature.
#[derive(Debug, Clone)]
pub struct SpinFamily {
    pub ops: SpinOps,
    pub reference: CVector,
    /// Generator of the stability subgroup of the reference state.
    pub stability_generator: HermitianMatrix,
    pub quadrature_order: usize,
    pub members: Vec<FamilyMember>,
}

/// The unique Jz-invariant pure state with extremal (lowest) ⟨Jz⟩.
fn reference_state(ops: &SpinOps) -> Result<CVector> {
    let d = ops.dim();
    let spec = GroupSpec::one_parameter(ops.jz.clone());
    let mut candidates: Vec<(f64, CVector)> = Vec::new();
    for b in invariant_basis(&spec, EventSpace::quantum(d)?)? {
        let m = b.as_quantum().expect("quantum basis").clone();
        let is_projector = (m.trace() - 1.0).abs() < 1e-10 && m.square().sub(&m).frobenius_norm() < 1e-10;
        if !is_projector {
            continue;
        }
        let mat = m.as_matrix();
        let col = (0..d)
            .max_by(|&a, &b| mat.column(a).norm().total_cmp(&mat.column(b).norm()))
            .expect("non-empty");
        let mut v = mat.column(col).into_owned();
        let n = v.norm();
        v /= c64(n, 0.0);
        fix_phase(&mut v);
        candidates.push((ops.jz.inner(&m), v));
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    match candidates.as_slice() {
        [(m0, v), rest @ ..] if rest.first().is_none_or(|(m1, _)| m1 - m0 > 1e-9) => Ok(v.clone()),
        _ => Err(Error::BadSpin("no unique extremal invariant reference state".into())),
    }
}

pub fn su2_family(two_j: usize, quadrature_order: usize) -> Result<SpinFamily> {
    let ops = SpinOps::new(two_j)?;
    let reference = reference_state(&ops)?;
    let nodes = sphere_quadrature(quadrature_order)?;
    let members = nodes
        .into_iter()
        .map(|node| {
            let vector = ops.rotation(node.theta, node.phi) * &reference;
            FamilyMember { node, vector }
        })
        .collect();
    Ok(SpinFamily {
        stability_generator: ops.jz.clone(),
        ops,
        reference,
        quadrature_order,
        members,
    })
}

/// ‖(2j+1)/(4π) Σ w |n⟩⟨n| − I‖_F over the family's quadrature.
pub fn resolution_of_identity(family: &SpinFamily) -> Result<f64> {
    let d = family.ops.dim();
    if family.quadrature_order < d {
        return Err(Error::QuadratureTooCoarse {
            order: family.quadrature_order,
            dim: d,
        });
    }
    let mut acc = CMatrix::zeros(d, d);
    for m in &family.members {
        acc += &m.vector * m.vector.adjoint() * c64(m.node.weight, 0.0);
    }
    acc *= c64(d as f64 / (4.0 * PI), 0.0);
    Ok((acc - CMatrix::identity(d, d)).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::State;
    use crate::random::{random_density, rng_from_seed};

    #[test]
    fn oscillator_basics() {
        let ops = build_oscillator(4, 1.0).unwrap();
        let comm = ops.q.as_matrix() * ops.p.as_matrix() - ops.p.as_matrix() * ops.q.as_matrix();
        for k in 0..2 {
            assert!((comm[(k, k)] - c64(0.0, 1.0)).norm() < 1e-10);
        }
        let vac = State::pure(&coherent_state_vector(c64(0.0, 0.0), &ops).unwrap());
        assert!((ops.q.square().inner(vac.density().unwrap()) - 0.5).abs() < 1e-12);
        assert!(matches!(build_oscillator(3, 1.0), Err(Error::BadDimension(_))));
    }

    #[test]
    fn variance_examples() {
        let z = HermitianMatrix::from_real_diagonal(&[1.0, -1.0]);
        let up = CVector::from_vec(vec![c64(1.0, 0.0), c64(0.0, 0.0)]);
        assert!(variance(&State::pure(&up), &z).unwrap() < 1e-15);
        let mixed = State::Quantum(HermitianMatrix::identity(2).scale(0.5));
        assert!((variance(&mixed, &z).unwrap() - 1.0).abs() < 1e-15);
        let ops = build_oscillator(30, 1.0).unwrap();
        let vac = State::pure(&coherent_state_vector(c64(0.0, 0.0), &ops).unwrap());
        assert!((variance(&vac, &ops.q).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn saturation_examples() {
        let ops = build_oscillator(30, 1.0).unwrap();
        let vac = State::pure(&coherent_state_vector(c64(0.0, 0.0), &ops).unwrap());
        let (r1, r2) = saturation_residual(&vac, &ops).unwrap();
        assert!(r1.abs() <= 1e-10 && r2.abs() <= 1e-10);
        let ops40 = build_oscillator(40, 1.0).unwrap();
        let one = State::pure(&coherent_state_vector(c64(1.0, 0.0), &ops40).unwrap());
        let (r1, r2) = saturation_residual(&one, &ops40).unwrap();
        assert!(r1.abs() <= 1e-6 && r2.abs() <= 1e-6);
        let mut fock1 = CVector::zeros(30);
        fock1[1] = c64(1.0, 0.0);
        let (r1, r2) = saturation_residual(&State::pure(&fock1), &ops).unwrap();
        assert!((r1 - 1.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coherent_vector_examples() {
        let ops = build_oscillator(40, 1.0).unwrap();
        let v = coherent_state_vector(c64(1.0, 0.0), &ops).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-12);
        let s = State::pure(&v);
        assert!((ops.q.inner(s.density().unwrap()) - 2f64.sqrt()).abs() < 1e-8);
        assert!(matches!(
            coherent_state_vector(c64(4.0, 0.0), &ops),
            Err(Error::TruncationTooSmall { .. })
        ));
    }

    #[test]
    fn saturated_vacuum() {
        let ops = build_oscillator(20, 1.0).unwrap();
        let sol = solve_saturated(&ops, 0.0, 0.0).unwrap();
        let vac = coherent_state_vector(c64(0.0, 0.0), &ops).unwrap();
        assert!(sol.state.fidelity_with_pure(&vac).unwrap() >= 1.0 - 1e-8);
        assert!(sol.entropy <= 1e-6);
    }

    #[test]
    fn saturated_displaced() {
        let ops = build_oscillator(40, 1.0).unwrap();
        let r2 = 2f64.sqrt();
        for (q0, p0) in [(r2, 0.0), (0.0, r2)] {
            let sol = solve_saturated(&ops, q0, p0).unwrap();
            let target = coherent_state_vector(alpha_from_means(q0, p0, 1.0), &ops).unwrap();
            assert_eq!(sol.status, crate::maxent::Status::Optimal);
            assert!(sol.state.fidelity_with_pure(&target).unwrap() >= 1.0 - 1e-5);
            assert!(sol.entropy <= 1e-5);
        }
    }

    #[test]
    fn saturated_guard() {
        let ops = build_oscillator(8, 1.0).unwrap();
        assert!(matches!(
            solve_saturated(&ops, 4.0, 0.0),
            Err(Error::Infeasible(Infeasibility::TruncationGuard { .. }))
        ));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let ops = build_oscillator(6, 1.0).unwrap();
        let mut rng = rng_from_seed(3);
        let rho = random_density(6, &mut rng);
        let dir = random_density(6, &mut rng).sub(&rho);
        let (g1, g2) = saturation_gradient(&State::Quantum(rho.clone()), &ops).unwrap();
        let h = 1e-6;
        let f = |t: f64| saturation_residual(&State::Quantum(rho.add(&dir.scale(t))), &ops).unwrap();
        let (a1, a2) = f(h);
        let (b1, b2) = f(-h);
        let fd1 = (a1 - b1) / (2.0 * h);
        let fd2 = (a2 - b2) / (2.0 * h);
        assert!((fd1 - g1.inner(&dir)).abs() <= 1e-6 * (1.0 + fd1.abs()));
        assert!((fd2 - g2.inner(&dir)).abs() <= 1e-6 * (1.0 + fd2.abs()));
    }

    #[test]
    fn spin_family_examples() {
        let fam = su2_family(1, 4).unwrap();
        assert_eq!(fam.reference[0].norm(), 1.0);
        for m in &fam.members {
            let s = State::pure(&m.vector);
            let r = s.density().unwrap();
            assert!((r.square().trace() - 1.0).abs() < 1e-10);
            let nj = fam.ops.along(m.node.direction);
            assert!((nj.inner(r) + 0.5).abs() < 1e-9);
        }
        assert!(resolution_of_identity(&fam).unwrap() <= 1e-10);
        let fam1 = su2_family(2, 6).unwrap();
        assert!(resolution_of_identity(&fam1).unwrap() <= 1e-9);
        let coarse = su2_family(4, 2).unwrap();
        assert!(matches!(
            resolution_of_identity(&coarse),
            Err(Error::QuadratureTooCoarse { .. })
        ));
        assert!(matches!(SpinOps::new(0), Err(Error::BadSpin(_))));
        assert!(two_j_from(0.75).is_err());
        assert_eq!(two_j_from(1.5).unwrap(), 3);
    }

    #[test]
    fn stability_subgroup_fixes_reference() {
        let fam = su2_family(3, 4).unwrap();
        let p0 = HermitianMatrix::projector(&fam.reference);
        for t in [0.3, 1.7, 4.0] {
            let u = unitary_exp(&fam.stability_generator, t);
            let moved = p0.conjugate_by(&u);
            assert!(moved.sub(&p0).frobenius_norm() <= 1e-10);
        }
    }
}
