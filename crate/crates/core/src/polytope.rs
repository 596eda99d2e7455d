//! Two-party, two-input, two-output behaviors P(a,b|x,y): CHSH values,
//! no-signal and local polytopes, quantum behaviors and entropy
//! maximization over no-signal behaviors.
//!
//! Tables are stored with index 8x + 4y + 2a + b. Behavior entropy is the
//! Shannon entropy of the joint distribution P(a,b|x,y)/4 (uniform inputs).

use crate::error::{Error, Infeasibility, Result};
use crate::event::{EventSpace, State};
use crate::maxent::{solve_general, solve_linear, Constraint, Problem, Solution, SolverOptions};
use crate::numerics::{c64, kron, lp_feasible, CMatrix, HermitianMatrix, LpFeasibility, LpProblem};
use crate::observable::Observable;
use crate::symmetry::GroupSpec;

pub const BEHAVIOR_NORMALIZATION_TOL: f64 = 1e-10;
pub const BEHAVIOR_POSITIVITY_TOL: f64 = 1e-12;
pub const NOSIGNAL_TOL: f64 = 1e-8;
const OBSERVABLE_TOL: f64 = 1e-10;

pub fn index(x: usize, y: usize, a: usize, b: usize) -> usize {
    8 * x + 4 * y + 2 * a + b
}

/// Sign pattern (s00, s01, s10, s11) of the canonical CHSH expression
/// E00 + E10 + E01 − E11.
pub const CANONICAL_CHSH: [[f64; 2]; 2] = [[1.0, 1.0], [1.0, -1.0]];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Behavior([f64; 16]);

impl Behavior {
    pub fn new(table: [f64; 16]) -> Result<Self> {
        if table.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidState("behavior has non-finite entries".into()));
        }
        if let Some(p) = table.iter().find(|&&p| p < -BEHAVIOR_POSITIVITY_TOL) {
            return Err(Error::InvalidState(format!("negative behavior entry {p}")));
        }
        for x in 0..2 {
            for y in 0..2 {
                let s: f64 = (0..4).map(|ab| table[8 * x + 4 * y + ab]).sum();
                if (s - 1.0).abs() > BEHAVIOR_NORMALIZATION_TOL {
                    return Err(Error::InvalidState(format!("context ({x},{y}) sums to {s}")));
                }
            }
        }
        Ok(Behavior(table))
    }

    pub fn from_fn(f: impl Fn(usize, usize, usize, usize) -> f64) -> Result<Self> {
        let mut t = [0.0; 16];
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        t[index(x, y, a, b)] = f(a, b, x, y);
                    }
                }
            }
        }
        Behavior::new(t)
    }

    pub fn uniform() -> Self {
        Behavior([0.25; 16])
    }

    pub fn table(&self) -> &[f64; 16] {
        &self.0
    }

    /// P(a,b|x,y).
    pub fn p(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.0[index(x, y, a, b)]
    }

    /// ⟨a_x b_y⟩ = Σ (−1)^{a⊕b} P(a,b|x,y).
    pub fn correlator(&self, x: usize, y: usize) -> f64 {
        let mut e = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let s = if a == b { 1.0 } else { -1.0 };
                e += s * self.p(a, b, x, y);
            }
        }
        e
    }

    pub fn max_abs_diff(&self, other: &Behavior) -> f64 {
        self.0.iter().zip(&other.0).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Joint distribution over (x, y, a, b) with uniform inputs.
    pub fn joint(&self) -> Vec<f64> {
        self.0.iter().map(|p| p / 4.0).collect()
    }
}

/// The eight CHSH expressions: the minus sign on each of the four
/// correlators, each with both overall signs. Entry 0 is the canonical
/// E00 + E10 + E01 − E11.
pub fn chsh_values(b: &Behavior) -> [f64; 8] {
    let e = [[b.correlator(0, 0), b.correlator(0, 1)], [b.correlator(1, 0), b.correlator(1, 1)]];
    let total = e[0][0] + e[0][1] + e[1][0] + e[1][1];
    let minus_at = [(1, 1), (1, 0), (0, 1), (0, 0)];
    let mut out = [0.0; 8];
    for (k, &(x, y)) in minus_at.iter().enumerate() {
        let s = total - 2.0 * e[x][y];
        out[k] = s;
        out[k + 4] = -s;
    }
    out
}

pub fn chsh_max(b: &Behavior) -> f64 {
    chsh_values(b).iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// Coefficient rows (over table entries) of the eight marginal equalities:
/// Alice's marginals independent of y, then Bob's independent of x.
pub fn nosignal_rows() -> Vec<[f64; 16]> {
    let mut rows = Vec::with_capacity(8);
    for x in 0..2 {
        for a in 0..2 {
            let mut r = [0.0; 16];
            for b in 0..2 {
                r[index(x, 0, a, b)] += 1.0;
                r[index(x, 1, a, b)] -= 1.0;
            }
            rows.push(r);
        }
    }
    for y in 0..2 {
        for b in 0..2 {
            let mut r = [0.0; 16];
            for a in 0..2 {
                r[index(0, y, a, b)] += 1.0;
                r[index(1, y, a, b)] -= 1.0;
            }
            rows.push(r);
        }
    }
    rows
}

/// Largest violation of the eight no-signal equalities.
pub fn nosignal_residual(b: &Behavior) -> f64 {
    nosignal_rows()
        .iter()
        .map(|r| r.iter().zip(b.table()).map(|(c, p)| c * p).sum::<f64>().abs())
        .fold(0.0, f64::max)
}

/// The 16 deterministic behaviors a = a(x), b = b(y).
pub fn local_vertices() -> Vec<Behavior> {
    let mut out = Vec::with_capacity(16);
    for code in 0..16usize {
        let ax = [(code >> 3) & 1, (code >> 2) & 1];
        let by = [(code >> 1) & 1, code & 1];
        out.push(
            Behavior::from_fn(|a, b, x, y| if a == ax[x] && b == by[y] { 1.0 } else { 0.0 })
                .expect("deterministic table"),
        );
    }
    out
}

/// The 8 PR boxes a ⊕ b = xy ⊕ αx ⊕ βy ⊕ γ with uniform marginals.
pub fn pr_boxes() -> Vec<Behavior> {
    let mut out = Vec::with_capacity(8);
    for code in 0..8usize {
        let (alpha, beta, gamma) = ((code >> 2) & 1, (code >> 1) & 1, code & 1);
        out.push(
            Behavior::from_fn(|a, b, x, y| {
                if (a ^ b) == ((x & y) ^ (alpha & x) ^ (beta & y) ^ gamma) {
                    0.5
                } else {
                    0.0
                }
            })
            .expect("PR table"),
        );
    }
    out
}

/// The canonical PR box a ⊕ b = xy.
pub fn pr_box() -> Behavior {
    pr_boxes()[0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polytope {
    Local,
    NoSignal,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// Convex weights over [`local_vertices`].
    Weights(Vec<f64>),
    /// The no-signal residual.
    Residual(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Membership {
    pub inside: bool,
    pub witness: Option<Witness>,
}

pub fn membership(b: &Behavior, polytope: Polytope) -> Result<Membership> {
    match polytope {
        Polytope::NoSignal => {
            let r = nosignal_residual(b);
            Ok(Membership {
                inside: r <= NOSIGNAL_TOL,
                witness: Some(Witness::Residual(r)),
            })
        }
        Polytope::Local => {
            let vertices = local_vertices();
            let mut lp = LpProblem::new(16).eq(vec![1.0; 16], 1.0);
            for (k, &p) in b.table().iter().enumerate() {
                lp = lp.eq(vertices.iter().map(|v| v.table()[k]).collect(), p);
            }
            Ok(match lp_feasible(&lp)? {
                LpFeasibility::Feasible(w) => Membership {
                    inside: true,
                    witness: Some(Witness::Weights(w.into_iter().map(|x| x.max(0.0)).collect())),
                },
                LpFeasibility::Infeasible(_) => Membership {
                    inside: false,
                    witness: None,
                },
            })
        }
    }
}

/// Σ wᵥ V over the local vertices.
pub fn combine_vertices(weights: &[f64]) -> [f64; 16] {
    let mut t = [0.0; 16];
    for (w, v) in weights.iter().zip(local_vertices()) {
        for (ti, vi) in t.iter_mut().zip(v.table()) {
            *ti += w * vi;
        }
    }
    t
}

/// A bipartite state with two ±1-valued observables per party.
#[derive(Debug, Clone)]
pub struct MeasurementPair {
    pub state: HermitianMatrix,
    pub alice: [HermitianMatrix; 2],
    pub bob: [HermitianMatrix; 2],
}

impl MeasurementPair {
    pub fn new(state: HermitianMatrix, alice: [HermitianMatrix; 2], bob: [HermitianMatrix; 2]) -> Result<Self> {
        let da = alice[0].dim();
        let db = bob[0].dim();
        if alice[1].dim() != da || bob[1].dim() != db || state.dim() != da * db {
            return Err(Error::BadObservable(format!(
                "state of dimension {} does not match observables {da}x{db}",
                state.dim()
            )));
        }
        for o in alice.iter().chain(bob.iter()) {
            let defect = o.square().sub(&HermitianMatrix::identity(o.dim())).frobenius_norm();
            if defect > OBSERVABLE_TOL {
                return Err(Error::BadObservable(format!("observable does not square to identity ({defect:e})")));
            }
        }
        Ok(MeasurementPair { state, alice, bob })
    }
}

fn outcome_projector(o: &HermitianMatrix, outcome: usize) -> CMatrix {
    let s = if outcome == 0 { 1.0 } else { -1.0 };
    (CMatrix::identity(o.dim(), o.dim()) + o.as_matrix() * c64(s, 0.0)) * c64(0.5, 0.0)
}

/// P(a,b|x,y) = tr(ρ Πᵃₓ ⊗ Πᵇᵧ) with Π = (I ± A)/2.
pub fn quantum_behavior(mp: &MeasurementPair) -> Result<Behavior> {
    let mut t = [0.0; 16];
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    let pi = kron(&outcome_projector(&mp.alice[x], a), &outcome_projector(&mp.bob[y], b));
                    let v = (mp.state.as_matrix() * pi).trace().re;
                    t[index(x, y, a, b)] = v;
                }
            }
        }
    }
    // clean round-off so the table validates
    for v in t.iter_mut() {
        if *v < 0.0 && *v > -BEHAVIOR_POSITIVITY_TOL {
            *v = 0.0;
        }
    }
    Behavior::new(t)
}

/// cos θ σz + sin θ σx.
pub fn qubit_observable(theta: f64) -> HermitianMatrix {
    let (s, c) = theta.sin_cos();
    HermitianMatrix::new(CMatrix::from_row_slice(
        2,
        2,
        &[c64(c, 0.0), c64(s, 0.0), c64(s, 0.0), c64(-c, 0.0)],
    ))
    .expect("real symmetric")
}

/// (|01⟩ − |10⟩)/√2.
pub fn singlet() -> HermitianMatrix {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let v = crate::numerics::CVector::from_vec(vec![c64(0.0, 0.0), c64(r, 0.0), c64(-r, 0.0), c64(0.0, 0.0)]);
    HermitianMatrix::projector(&v)
}

/// Singlet with Alice at angles (0, π/2) and Bob at (π/4, −π/4).
pub fn tsirelson_behavior() -> Behavior {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
    let mp = MeasurementPair::new(
        singlet(),
        [qubit_observable(0.0), qubit_observable(FRAC_PI_2)],
        [qubit_observable(FRAC_PI_4), qubit_observable(-FRAC_PI_4)],
    )
    .expect("valid observables");
    quantum_behavior(&mp).expect("valid state")
}

/// Permutation of the 16 table entries induced by a relabeling of
/// parties, inputs or outputs; usable as a generator in a [`GroupSpec`].
pub fn relabeling(map: impl Fn(usize, usize, usize, usize) -> (usize, usize, usize, usize)) -> Result<Vec<usize>> {
    let mut perm = vec![usize::MAX; 16];
    let mut seen = [false; 16];
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    let (x2, y2, a2, b2) = map(x, y, a, b);
                    if x2 > 1 || y2 > 1 || a2 > 1 || b2 > 1 {
                        return Err(Error::InvalidGroup("relabeling leaves the binary scenario".into()));
                    }
                    let j = index(x2, y2, a2, b2);
                    if seen[j] {
                        return Err(Error::InvalidGroup("relabeling is not a bijection".into()));
                    }
                    seen[j] = true;
                    perm[index(x, y, a, b)] = j;
                }
            }
        }
    }
    Ok(perm)
}

/// Exchange of the two parties.
pub fn party_swap() -> Vec<usize> {
    relabeling(|x, y, a, b| (y, x, b, a)).expect("bijection")
}

#[derive(Debug, Clone)]
pub struct BehaviorSolution {
    pub behavior: Behavior,
    /// Shannon entropy of P/4.
    pub entropy: f64,
    pub solution: Solution,
}

/// Classical maximum-entropy problem over the joint distribution P/4 with
/// context normalization, no-signal and CHSH = target.
pub fn behavior_problem(chsh_target: f64, extra: &[Constraint], group: GroupSpec, options: SolverOptions) -> Result<Problem> {
    if chsh_target.abs() > 4.0 + 1e-12 || !chsh_target.is_finite() {
        return Err(Error::Infeasible(Infeasibility::ChshRange { target: chsh_target }));
    }
    let mut problem = Problem::new(EventSpace::classical(16)?)
        .with_group(group)
        .with_options(options);
    for x in 0..2 {
        for y in 0..2 {
            let mut f = vec![0.0; 16];
            for ab in 0..4 {
                f[8 * x + 4 * y + ab] = 1.0;
            }
            problem = problem.with_constraint(Constraint::moment(Observable::Classical(f), 0.25));
        }
    }
    for r in nosignal_rows() {
        problem = problem.with_constraint(Constraint::moment(Observable::Classical(r.to_vec()), 0.0));
    }
    problem = problem.with_constraint(Constraint::moment(Observable::Classical(chsh_observable()), chsh_target));
    for c in extra {
        problem = problem.with_constraint(c.clone());
    }
    Ok(problem)
}

/// Canonical CHSH as an observable on the joint distribution P/4.
pub fn chsh_observable() -> Vec<f64> {
    let mut f = vec![0.0; 16];
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    let parity = if a == b { 1.0 } else { -1.0 };
                    f[index(x, y, a, b)] = 4.0 * CANONICAL_CHSH[x][y] * parity;
                }
            }
        }
    }
    f
}

pub fn maxent_behavior(chsh_target: f64) -> Result<BehaviorSolution> {
    maxent_behavior_with(chsh_target, &[], GroupSpec::trivial(), SolverOptions::default())
}

pub fn maxent_behavior_with(
    chsh_target: f64,
    extra: &[Constraint],
    group: GroupSpec,
    options: SolverOptions,
) -> Result<BehaviorSolution> {
    let problem = behavior_problem(chsh_target, extra, group, options)?;
    let solution = if extra.iter().all(|c| c.is_equality()) {
        solve_linear(&problem)?
    } else {
        solve_general(&problem)?
    };
    let q = match &solution.state {
        State::Classical(q) => q.clone(),
        State::Quantum(_) => unreachable!("classical problem"),
    };
    let mut t = [0.0; 16];
    for (ti, qi) in t.iter_mut().zip(&q) {
        *ti = 4.0 * qi;
    }
    Ok(BehaviorSolution {
        behavior: Behavior::new(t)?,
        entropy: solution.entropy,
        solution,
    })
}
