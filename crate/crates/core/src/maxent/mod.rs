//! Entropy maximization over invariant states subject to moment, event,
//! variance and inequality constraints.

mod general;
mod linear;

use crate::entropy::{entropy, EntropyKind};
use crate::error::{Error, Infeasibility, Result};
use crate::event::{Event, EventSpace, State};
use crate::numerics::{lp_feasible, LpFeasibility, LpProblem};
use crate::observable::Observable;
use crate::symmetry::{invariant_basis, non_invariant_basis, GroupSpec, PreparedGroup};

pub use general::solve_general;
pub use linear::solve_linear;

/// Twirled observables closer than this (relative) to a multiple of the
/// identity are treated as constants on the invariant states.
pub const SCALAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// ⟨A⟩ = target.
    Moment { observable: Observable, target: f64 },
    /// Σ cᵢ ν(Eᵢ) = rhs.
    LinearEvent { terms: Vec<(f64, Event)>, rhs: f64 },
    /// ⟨A²⟩ − ⟨A⟩² = target.
    VarianceSaturation { observable: Observable, target: f64 },
    /// ⟨A⟩ ≤ bound or ⟨A⟩ ≥ bound.
    LinearInequality {
        observable: Observable,
        sense: Sense,
        bound: f64,
    },
}

impl Constraint {
    pub fn moment(observable: Observable, target: f64) -> Self {
        Constraint::Moment { observable, target }
    }

    pub fn variance(observable: Observable, target: f64) -> Self {
        Constraint::VarianceSaturation { observable, target }
    }

    pub fn at_most(observable: Observable, bound: f64) -> Self {
        Constraint::LinearInequality {
            observable,
            sense: Sense::AtMost,
            bound,
        }
    }

    pub fn at_least(observable: Observable, bound: f64) -> Self {
        Constraint::LinearInequality {
            observable,
            sense: Sense::AtLeast,
            bound,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Constraint::Moment { .. } => "moment",
            Constraint::LinearEvent { .. } => "linear_event",
            Constraint::VarianceSaturation { .. } => "variance_saturation",
            Constraint::LinearInequality { .. } => "linear_inequality",
        }
    }

    pub fn is_equality(&self) -> bool {
        !matches!(self, Constraint::LinearInequality { .. })
    }

    /// Observable carried by the constraint; event sums become Σ cᵢ P(Eᵢ).
    pub fn observable(&self, space: EventSpace) -> Observable {
        match self {
            Constraint::Moment { observable, .. }
            | Constraint::VarianceSaturation { observable, .. }
            | Constraint::LinearInequality { observable, .. } => observable.clone(),
            Constraint::LinearEvent { terms, .. } => {
                let mut acc = Observable::zeros(space);
                for (c, e) in terms {
                    acc = acc.add_scaled(*c, &e.as_observable());
                }
                acc
            }
        }
    }

    fn target(&self) -> f64 {
        match self {
            Constraint::Moment { target, .. } | Constraint::VarianceSaturation { target, .. } => *target,
            Constraint::LinearEvent { rhs, .. } => *rhs,
            Constraint::LinearInequality { bound, .. } => *bound,
        }
    }

    fn check(&self, space: EventSpace, index: usize) -> Result<()> {
        let bad = |msg: String| Error::InvalidProblem(format!("constraint {index}: {msg}"));
        if !self.target().is_finite() {
            return Err(bad("target is not finite".into()));
        }
        match self {
            Constraint::LinearEvent { terms, .. } => {
                if terms.is_empty() {
                    return Err(bad("empty event sum".into()));
                }
                for (c, e) in terms {
                    if !c.is_finite() {
                        return Err(bad("coefficient is not finite".into()));
                    }
                    space.check(&e.space())?;
                }
            }
            _ => {
                let obs = self.observable(space);
                space.check(&obs.space())?;
                if obs.coords().iter().any(|x| !x.is_finite()) {
                    return Err(bad("observable has non-finite entries".into()));
                }
            }
        }
        Ok(())
    }

    /// Signed residual for equalities; violation amount (≥ 0) for inequalities.
    pub fn residual(&self, state: &State) -> Result<f64> {
        let space = state.space();
        let obs = self.observable(space);
        let mean = obs.expectation(state)?;
        Ok(match self {
            Constraint::Moment { target, .. } => mean - target,
            Constraint::LinearEvent { rhs, .. } => mean - rhs,
            Constraint::VarianceSaturation { target, .. } => obs.square().expectation(state)? - mean * mean - target,
            Constraint::LinearInequality { sense, bound, .. } => match sense {
                Sense::AtMost => (mean - bound).max(0.0),
                Sense::AtLeast => (bound - mean).max(0.0),
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Allowed constraint residual at an optimal point.
    pub constraint_tol: f64,
    /// Dual gradient norm at which the Newton solver stops.
    pub gradient_tol: f64,
    pub max_newton: usize,
    pub max_outer: usize,
    pub max_inner: usize,
    pub seed: u64,
    pub starts: usize,
    /// Skip the dual Newton path even when every constraint is linear.
    pub force_augmented_lagrangian: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            constraint_tol: 1e-8,
            gradient_tol: 1e-9,
            max_newton: 500,
            max_outer: 200,
            max_inner: 5000,
            seed: 0,
            starts: 8,
            force_augmented_lagrangian: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub space: EventSpace,
    pub group: GroupSpec,
    pub constraints: Vec<Constraint>,
    /// On both lattices all three functionals coincide on states, so the
    /// selector only affects reporting.
    pub entropy: EntropyKind,
    pub options: SolverOptions,
}

impl Problem {
    pub fn new(space: EventSpace) -> Self {
        Problem {
            space,
            group: GroupSpec::trivial(),
            constraints: Vec::new(),
            entropy: EntropyKind::default(),
            options: SolverOptions::default(),
        }
    }

    pub fn with_group(mut self, group: GroupSpec) -> Self {
        self.group = group;
        self
    }

    pub fn with_constraint(mut self, c: Constraint) -> Self {
        self.constraints.push(c);
        self
    }

    pub fn with_options(mut self, options: SolverOptions) -> Self {
        self.options = options;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.group.check_space(self.space)?;
        for (i, c) in self.constraints.iter().enumerate() {
            c.check(self.space, i)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    MaxIter,
    Degenerate,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::MaxIter => "max_iter",
            Status::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    DualNewton,
    AugmentedLagrangian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub method: Method,
    pub iterations: usize,
    /// Final dual gradient norm (Newton path only).
    pub dual_gradient_norm: Option<f64>,
    /// Real dimension of the invariant state set the search ran in.
    pub invariant_dimension: usize,
    /// Number of multi-start runs that reached a feasible point.
    pub feasible_starts: usize,
    /// For degenerate results: entropy gap and state distance between the
    /// two starts that triggered the flag.
    pub degeneracy: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub state: State,
    pub entropy: f64,
    /// One per constraint in problem order; zero for constraints that were
    /// redundant or implied by symmetry.
    pub multipliers: Vec<f64>,
    pub residuals: Vec<f64>,
    pub status: Status,
    pub diagnostics: Diagnostics,
}

impl Solution {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowKind {
    /// ⟨A⟩ = target.
    Linear { observable: Observable, target: f64 },
    /// ⟨second⟩ − ⟨first⟩² = target.
    Quadratic {
        second: Observable,
        first: Observable,
        target: f64,
    },
    Inequality {
        observable: Observable,
        sense: Sense,
        bound: f64,
    },
    /// Holds for every invariant state.
    Implied,
}

/// A constraint after group averaging, tagged with its position in the problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedRow {
    pub source: usize,
    pub kind: RowKind,
}

/// A problem restated on the invariant states.
#[derive(Debug, Clone)]
pub struct ReducedProblem {
    pub space: EventSpace,
    pub group: PreparedGroup,
    /// Orthonormal coordinates of the invariant observables.
    pub basis: Vec<Observable>,
    pub rows: Vec<ReducedRow>,
    /// Constraints no invariant state can meet.
    pub symmetry_violations: Vec<Infeasibility>,
    pub constraints: Vec<Constraint>,
    pub entropy: EntropyKind,
    pub options: SolverOptions,
}

impl ReducedProblem {
    pub fn invariant_dimension(&self) -> usize {
        self.basis.len().saturating_sub(1)
    }

    fn ensure_symmetric_feasible(&self) -> Result<()> {
        match self.symmetry_violations.first() {
            Some(v) => Err(Error::Infeasible(v.clone())),
            None => Ok(()),
        }
    }

    /// Rewrites variance rows as moment rows where the mean is pinned.
    pub fn linearized(&self) -> Vec<ReducedRow> {
        let mut rows = self.rows.clone();
        let pinned: Vec<(Observable, f64)> = rows
            .iter()
            .filter_map(|r| match &r.kind {
                RowKind::Linear { observable, target } => Some((observable.clone(), *target)),
                _ => None,
            })
            .collect();
        for row in rows.iter_mut() {
            if let RowKind::Quadratic { second, first, target } = &row.kind {
                let (c, rest) = first.scalar_part();
                let scale = 1.0 + first.norm();
                let mean = if rest <= SCALAR_TOL * scale {
                    Some(c)
                } else {
                    pinned
                        .iter()
                        .find(|(obs, _)| obs.add_scaled(-1.0, first).norm() <= 1e-12 * scale)
                        .map(|(_, m)| *m)
                };
                if let Some(m) = mean {
                    row.kind = RowKind::Linear {
                        observable: second.clone(),
                        target: target + m * m,
                    };
                }
            }
        }
        rows
    }

    fn twirl_state(&self, s: &State) -> State {
        self.group.twirl_state(s).expect("state lives on the problem space")
    }
}

/// Replaces every observable by its group average and flags constraints that
/// contradict invariance.
pub fn symmetry_reduce(problem: &Problem) -> Result<ReducedProblem> {
    problem.validate()?;
    let space = problem.space;
    let group = PreparedGroup::new(&problem.group, space)?;
    let basis = invariant_basis(&problem.group, space)?;
    let tol = problem.options.constraint_tol;
    let mut rows = Vec::with_capacity(problem.constraints.len());
    let mut violations = Vec::new();
    for (i, c) in problem.constraints.iter().enumerate() {
        let raw = c.observable(space);
        let tw = group.twirl_observable(&raw)?;
        let (value, rest) = tw.scalar_part();
        let constant = rest <= SCALAR_TOL * (1.0 + raw.norm());
        let raw_constant = raw.scalar_part().1 <= SCALAR_TOL * (1.0 + raw.norm());
        let mut flag = |target: f64, ok: bool| {
            if ok {
                return;
            }
            violations.push(if raw_constant {
                Infeasibility::Inconsistent {
                    constraint: i,
                    residual: (value - target).abs(),
                }
            } else {
                Infeasibility::Symmetry {
                    constraint: i,
                    twirled_norm: rest,
                    invariant_value: value,
                    target,
                }
            });
        };
        let kind = match c {
            Constraint::Moment { target, .. } | Constraint::LinearEvent { rhs: target, .. } => {
                if constant {
                    flag(*target, (value - target).abs() <= tol);
                    RowKind::Implied
                } else {
                    RowKind::Linear {
                        observable: tw,
                        target: *target,
                    }
                }
            }
            Constraint::LinearInequality { sense, bound, .. } => {
                if constant {
                    let ok = match sense {
                        Sense::AtMost => value <= bound + tol,
                        Sense::AtLeast => value >= bound - tol,
                    };
                    flag(*bound, ok);
                    RowKind::Implied
                } else {
                    RowKind::Inequality {
                        observable: tw,
                        sense: *sense,
                        bound: *bound,
                    }
                }
            }
            Constraint::VarianceSaturation { target, .. } => RowKind::Quadratic {
                second: group.twirl_observable(&raw.square())?,
                first: tw,
                target: *target,
            },
        };
        rows.push(ReducedRow { source: i, kind });
    }
    Ok(ReducedProblem {
        space,
        group,
        basis,
        rows,
        symmetry_violations: violations,
        constraints: problem.constraints.clone(),
        entropy: problem.entropy,
        options: problem.options.clone(),
    })
}

/// The same problem with invariance imposed through explicit constraints
/// ⟨X⟩ = 0 on the complement of the invariant observables, and the trivial group.
pub fn explicit_invariance_constraints(problem: &Problem) -> Result<Problem> {
    let mut out = problem.clone();
    out.group = GroupSpec::trivial();
    for x in non_invariant_basis(&problem.group, problem.space)? {
        out.constraints.push(Constraint::moment(x, 0.0));
    }
    Ok(out)
}

/// Builds the reported solution: residuals against the original constraints.
fn finish(
    reduced: &ReducedProblem,
    state: State,
    multipliers: Vec<f64>,
    status: Status,
    diagnostics: Diagnostics,
) -> Result<Solution> {
    let mut residuals = Vec::with_capacity(reduced.constraints.len());
    for c in &reduced.constraints {
        residuals.push(c.residual(&state)?);
    }
    let tol = reduced.options.constraint_tol;
    let status = if status == Status::Optimal && residuals.iter().any(|r| r.abs() > tol) {
        Status::MaxIter
    } else {
        status
    };
    Ok(Solution {
        entropy: entropy(&state, reduced.entropy),
        state,
        multipliers,
        residuals,
        status,
        diagnostics,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Feasible,
    Infeasible,
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub verdict: Verdict,
    /// Invariant state satisfying every constraint, when feasible.
    pub witness: Option<State>,
    pub certificate: Option<Infeasibility>,
}

impl FeasibilityReport {
    fn infeasible(cert: Infeasibility) -> Self {
        FeasibilityReport {
            verdict: Verdict::Infeasible,
            witness: None,
            certificate: Some(cert),
        }
    }
}

/// Decides whether any invariant state meets the constraints.
///
/// Exact (linear programming) when the constraints are linear and either
/// the space is classical or the averaged observables commute; otherwise a
/// multi-start solve that reports `Unknown` if it stalls.
pub fn feasibility_check(problem: &Problem) -> Result<FeasibilityReport> {
    let reduced = symmetry_reduce(problem)?;
    if let Some(v) = reduced.symmetry_violations.first() {
        return Ok(FeasibilityReport::infeasible(v.clone()));
    }
    let rows = reduced.linearized();
    if let Some(cert) = linear::range_violation(&rows, reduced.options.constraint_tol) {
        return Ok(FeasibilityReport::infeasible(cert));
    }
    let all_linear = rows
        .iter()
        .all(|r| matches!(r.kind, RowKind::Linear { .. } | RowKind::Inequality { .. } | RowKind::Implied));
    if all_linear {
        if let Some(frame) = linear::classical_frame(&reduced, &rows) {
            let n = frame.outcomes();
            let mut lp = LpProblem::new(n).eq(vec![1.0; n], 1.0);
            for row in &rows {
                match &row.kind {
                    RowKind::Linear { observable, target } => lp = lp.eq(frame.values(observable), *target),
                    RowKind::Inequality {
                        observable,
                        sense,
                        bound,
                    } => {
                        let f = frame.values(observable);
                        lp = match sense {
                            Sense::AtMost => lp.le(f, *bound),
                            Sense::AtLeast => lp.ge(f, *bound),
                        };
                    }
                    _ => {}
                }
            }
            return Ok(match lp_feasible(&lp)? {
                LpFeasibility::Feasible(p) => {
                    let p: Vec<f64> = p.into_iter().map(|x| x.max(0.0)).collect();
                    let s: f64 = p.iter().sum();
                    let state = reduced.twirl_state(&frame.lift(&p.iter().map(|x| x / s).collect::<Vec<_>>()));
                    FeasibilityReport {
                        verdict: Verdict::Feasible,
                        witness: Some(state),
                        certificate: None,
                    }
                }
                LpFeasibility::Infeasible(cert) => FeasibilityReport::infeasible(Infeasibility::Linear {
                    infeasibility: cert.infeasibility,
                    multipliers: cert.multipliers,
                }),
            });
        }
    }
    match solve_general(problem) {
        Ok(sol) if matches!(sol.status, Status::Optimal | Status::Degenerate) => Ok(FeasibilityReport {
            verdict: Verdict::Feasible,
            witness: Some(sol.state),
            certificate: None,
        }),
        Ok(_) | Err(Error::Infeasible(Infeasibility::ResidualFloor { .. })) | Err(Error::MaxIter(_)) => {
            Ok(FeasibilityReport {
                verdict: Verdict::Unknown,
                witness: None,
                certificate: None,
            })
        }
        Err(Error::Infeasible(cert)) => Ok(FeasibilityReport::infeasible(cert)),
        Err(e) => Err(e),
    }
}
