//! Augmented-Lagrangian solver for arbitrary constraint mixes.
//!
//! Inner problems are solved by spectral projected gradient (Barzilai–Borwein
//! steps, nonmonotone line search) over the simplex or the density matrices.
//! Gradients are group-averaged, so iterates stay invariant.

use rand::Rng;

use super::linear::{linear_solve, range_violation};
use super::{
    finish, symmetry_reduce, Diagnostics, Method, Problem, ReducedProblem, ReducedRow, RowKind, Sense, Solution, Status,
};
use crate::error::{Error, Infeasibility, Result};
use crate::event::State;
use crate::numerics::{c64, eig_hermitian, project_simplex, xlnx, HermitianMatrix};
use crate::observable::Observable;
use crate::random::{random_density, random_probability, rng_from_seed};

/// Eigenvalues (or probabilities) are floored here inside the logarithm.
const LOG_FLOOR: f64 = 1e-18;
const SLACK_FLOOR: f64 = 1e-16;
const INNER_TOL: f64 = 1e-10;
const INITIAL_PENALTY: f64 = 10.0;
const MAX_PENALTY: f64 = 1e12;
const INITIAL_BARRIER: f64 = 1e-3;
const FINAL_BARRIER: f64 = 1e-12;
/// Starts whose residual stays above this are counted as infeasible.
pub const RESIDUAL_FLOOR: f64 = 1e-6;
/// Degeneracy: entropies this close but states at least `DEGENERATE_DISTANCE` apart.
pub const DEGENERATE_ENTROPY_GAP: f64 = 1e-8;
pub const DEGENERATE_DISTANCE: f64 = 1e-4;
const NONMONOTONE_MEMORY: usize = 10;

/// Maximizes entropy under any mix of moment, event, variance and inequality
/// constraints.
///
/// Purely linear problems are handed to the dual Newton solver unless
/// `force_augmented_lagrangian` is set. Convex problems with inequalities
/// are refined by an active-set dual Newton pass after the penalty solve.
pub fn solve_general(problem: &Problem) -> Result<Solution> {
    let reduced = symmetry_reduce(problem)?;
    reduced.ensure_symmetric_feasible()?;
    let rows = reduced.linearized();
    let only_linear = rows
        .iter()
        .all(|r| matches!(r.kind, RowKind::Linear { .. } | RowKind::Implied));
    if only_linear && !reduced.options.force_augmented_lagrangian {
        return linear_solve(&reduced, &rows);
    }
    if let Some(cert) = range_violation(&rows, reduced.options.constraint_tol) {
        return Err(Error::Infeasible(cert));
    }
    let al = augmented_lagrangian(&reduced, &rows)?;
    if reduced.options.force_augmented_lagrangian || !is_convex(&rows) {
        return Ok(al);
    }
    Ok(polish(&reduced, &rows, &al).unwrap_or(al))
}

fn is_convex(rows: &[ReducedRow]) -> bool {
    !rows.iter().any(|r| matches!(r.kind, RowKind::Quadratic { .. }))
}

/// Inequalities within this distance of their bound start in the active set.
const ACTIVE_TOL: f64 = 1e-4;
/// Sign slack on multipliers of active inequalities.
const MULTIPLIER_SIGN_TOL: f64 = 1e-8;

/// Exact KKT refinement for convex problems: treat the active inequalities
/// as equalities, solve by dual Newton, and accept the result only if the
/// inactive inequalities hold and every active multiplier has the sign of
/// a binding bound. The active set is corrected for a bounded number of
/// rounds; `None` keeps the penalty solution.
fn polish(reduced: &ReducedProblem, rows: &[ReducedRow], al: &Solution) -> Option<Solution> {
    let tol = reduced.options.constraint_tol;
    let ineqs: Vec<(usize, &Observable, f64, f64)> = rows
        .iter()
        .filter_map(|r| match &r.kind {
            RowKind::Inequality {
                observable,
                sense,
                bound,
            } => Some((r.source, observable, if *sense == Sense::AtMost { 1.0 } else { -1.0 }, *bound)),
            _ => None,
        })
        .collect();
    if ineqs.is_empty() {
        return None;
    }
    let slack = |x: &State, obs: &Observable, sign: f64, bound: f64| -> Option<f64> {
        obs.expectation(x).ok().map(|v| sign * (v - bound))
    };
    let mut active: Vec<bool> = ineqs
        .iter()
        .map(|(_, obs, sign, bound)| {
            slack(&al.state, obs, *sign, *bound).is_some_and(|s| s >= -ACTIVE_TOL * (1.0 + bound.abs()))
        })
        .collect();
    for _ in 0..=ineqs.len() {
        let mut trial: Vec<ReducedRow> = rows
            .iter()
            .filter(|r| matches!(r.kind, RowKind::Linear { .. } | RowKind::Implied))
            .cloned()
            .collect();
        for (k, (src, obs, _, bound)) in ineqs.iter().enumerate() {
            if active[k] {
                trial.push(ReducedRow {
                    source: *src,
                    kind: RowKind::Linear {
                        observable: (*obs).clone(),
                        target: *bound,
                    },
                });
            }
        }
        let sol = linear_solve(reduced, &trial).ok()?;
        if sol.status != Status::Optimal {
            return None;
        }
        let mut changed = false;
        for (k, (src, obs, sign, bound)) in ineqs.iter().enumerate() {
            if active[k] {
                let lambda = sol.multipliers[*src];
                if sign * lambda < -MULTIPLIER_SIGN_TOL * (1.0 + lambda.abs()) {
                    active[k] = false;
                    changed = true;
                }
            } else if slack(&sol.state, obs, *sign, *bound)? > tol {
                active[k] = true;
                changed = true;
            }
        }
        if !changed {
            if sol.entropy < al.entropy - DEGENERATE_ENTROPY_GAP {
                return None;
            }
            let mut sol = sol;
            sol.diagnostics.iterations += al.diagnostics.iterations;
            sol.diagnostics.feasible_starts = al.diagnostics.feasible_starts;
            return Some(sol);
        }
    }
    None
}

enum AlRow {
    Linear { obs: Observable, target: f64 },
    Quadratic { second: Observable, first: Observable, target: f64 },
    /// sign·(⟨obs⟩ − bound) + s = 0 with slack s ≥ 0.
    Inequality { obs: Observable, sign: f64, bound: f64, slack: usize },
}

impl AlRow {
    fn value(&self, x: &Observable, s: &[f64]) -> f64 {
        match self {
            AlRow::Linear { obs, target } => obs.inner(x) - target,
            AlRow::Quadratic { second, first, target } => {
                let m = first.inner(x);
                second.inner(x) - m * m - target
            }
            AlRow::Inequality { obs, sign, bound, slack } => sign * (obs.inner(x) - bound) + s[*slack],
        }
    }

    /// Constraint violation ignoring slacks.
    fn violation(&self, x: &Observable) -> f64 {
        match self {
            AlRow::Inequality { obs, sign, bound, .. } => (sign * (obs.inner(x) - bound)).max(0.0),
            _ => self.value(x, &[]).abs(),
        }
    }

    fn grad_x(&self, x: &Observable) -> Observable {
        match self {
            AlRow::Linear { obs, .. } => obs.clone(),
            AlRow::Quadratic { second, first, .. } => second.add_scaled(-2.0 * first.inner(x), first),
            AlRow::Inequality { obs, sign, .. } => obs.scale(*sign),
        }
    }
}

/// A point of the inner problem: state plus inequality slacks.
#[derive(Clone)]
struct Point {
    x: Observable,
    s: Vec<f64>,
}

impl Point {
    fn inner(&self, other: &Point) -> f64 {
        self.x.inner(&other.x) + self.s.iter().zip(&other.s).map(|(a, b)| a * b).sum::<f64>()
    }

    fn axpy(&self, a: f64, other: &Point) -> Point {
        Point {
            x: self.x.add_scaled(a, &other.x),
            s: self.s.iter().zip(&other.s).map(|(u, v)| u + a * v).collect(),
        }
    }
}

fn project(p: &Point) -> Point {
    let x = match &p.x {
        Observable::Classical(v) => Observable::Classical(project_simplex(v)),
        Observable::Quantum(m) => {
            let sd = eig_hermitian(m);
            let w = project_simplex(&sd.eigenvalues);
            let mut scaled = sd.eigenvectors.clone();
            for (k, &wk) in w.iter().enumerate() {
                for z in scaled.column_mut(k).iter_mut() {
                    *z *= c64(wk, 0.0);
                }
            }
            Observable::Quantum(HermitianMatrix::new(&scaled * sd.eigenvectors.adjoint()).expect("Hermitian"))
        }
    };
    Point {
        x,
        s: p.s.iter().map(|v| v.max(SLACK_FLOOR)).collect(),
    }
}

/// Entropy and the gradient of its negative.
fn entropy_and_neg_grad(x: &Observable) -> (f64, Observable) {
    match x {
        Observable::Classical(p) => {
            let h = -p.iter().map(|&v| xlnx(v.max(0.0))).sum::<f64>();
            let g = p.iter().map(|&v| v.max(LOG_FLOOR).ln() + 1.0).collect();
            (h, Observable::Classical(g))
        }
        Observable::Quantum(m) => {
            let sd = eig_hermitian(m);
            let h = -sd.eigenvalues.iter().map(|&v| xlnx(v.max(0.0))).sum::<f64>();
            let g = sd.reconstruct_with(|v| v.max(LOG_FLOOR).ln() + 1.0);
            (h, Observable::Quantum(HermitianMatrix::new(g).expect("Hermitian")))
        }
    }
}

fn entropy_only(x: &Observable) -> f64 {
    match x {
        Observable::Classical(p) => -p.iter().map(|&v| xlnx(v.max(0.0))).sum::<f64>(),
        Observable::Quantum(m) => -eig_hermitian(m).eigenvalues.iter().map(|&v| xlnx(v.max(0.0))).sum::<f64>(),
    }
}

struct Lagrangian<'a> {
    rows: &'a [AlRow],
    mu: &'a [f64],
    penalty: f64,
    barrier: f64,
    reduced: &'a ReducedProblem,
}

impl Lagrangian<'_> {
    fn value(&self, p: &Point) -> f64 {
        let mut f = -entropy_only(&p.x);
        for (row, mu) in self.rows.iter().zip(self.mu) {
            let c = row.value(&p.x, &p.s);
            f += mu * c + 0.5 * self.penalty * c * c;
        }
        f - self.barrier * p.s.iter().map(|s| s.ln()).sum::<f64>()
    }

    fn gradient(&self, p: &Point) -> Point {
        let (_, mut gx) = entropy_and_neg_grad(&p.x);
        let mut gs: Vec<f64> = p.s.iter().map(|s| -self.barrier / s).collect();
        for (row, mu) in self.rows.iter().zip(self.mu) {
            let w = mu + self.penalty * row.value(&p.x, &p.s);
            gx = gx.add_scaled(w, &row.grad_x(&p.x));
            if let AlRow::Inequality { slack, .. } = row {
                gs[*slack] += w;
            }
        }
        let gx = self.reduced.group.twirl_observable(&gx).expect("same space");
        Point { x: gx, s: gs }
    }

    /// Spectral projected gradient with a nonmonotone Armijo search.
    fn minimize(&self, start: Point, max_iter: usize) -> (Point, usize) {
        let mut p = project(&start);
        let mut f = self.value(&p);
        let mut g = self.gradient(&p);
        let mut history = vec![f];
        let mut alpha = 1.0;
        for it in 0..max_iter {
            let trial = project(&p.axpy(-alpha, &g));
            let d = trial.axpy(-1.0, &p);
            let dn = d.inner(&d).sqrt();
            if dn / alpha.max(1.0) <= INNER_TOL {
                return (p, it);
            }
            let slope = g.inner(&d);
            let fmax = history.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut step = 1.0;
            let mut next = None;
            for _ in 0..50 {
                let cand = project(&p.axpy(step, &d));
                let fc = self.value(&cand);
                if fc.is_finite() && fc <= fmax + 1e-4 * step * slope {
                    next = Some((cand, fc));
                    break;
                }
                step *= 0.5;
            }
            let Some((np, nf)) = next else {
                return (p, it);
            };
            let ng = self.gradient(&np);
            let sk = np.axpy(-1.0, &p);
            let yk = ng.axpy(-1.0, &g);
            let sy = sk.inner(&yk);
            alpha = if sy > 0.0 { (sk.inner(&sk) / sy).clamp(1e-12, 1e12) } else { 1e3 };
            p = np;
            f = nf;
            g = ng;
            history.push(f);
            if history.len() > NONMONOTONE_MEMORY {
                history.remove(0);
            }
        }
        (p, max_iter)
    }
}

struct StartResult {
    state: State,
    entropy: f64,
    violation: f64,
    mu: Vec<f64>,
    iterations: usize,
}

fn build_rows(rows: &[ReducedRow]) -> (Vec<AlRow>, Vec<usize>, usize) {
    let mut out = Vec::new();
    let mut sources = Vec::new();
    let mut slacks = 0;
    for r in rows {
        let row = match &r.kind {
            RowKind::Linear { observable, target } => AlRow::Linear {
                obs: observable.clone(),
                target: *target,
            },
            RowKind::Quadratic { second, first, target } => AlRow::Quadratic {
                second: second.clone(),
                first: first.clone(),
                target: *target,
            },
            RowKind::Inequality {
                observable,
                sense,
                bound,
            } => {
                slacks += 1;
                AlRow::Inequality {
                    obs: observable.clone(),
                    sign: if *sense == Sense::AtMost { 1.0 } else { -1.0 },
                    bound: *bound,
                    slack: slacks - 1,
                }
            }
            RowKind::Implied => continue,
        };
        out.push(row);
        sources.push(r.source);
    }
    (out, sources, slacks)
}

fn start_point(reduced: &ReducedProblem, k: usize) -> Observable {
    let space = reduced.space;
    let state = if k == 0 {
        State::maximally_mixed(space)
    } else {
        let seed = reduced
            .options
            .seed
            .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(k as u64));
        let mut rng = rng_from_seed(seed);
        // mix towards the center so starts are interior but spread out
        let t: f64 = rng.random_range(0.3..1.0);
        if space.is_quantum() {
            let r = random_density(space.size(), &mut rng);
            let c = HermitianMatrix::identity(space.size()).scale(1.0 / space.size() as f64);
            State::Quantum(r.scale(t).add(&c.scale(1.0 - t)))
        } else {
            let p = random_probability(space.size(), &mut rng);
            let c = 1.0 / space.size() as f64;
            State::Classical(p.iter().map(|x| t * x + (1.0 - t) * c).collect())
        }
    };
    let state = reduced.twirl_state(&state);
    match state {
        State::Classical(p) => Observable::Classical(p),
        State::Quantum(r) => Observable::Quantum(r),
    }
}

fn run_start(reduced: &ReducedProblem, rows: &[AlRow], slacks: usize, x0: Observable) -> StartResult {
    let opts = &reduced.options;
    let mut s = vec![1e-3; slacks];
    for row in rows {
        if let AlRow::Inequality { obs, sign, bound, slack } = row {
            s[*slack] = (-sign * (obs.inner(&x0) - bound)).max(1e-3);
        }
    }
    let mut point = Point { x: x0, s };
    let mut mu = vec![0.0; rows.len()];
    let mut penalty = INITIAL_PENALTY;
    let mut barrier = if slacks > 0 { INITIAL_BARRIER } else { 0.0 };
    let mut previous = f64::INFINITY;
    let mut iterations = 0;
    for _ in 0..opts.max_outer {
        let lag = Lagrangian {
            rows,
            mu: &mu,
            penalty,
            barrier,
            reduced,
        };
        let (p, inner) = lag.minimize(point, opts.max_inner);
        iterations += inner;
        point = p;
        let c: Vec<f64> = rows.iter().map(|r| r.value(&point.x, &point.s)).collect();
        let cn = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let barrier_done = barrier <= FINAL_BARRIER;
        if cn <= 0.1 * opts.constraint_tol && (slacks == 0 || barrier_done) {
            break;
        }
        for (m, v) in mu.iter_mut().zip(&c) {
            *m += penalty * v;
        }
        if cn > 0.25 * previous {
            penalty = (penalty * 10.0).min(MAX_PENALTY);
        }
        previous = cn;
        if slacks > 0 {
            barrier = (barrier * 0.1).max(FINAL_BARRIER);
        }
    }
    let state = match &point.x {
        Observable::Classical(p) => State::Classical(p.clone()),
        Observable::Quantum(r) => State::Quantum(r.clone()),
    };
    let state = reduced.twirl_state(&state);
    let x = match &state {
        State::Classical(p) => Observable::Classical(p.clone()),
        State::Quantum(r) => Observable::Quantum(r.clone()),
    };
    StartResult {
        entropy: entropy_only(&x),
        violation: rows.iter().fold(0.0f64, |m, r| m.max(r.violation(&x))),
        state,
        mu,
        iterations,
    }
}

fn augmented_lagrangian(reduced: &ReducedProblem, rows: &[ReducedRow]) -> Result<Solution> {
    let opts = &reduced.options;
    let (al_rows, sources, slacks) = build_rows(rows);
    let starts = opts.starts.max(1);
    let results: Vec<StartResult> = (0..starts)
        .map(|k| run_start(reduced, &al_rows, slacks, start_point(reduced, k)))
        .collect();
    let tol = opts.constraint_tol;
    let feasible: Vec<&StartResult> = results.iter().filter(|r| r.violation <= tol).collect();
    let iterations = results.iter().map(|r| r.iterations).sum();
    let (best, status, degeneracy) = if feasible.is_empty() {
        let best = results
            .iter()
            .min_by(|a, b| a.violation.total_cmp(&b.violation))
            .expect("at least one start");
        if best.violation >= RESIDUAL_FLOOR {
            return Err(Error::Infeasible(Infeasibility::ResidualFloor {
                residual: best.violation,
            }));
        }
        (best, Status::MaxIter, None)
    } else {
        let best = *feasible
            .iter()
            .max_by(|a, b| a.entropy.total_cmp(&b.entropy))
            .expect("non-empty");
        let mut degeneracy = None;
        // a strictly concave objective on a convex set has a unique maximizer
        let convex = !al_rows.iter().any(|r| matches!(r, AlRow::Quadratic { .. }));
        for other in feasible.iter().filter(|_| !convex) {
            let gap = (best.entropy - other.entropy).abs();
            let dist = best.state.distance(&other.state)?;
            if gap <= DEGENERATE_ENTROPY_GAP && dist >= DEGENERATE_DISTANCE {
                degeneracy = Some((gap, dist));
                break;
            }
        }
        let status = if degeneracy.is_some() {
            Status::Degenerate
        } else {
            Status::Optimal
        };
        (best, status, degeneracy)
    };
    let mut multipliers = vec![0.0; reduced.constraints.len()];
    for (k, &src) in sources.iter().enumerate() {
        multipliers[src] = best.mu[k];
    }
    finish(
        reduced,
        best.state.clone(),
        multipliers,
        status,
        Diagnostics {
            method: Method::AugmentedLagrangian,
            iterations,
            dual_gradient_norm: None,
            invariant_dimension: reduced.invariant_dimension(),
            feasible_starts: feasible.len(),
            degeneracy,
        },
    )
}
