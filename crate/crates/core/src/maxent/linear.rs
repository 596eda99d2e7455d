//! Moment-constrained maximum entropy through the convex dual.
//!
//! The optimum has Gibbs form exp(−Σ λₖ Aₖ)/Z over the averaged observables.
//! Classical problems (and quantum ones whose averaged observables commute,
//! which reduce to the classical case on a joint eigenbasis) first drop the
//! outcomes that no feasible state can populate, so the dual stays bounded
//! when the optimum sits on a face of the simplex.

use nalgebra::{DMatrix, DVector};

use super::{finish, Diagnostics, Method, Problem, ReducedProblem, ReducedRow, RowKind, Sense, Solution, Status};
use crate::error::{Error, Infeasibility, Result};
use crate::event::State;
use crate::numerics::{c64, eig_hermitian, lp_feasible, lp_minimize, CMatrix, HermitianMatrix, LpFeasibility, LpOptimum, LpProblem};
use crate::observable::Observable;

/// Relative Hessian eigenvalue below which Newton directions are discarded.
const HESSIAN_CUTOFF: f64 = 1e-12;
/// Probability below which an outcome counts as unreachable.
const SUPPORT_TOL: f64 = 1e-10;
/// Relative norm below which an orthogonalized constraint is dependent.
const DEPENDENCE_TOL: f64 = 1e-9;
/// The dual objective is bounded below by the optimal entropy (≥ 0).
const WEAK_DUALITY_SLACK: f64 = 1e-6;

/// Maximizes entropy under moment constraints.
///
/// Variance constraints are accepted only when a moment constraint (or the
/// symmetry) fixes the corresponding mean, which makes them linear.
pub fn solve_linear(problem: &Problem) -> Result<Solution> {
    let reduced = super::symmetry_reduce(problem)?;
    reduced.ensure_symmetric_feasible()?;
    let rows = reduced.linearized();
    if rows
        .iter()
        .any(|r| !matches!(r.kind, RowKind::Linear { .. } | RowKind::Implied))
    {
        return Err(Error::InvalidProblem(
            "the dual Newton solver accepts only moment constraints".into(),
        ));
    }
    linear_solve(&reduced, &rows)
}

/// Target outside the numerical range of its observable.
pub(super) fn range_violation(rows: &[ReducedRow], tol: f64) -> Option<Infeasibility> {
    for row in rows {
        match &row.kind {
            RowKind::Linear { observable, target } => {
                let (lo, hi) = observable.range();
                if *target < lo - tol || *target > hi + tol {
                    return Some(Infeasibility::Range {
                        constraint: row.source,
                        lower: lo,
                        upper: hi,
                        target: *target,
                    });
                }
            }
            RowKind::Inequality {
                observable,
                sense,
                bound,
            } => {
                let (lo, hi) = observable.range();
                let bad = match sense {
                    Sense::AtMost => *bound < lo - tol,
                    Sense::AtLeast => *bound > hi + tol,
                };
                if bad {
                    return Some(Infeasibility::Range {
                        constraint: row.source,
                        lower: lo,
                        upper: hi,
                        target: *bound,
                    });
                }
            }
            _ => {}
        }
    }
    None
}

/// Outcomes on which every constraint observable is diagonal.
#[derive(Debug, Clone)]
pub(super) enum ClassicalFrame {
    Outcomes(usize),
    Eigenbasis(CMatrix),
}

impl ClassicalFrame {
    pub(super) fn outcomes(&self) -> usize {
        match self {
            ClassicalFrame::Outcomes(n) => *n,
            ClassicalFrame::Eigenbasis(v) => v.ncols(),
        }
    }

    pub(super) fn values(&self, obs: &Observable) -> Vec<f64> {
        match (self, obs) {
            (ClassicalFrame::Outcomes(_), Observable::Classical(f)) => f.clone(),
            (ClassicalFrame::Eigenbasis(v), Observable::Quantum(_)) => obs.diagonal_in(v).expect("quantum"),
            _ => unreachable!("frame built for this space"),
        }
    }

    pub(super) fn lift(&self, p: &[f64]) -> State {
        match self {
            ClassicalFrame::Outcomes(_) => State::Classical(p.to_vec()),
            ClassicalFrame::Eigenbasis(v) => {
                let mut scaled = v.clone();
                for (k, &pk) in p.iter().enumerate() {
                    for x in scaled.column_mut(k).iter_mut() {
                        *x *= c64(pk, 0.0);
                    }
                }
                State::Quantum(HermitianMatrix::new(&scaled * v.adjoint()).expect("Hermitian by construction"))
            }
        }
    }
}

/// A frame in which the linear rows are simultaneously diagonal, if one exists.
pub(super) fn classical_frame(reduced: &ReducedProblem, rows: &[ReducedRow]) -> Option<ClassicalFrame> {
    if !reduced.space.is_quantum() {
        return Some(ClassicalFrame::Outcomes(reduced.space.size()));
    }
    let obs: Vec<&HermitianMatrix> = rows
        .iter()
        .filter_map(|r| match &r.kind {
            RowKind::Linear { observable, .. } | RowKind::Inequality { observable, .. } => observable.as_quantum(),
            _ => None,
        })
        .collect();
    let d = reduced.space.size();
    let mut combo = HermitianMatrix::zeros(d);
    for (k, a) in obs.iter().enumerate() {
        let n = a.frobenius_norm().max(1e-300);
        // fixed irrational weights make accidental degeneracies unlikely
        let w = (2.0 + k as f64).sqrt().fract() + 0.5;
        combo = combo.add(&a.scale(w / n));
    }
    let v = eig_hermitian(&combo).eigenvectors;
    for a in &obs {
        let t = v.adjoint() * a.as_matrix() * &v;
        let off: f64 = t
            .iter()
            .enumerate()
            .filter(|(idx, _)| idx % d != idx / d)
            .map(|(_, z)| z.norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off > 1e-9 * (1.0 + a.frobenius_norm()) {
            return None;
        }
    }
    Some(ClassicalFrame::Eigenbasis(v))
}

struct LinearRows {
    sources: Vec<usize>,
    observables: Vec<Observable>,
    targets: Vec<f64>,
}

fn collect_rows(rows: &[ReducedRow]) -> LinearRows {
    let mut out = LinearRows {
        sources: Vec::new(),
        observables: Vec::new(),
        targets: Vec::new(),
    };
    for r in rows {
        if let RowKind::Linear { observable, target } = &r.kind {
            out.sources.push(r.source);
            out.observables.push(observable.clone());
            out.targets.push(*target);
        }
    }
    out
}

/// Dual Newton solve of the linear rows of a reduced problem.
pub(super) fn linear_solve(reduced: &ReducedProblem, rows: &[ReducedRow]) -> Result<Solution> {
    let opts = &reduced.options;
    if let Some(cert) = range_violation(rows, opts.constraint_tol) {
        return Err(Error::Infeasible(cert));
    }
    let lin = collect_rows(rows);
    let (state, lambdas, run) = match classical_frame(reduced, rows) {
        Some(frame) => {
            let fs: Vec<Vec<f64>> = lin.observables.iter().map(|o| frame.values(o)).collect();
            let (p, lambdas, run) = classical_dual(frame.outcomes(), &fs, &lin.targets, &lin.sources, reduced)?;
            (frame.lift(&p), lambdas, run)
        }
        None => quantum_dual(&lin, reduced)?,
    };
    let state = reduced.twirl_state(&state);
    let mut multipliers = vec![0.0; reduced.constraints.len()];
    for (k, &src) in lin.sources.iter().enumerate() {
        multipliers[src] = lambdas[k];
    }
    let status = if run.gradient_norm <= opts.gradient_tol {
        Status::Optimal
    } else {
        Status::MaxIter
    };
    finish(
        reduced,
        state,
        multipliers,
        status,
        Diagnostics {
            method: Method::DualNewton,
            iterations: run.iterations,
            dual_gradient_norm: Some(run.gradient_norm),
            invariant_dimension: reduced.invariant_dimension(),
            feasible_starts: 1,
            degeneracy: None,
        },
    )
}

/// Constraints rewritten as an orthonormal family orthogonal to the identity.
struct Orthonormalized {
    q: Vec<Observable>,
    targets: Vec<f64>,
    /// coeffs[j][k]: weight of original row k in q[j].
    coeffs: Vec<Vec<f64>>,
}

fn orthonormalize(identity: &Observable, obs: &[Observable], targets: &[f64], sources: &[usize], tol: f64) -> Result<Orthonormalized> {
    let m = obs.len();
    let id_norm = identity.norm();
    let q0 = identity.scale(1.0 / id_norm);
    let t0 = 1.0 / id_norm;
    let mut out = Orthonormalized {
        q: Vec::new(),
        targets: Vec::new(),
        coeffs: Vec::new(),
    };
    for k in 0..m {
        let mut v = obs[k].clone();
        let mut t = targets[k];
        let mut c = vec![0.0; m];
        c[k] = 1.0;
        for _pass in 0..2 {
            let a = q0.inner(&v);
            v = v.add_scaled(-a, &q0);
            t -= a * t0;
            for j in 0..out.q.len() {
                let a = out.q[j].inner(&v);
                v = v.add_scaled(-a, &out.q[j]);
                t -= a * out.targets[j];
                for (ci, cj) in c.iter_mut().zip(&out.coeffs[j]) {
                    *ci -= a * cj;
                }
            }
        }
        let n = v.norm();
        let scale = 1.0 + obs[k].norm();
        if n <= DEPENDENCE_TOL * scale {
            if t.abs() > tol * scale {
                return Err(Error::Infeasible(Infeasibility::Inconsistent {
                    constraint: sources[k],
                    residual: t.abs(),
                }));
            }
            continue;
        }
        out.q.push(v.scale(1.0 / n));
        out.targets.push(t / n);
        out.coeffs.push(c.into_iter().map(|x| x / n).collect());
    }
    Ok(out)
}

fn original_multipliers(lambda: &[f64], on: &Orthonormalized, m: usize) -> Vec<f64> {
    let mut mu = vec![0.0; m];
    for (l, c) in lambda.iter().zip(&on.coeffs) {
        for (mk, ck) in mu.iter_mut().zip(c) {
            *mk += l * ck;
        }
    }
    mu
}

struct Eval {
    value: f64,
    grad: DVector<f64>,
    hess: DMatrix<f64>,
}

struct Run {
    lambda: Vec<f64>,
    iterations: usize,
    gradient_norm: f64,
}

/// Safeguarded Newton on the convex dual G(λ) = ln Z(λ) + λ·t.
///
/// Stops once the gradient is below `stop`.
fn newton(m: usize, eval: impl Fn(&[f64]) -> Eval, stop: f64, opts: &super::SolverOptions) -> Result<Run> {
    let mut lambda = vec![0.0; m];
    let mut cur = eval(&lambda);
    let mut iterations = 0;
    while iterations < opts.max_newton {
        let gnorm = cur.grad.norm();
        if gnorm <= stop {
            break;
        }
        if cur.value < -WEAK_DUALITY_SLACK {
            return Err(Error::Infeasible(Infeasibility::DualUnbounded { gradient_norm: gnorm }));
        }
        iterations += 1;
        let newton_dir = pseudo_inverse_step(&cur.hess, &cur.grad);
        let mut accepted = None;
        for dir in [newton_dir, -cur.grad.clone()] {
            let slope = cur.grad.dot(&dir);
            if slope >= 0.0 {
                continue;
            }
            let mut step = 1.0;
            for _ in 0..60 {
                let trial: Vec<f64> = lambda.iter().zip(dir.iter()).map(|(l, d)| l + step * d).collect();
                let next = eval(&trial);
                let armijo = next.value <= cur.value + 1e-4 * step * slope;
                // below round-off in G, fall back on the gradient norm
                let flat = (next.value - cur.value).abs() <= 1e-14 * (1.0 + cur.value.abs())
                    && next.grad.norm() < gnorm;
                if next.value.is_finite() && (armijo || flat) {
                    accepted = Some((trial, next));
                    break;
                }
                step *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
        }
        match accepted {
            Some((l, e)) => {
                lambda = l;
                cur = e;
            }
            None => break,
        }
        if lambda.iter().any(|l| l.abs() > 1e12) {
            break;
        }
    }
    Ok(Run {
        gradient_norm: cur.grad.norm(),
        lambda,
        iterations,
    })
}

/// Gradient norm that also keeps every original residual, bounded by
/// ‖Aₖ‖·‖g‖, a decade under the constraint tolerance.
fn stop_tolerance(obs: &[Observable], opts: &super::SolverOptions) -> f64 {
    let scale = obs.iter().map(|o| o.norm()).fold(1.0, f64::max);
    opts.gradient_tol.min(0.1 * opts.constraint_tol / scale)
}

fn pseudo_inverse_step(h: &DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    let m = g.len();
    if m == 0 {
        return DVector::zeros(0);
    }
    let eig = h.clone().symmetric_eigen();
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let mut d = DVector::zeros(m);
    for k in 0..m {
        let ev = eig.eigenvalues[k];
        if ev > HESSIAN_CUTOFF * top && ev > 0.0 {
            let v = eig.eigenvectors.column(k);
            d -= v * (v.dot(g) / ev);
        }
    }
    d
}

/// Outcomes some feasible distribution can populate, via one LP per
/// outcome not already seen positive.
fn feasible_support(n: usize, fs: &[Vec<f64>], targets: &[f64]) -> Result<Vec<usize>> {
    let mut lp = LpProblem::new(n).eq(vec![1.0; n], 1.0);
    for (f, &t) in fs.iter().zip(targets) {
        lp = lp.eq(f.clone(), t);
    }
    let mut positive = vec![false; n];
    match lp_feasible(&lp)? {
        LpFeasibility::Feasible(x) => {
            for (i, &xi) in x.iter().enumerate() {
                positive[i] |= xi > SUPPORT_TOL;
            }
        }
        LpFeasibility::Infeasible(cert) => {
            return Err(Error::Infeasible(Infeasibility::Linear {
                infeasibility: cert.infeasibility,
                multipliers: cert.multipliers,
            }))
        }
    }
    for i in 0..n {
        if positive[i] {
            continue;
        }
        let mut c = vec![0.0; n];
        c[i] = -1.0;
        if let LpOptimum::Optimal { x, value } = lp_minimize(&lp, &c)? {
            if -value > SUPPORT_TOL {
                for (j, &xj) in x.iter().enumerate() {
                    positive[j] |= xj > SUPPORT_TOL;
                }
            }
        }
    }
    Ok((0..n).filter(|&i| positive[i]).collect())
}

fn classical_dual(
    n: usize,
    fs: &[Vec<f64>],
    targets: &[f64],
    sources: &[usize],
    reduced: &ReducedProblem,
) -> Result<(Vec<f64>, Vec<f64>, Run)> {
    let opts = &reduced.options;
    let full: Vec<Observable> = fs.iter().map(|f| Observable::Classical(f.clone())).collect();
    orthonormalize(&Observable::Classical(vec![1.0; n]), &full, targets, sources, opts.constraint_tol)?;
    let support = if fs.is_empty() {
        (0..n).collect()
    } else {
        feasible_support(n, fs, targets)?
    };
    let restricted: Vec<Observable> = fs
        .iter()
        .map(|f| Observable::Classical(support.iter().map(|&i| f[i]).collect()))
        .collect();
    let identity = Observable::Classical(vec![1.0; support.len()]);
    let on = orthonormalize(&identity, &restricted, targets, sources, opts.constraint_tol)?;
    let q: Vec<&[f64]> = on.q.iter().map(|o| o.as_classical().expect("classical")).collect();
    let s = support.len();
    let gibbs = |lambda: &[f64]| -> (Vec<f64>, f64) {
        let e: Vec<f64> = (0..s).map(|i| lambda.iter().zip(&q).map(|(l, qj)| l * qj[i]).sum()).collect();
        let emin = e.iter().cloned().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = e.iter().map(|x| (-(x - emin)).exp()).collect();
        let z: f64 = w.iter().sum();
        (w.into_iter().map(|x| x / z).collect(), -emin + z.ln())
    };
    let eval = |lambda: &[f64]| {
        let (p, ln_z) = gibbs(lambda);
        let m = q.len();
        let means: Vec<f64> = q.iter().map(|qj| qj.iter().zip(&p).map(|(a, b)| a * b).sum()).collect();
        let grad = DVector::from_fn(m, |j, _| on.targets[j] - means[j]);
        let hess = DMatrix::from_fn(m, m, |j, k| {
            (0..s).map(|i| p[i] * q[j][i] * q[k][i]).sum::<f64>() - means[j] * means[k]
        });
        let value = ln_z + lambda.iter().zip(&on.targets).map(|(l, t)| l * t).sum::<f64>();
        Eval { value, grad, hess }
    };
    let run = newton(q.len(), eval, stop_tolerance(&restricted, opts), opts)?;
    let (ps, _) = gibbs(&run.lambda);
    let mut p = vec![0.0; n];
    for (k, &i) in support.iter().enumerate() {
        p[i] = ps[k];
    }
    let mu = original_multipliers(&run.lambda, &on, fs.len());
    Ok((p, mu, run))
}

fn quantum_dual(lin: &LinearRows, reduced: &ReducedProblem) -> Result<(State, Vec<f64>, Run)> {
    let opts = &reduced.options;
    let d = reduced.space.size();
    let identity = Observable::identity(reduced.space);
    let on = orthonormalize(&identity, &lin.observables, &lin.targets, &lin.sources, opts.constraint_tol)?;
    let q: Vec<&CMatrix> = on.q.iter().map(|o| o.as_quantum().expect("quantum").as_matrix()).collect();
    let m = q.len();
    struct Gibbs {
        p: Vec<f64>,
        e: Vec<f64>,
        v: CMatrix,
        ln_z: f64,
    }
    let gibbs = |lambda: &[f64]| -> Gibbs {
        let mut h = CMatrix::zeros(d, d);
        for (l, qj) in lambda.iter().zip(&q) {
            h += *qj * c64(*l, 0.0);
        }
        let sd = eig_hermitian(&HermitianMatrix::new(h).expect("real combination of Hermitian"));
        let emin = sd.eigenvalues[0];
        let w: Vec<f64> = sd.eigenvalues.iter().map(|x| (-(x - emin)).exp()).collect();
        let z: f64 = w.iter().sum();
        Gibbs {
            p: w.into_iter().map(|x| x / z).collect(),
            e: sd.eigenvalues,
            v: sd.eigenvectors,
            ln_z: -emin + z.ln(),
        }
    };
    let eval = |lambda: &[f64]| {
        let g = gibbs(lambda);
        let rotated: Vec<CMatrix> = q.iter().map(|qj| g.v.adjoint() * *qj * &g.v).collect();
        let means: Vec<f64> = rotated
            .iter()
            .map(|b| (0..d).map(|i| g.p[i] * b[(i, i)].re).sum())
            .collect();
        // Kubo–Mori weights: the divided difference of exp at the spectrum
        let mut w = DMatrix::<f64>::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let de = g.e[j] - g.e[i];
                w[(i, j)] = if de.abs() < 1e-8 {
                    0.5 * (g.p[i] + g.p[j])
                } else {
                    (g.p[i] - g.p[j]) / de
                };
            }
        }
        let mut hess = DMatrix::zeros(m, m);
        for a in 0..m {
            for b in a..m {
                let mut acc = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        acc += w[(i, j)] * (rotated[a][(i, j)] * rotated[b][(j, i)]).re;
                    }
                }
                let h = acc - means[a] * means[b];
                hess[(a, b)] = h;
                hess[(b, a)] = h;
            }
        }
        let grad = DVector::from_fn(m, |j, _| on.targets[j] - means[j]);
        let value = g.ln_z + lambda.iter().zip(&on.targets).map(|(l, t)| l * t).sum::<f64>();
        Eval { value, grad, hess }
    };
    let run = newton(m, eval, stop_tolerance(&lin.observables, opts), opts)?;
    let g = gibbs(&run.lambda);
    let mut scaled = g.v.clone();
    for (k, &pk) in g.p.iter().enumerate() {
        for x in scaled.column_mut(k).iter_mut() {
            *x *= c64(pk, 0.0);
        }
    }
    let rho = HermitianMatrix::new(&scaled * g.v.adjoint())?;
    let mu = original_multipliers(&run.lambda, &on, lin.observables.len());
    Ok((State::Quantum(rho), mu, run))
}
