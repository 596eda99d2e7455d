//! Dense two-phase simplex with Bland's rule.
//!
//! Sized for polytopes with a few dozen variables. Pivoting is fully
//! deterministic: entering column is the lowest index with negative reduced
//! cost, leaving row breaks ratio ties by lowest basic-variable index.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-10;
const DEFAULT_MAX_PIVOTS: usize = 100_000;

/// Linear constraints `A_eq x = b_eq`, `A_le x ≤ b_le`, `lo ≤ x ≤ hi`.
#[derive(Debug, Clone)]
pub struct LpProblem {
    n: usize,
    eq: Vec<(Vec<f64>, f64)>,
    le: Vec<(Vec<f64>, f64)>,
    bounds: Vec<(f64, f64)>,
    max_pivots: usize,
    feas_tol: f64,
}

impl LpProblem {
    /// `n` variables, all bounded below by zero.
    pub fn new(n: usize) -> Self {
        LpProblem {
            n,
            eq: Vec::new(),
            le: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); n],
            max_pivots: DEFAULT_MAX_PIVOTS,
            feas_tol: 1e-9,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn eq(mut self, row: Vec<f64>, rhs: f64) -> Self {
        assert_eq!(row.len(), self.n, "row length");
        self.eq.push((row, rhs));
        self
    }

    pub fn le(mut self, row: Vec<f64>, rhs: f64) -> Self {
        assert_eq!(row.len(), self.n, "row length");
        self.le.push((row, rhs));
        self
    }

    pub fn ge(self, row: Vec<f64>, rhs: f64) -> Self {
        let neg = row.iter().map(|x| -x).collect();
        self.le(neg, -rhs)
    }

    pub fn bound(mut self, var: usize, lo: f64, hi: f64) -> Self {
        self.bounds[var] = (lo, hi);
        self
    }

    pub fn free(self, var: usize) -> Self {
        self.bound(var, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn max_pivots(mut self, cap: usize) -> Self {
        self.max_pivots = cap;
        self
    }

    /// Largest violation of any constraint at `x`.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let dot = |r: &[f64]| r.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        let mut worst = 0.0f64;
        for (r, b) in &self.eq {
            worst = worst.max((dot(r) - b).abs());
        }
        for (r, b) in &self.le {
            worst = worst.max(dot(r) - b);
        }
        for (xj, &(lo, hi)) in x.iter().zip(&self.bounds) {
            worst = worst.max(lo - xj).max(xj - hi);
        }
        worst
    }
}

/// Phase-one dual multipliers proving infeasibility.
///
/// `multipliers` are indexed over the standard-form rows: equalities first,
/// then inequalities, then finite upper bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct FarkasCertificate {
    pub multipliers: Vec<f64>,
    /// Optimal value of the phase-one problem (total artificial mass).
    pub infeasibility: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpFeasibility {
    Feasible(Vec<f64>),
    Infeasible(FarkasCertificate),
}

impl LpFeasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, LpFeasibility::Feasible(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOptimum {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible(FarkasCertificate),
    Unbounded,
}

/// Find any point satisfying the constraints, or a phase-one certificate.
pub fn lp_feasible(lp: &LpProblem) -> Result<LpFeasibility> {
    match solve(lp, None)? {
        LpOptimum::Optimal { x, .. } => Ok(LpFeasibility::Feasible(x)),
        LpOptimum::Infeasible(c) => Ok(LpFeasibility::Infeasible(c)),
        LpOptimum::Unbounded => unreachable!("phase one is bounded"),
    }
}

/// Minimize `c·x` subject to the constraints.
pub fn lp_minimize(lp: &LpProblem, c: &[f64]) -> Result<LpOptimum> {
    assert_eq!(c.len(), lp.n, "cost length");
    solve(lp, Some(c))
}

/// Original variable j = offset + Σ coef · y_col over standard-form columns.
struct VarMap {
    offset: f64,
    terms: Vec<(usize, f64)>,
}

struct Tableau {
    rows: usize,
    cols: usize, // structural + slack + artificial, excluding rhs
    data: Vec<f64>,
    obj: Vec<f64>, // reduced costs, length cols
    obj_value: f64,
    basis: Vec<usize>,
    pivots: usize,
    max_pivots: usize,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.data[r * (self.cols + 1) + self.cols]
    }

    fn pivot(&mut self, pr: usize, pc: usize) -> Result<()> {
        self.pivots += 1;
        if self.pivots > self.max_pivots {
            return Err(Error::IterationLimit(self.max_pivots));
        }
        let w = self.cols + 1;
        let p = self.at(pr, pc);
        for k in 0..w {
            self.data[pr * w + k] /= p;
        }
        let prow: Vec<f64> = self.data[pr * w..(pr + 1) * w].to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.data[r * w + pc];
            if f != 0.0 {
                for (x, pk) in self.data[r * w..(r + 1) * w].iter_mut().zip(&prow) {
                    *x -= f * pk;
                }
                self.data[r * w + pc] = 0.0;
            }
        }
        let f = self.obj[pc];
        if f != 0.0 {
            for (x, pk) in self.obj.iter_mut().zip(&prow[..self.cols]) {
                *x -= f * pk;
            }
            self.obj[pc] = 0.0;
            self.obj_value += f * prow[self.cols];
        }
        self.basis[pr] = pc;
        Ok(())
    }

    /// Bland's rule until optimal. Returns false if unbounded.
    fn run(&mut self, allowed: &dyn Fn(usize) -> bool) -> Result<bool> {
        loop {
            let entering = (0..self.cols).find(|&j| allowed(j) && self.obj[j] < -COST_EPS);
            let Some(pc) = entering else {
                return Ok(true);
            };
            let mut best: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > PIVOT_EPS {
                    let ratio = self.rhs(r).max(0.0) / a;
                    best = match best {
                        None => Some((r, ratio)),
                        Some((br, bratio)) => {
                            let tie = (ratio - bratio).abs() <= 1e-12 * (1.0 + bratio.abs());
                            if ratio < bratio && !tie || tie && self.basis[r] < self.basis[br] {
                                Some((r, ratio))
                            } else {
                                Some((br, bratio))
                            }
                        }
                    };
                }
            }
            match best {
                None => return Ok(false),
                Some((pr, _)) => self.pivot(pr, pc)?,
            }
        }
    }
}

fn solve(lp: &LpProblem, cost: Option<&[f64]>) -> Result<LpOptimum> {
    // variable substitution to y >= 0
    let mut maps = Vec::with_capacity(lp.n);
    let mut ny = 0usize;
    let mut upper_rows: Vec<(usize, f64)> = Vec::new();
    for &(lo, hi) in &lp.bounds {
        if lo > hi {
            return Ok(LpOptimum::Infeasible(FarkasCertificate {
                multipliers: Vec::new(),
                infeasibility: lo - hi,
            }));
        }
        if lo.is_finite() {
            maps.push(VarMap {
                offset: lo,
                terms: vec![(ny, 1.0)],
            });
            if hi.is_finite() {
                upper_rows.push((ny, hi - lo));
            }
            ny += 1;
        } else if hi.is_finite() {
            maps.push(VarMap {
                offset: hi,
                terms: vec![(ny, -1.0)],
            });
            ny += 1;
        } else {
            maps.push(VarMap {
                offset: 0.0,
                terms: vec![(ny, 1.0), (ny + 1, -1.0)],
            });
            ny += 2;
        }
    }

    let substitute = |row: &[f64], rhs: f64| -> (Vec<f64>, f64) {
        let mut out = vec![0.0; ny];
        let mut b = rhs;
        for (j, &a) in row.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            b -= a * maps[j].offset;
            for &(col, coef) in &maps[j].terms {
                out[col] += a * coef;
            }
        }
        (out, b)
    };

    // (row over y, rhs, slack?)
    let mut std_rows: Vec<(Vec<f64>, f64, bool)> = Vec::new();
    for (r, b) in &lp.eq {
        let (row, rhs) = substitute(r, *b);
        std_rows.push((row, rhs, false));
    }
    for (r, b) in &lp.le {
        let (row, rhs) = substitute(r, *b);
        std_rows.push((row, rhs, true));
    }
    for &(col, ub) in &upper_rows {
        let mut row = vec![0.0; ny];
        row[col] = 1.0;
        std_rows.push((row, ub, true));
    }

    let m = std_rows.len();
    let ns = std_rows.iter().filter(|r| r.2).count();
    let cols = ny + ns + m;
    let w = cols + 1;
    let mut data = vec![0.0; m * w];
    let mut signs = vec![1.0; m];
    let mut slack_col = ny;
    for (i, (row, rhs, has_slack)) in std_rows.iter().enumerate() {
        let s = if *rhs < 0.0 { -1.0 } else { 1.0 };
        signs[i] = s;
        for (j, &a) in row.iter().enumerate() {
            data[i * w + j] = s * a;
        }
        if *has_slack {
            data[i * w + slack_col] = s;
            slack_col += 1;
        }
        data[i * w + ny + ns + i] = 1.0;
        data[i * w + cols] = s * rhs;
    }
    let art0 = ny + ns;
    let mut obj = vec![0.0; cols];
    let mut obj_value = 0.0;
    for i in 0..m {
        for j in 0..art0 {
            obj[j] -= data[i * w + j];
        }
        obj_value += data[i * w + cols];
    }
    let mut t = Tableau {
        rows: m,
        cols,
        data,
        obj,
        obj_value,
        basis: (0..m).map(|i| art0 + i).collect(),
        pivots: 0,
        max_pivots: lp.max_pivots,
    };

    // phase one
    t.run(&|_| true)?;
    let scale = std_rows.iter().map(|r| r.1.abs()).fold(1.0, f64::max);
    if t.obj_value > lp.feas_tol * scale {
        // y_i = 1 - reduced cost of artificial i, undo the row sign flip
        let multipliers = (0..m).map(|i| signs[i] * (1.0 - t.obj[art0 + i])).collect();
        return Ok(LpOptimum::Infeasible(FarkasCertificate {
            multipliers,
            infeasibility: t.obj_value,
        }));
    }

    // drive artificials out of the basis where possible
    for r in 0..m {
        if t.basis[r] >= art0 {
            if let Some(pc) = (0..art0).find(|&j| t.at(r, j).abs() > 1e-9) {
                t.pivot(r, pc)?;
            }
        }
    }

    let mut value = 0.0;
    if let Some(c) = cost {
        let mut cy = vec![0.0; cols];
        let mut c0 = 0.0;
        for (j, &cj) in c.iter().enumerate() {
            c0 += cj * maps[j].offset;
            for &(col, coef) in &maps[j].terms {
                cy[col] += cj * coef;
            }
        }
        t.obj = cy.clone();
        t.obj_value = 0.0;
        for r in 0..m {
            let cb = cy[t.basis[r]];
            if cb != 0.0 {
                for k in 0..cols {
                    t.obj[k] -= cb * t.at(r, k);
                }
                t.obj_value += cb * t.rhs(r);
            }
        }
        let bounded = t.run(&|j| j < art0)?;
        if !bounded {
            return Ok(LpOptimum::Unbounded);
        }
        value = c0;
    }

    let mut y = vec![0.0; cols];
    for r in 0..m {
        y[t.basis[r]] = t.rhs(r).max(0.0);
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|mp| mp.offset + mp.terms.iter().map(|&(col, coef)| coef * y[col]).sum::<f64>())
        .collect();
    if let Some(c) = cost {
        value = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    }
    Ok(LpOptimum::Optimal { x, value })
}
