//! JSON file formats for problems, states, groups, behaviors and solutions.
//!
//! Complex matrices are nested arrays of `[re, im]` pairs, permutations are
//! 0-based index arrays. Floats are written with 17 significant digits so
//! that identical runs produce byte-identical files.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Value};

use crate::coherent::build_oscillator;
use crate::entropy::EntropyKind;
use crate::error::{Error, Infeasibility, Result};
use crate::event::{Event, EventSpace, SpaceKind, State};
use crate::maxent::{Constraint, Method, Problem, Solution, SolverOptions, Status};
use crate::numerics::{c64, CMatrix, HermitianMatrix};
use crate::observable::Observable;
use crate::polytope::Behavior;
use crate::symmetry::GroupSpec;

/// Rows of `[re, im]` pairs.
pub type MatrixData = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_data(m: &CMatrix) -> MatrixData {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_data(data: &MatrixData) -> Result<CMatrix> {
    let rows = data.len();
    if rows == 0 {
        return Err(Error::Schema("empty matrix".into()));
    }
    let cols = data[0].len();
    if data.iter().any(|r| r.len() != cols) {
        return Err(Error::Schema("ragged matrix rows".into()));
    }
    if data.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Schema("non-finite matrix entry".into()));
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| c64(data[i][j][0], data[i][j][1])))
}

fn hermitian_from_data(data: &MatrixData) -> Result<HermitianMatrix> {
    HermitianMatrix::new(matrix_from_data(data)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindSpec {
    Classical,
    Quantum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub kind: KindSpec,
    pub size: usize,
}

impl SpaceSpec {
    pub fn to_space(&self) -> Result<EventSpace> {
        match self.kind {
            KindSpec::Classical => EventSpace::classical(self.size),
            KindSpec::Quantum => EventSpace::quantum(self.size),
        }
    }

    pub fn from_space(space: EventSpace) -> Self {
        SpaceSpec {
            kind: match space.kind() {
                SpaceKind::Classical => KindSpec::Classical,
                SpaceKind::Quantum => KindSpec::Quantum,
            },
            size: space.size(),
        }
    }
}

/// An observable: a real vector, a Hermitian matrix, or one of the named
/// oscillator quadratures `"q"`, `"p"`, `"number"` on a quantum space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableSpec {
    Named(String),
    Vector(Vec<f64>),
    Matrix(MatrixData),
}

impl ObservableSpec {
    fn to_observable(&self, space: EventSpace, hbar: f64) -> Result<Observable> {
        let o = match (self, space.kind()) {
            (ObservableSpec::Vector(v), SpaceKind::Classical) => Observable::Classical(v.clone()),
            (ObservableSpec::Matrix(m), SpaceKind::Quantum) => Observable::Quantum(hermitian_from_data(m)?),
            (ObservableSpec::Named(name), SpaceKind::Quantum) => {
                let ops = build_oscillator(space.size(), hbar)?;
                match name.as_str() {
                    "q" => Observable::Quantum(ops.q),
                    "p" => Observable::Quantum(ops.p),
                    "number" => Observable::Quantum(ops.number),
                    other => return Err(Error::Schema(format!("unknown named observable {other:?}"))),
                }
            }
            _ => return Err(Error::Schema(format!("observable does not fit a {} space", space.kind()))),
        };
        if o.space() != space {
            return Err(Error::Schema(format!(
                "observable on {} does not match problem space {space}",
                o.space()
            )));
        }
        if o.coords().iter().any(|x| !x.is_finite()) {
            return Err(Error::Schema("non-finite observable entry".into()));
        }
        Ok(o)
    }
}

/// Classical events are outcome index lists, quantum events projectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EventSpec {
    Members(Vec<usize>),
    Projector(MatrixData),
}

impl EventSpec {
    fn to_event(&self, space: EventSpace) -> Result<Event> {
        let e = match (self, space.kind()) {
            (EventSpec::Members(m), SpaceKind::Classical) => Event::subset(space.size(), m)?,
            (EventSpec::Projector(p), SpaceKind::Quantum) => Event::projector(hermitian_from_data(p)?)?,
            _ => return Err(Error::Schema(format!("event does not fit a {} space", space.kind()))),
        };
        space.check(&e.space())?;
        Ok(e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coeff: f64,
    pub event: EventSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintSpec {
    Moment { observable: ObservableSpec, target: f64 },
    Variance { observable: ObservableSpec, target: f64 },
    AtMost { observable: ObservableSpec, bound: f64 },
    AtLeast { observable: ObservableSpec, bound: f64 },
    LinearEvent { terms: Vec<TermSpec>, rhs: f64 },
}

impl ConstraintSpec {
    fn to_constraint(&self, space: EventSpace, hbar: f64) -> Result<Constraint> {
        let finite = |x: f64| {
            if x.is_finite() {
                Ok(x)
            } else {
                Err(Error::Schema("non-finite constraint value".into()))
            }
        };
        Ok(match self {
            ConstraintSpec::Moment { observable, target } => {
                Constraint::moment(observable.to_observable(space, hbar)?, finite(*target)?)
            }
            ConstraintSpec::Variance { observable, target } => {
                Constraint::variance(observable.to_observable(space, hbar)?, finite(*target)?)
            }
            ConstraintSpec::AtMost { observable, bound } => {
                Constraint::at_most(observable.to_observable(space, hbar)?, finite(*bound)?)
            }
            ConstraintSpec::AtLeast { observable, bound } => {
                Constraint::at_least(observable.to_observable(space, hbar)?, finite(*bound)?)
            }
            ConstraintSpec::LinearEvent { terms, rhs } => Constraint::LinearEvent {
                terms: terms
                    .iter()
                    .map(|t| Ok((finite(t.coeff)?, t.event.to_event(space)?)))
                    .collect::<Result<_>>()?,
                rhs: finite(*rhs)?,
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    #[default]
    Trivial,
    Permutations,
    Unitaries,
    OneParameter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeneratorSpec {
    Permutation(Vec<usize>),
    Matrix(MatrixData),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupFile {
    pub kind: GroupKind,
    #[serde(default)]
    pub generators: Vec<GeneratorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closure_cap: Option<usize>,
}

impl GroupFile {
    pub fn to_group(&self) -> Result<GroupSpec> {
        let perms = || -> Result<Vec<Vec<usize>>> {
            self.generators
                .iter()
                .map(|g| match g {
                    GeneratorSpec::Permutation(p) => Ok(p.clone()),
                    GeneratorSpec::Matrix(_) => Err(Error::Schema("expected a permutation generator".into())),
                })
                .collect()
        };
        let matrices = || -> Result<Vec<CMatrix>> {
            self.generators
                .iter()
                .map(|g| match g {
                    GeneratorSpec::Matrix(m) => matrix_from_data(m),
                    GeneratorSpec::Permutation(_) => Err(Error::Schema("expected a matrix generator".into())),
                })
                .collect()
        };
        let spec = match self.kind {
            GroupKind::Trivial => {
                if !self.generators.is_empty() {
                    return Err(Error::Schema("trivial group takes no generators".into()));
                }
                GroupSpec::trivial()
            }
            GroupKind::Permutations => GroupSpec::permutations(perms()?)?,
            GroupKind::Unitaries => GroupSpec::unitaries(matrices()?)?,
            GroupKind::OneParameter => GroupSpec::one_parameter_family(
                matrices()?.into_iter().map(HermitianMatrix::new).collect::<Result<_>>()?,
            )?,
        };
        Ok(match self.closure_cap {
            Some(cap) => spec.with_closure_cap(cap),
            None => spec,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropySpec {
    Shannon,
    VonNeumann,
    #[default]
    Measurement,
}

impl From<EntropySpec> for EntropyKind {
    fn from(e: EntropySpec) -> Self {
        match e {
            EntropySpec::Shannon => EntropyKind::Shannon,
            EntropySpec::VonNeumann => EntropyKind::VonNeumann,
            EntropySpec::Measurement => EntropyKind::Measurement,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub starts: Option<usize>,
}

impl SolverSpec {
    /// Fields set in `other` take precedence.
    pub fn overridden_by(&self, other: &SolverSpec) -> SolverSpec {
        SolverSpec {
            tol: other.tol.or(self.tol),
            max_iter: other.max_iter.or(self.max_iter),
            seed: other.seed.or(self.seed),
            starts: other.starts.or(self.starts),
        }
    }

    pub fn to_options(&self) -> Result<SolverOptions> {
        let mut o = SolverOptions::default();
        if let Some(tol) = self.tol {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(Error::Schema(format!("tolerance must be positive, got {tol}")));
            }
            o.constraint_tol = tol;
        }
        if let Some(n) = self.max_iter {
            if n == 0 {
                return Err(Error::Schema("max_iter must be positive".into()));
            }
            o.max_newton = n;
            o.max_outer = n;
        }
        if let Some(seed) = self.seed {
            o.seed = seed;
        }
        if let Some(starts) = self.starts {
            if starts == 0 {
                return Err(Error::Schema("starts must be positive".into()));
            }
            o.starts = starts;
        }
        Ok(o)
    }
}

fn default_hbar() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub space: SpaceSpec,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    #[serde(default)]
    pub group: GroupFile,
    #[serde(default)]
    pub constraints: Vec<ConstraintSpec>,
    #[serde(default)]
    pub entropy: EntropySpec,
    #[serde(default)]
    pub solver: SolverSpec,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn to_problem(&self) -> Result<Problem> {
        self.to_problem_with(&SolverSpec::default())
    }

    /// Builds the library problem, with `overrides` taking precedence over
    /// the file's solver section.
    pub fn to_problem_with(&self, overrides: &SolverSpec) -> Result<Problem> {
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::Schema(format!("hbar must be positive, got {}", self.hbar)));
        }
        let space = self.space.to_space()?;
        let mut problem = Problem::new(space)
            .with_group(self.group.to_group()?)
            .with_options(self.solver.overridden_by(overrides).to_options()?);
        problem.entropy = self.entropy.into();
        for c in &self.constraints {
            problem = problem.with_constraint(c.to_constraint(space, self.hbar)?);
        }
        problem.validate()?;
        Ok(problem)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateFile {
    Classical { probabilities: Vec<f64> },
    Quantum { density: MatrixData },
}

impl StateFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn from_state(s: &State) -> Self {
        match s {
            State::Classical(p) => StateFile::Classical { probabilities: p.clone() },
            State::Quantum(rho) => StateFile::Quantum {
                density: matrix_to_data(rho.as_matrix()),
            },
        }
    }

    pub fn to_state(&self) -> Result<State> {
        match self {
            StateFile::Classical { probabilities } => State::classical(probabilities.clone()),
            StateFile::Quantum { density } => State::quantum(hermitian_from_data(density)?),
        }
    }
}

/// A behavior table in the order P(a,b|x,y) at index 8x + 4y + 2a + b.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorFile {
    pub table: Vec<f64>,
}

impl BehaviorFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn from_behavior(b: &Behavior) -> Self {
        BehaviorFile { table: b.table().to_vec() }
    }

    pub fn to_behavior(&self) -> Result<Behavior> {
        let table: [f64; 16] = self
            .table
            .as_slice()
            .try_into()
            .map_err(|_| Error::Schema(format!("behavior table needs 16 entries, got {}", self.table.len())))?;
        Behavior::new(table)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegeneracySpec {
    pub entropy_gap: f64,
    pub state_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSpec {
    pub method: String,
    pub iterations: usize,
    pub dual_gradient_norm: Option<f64>,
    pub invariant_dimension: usize,
    pub feasible_starts: usize,
    pub degenerate: bool,
    pub degeneracy: Option<DegeneracySpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub status: String,
    pub state: Option<StateFile>,
    pub entropy_value: Option<f64>,
    #[serde(default)]
    pub multipliers: Vec<f64>,
    #[serde(default)]
    pub residuals: Vec<f64>,
    pub diagnostics: Option<DiagnosticsSpec>,
    /// Present when the problem was proven infeasible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Value>,
}

impl SolutionFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn from_solution(s: &Solution) -> Self {
        let d = &s.diagnostics;
        SolutionFile {
            status: s.status.as_str().to_string(),
            state: Some(StateFile::from_state(&s.state)),
            entropy_value: Some(s.entropy),
            multipliers: s.multipliers.clone(),
            residuals: s.residuals.clone(),
            diagnostics: Some(DiagnosticsSpec {
                method: match d.method {
                    Method::DualNewton => "dual_newton",
                    Method::AugmentedLagrangian => "augmented_lagrangian",
                }
                .to_string(),
                iterations: d.iterations,
                dual_gradient_norm: d.dual_gradient_norm,
                invariant_dimension: d.invariant_dimension,
                feasible_starts: d.feasible_starts,
                degenerate: s.status == Status::Degenerate,
                degeneracy: d.degeneracy.map(|(gap, dist)| DegeneracySpec {
                    entropy_gap: gap,
                    state_distance: dist,
                }),
            }),
            certificate: None,
        }
    }

    pub fn infeasible(certificate: &Infeasibility) -> Self {
        SolutionFile {
            status: Status::Infeasible.as_str().to_string(),
            state: None,
            entropy_value: None,
            multipliers: Vec::new(),
            residuals: Vec::new(),
            diagnostics: None,
            certificate: Some(certificate_to_json(certificate)),
        }
    }
}

pub fn certificate_to_json(c: &Infeasibility) -> Value {
    let detail = match c {
        Infeasibility::Symmetry {
            constraint,
            twirled_norm,
            invariant_value,
            target,
        } => json!({"kind": "symmetry", "constraint": constraint, "twirled_norm": twirled_norm,
                    "invariant_value": invariant_value, "target": target}),
        Infeasibility::Range {
            constraint,
            lower,
            upper,
            target,
        } => json!({"kind": "range", "constraint": constraint, "lower": lower, "upper": upper, "target": target}),
        Infeasibility::Inconsistent { constraint, residual } => {
            json!({"kind": "inconsistent", "constraint": constraint, "residual": residual})
        }
        Infeasibility::Linear {
            infeasibility,
            multipliers,
        } => json!({"kind": "linear", "infeasibility": infeasibility, "multipliers": multipliers}),
        Infeasibility::DualUnbounded { gradient_norm } => {
            json!({"kind": "dual_unbounded", "gradient_norm": gradient_norm})
        }
        Infeasibility::ResidualFloor { residual } => json!({"kind": "residual_floor", "residual": residual}),
        Infeasibility::TruncationGuard { alpha_sq, limit } => {
            json!({"kind": "truncation_guard", "alpha_sq": alpha_sq, "limit": limit})
        }
        Infeasibility::ChshRange { target } => json!({"kind": "chsh_range", "target": target}),
    };
    let mut v = detail;
    v["message"] = Value::String(c.to_string());
    v
}

/// Pretty JSON with every float written as `{:.16e}`.
#[derive(Default)]
pub struct FixedFloatFormatter {
    inner: PrettyFormatter<'static>,
}

impl FixedFloatFormatter {
    pub fn new() -> Self {
        FixedFloatFormatter {
            inner: PrettyFormatter::with_indent(b"  "),
        }
    }
}

impl Formatter for FixedFloatFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if !value.is_finite() {
            return w.write_all(b"null");
        }
        let v = if value == 0.0 { 0.0 } else { value };
        write!(w, "{v:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloatFormatter::new());
    value.serialize(&mut ser).map_err(|e| Error::Schema(e.to_string()))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Schema(e.to_string()))
}

/// Re-evaluates the residuals of a stored solution against its problem.
pub fn recheck_residuals(problem: &Problem, solution: &SolutionFile) -> Result<Vec<f64>> {
    let state = solution
        .state
        .as_ref()
        .ok_or_else(|| Error::Schema("solution carries no state".into()))?
        .to_state()?;
    problem.space.check(&state.space())?;
    problem.constraints.iter().map(|c| c.residual(&state)).collect()
}
