use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use invariant_maxent::coherent::{
    build_oscillator, coherent_state_vector, resolution_of_identity, saturation_residual, solve_saturated_with,
    su2_family, two_j_from,
};
use invariant_maxent::maxent::{solve_general, Status};
use invariant_maxent::polytope::{chsh_values, maxent_behavior_with, membership, Polytope, Witness};
use invariant_maxent::schema::{
    matrix_to_data, to_json_string, BehaviorFile, GroupFile, ProblemFile, SolutionFile, SolverSpec, StateFile,
};
use invariant_maxent::symmetry::{twirl, GroupSpec};
use invariant_maxent::{entropy, EntropyKind, Error, State, C64};

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_BAD_INPUT: u8 = 4;

#[derive(Parser)]
#[command(name = "imaxent", version, about = "Maximum-entropy states under symmetry and moment constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct SolverFlags {
    /// Constraint residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Seed for multi-start initial points.
    #[arg(long)]
    seed: Option<u64>,
    /// Iteration cap for the outer solver loop.
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
    /// Number of starts for non-convex problems.
    #[arg(long)]
    starts: Option<usize>,
}

impl SolverFlags {
    fn spec(&self) -> SolverSpec {
        SolverSpec {
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed,
            starts: self.starts,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file and write a solution file.
    Solve {
        problem: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
        /// Output path (standard output when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Average a state over a group.
    Twirl {
        state: PathBuf,
        group: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the entropy of a state.
    Entropy {
        state: PathBuf,
        #[arg(long, value_enum, default_value_t = KindArg::Measurement)]
        kind: KindArg,
    },
    /// Query a behavior table, or build the maximum-entropy behavior for a CHSH value.
    #[command(group(ArgGroup::new("query").required(true).args(["membership", "chsh", "maxent"])))]
    Polytope {
        /// Behavior file with a 16-entry table.
        #[arg(required_unless_present = "maxent")]
        behavior: Option<PathBuf>,
        #[arg(long, value_enum)]
        membership: Option<PolytopeArg>,
        /// Print the eight CHSH values.
        #[arg(long)]
        chsh: bool,
        /// Target value of E00 + E10 + E01 - E11.
        #[arg(long, allow_negative_numbers = true)]
        maxent: Option<f64>,
        #[command(flatten)]
        solver: SolverFlags,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Oscillator and spin coherent states.
    #[command(group(ArgGroup::new("mode").required(true).args(["alpha", "saturate", "su2"])))]
    Coherent {
        /// Complex amplitude such as 1+0i, -0.5i or 2.
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<String>,
        /// Solve for the saturating state with means (q0, p0).
        #[arg(long, num_args = 2, value_names = ["Q0", "P0"], allow_negative_numbers = true)]
        saturate: Option<Vec<f64>>,
        /// Spin quantum number (integer or half-integer).
        #[arg(long)]
        su2: Option<f64>,
        /// Fock truncation.
        #[arg(long, default_value_t = 40)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        hbar: f64,
        /// Sphere quadrature order (default 2j + 2).
        #[arg(long)]
        order: Option<usize>,
        #[command(flatten)]
        solver: SolverFlags,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Shannon,
    #[value(name = "von_neumann", alias = "von-neumann")]
    VonNeumann,
    Measurement,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolytopeArg {
    Local,
    Nosignal,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Infeasible(_) => EXIT_INFEASIBLE,
            Error::MaxIter(_) | Error::IterationLimit(_) => EXIT_NUMERICAL,
            _ => EXIT_BAD_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_BAD_INPUT,
        message: format!("cannot read {}: {e}", path.display()),
    })
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure {
            code: EXIT_BAD_INPUT,
            message: format!("cannot write {}: {e}", p.display()),
        }),
        None => match io::stdout().write_all(text.as_bytes()) {
            Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(Failure {
                code: EXIT_BAD_INPUT,
                message: format!("cannot write output: {e}"),
            }),
            _ => Ok(()),
        },
    }
}

fn status_code(status: Status) -> u8 {
    match status {
        Status::Optimal => 0,
        Status::Infeasible => EXIT_INFEASIBLE,
        Status::MaxIter | Status::Degenerate => EXIT_NUMERICAL,
    }
}

fn write_solution_or_certificate(
    result: invariant_maxent::Result<invariant_maxent::maxent::Solution>,
    out: Option<&Path>,
) -> Outcome {
    match result {
        Ok(sol) => {
            emit(&to_json_string(&SolutionFile::from_solution(&sol))?, out)?;
            if sol.status == Status::Degenerate {
                eprintln!("warning: several feasible optima with equal entropy");
            }
            Ok(status_code(sol.status))
        }
        Err(Error::Infeasible(cert)) => {
            eprintln!("infeasible: {cert}");
            emit(&to_json_string(&SolutionFile::infeasible(&cert))?, out)?;
            Ok(EXIT_INFEASIBLE)
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_solve(problem: &Path, solver: &SolverFlags, out: Option<&Path>) -> Outcome {
    let file = ProblemFile::parse(&read(problem)?)?;
    let problem = file.to_problem_with(&solver.spec())?;
    write_solution_or_certificate(solve_general(&problem), out)
}

fn cmd_twirl(state: &Path, group: &Path, out: Option<&Path>) -> Outcome {
    let s = StateFile::parse(&read(state)?)?.to_state()?;
    let g: GroupFile = serde_json::from_str(&read(group)?).map_err(|e| Failure {
        code: EXIT_BAD_INPUT,
        message: format!("schema error: {e}"),
    })?;
    let spec: GroupSpec = g.to_group()?;
    let t = twirl(&s, &spec)?;
    emit(&to_json_string(&StateFile::from_state(&t))?, out)?;
    Ok(0)
}

fn cmd_entropy(state: &Path, kind: KindArg) -> Outcome {
    let s = StateFile::parse(&read(state)?)?.to_state()?;
    let kind = match kind {
        KindArg::Shannon => EntropyKind::Shannon,
        KindArg::VonNeumann => EntropyKind::VonNeumann,
        KindArg::Measurement => EntropyKind::Measurement,
    };
    match (kind, &s) {
        (EntropyKind::Shannon, State::Quantum(_)) | (EntropyKind::VonNeumann, State::Classical(_)) => {
            return Err(Failure {
                code: EXIT_BAD_INPUT,
                message: "entropy kind does not match the state".into(),
            })
        }
        _ => {}
    }
    println!("{:.16e}", entropy(&s, kind));
    Ok(0)
}

fn cmd_polytope(
    behavior: Option<&Path>,
    query: Option<PolytopeArg>,
    chsh: bool,
    maxent: Option<f64>,
    solver: &SolverFlags,
    out: Option<&Path>,
) -> Outcome {
    if let Some(target) = maxent {
        let options = solver.spec().to_options()?;
        let sol = maxent_behavior_with(target, &[], GroupSpec::trivial(), options)?;
        let payload = json!({
            "status": sol.solution.status.as_str(),
            "behavior": BehaviorFile::from_behavior(&sol.behavior),
            "entropy_value": sol.entropy,
            "chsh": chsh_values(&sol.behavior)[0],
        });
        emit(&to_json_string(&payload)?, out)?;
        return Ok(status_code(sol.solution.status));
    }
    let path = behavior.expect("required by the argument parser");
    let b = BehaviorFile::parse(&read(path)?)?.to_behavior()?;
    if chsh {
        let v = chsh_values(&b);
        let text = to_json_string(&json!({ "chsh": v.to_vec() }))?;
        emit(&text, out)?;
        return Ok(0);
    }
    let polytope = match query.expect("required by the argument parser") {
        PolytopeArg::Local => Polytope::Local,
        PolytopeArg::Nosignal => Polytope::NoSignal,
    };
    let m = membership(&b, polytope)?;
    println!("{}", if m.inside { "inside" } else { "outside" });
    if let Some(p) = out {
        let witness = match &m.witness {
            Some(Witness::Weights(w)) => json!({ "weights": w }),
            Some(Witness::Residual(r)) => json!({ "nosignal_residual": r }),
            None => serde_json::Value::Null,
        };
        emit(&to_json_string(&json!({ "inside": m.inside, "witness": witness }))?, Some(p))?;
    }
    Ok(0)
}

/// Parses `a`, `bi`, `a+bi` or `a-bi`.
fn parse_complex(text: &str) -> Result<C64, Failure> {
    let bad = || Failure {
        code: EXIT_BAD_INPUT,
        message: format!("cannot parse complex number {text:?}"),
    };
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let num = |t: &str| -> Result<f64, Failure> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => t.parse::<f64>().map_err(|_| bad()),
        }
    };
    let Some(body) = s.strip_suffix(['i', 'j']) else {
        return Ok(C64::new(s.parse().map_err(|_| bad())?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (body[..k].parse::<f64>().map_err(|_| bad())?, num(&body[k..])?),
        None => (0.0, num(body)?),
    };
    if !(re.is_finite() && im.is_finite()) {
        return Err(bad());
    }
    Ok(C64::new(re, im))
}

#[allow(clippy::too_many_arguments)]
fn cmd_coherent(
    alpha: Option<&str>,
    saturate: Option<&[f64]>,
    su2: Option<f64>,
    dim: usize,
    hbar: f64,
    order: Option<usize>,
    solver: &SolverFlags,
    out: Option<&Path>,
) -> Outcome {
    if let Some(a) = alpha {
        let ops = build_oscillator(dim, hbar)?;
        let v = coherent_state_vector(parse_complex(a)?, &ops)?;
        let state = State::pure(&v);
        let (rq, rp) = saturation_residual(&state, &ops)?;
        eprintln!("saturation residuals: {rq:e} {rp:e}");
        emit(&to_json_string(&StateFile::from_state(&state))?, out)?;
        return Ok(0);
    }
    if let Some(qp) = saturate {
        let ops = build_oscillator(dim, hbar)?;
        let options = solver.spec().to_options()?;
        return write_solution_or_certificate(solve_saturated_with(&ops, qp[0], qp[1], options), out);
    }
    let j = su2.expect("required by the argument parser");
    let two_j = two_j_from(j)?;
    let family = su2_family(two_j, order.unwrap_or(two_j + 2))?;
    let residual = resolution_of_identity(&family)?;
    let reference = State::pure(&family.reference);
    let payload = json!({
        "two_j": two_j,
        "reference": StateFile::from_state(&reference),
        "stability_generator": matrix_to_data(family.stability_generator.as_matrix()),
        "quadrature_order": family.quadrature_order,
        "members": family.members.len(),
        "resolution_residual": residual,
    });
    emit(&to_json_string(&payload)?, out)?;
    Ok(0)
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Solve { problem, solver, out } => cmd_solve(&problem, &solver, out.as_deref()),
        Command::Twirl { state, group, out } => cmd_twirl(&state, &group, out.as_deref()),
        Command::Entropy { state, kind } => cmd_entropy(&state, kind),
        Command::Polytope {
            behavior,
            membership,
            chsh,
            maxent,
            solver,
            out,
        } => cmd_polytope(behavior.as_deref(), membership, chsh, maxent, &solver, out.as_deref()),
        Command::Coherent {
            alpha,
            saturate,
            su2,
            dim,
            hbar,
            order,
            solver,
            out,
        } => cmd_coherent(
            alpha.as_deref(),
            saturate.as_deref(),
            su2,
            dim,
            hbar,
            order,
            &solver,
            out.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_BAD_INPUT } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
