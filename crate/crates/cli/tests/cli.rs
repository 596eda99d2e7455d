use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use invariant_maxent::event::{validate_state, StateCandidate};
use invariant_maxent::maxent::solve_linear;
use invariant_maxent::schema::{recheck_residuals, ProblemFile, SolutionFile, StateFile};
use invariant_maxent::coherent::{build_oscillator, saturation_residual};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_imaxent"))
}

fn problems() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn solve_file(name: &str, extra: &[&str]) -> (i32, String) {
    let path = problems().join(name);
    let mut args = vec!["solve", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = run(&args);
    (code(&o), String::from_utf8(o.stdout).unwrap())
}

#[test]
fn gibbs_file_matches_library() {
    let (c, out) = solve_file("gibbs.json", &[]);
    assert_eq!(c, 0);
    let sol = SolutionFile::parse(&out).unwrap();
    assert_eq!(sol.status, "optimal");
    let text = std::fs::read_to_string(problems().join("gibbs.json")).unwrap();
    let problem = ProblemFile::parse(&text).unwrap().to_problem().unwrap();
    let lib = solve_linear(&problem).unwrap();
    let got = sol.state.unwrap().to_state().unwrap();
    assert!(got.distance(&lib.state).unwrap() <= 1e-12);
}

#[test]
fn symmetry_infeasible_file_exits_2() {
    let (c, out) = solve_file("symmetry_infeasible.json", &[]);
    assert_eq!(c, 2);
    let sol = SolutionFile::parse(&out).unwrap();
    assert_eq!(sol.status, "infeasible");
    let cert = sol.certificate.unwrap();
    assert_eq!(cert["kind"], "symmetry");
    assert!(cert["twirled_norm"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn chsh_file_solves() {
    let (c, out) = solve_file("chsh_maxent.json", &[]);
    assert_eq!(c, 0);
    assert_eq!(SolutionFile::parse(&out).unwrap().status, "optimal");
}

#[test]
fn solutions_round_trip() {
    for name in ["gibbs.json", "chsh_maxent.json"] {
        let (_, out) = solve_file(name, &[]);
        let sol = SolutionFile::parse(&out).unwrap();
        let state = sol.state.as_ref().unwrap().to_state().unwrap();
        let report = match &state {
            invariant_maxent::State::Classical(p) => validate_state(StateCandidate::Probabilities(p)),
            invariant_maxent::State::Quantum(r) => validate_state(StateCandidate::Density(r.as_matrix())),
        };
        assert!(report.is_ok(), "{name}: {report}");
        let text = std::fs::read_to_string(problems().join(name)).unwrap();
        let problem = ProblemFile::parse(&text).unwrap().to_problem().unwrap();
        let r = recheck_residuals(&problem, &sol).unwrap();
        assert!(r.iter().all(|x| x.abs() <= 1e-8), "{name}: {r:?}");
    }
}

#[test]
fn solve_is_deterministic() {
    for name in ["gibbs.json", "symmetry_infeasible.json", "chsh_maxent.json"] {
        let a = solve_file(name, &["--seed", "7"]);
        let b = solve_file(name, &["--seed", "7"]);
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn flags_override_file_settings() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sol.json");
    let path = problems().join("gibbs.json");
    let o = run(&[
        "solve",
        path.to_str().unwrap(),
        "--tol",
        "1e-10",
        "--max-iter",
        "50",
        "--starts",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let sol = SolutionFile::parse(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert!(sol.residuals.iter().all(|r| r.abs() <= 1e-10));
    assert_eq!(code(&run(&["solve", path.to_str().unwrap(), "--tol", "-1"])), 4);
}

#[test]
fn malformed_inputs_exit_4() {
    let dir = TempDir::new().unwrap();
    let ragged = write(
        &dir,
        "ragged.json",
        r#"{"space": {"kind": "quantum", "size": 2},
            "constraints": [{"kind": "moment", "observable": [[[1, 0], [0, 0]], [[0, 0]]], "target": 0}]}"#,
    );
    assert_eq!(code(&run(&["solve", &ragged])), 4);
    let non_hermitian = write(
        &dir,
        "nonherm.json",
        r#"{"space": {"kind": "quantum", "size": 2},
            "constraints": [{"kind": "moment", "observable": [[[0, 0], [1, 0]], [[0, 0], [0, 0]]], "target": 0}]}"#,
    );
    assert_eq!(code(&run(&["solve", &non_hermitian])), 4);
    let garbage = write(&dir, "garbage.json", "not json");
    assert_eq!(code(&run(&["solve", &garbage])), 4);
    assert_eq!(code(&run(&["solve", "/definitely/missing.json"])), 4);
    assert_eq!(code(&run(&["frobnicate"])), 4);
}

#[test]
fn entropy_of_maximally_mixed_qubit() {
    let dir = TempDir::new().unwrap();
    let s = write(&dir, "mm.json", r#"{"kind": "quantum", "density": [[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]]}"#);
    let o = run(&["entropy", &s, "--kind", "von_neumann"]);
    assert_eq!(code(&o), 0);
    let v: f64 = String::from_utf8(o.stdout).unwrap().trim().parse().unwrap();
    assert!((v - 2f64.ln()).abs() <= 1e-15);
    assert_eq!(code(&run(&["entropy", &s, "--kind", "shannon"])), 4);
}

#[test]
fn polytope_queries() {
    let dir = TempDir::new().unwrap();
    let pr = write(
        &dir,
        "pr.json",
        r#"{"table": [0.5, 0, 0, 0.5, 0.5, 0, 0, 0.5, 0.5, 0, 0, 0.5, 0, 0.5, 0.5, 0]}"#,
    );
    let o = run(&["polytope", &pr, "--membership", "local"]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), "outside");
    let o = run(&["polytope", &pr, "--membership", "nosignal"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), "inside");
    let o = run(&["polytope", &pr, "--chsh"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["chsh"][0].as_f64().unwrap() - 4.0).abs() < 1e-12);
    let o = run(&["polytope", "--maxent", "0"]);
    assert_eq!(code(&o), 0);
    let o = run(&["polytope", "--maxent", "4.5"]);
    assert_eq!(code(&o), 2);
    let short = write(&dir, "short.json", r#"{"table": [0.25, 0.25]}"#);
    assert_eq!(code(&run(&["polytope", &short, "--chsh"])), 4);
}

#[test]
fn coherent_alpha_state_saturates() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("coh.json");
    let o = run(&["coherent", "--alpha", "1+0i", "--dim", "40", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let s = StateFile::parse(&std::fs::read_to_string(out).unwrap()).unwrap().to_state().unwrap();
    let ops = build_oscillator(40, 1.0).unwrap();
    let (rq, rp) = saturation_residual(&s, &ops).unwrap();
    assert!(rq.abs() <= 1e-6 && rp.abs() <= 1e-6);
    assert_eq!(code(&run(&["coherent", "--alpha", "5", "--dim", "8"])), 4);
    assert_eq!(code(&run(&["coherent", "--alpha", "nonsense"])), 4);
}

#[test]
fn coherent_spin_family() {
    let o = run(&["coherent", "--su2", "1"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["resolution_residual"].as_f64().unwrap() <= 1e-9);
    assert_eq!(code(&run(&["coherent", "--su2", "0.3"])), 4);
}

#[test]
fn twirl_command() {
    let dir = TempDir::new().unwrap();
    let s = write(&dir, "s.json", r#"{"kind": "classical", "probabilities": [0.6, 0.3, 0.1]}"#);
    let g = write(&dir, "g.json", r#"{"kind": "permutations", "generators": [[1, 2, 0]]}"#);
    let o = run(&["twirl", &s, &g]);
    assert_eq!(code(&o), 0);
    let t = StateFile::parse(&String::from_utf8(o.stdout).unwrap()).unwrap().to_state().unwrap();
    assert!(t.probabilities().unwrap().iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));
    let bad = write(&dir, "bad.json", r#"{"kind": "permutations", "generators": [[0, 0, 1]]}"#);
    assert_eq!(code(&run(&["twirl", &s, &bad])), 4);
}
