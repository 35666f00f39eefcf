use std::path::Path;
use std::process::{Command, Output};

const NOSHOW: &str = env!("CARGO_BIN_EXE_noshow");
const SAT: &str = env!("CARGO_BIN_EXE_noshow-sat");
const THM1: &str = include_str!("../../core/fixtures/thm1.cert");
const THM4: &str = include_str!("../../core/fixtures/thm4.cert");

fn noshow(args: &[&str]) -> Output {
    Command::new(NOSHOW)
        .args(args)
        .env_remove("NOSHOW_SOLVER")
        .env_remove("NOSHOW_MUS_TOOL")
        .output()
        .unwrap()
}

fn text(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn encode(dir: &Path, name: &str, extra: &[&str]) -> std::path::PathBuf {
    let out = dir.join(name);
    let mut args = vec!["encode", "--format", "both", "--out", s(&out)];
    args.extend_from_slice(extra);
    let o = noshow(&args);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    out
}

#[test]
fn kemeny_boundary_end_to_end() {
    let d = tempfile::tempdir().unwrap();
    let sat = encode(d.path(), "k3", &["--n", "3", "--rule", "kemeny"]);
    let model = d.path().join("model.txt");
    let o = noshow(&[
        "solve",
        "--cnf",
        s(&sat.join("instance.cnf")),
        "--model-out",
        s(&model),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(text(&o).contains("status SAT") && text(&o).contains("model checked"));

    let table = d.path().join("table.txt");
    let varmap = sat.join("instance.varmap");
    let o = noshow(&[
        "extract-rule",
        "--model",
        s(&model),
        "--varmap",
        s(&varmap),
        "--out",
        s(&table),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = noshow(&[
        "verify-rule",
        "--table",
        s(&table),
        "--n",
        "3",
        "--axioms",
        "participation",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));

    let unsat = encode(d.path(), "k4", &["--n", "4", "--rule", "kemeny"]);
    let o = noshow(&["solve", "--cnf", s(&unsat.join("instance.cnf"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("status UNSAT"));

    let mus = d.path().join("mus");
    let o = noshow(&[
        "mus",
        "--gcnf",
        s(&unsat.join("instance.gcnf")),
        "--out",
        s(&mus),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(text(&o).contains("draft certificate VALID"), "{}", text(&o));
    let o = noshow(&["check-proof", "--cert", s(&mus.join("draft.cert"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(text(&o).contains("no kemeny rule satisfies single participation for m = 4"));
}

#[test]
fn manifest_records_digests() {
    let d = tempfile::tempdir().unwrap();
    let out = encode(d.path(), "m", &["--n", "2"]);
    let manifest = std::fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.starts_with("subcommand encode\n"));
    assert!(manifest.contains("config n 2"));
    let cnf = manifest
        .lines()
        .find(|l| l.starts_with("output ") && l.ends_with("instance.cnf"))
        .unwrap();
    let digest = cnf.split(' ').nth(1).unwrap();
    assert_eq!(digest.len(), 64);
    assert!(manifest.lines().any(|l| l.starts_with("wall ")));

    let again = encode(d.path(), "m2", &["--n", "2"]);
    let a = std::fs::read(out.join("instance.cnf")).unwrap();
    let b = std::fs::read(again.join("instance.cnf")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn solver_template_from_flag_and_environment() {
    let d = tempfile::tempdir().unwrap();
    let inst = encode(d.path(), "c2", &["--n", "2"]);
    let cnf = inst.join("instance.cnf");
    let template = format!("{SAT} {{input}}");
    let o = noshow(&["solve", "--cnf", s(&cnf), "--solver", &template]);
    assert_eq!(o.status.code(), Some(0));
    let o = Command::new(NOSHOW)
        .args(["solve", "--cnf", s(&cnf)])
        .env("NOSHOW_SOLVER", &template)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));

    let o = noshow(&["solve", "--cnf", s(&cnf), "--solver", "/bin/false {input}"]);
    assert_eq!(o.status.code(), Some(4));
    let o = noshow(&["solve", "--cnf", s(&cnf), "--solver", "no-placeholder"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_proof_exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let good = d.path().join("thm1.cert");
    let bad = d.path().join("thm4.cert");
    let broken = d.path().join("broken.cert");
    std::fs::write(&good, THM1).unwrap();
    std::fs::write(&bad, THM4).unwrap();
    std::fs::write(&broken, "rule condorcet\nnode R abcd:x\n").unwrap();

    let dot = d.path().join("thm1.dot");
    let o = noshow(&[
        "check-proof",
        "--cert",
        s(&good),
        "--lift-m",
        "5",
        "--dot",
        s(&dot),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(text(&o).trim_end().ends_with("VALID"));
    assert!(std::fs::read_to_string(&dot)
        .unwrap()
        .starts_with("digraph"));

    let o = noshow(&["check-proof", "--cert", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("FAIL leaf B2"));

    let o = noshow(&["check-proof", "--cert", s(&broken)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let o = noshow(&["check-proof", "--cert", s(&good), "--lift-m", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn enumerate_and_oracle_subcommands() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("idx");
    let o = noshow(&["enumerate", "--n", "3", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let stats = std::fs::read_to_string(out.join("stats.txt")).unwrap();
    assert_eq!(stats.lines().count(), 3);
    assert!(stats.starts_with("1 24 24\n"));

    let o = noshow(&["oracle-check", "--n", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(text(&o).ends_with("missing 0 extra 0\n"));
    let o = noshow(&["oracle-check", "--n", "9"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn profile_space_needs_base_and_orders() {
    let d = tempfile::tempdir().unwrap();
    let o = noshow(&[
        "encode",
        "--n",
        "3",
        "--profile-space",
        "--out",
        s(&d.path().join("x")),
    ]);
    assert_eq!(o.status.code(), Some(2));
}
