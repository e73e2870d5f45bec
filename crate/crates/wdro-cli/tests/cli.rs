//! End-to-end binary behavior: report shape, embedded-config round-trips,
//! flag precedence, error categories as exit codes, and CSV fault reporting.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wdro(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wdro"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = wdro(dir, args);
    assert!(
        out.status.success(),
        "wdro {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn fails(dir: &Path, args: &[&str], code: i32, category: &str) -> String {
    let out = wdro(dir, args);
    let stderr = String::from_utf8_lossy(&out.stderr).into_owned();
    assert_eq!(out.status.code(), Some(code), "wdro {args:?}:\n{stderr}");
    assert!(
        stderr.contains(&format!("error.category = {category}")),
        "wdro {args:?} stderr:\n{stderr}"
    );
    stderr
}

fn put(dir: &Path, name: &str, body: &str) {
    fs::write(dir.join(name), body).unwrap();
}

fn report(dir: &Path, name: &str) -> toml::Value {
    toml::from_str(&fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

const QUADRATIC: &str = "\
[instance]
family = \"quadratic\"
beta = [0.8, -0.6, 0.3]
p = 2.0
alpha = 0.5

[data.synthetic]
sampler = \"gaussian\"
dim = 3
n = 16
seed = 11
";

#[test]
fn report_embeds_a_rerunnable_config() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    put(dir, "q.toml", QUADRATIC);
    ok(dir, &["worst-case", "--config", "q.toml", "--report", "r.toml"]);
    let first = fs::read(dir.join("r.toml")).unwrap();
    // The report names itself as its output file, so rerunning it as the
    // config overwrites it in place; identical bytes close the loop.
    fs::copy(dir.join("r.toml"), dir.join("saved.toml")).unwrap();
    ok(dir, &["worst-case", "--config", "r.toml"]);
    let second = fs::read(dir.join("r.toml")).unwrap();
    assert_eq!(first, second, "report did not reproduce itself as a config");
    assert_eq!(first, fs::read(dir.join("saved.toml")).unwrap());
}

#[test]
fn zero_radius_reduces_to_erm() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    put(dir, "q.toml", QUADRATIC);
    ok(dir, &["worst-case", "--config", "q.toml", "--alpha", "0", "--report", "r.toml"]);
    let rep = report(dir, "r.toml");
    let res = &rep["result"];
    assert_eq!(res["worst_case"].as_float(), res["erm"].as_float());
    // At radius zero every admissible dual point is optimal; the report
    // records the smallest one, the finiteness threshold.
    let lambda = res["lambda_star"].as_float().unwrap();
    assert!(lambda.is_finite() && lambda >= 0.0, "lambda_star {lambda}");
    assert_eq!(rep["config"]["instance"]["alpha"].as_float(), Some(0.0));
}

#[test]
fn stdout_report_when_no_path_given() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    put(dir, "q.toml", QUADRATIC);
    let out = ok(dir, &["worst-case", "--config", "q.toml"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("report = \"wdro\""), "unexpected stdout:\n{text}");
    assert!(text.contains("[result]"));
    // Timing stays on stderr so report bytes depend only on the input.
    assert!(!text.contains("wall_clock_seconds"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("wall_clock_seconds"));
}

#[test]
fn flag_overrides_take_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    put(dir, "q.toml", QUADRATIC);
    ok(dir, &[
        "worst-case",
        "--config",
        "q.toml",
        "--alpha",
        "0.25",
        "--p",
        "inf",
        "--n",
        "8",
        "--seed",
        "3",
        "--report",
        "r.toml",
    ]);
    let rep = report(dir, "r.toml");
    let inst = &rep["config"]["instance"];
    assert_eq!(inst["alpha"].as_float(), Some(0.25));
    assert_eq!(inst["p"].as_str(), Some("inf"));
    let syn = &rep["config"]["data"]["synthetic"];
    assert_eq!(syn["n"].as_integer(), Some(8));
    assert_eq!(syn["seed"].as_integer(), Some(3));
    assert!(rep["result"].get("lambda_star").is_none(), "no dual variable at order inf");
}

#[test]
fn equivalence_check_reports_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    put(
        dir,
        "eq.toml",
        "\
[instance]
family = \"regression\"
uni = \"abs\"
beta = [1.3, -0.4]
q = \"inf\"
alpha = 0.7

[data.synthetic]
sampler = \"uniform\"
dim = 3
n = 10
seed = 2
lo = [-1.0, -1.0, -2.0]
hi = [1.0, 1.0, 2.0]
",
    );
    ok(dir, &["equivalence-check", "--config", "eq.toml", "--report", "r.toml"]);
    let rep = report(dir, "r.toml");
    let res = &rep["result"];
    assert_eq!(res["within_tolerance"].as_bool(), Some(true));
    assert!(res["absolute_gap"].as_float().unwrap() <= 1e-6);
    assert_eq!(rep["config"]["instance"]["p"].as_float(), Some(1.0));
}

#[test]
fn choice_probabilities_match_symmetric_case() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    put(dir, "c.toml", "[choice]\nfamily = \"mnl\"\nzbar = [0.0, 0.0]\n");
    ok(dir, &["choice", "--config", "c.toml", "--report", "r.toml"]);
    let rep = report(dir, "r.toml");
    let probs: Vec<f64> = rep["result"]["probabilities"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_float().unwrap())
        .collect();
    for p in &probs {
        assert!((p - 0.5).abs() <= 1e-12, "probability {p}");
    }
    let alpha0 = rep["result"]["alpha0"].as_float().unwrap();
    assert!((alpha0 - (-(2.0f64.ln()))).abs() <= 1e-12, "alpha0 {alpha0}");
}

#[test]
fn asymptotics_writes_curve_files() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    put(
        dir,
        "a.toml",
        "\
[instance]
family = \"quadratic\"
beta = [0.8, -0.6, 0.3]
p = 2.0

[data.synthetic]
sampler = \"gaussian\"
dim = 3
n = 30

[asymptotics]
alphas = [0.5, 0.25, 0.125]
seeds = [4]
",
    );
    ok(dir, &[
        "asymptotics",
        "--config",
        "a.toml",
        "--curve-dir",
        "out",
        "--report",
        "r.toml",
    ]);
    let csv = fs::read_to_string(dir.join("out/gap_curve_seed4.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("alpha,worst_case,regularized,gap,gap_ratio"));
    assert_eq!(lines.count(), 3);
    let rep = report(dir, "r.toml");
    let curves = rep["result"]["curves"].as_array().unwrap();
    assert_eq!(curves.len(), 1);
    assert_eq!(curves[0]["seed"].as_integer(), Some(4));
    assert_eq!(curves[0]["file"].as_str(), Some("out/gap_curve_seed4.csv"));
    // Quadratic loss: gap/α is α-free, so two halvings shrink it 4-fold.
    let decay = curves[0]["decay"].as_float().unwrap();
    assert!((decay - 0.25).abs() <= 1e-9, "decay {decay}");
}

#[test]
fn fit_converges_on_regression() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    put(
        dir,
        "f.toml",
        "\
[instance]
family = \"regression\"
uni = \"abs\"
beta = [0.0, 0.0]
alpha = 0.1

[data.synthetic]
sampler = \"gaussian\"
dim = 3
n = 40
seed = 9

[fit]
max_iters = 4000
seed = 1
",
    );
    ok(dir, &["fit", "--config", "f.toml", "--report", "r.toml"]);
    let rep = report(dir, "r.toml");
    let res = &rep["result"];
    assert_eq!(res["beta"].as_array().unwrap().len(), 2);
    assert!(res["objective"].as_float().unwrap().is_finite());
    assert!(res["iterations"].as_integer().unwrap() <= 4000);
}

#[test]
fn config_faults_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    put(dir, "bad.toml", "[instance]\nfamly = \"quadratic\"\n");
    fails(dir, &["worst-case", "--config", "bad.toml"], 2, "config");

    put(dir, "q.toml", QUADRATIC);
    fails(dir, &["worst-case", "--config", "q.toml", "--p", "0.5"], 2, "config");
    fails(dir, &["worst-case", "--config", "missing.toml"], 2, "config");
    // Flags outside the subcommand's surface are refused, not ignored.
    put(dir, "c.toml", "[choice]\nfamily = \"mnl\"\nzbar = [0.0, 0.0]\n");
    fails(dir, &["choice", "--config", "c.toml", "--alpha", "0.5"], 2, "config");
}

#[test]
fn domain_unbounded_and_kink_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    put(dir, "q.toml", QUADRATIC);
    // Quadratic growth outruns transport order 1.5: certified unbounded.
    fails(dir, &["worst-case", "--config", "q.toml", "--p", "1.5"], 4, "unbounded");

    put(
        dir,
        "nest.toml",
        "[choice]\nfamily = \"nested-logit\"\nzbar = [0.1, 0.2, 0.3]\nnests = [[0, 1], [2]]\ntaus = [0.6]\n",
    );
    fails(dir, &["choice", "--config", "nest.toml"], 3, "domain");

    // A sample sitting exactly on the hinge corner has no gradient there.
    put(dir, "kink.csv", "x1,x2,y\n1.0,0.5,1\n");
    put(
        dir,
        "kink.toml",
        "\
[instance]
family = \"classification\"
uni = \"hinge\"
beta = [1.0, 0.0]
p = 2.0
alpha = 0.5

[data]
path = \"kink.csv\"
labeled = true
",
    );
    fails(dir, &["bounds", "--config", "kink.toml"], 5, "kink");
}

#[test]
fn csv_faults_name_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    let cfg = "\
[instance]
family = \"regression\"
uni = \"abs\"
beta = [1.0, -0.5]
p = 2.0
alpha = 0.3

[data]
path = \"d.csv\"
labeled = true
";
    put(dir, "r.toml", cfg);

    put(dir, "d.csv", "x1,x2,y\n1.0,2.0,0.5\n0.3,oops,1.0\n");
    let err = fails(dir, &["worst-case", "--config", "r.toml"], 2, "config");
    assert!(err.contains("row 2, column 2"), "stderr:\n{err}");

    put(dir, "d.csv", "x1,x2,y\n1.0,nan,0.5\n");
    let err = fails(dir, &["worst-case", "--config", "r.toml"], 3, "domain");
    assert!(err.contains("row 1, column 2"), "stderr:\n{err}");

    put(dir, "d.csv", "x1,x2,y\n1.0,2.0\n");
    fails(dir, &["worst-case", "--config", "r.toml"], 2, "config");

    let cls = cfg.replace("regression", "classification").replace("\"abs\"", "\"hinge\"");
    put(dir, "r.toml", &cls);
    put(dir, "d.csv", "x1,x2,y\n1.0,2.0,0\n0.5,0.1,1\n");
    let err = fails(dir, &["worst-case", "--config", "r.toml"], 3, "domain");
    assert!(err.contains("labels must be -1 or 1"), "stderr:\n{err}");
}

#[test]
fn data_flag_replaces_synthetic_source() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    put(
        dir,
        "u.toml",
        "\
[instance]
family = \"unsupervised\"
uni = \"abs\"
beta = [1.0, -0.5]
p = 2.0
alpha = 0.3

[data.synthetic]
sampler = \"gaussian\"
dim = 2
n = 5
",
    );
    put(dir, "pts.csv", "x1,x2\n0.4,0.2\n-1.0,0.3\n0.1,0.9\n");
    ok(dir, &[
        "worst-case",
        "--config",
        "u.toml",
        "--data",
        "pts.csv",
        "--report",
        "r.toml",
    ]);
    let rep = report(dir, "r.toml");
    let data = &rep["config"]["data"];
    assert_eq!(data["path"].as_str(), Some("pts.csv"));
    assert!(data.get("synthetic").is_none());
    // Synthetic-only knobs no longer apply once a file is the source.
    fails(
        dir,
        &["worst-case", "--config", "u.toml", "--data", "pts.csv", "--n", "4"],
        2,
        "config",
    );
}
