//! End-to-end tests driving the compiled binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_walktail"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path
}

struct Fixture {
    _dir: tempfile::TempDir,
    cycle4: PathBuf,
    k4: PathBuf,
    coin: PathBuf,
    sign: PathBuf,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let cycle4 = write(
        dir.path(),
        "cycle4.json",
        r#"{ "states": 4, "edges": [[0,1,1.0],[1,2,1.0],[2,3,1.0],[3,0,1.0]] }"#,
    );
    let k4 = write(
        dir.path(),
        "k4.json",
        r#"{ "states": 4, "edges": [[0,1,1],[0,2,1],[0,3,1],[1,2,1],[1,3,1],[2,3,1]] }"#,
    );
    let coin = write(
        dir.path(),
        "coin.json",
        r#"{ "states": 2, "matrix": [[0.5,0.5],[0.5,0.5]] }"#,
    );
    let sign = write(dir.path(), "sign.json", "[1.0, -1.0]");
    Fixture {
        _dir: dir,
        cycle4,
        k4,
        coin,
        sign,
    }
}

#[test]
fn spectrum_reports_bipartite_degeneracy() {
    let fx = fixture();
    let out = run(&["spectrum", "--chain", fx.cycle4.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("beta:  1.0"), "{text}");
    assert!(text.contains("bipartite-like"), "{text}");
}

#[test]
fn spectrum_complete_graph_json() {
    let fx = fixture();
    let out = run(&["spectrum", "--chain", fx.k4.to_str().unwrap(), "--json"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((report["beta"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-9);
    assert_eq!(report["alpha"].as_f64().unwrap(), 0.0);
    assert_eq!(report["states"], 4);
}

#[test]
fn malformed_chain_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{ not json");
    let out = run(&["spectrum", "--chain", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("cannot parse chain file"));
}

#[test]
fn bound_table_on_iid_chain() {
    let fx = fixture();
    let out = run(&[
        "bound",
        "--chain",
        fx.coin.to_str().unwrap(),
        "--function",
        fx.sign.to_str().unwrap(),
        "--gamma",
        "0.5",
        "--n",
        "10",
        "--json",
    ]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["inputs"]["qNorm"].as_f64().unwrap(), 1.0);
    let results = report["results"].as_array().unwrap();
    let optimized = results
        .iter()
        .find(|r| r["family"] == "optimized-beta")
        .unwrap();
    // Frozen reference: the value at the fixed tilt r = 0.2; the optimizer
    // must do at least as well.
    assert!(optimized["value"].as_f64().unwrap() <= 0.582_237_690_447_518_4 + 1e-12);
    assert!(optimized["feasible"].as_bool().unwrap());
}

#[test]
fn bound_annotates_vacuous_deviation() {
    let fx = fixture();
    let out = run(&[
        "bound",
        "--chain",
        fx.coin.to_str().unwrap(),
        "--function",
        fx.sign.to_str().unwrap(),
        "--gamma",
        "1.5",
        "--n",
        "10",
        "--json",
    ]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    for row in report["results"].as_array().unwrap() {
        assert_eq!(
            row["note"].as_str().unwrap(),
            "vacuous: deviation exceeds range",
            "{row}"
        );
    }
}

#[test]
fn bound_rejects_nonpositive_gamma() {
    let fx = fixture();
    let out = run(&[
        "bound",
        "--chain",
        fx.coin.to_str().unwrap(),
        "--function",
        fx.sign.to_str().unwrap(),
        "--gamma",
        "-0.5",
        "--n",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("gamma must be positive"));
}

#[test]
fn bound_json_round_trips_deterministically() {
    let fx = fixture();
    let args = [
        "bound",
        "--chain",
        fx.coin.to_str().unwrap(),
        "--function",
        fx.sign.to_str().unwrap(),
        "--gamma",
        "0.3",
        "--n",
        "25",
        "--json",
    ];
    let first = run(&args);
    let second = run(&args);
    assert!(first.status.success());
    assert_eq!(stdout(&first), stdout(&second));
    // Parsed values re-evaluate to themselves.
    let report: serde_json::Value = serde_json::from_str(&stdout(&first)).unwrap();
    for row in report["results"].as_array().unwrap() {
        let value = row["value"].as_f64().unwrap();
        let prefactor = row["prefactor"].as_f64().unwrap();
        let rate = row["exponentPerSample"].as_f64().unwrap();
        let recomputed = (prefactor.ln() - 25.0 * rate).exp().min(1.0);
        assert!((value - recomputed).abs() <= 1e-12, "{row}");
    }
}

#[test]
fn plan_reproduces_the_closed_form_inversion() {
    // Rank-one chain (beta = 0) with stationary (1/11, 10/11) and
    // observable (1, -0.1): variance exactly 0.1, so the Bernstein beta
    // plan for gamma = 0.1, epsilon = 0.01 is ceil(80 ln 100) = 369.
    let dir = tempfile::tempdir().unwrap();
    let chain = write(
        dir.path(),
        "rank1.json",
        r#"{ "states": 2, "matrix": [
            [0.09090909090909091, 0.09090909090909091],
            [0.90909090909090909, 0.90909090909090909]] }"#,
    );
    let f = write(dir.path(), "f.json", "[1.0, -0.1]");
    let out = run(&[
        "plan",
        "--chain",
        chain.to_str().unwrap(),
        "--function",
        f.to_str().unwrap(),
        "--gamma",
        "0.1",
        "--epsilon",
        "0.01",
        "--json",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let bernstein = report["plans"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["family"] == "bernstein-beta")
        .unwrap();
    assert_eq!(bernstein["n"], 369, "{report}");
    assert_eq!(report["sanity"]["ok"], true);
}

#[test]
fn plan_on_bipartite_chain_reports_infeasible_beta_families() {
    let fx = fixture();
    let dir = tempfile::tempdir().unwrap();
    let alternating = write(dir.path(), "alt.json", "[1.0, -1.0, 1.0, -1.0]");
    let out = run(&[
        "plan",
        "--chain",
        fx.cycle4.to_str().unwrap(),
        "--function",
        alternating.to_str().unwrap(),
        "--normalize",
        "--gamma",
        "0.2",
        "--epsilon",
        "0.5",
        "--json",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let plans = report["plans"].as_array().unwrap();
    let beta = plans.iter().find(|p| p["family"] == "bernstein-beta").unwrap();
    assert!(beta["error"].as_str().unwrap().contains("no sample size"));
    let alpha = plans
        .iter()
        .find(|p| p["family"] == "bernstein-alpha")
        .unwrap();
    assert!(alpha["n"].is_u64());
}

#[test]
fn plan_rejects_epsilon_outside_unit_interval() {
    let fx = fixture();
    let out = run(&[
        "plan",
        "--chain",
        fx.coin.to_str().unwrap(),
        "--function",
        fx.sign.to_str().unwrap(),
        "--gamma",
        "0.1",
        "--epsilon",
        "1.5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("epsilon"));
}

#[test]
fn oracle_exact_tail_and_zero_tilt_mgf() {
    let fx = fixture();
    let tail = run(&[
        "oracle",
        "--chain",
        fx.coin.to_str().unwrap(),
        "--function",
        fx.sign.to_str().unwrap(),
        "--mode",
        "tail",
        "--gamma",
        "0.0001",
        "--n",
        "2",
        "--json",
    ]);
    assert!(tail.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&tail)).unwrap();
    assert!((report["value"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert_eq!(report["mode"], "enumeration");

    let mgf = run(&[
        "oracle",
        "--chain",
        fx.coin.to_str().unwrap(),
        "--function",
        fx.sign.to_str().unwrap(),
        "--mode",
        "mgf",
        "--r",
        "0",
        "--n",
        "7",
        "--json",
    ]);
    assert!(mgf.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&mgf)).unwrap();
    assert!((report["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn oracle_over_budget_suggests_the_lattice_mode() {
    let dir = tempfile::tempdir().unwrap();
    let edges: Vec<String> = (0..10)
        .map(|k| format!("[{},{},1.0]", k, (k + 1) % 10))
        .collect();
    let chain = write(
        dir.path(),
        "ring10.json",
        &format!(r#"{{ "states": 10, "edges": [{}] }}"#, edges.join(",")),
    );
    // Dyadic values admit a lattice embedding.
    let f = write(
        dir.path(),
        "f10.json",
        "[0.25, -0.5, 0.75, -0.25, 0.5, -0.75, 1.0, -1.0, 0.25, -0.25]",
    );
    let out = run(&[
        "oracle",
        "--chain",
        chain.to_str().unwrap(),
        "--function",
        f.to_str().unwrap(),
        "--mode",
        "tail",
        "--tail-mode",
        "enumeration",
        "--gamma",
        "0.1",
        "--n",
        "30",
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("budget"), "{err}");
    assert!(err.contains("lattice-dp"), "{err}");

    // The auto mode falls back to the lattice recursion and succeeds.
    let auto = run(&[
        "oracle",
        "--chain",
        chain.to_str().unwrap(),
        "--function",
        f.to_str().unwrap(),
        "--mode",
        "tail",
        "--gamma",
        "0.1",
        "--n",
        "30",
        "--json",
    ]);
    assert!(auto.status.success(), "{}", stderr(&auto));
    let report: serde_json::Value = serde_json::from_str(&stdout(&auto)).unwrap();
    assert_eq!(report["mode"], "lattice-dp");
}

#[test]
fn simulate_is_reproducible_and_calibrated() {
    let fx = fixture();
    let args = [
        "simulate",
        "--chain",
        fx.coin.to_str().unwrap(),
        "--function",
        fx.sign.to_str().unwrap(),
        "--gamma",
        "0.0",
        "--n",
        "2",
        "--trials",
        "20000",
        "--seed",
        "42",
        "--json",
    ];
    let first = run(&args);
    let second = run(&args);
    assert!(first.status.success());
    assert_eq!(stdout(&first), stdout(&second), "same seed, same bytes");
    let report: serde_json::Value = serde_json::from_str(&stdout(&first)).unwrap();
    let low = report["ciLow"].as_f64().unwrap();
    let high = report["ciHigh"].as_f64().unwrap();
    assert!(low <= 0.25 && 0.25 <= high, "{report}");
    assert_eq!(report["seed"], 42);
}

#[test]
fn verify_quick_suite_passes() {
    let out = run(&["verify", "--quick", "--json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let mut checks = 0;
    for line in text.lines() {
        let entry: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(entry["pass"], true, "{line}");
        checks += 1;
    }
    assert_eq!(checks, 10);
}

#[test]
fn verify_single_chain_file() {
    let fx = fixture();
    let out = run(&[
        "verify",
        "--chain",
        fx.k4.to_str().unwrap(),
        "--quick",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("dominance"));
}
