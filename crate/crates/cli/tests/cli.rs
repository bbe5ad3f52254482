use std::path::Path;
use std::process::{Command, Output};

fn tspcut(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tspcut"))
        .args(args)
        .env_remove("TSPCUT_INSTANCE_DIR")
        .env_remove("TSPCUT_INSTANCE")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    csv::Reader::from_reader(text.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn complexity_rows_match_published_counts() {
    let text = stdout(&tspcut(&["complexity", "--sizes", "10,13,25"]));
    assert!(text.starts_with(
        "n,var_no_caf,var_caf,var_reduction_pct,constr_cilp,constr_cpa_no_caf,constr_cpa_caf,constr_reduction_pct\n"
    ));
    let rows = csv_rows(&text);
    assert_eq!(rows[0][..4], ["10", "90", "64", "29"]);
    assert_eq!(rows[1][0], "13");
    assert_eq!(rows[1][7], "100");
    assert_eq!(rows[2][4], "--");
    assert_eq!(rows[2][7], "--");
}

#[test]
fn complexity_check_passes_and_json_parses() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let out = tspcut(&[
        "complexity",
        "--sizes",
        "5-9",
        "--format",
        "json",
        "--check",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["rows"][4]["constr_cpa_caf"], 24);
    assert_eq!(v["rows"][4]["constr_reduction_pct"], 95);
}

#[test]
fn export_is_stable_and_reports_arc_count() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    for p in [&a, &b] {
        stdout(&tspcut(&[
            "export-qubo",
            "--n",
            "5",
            "--variant",
            "cpa-caf",
            "--output",
            p.to_str().unwrap(),
        ]));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert!(text.contains("# variables 18 arcs 18 slacks 0"), "{}", &text[..200]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn export_beyond_instance_is_out_of_range() {
    let out = tspcut(&["export-qubo", "--n", "60"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("outside the allowed range"));
}

#[test]
fn exact_solve_reproduces_optimum_and_checks() {
    let out = tspcut(&["solve", "--sizes", "15", "--variant", "cpa,cpa-caf", "--check"]);
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert_eq!(r[2], "exact");
        assert_eq!(r[3], "1");
        assert_eq!(r[4], "4967.30");
        assert_eq!(r[15], "0.00");
        assert_eq!(r[16], "100.00");
    }
}

#[test]
fn failing_rows_become_dashes() {
    let text = stdout(&tspcut(&["solve", "--sizes", "5,23", "--variant", "cilp"]));
    let rows = csv_rows(&text);
    assert_eq!(rows[0][4], "2314.55");
    assert_eq!(rows[1][0], "23");
    assert!(rows[1][4..17].iter().all(|c| c == "--"), "{:?}", rows[1]);
}

#[test]
fn seeded_json_output_is_reproducible() {
    let args = [
        "solve",
        "--sizes",
        "5",
        "--backend",
        "anneal",
        "--runs",
        "2",
        "--sweeps",
        "300",
        "--seed",
        "11",
        "--format",
        "json",
        "--no-wall-clock",
    ];
    let a = stdout(&tspcut(&args));
    assert_eq!(a, stdout(&tspcut(&args)));
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["runs"].as_array().unwrap().len(), 2);
    assert_eq!(v["runs"][1]["seed"], 12);
    assert_eq!(v["runs"][0]["trace"]["backend"], "anneal");
    assert_eq!(v["rows"][0]["time_avg"], 0.0);
}

#[test]
fn weak_annealing_fails_the_check() {
    let out = tspcut(&[
        "solve",
        "--sizes",
        "7",
        "--backend",
        "anneal",
        "--sweeps",
        "1",
        "--check",
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("optimal"));
}

fn write_square(dir: &Path) {
    let text = "NAME : square\nTYPE : TSP\nDIMENSION : 4\nEDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n\
                1 0 0\n2 0 10\n3 10 10\n4 10 0\nEOF\n";
    std::fs::write(dir.join("square.tsp"), text).unwrap();
}

#[test]
fn instance_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    write_square(dir.path());
    let out = Command::new(env!("CARGO_BIN_EXE_tspcut"))
        .args(["solve", "--instance", "square.tsp", "--sizes", "4", "--variant", "cpa"])
        .env("TSPCUT_INSTANCE_DIR", dir.path())
        .env_remove("TSPCUT_INSTANCE")
        .output()
        .unwrap();
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows[0][4], "40.00");
    assert_eq!(rows[0][15], "0.00");
}

#[test]
fn check_needs_berlin52() {
    let dir = tempfile::tempdir().unwrap();
    write_square(dir.path());
    let path = dir.path().join("square.tsp");
    let out = tspcut(&[
        "complexity",
        "--instance",
        path.to_str().unwrap(),
        "--sizes",
        "4",
        "--check",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("berlin52"));
}
