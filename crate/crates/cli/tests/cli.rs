use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const NETWORK: &str = r#"{"format":1,"n":5,"K":4,
 "kind":{"explicit":{"solutions":[[0,3],[0,2,4],[1,4]]}},
 "p":[0.5,0.2,0.2,0.1],"v":[0.5,0.3,0.2,0.0],
 "costs":[[5,6,0,5,0],[1,6,4,0,0],[1,6,6,0,0],[2,6,6,0,0]]}"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minwowa")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn file(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data").join(name)
}

#[test]
fn brute_and_bb_solve_the_network_example() {
    let dir = TempDir::new().unwrap();
    let inst = file(&dir, "net.json", NETWORK);
    let sol = dir.path().join("sol.json");
    let out = run(&["solve", "--in", s(&inst), "--method", "brute", "--out", s(&sol)]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "value=6.0 method=brute status=optimal bound=-\n");
    assert_eq!(std::fs::read_to_string(&sol).unwrap(), "{\"format\":1,\"chosen\":[1,4]}\n");
    let out = run(&["solve", "--in", s(&inst), "--method", "bb"]);
    assert!(stdout(&out).starts_with("value=6.0 method=bb status=optimal"));
}

#[test]
fn eval_reports_rank_weights() {
    let dir = TempDir::new().unwrap();
    let inst = file(&dir, "net.json", NETWORK);
    let x1 = file(&dir, "x1.json", "[0,3]");
    let out = run(&["eval", "--in", s(&inst), "--solution", s(&x1)]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "scenario_costs=10.0,1.0,1.0,2.0\nomega=0.8,0.08,0.12,0.0\norder=0,3,1,2\nvalue=8.28\n");
    for (chosen, value) in [("[0,2,4]", "value=6.32"), ("{\"format\":1,\"chosen\":[1,4]}", "value=6.0")] {
        let sol = file(&dir, "x.json", chosen);
        let out = run(&["eval", "--in", s(&inst), "--solution", s(&sol)]);
        assert!(stdout(&out).ends_with(&format!("{value}\n")), "{}", stdout(&out));
    }
    let bad = file(&dir, "bad.json", "[0,1]");
    assert_eq!(run(&["eval", "--in", s(&inst), "--solution", s(&bad)]).status.code(), Some(3));
}

#[test]
fn generate_is_deterministic_and_needs_alpha() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let mut args: Vec<&str> =
            "generate --kind selection --n 20 --q 5 -K 4 --alpha 0.01 --seed 7 --out".split(' ').collect();
        args.push(s(path));
        let out = run(&args);
        assert!(out.status.success());
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["kind"]["selection"]["q"], 5);
    assert_eq!(doc["costs"].as_array().unwrap().len(), 4);

    let out = run(&["generate", "--kind", "selection", "--n", "20", "-K", "4", "--out", s(&a)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn approx_on_uniform_weights_has_unit_guarantee() {
    let dir = TempDir::new().unwrap();
    let inst = file(
        &dir,
        "u.json",
        r#"{"format":1,"n":4,"K":2,"kind":{"selection":{"q":2}},"p":[0.3,0.7],"v":[0.5,0.5],
            "costs":[[1,2,3,4],[4,3,0,1]]}"#,
    );
    let out = run(&["solve", "--in", s(&inst), "--method", "approx"]);
    assert!(out.status.success());
    assert!(stdout(&out).trim_end().ends_with("status=feasible bound=1.0"), "{}", stdout(&out));
}

#[test]
fn export_matches_golden_and_rejects_increasing_weights() {
    let dir = TempDir::new().unwrap();
    let lp = dir.path().join("out.lp");
    let out = run(&["export-mip", "--in", s(&golden("tiny_selection.json")), "--out", s(&lp)]);
    assert!(out.status.success());
    assert_eq!(std::fs::read(&lp).unwrap(), std::fs::read(golden("tiny_selection.lp")).unwrap());

    let rising = file(
        &dir,
        "r.json",
        r#"{"format":1,"n":2,"K":2,"kind":{"selection":{"q":1}},"p":[0.5,0.5],"v":[0.2,0.8],"costs":[[1,2],[3,4]]}"#,
    );
    let out = run(&["export-mip", "--in", s(&rising), "--out", s(&lp)]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nonincreasing"));
}

#[test]
fn malformed_input_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let inst = file(&dir, "bad.json", "{\"format\":1,\"n\":2}");
    assert_eq!(run(&["solve", "--in", s(&inst)]).status.code(), Some(2));
    assert_eq!(run(&["solve", "--in", s(&dir.path().join("missing.json"))]).status.code(), Some(1));
}

fn value_columns(csv: &str) -> Vec<String> {
    csv.lines()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            f[..10].join(",")
        })
        .collect()
}

#[test]
fn bench_writes_one_row_per_instance() {
    let dir = TempDir::new().unwrap();
    let cfg = file(
        &dir,
        "cfg.json",
        r#"{"problems":[{"selection":{"n":10}}],"K":[3],"alpha":[0.01],"instances":1,"seed":5}"#,
    );
    let mut runs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let csv = dir.path().join(name);
        let summary = dir.path().join(format!("summary_{name}"));
        let out =
            run(&["bench", "--config", s(&cfg), "--out-csv", s(&csv), "--summary-csv", s(&summary), "--jobs", "2"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).contains("cell kind=selection size=10 K=3"));
        let text = std::fs::read_to_string(&csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[0],
            "kind,size,K,alpha,instance,seed,exact_value,exact_status,approx_value,deviation_pct,exact_ms,approx_ms"
        );
        assert!(lines[1].contains(",optimal,"));
        assert_eq!(std::fs::read_to_string(&summary).unwrap().lines().count(), 2);
        runs.push(value_columns(&text));
    }
    assert_eq!(runs[0], runs[1]);
}
