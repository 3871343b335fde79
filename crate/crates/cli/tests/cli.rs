use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn isocone(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isocone"))
        .args(args)
        .env_remove("ISOCONE_SEED")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn solve_pools_a_reversed_chain() {
    let dir = tempfile::tempdir().unwrap();
    let order = write(dir.path(), "p.json", r#"{"grid": [2]}"#);
    let values = write(dir.path(), "v.csv", "2\n1\n");
    let out = isocone(&["solve", "--preorder", s(&order), "--values", s(&values)]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "1.5\n1.5\n");
    let diag: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(diag["objective"], 0.5);
}

#[test]
fn solve_output_is_a_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    let order = write(
        dir.path(),
        "p.json",
        r#"{"elements": ["a", "b", "c", "d"], "edges": [["a", "b"], ["a", "c"], ["b", "d"], ["c", "d"]]}"#,
    );
    let values = write(dir.path(), "v.csv", "value\n0.7\n-0.2\n0.4\n0.1\n");
    let weights = write(dir.path(), "w.csv", "1\n2\n0.5\n3\n");
    let first = isocone(&[
        "solve",
        "--preorder",
        s(&order),
        "--values",
        s(&values),
        "--weights",
        s(&weights),
    ]);
    assert!(first.status.success());
    let fitted = write(dir.path(), "f.csv", &stdout(&first));
    let second = isocone(&[
        "solve",
        "--preorder",
        s(&order),
        "--values",
        s(&fitted),
        "--weights",
        s(&weights),
    ]);
    assert_eq!(stdout(&first), stdout(&second));
}

#[test]
fn antitonic_flag_reverses_direction() {
    let dir = tempfile::tempdir().unwrap();
    let order = write(dir.path(), "p.json", r#"{"grid": [3]}"#);
    let values = write(dir.path(), "v.csv", "1\n2\n3\n");
    let out = isocone(&[
        "solve",
        "--preorder",
        s(&order),
        "--values",
        s(&values),
        "--antitonic",
    ]);
    assert_eq!(stdout(&out), "2\n2\n2\n");
}

#[test]
fn partition_of_a_two_level_chain() {
    let dir = tempfile::tempdir().unwrap();
    let order = write(dir.path(), "p.json", r#"{"grid": [4]}"#);
    let g0 = write(dir.path(), "g.csv", "0\n0\n1\n1\n");
    let out = isocone(&["partition", "--preorder", s(&order), "--reference", s(&g0)]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["sets"].as_array().unwrap().len(), 2);
    assert_eq!(v["epsilon_tilde"], 1.0);
    assert_eq!(v["truncated"], false);

    let out = isocone(&[
        "partition",
        "--preorder",
        s(&order),
        "--reference",
        s(&g0),
        "--truncate",
        "1",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["truncated"], true);
    assert_eq!(v["sets"].as_array().unwrap().len(), 1);
}

#[test]
fn fit_pmf_and_fit_reg() {
    let dir = tempfile::tempdir().unwrap();
    let order = write(dir.path(), "p.json", r#"{"grid": [3]}"#);
    let draws = write(dir.path(), "d.csv", "0\n1\n1\n2\n");
    let out = isocone(&["fit-pmf", "--preorder", s(&order), "--draws", s(&draws)]);
    assert!(out.status.success());
    assert_eq!(
        stdout(&out),
        "basic,isotonized\n0.25,0.375\n0.5,0.375\n0.25,0.25\n"
    );

    let pairs = write(dir.path(), "r.csv", "index,response\n0,1\n1,0\n2,2\n2,4\n");
    let out = isocone(&["fit-reg", "--preorder", s(&order), "--pairs", s(&pairs)]);
    assert!(out.status.success());
    assert_eq!(
        stdout(&out),
        "basic,weight,isotonized\n1,0.25,0.5\n0,0.25,0.5\n3,0.5,3\n"
    );
}

#[test]
fn simulate_is_reproducible_and_honours_env_seed() {
    let dir = tempfile::tempdir().unwrap();
    let order = write(dir.path(), "p.json", r#"{"grid": [4]}"#);
    let p = write(dir.path(), "p.csv", "0.3\n0.3\n0.2\n0.2\n");
    let base = [
        "simulate",
        "--scenario",
        "pmf",
        "--preorder",
        s(&order),
        "--g0",
        s(&p),
        "--n",
        "500",
        "--reps",
        "50",
    ];
    let mut with_seed = base.to_vec();
    with_seed.extend(["--seed", "9"]);
    let a = isocone(&with_seed);
    let b = isocone(&with_seed);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);

    let env = Command::new(env!("CARGO_BIN_EXE_isocone"))
        .args(base)
        .env("ISOCONE_SEED", "9")
        .output()
        .unwrap();
    assert_eq!(a.stdout, env.stdout);
    let report: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report["seed"], 9);

    let out_dir = dir.path().join("sim");
    let mut with_out = with_seed.clone();
    with_out.extend(["--out", s(&out_dir), "--threads", "1"]);
    let c = isocone(&with_out);
    assert_eq!(a.stdout, c.stdout);
    for f in [
        "mcreport.json",
        "raw_draws.csv",
        "finite_draws.csv",
        "limit_draws.csv",
    ] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
}

#[test]
fn experiment_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"name": "small", "scenario": "figure1", "n": [50, 300], "replicates": 20, "seed": 4}"#,
    );
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let o = isocone(&["experiment", "--config", s(&cfg), "--out", s(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["distances_n50.csv", "distances_n300.csv", "summary.json"] {
        assert_eq!(
            fs::read(out_a.join(f)).unwrap(),
            fs::read(out_b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn errors_use_exit_codes_and_json() {
    let out = isocone(&["solve"]);
    assert_eq!(out.status.code(), Some(2));
    let out = isocone(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let order = write(dir.path(), "p.json", r#"{"grid": [3]}"#);
    let values = write(dir.path(), "v.csv", "1\n2\n");
    let out = isocone(&["solve", "--preorder", s(&order), "--values", s(&values)]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["kind"], "validation");

    let bad = write(dir.path(), "bad.json", r#"{"elements": ["a", "a"]}"#);
    let out = isocone(&["solve", "--preorder", s(&bad), "--values", s(&values)]);
    assert_eq!(out.status.code(), Some(1));
}
