use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cdqp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdqp"))
        .args(args)
        .output()
        .unwrap()
}

fn example() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data/example4.qp")
        .display()
        .to_string()
}

fn s(p: &Path) -> String {
    p.display().to_string()
}

fn offline_cache(dir: &Path) -> PathBuf {
    let cache = dir.join("c.cache");
    let out = cdqp(&["offline", &example(), "--out", &s(&cache)]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    cache
}

#[test]
fn offline_then_check_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cache = offline_cache(dir.path());
    let out = cdqp(&["check", &example(), &s(&cache), "--scale", "3.7"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("pass"));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(cdqp(&[]).status.code(), Some(1));
    assert_eq!(cdqp(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        cdqp(&["bench", &example(), "--runs", "0"]).status.code(),
        Some(1)
    );
    assert_eq!(
        cdqp(&["bench", &example(), "--backend", "lu"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        cdqp(&["trace", &example(), "--init", "standard:-1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        cdqp(&["trace", &example(), "--x0", "1,2"]).status.code(),
        Some(1)
    );
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cdqp(&["bench", "/no/such/file.qp"]).status.code(), Some(2));
    let bad = dir.path().join("bad.qp");
    std::fs::write(&bad, "n 2\nm 1\nP\n1 0\n0 x\n").unwrap();
    let out = cdqp(&["offline", &s(&bad), "--out", &s(&dir.path().join("c"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 5"));
    // unwritable output path
    let out = cdqp(&["offline", &example(), "--out", "/no/such/dir/c.cache"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn stale_cache_is_a_solver_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cache = offline_cache(dir.path());
    // same cache, different sigma: fingerprint no longer matches
    let out = cdqp(&[
        "trace",
        &example(),
        "--cache",
        &s(&cache),
        "--sigma",
        "1e-3",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn rank_deficient_offline_warns() {
    let dir = tempfile::tempdir().unwrap();
    let prob = dir.path().join("rd.qp");
    std::fs::write(
        &prob,
        "n 3\nm 1\nP\n2 0 0\n0 1 0\n0 0 3\nq\n1 1 1\nA\n1 1 1\nl\n-1\nu\n1\n",
    )
    .unwrap();
    let cache = dir.path().join("rd.cache");
    let out = cdqp(&["offline", &s(&prob), "--out", &s(&cache)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("scale-fragile"));
    assert!(String::from_utf8_lossy(&out.stdout).contains("strategy fallback"));
    // the fallback cache still drives a solve through polishing
    let out = cdqp(&["bench", &s(&prob), "--cache", &s(&cache), "--runs", "5"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn trace_writes_one_row_per_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let out = cdqp(&["trace", &example(), "--max-outer", "3", "--out", &s(&csv)]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,r_prim_2,r_dual_2,scale");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("3,"));
}

#[test]
fn trace_from_a_near_solved_start_is_short() {
    let out = cdqp(&["trace", &example(), "--x0", "-1.0,1.0,-0.5,-0.25"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = String::from_utf8_lossy(&out.stdout).lines().count() - 1;
    let far = cdqp(&["trace", &example(), "--x0", "100,-100,100,-100"]);
    let far_rows = String::from_utf8_lossy(&far.stdout).lines().count() - 1;
    assert!(rows >= 1 && rows <= far_rows, "{rows} vs {far_rows}");
}

#[test]
fn bench_reports_are_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let read = |name: &str, seed: &str| {
        let path = dir.path().join(name);
        let out = cdqp(&[
            "bench",
            &example(),
            "--runs",
            "20",
            "--seed",
            seed,
            "--out",
            &s(&path),
        ]);
        assert_eq!(out.status.code(), Some(0));
        let mut v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        for row in v["rows"].as_array_mut().unwrap() {
            row["mean_t_tot_ms"] = 0.into();
            row["mean_t_inv_ms"] = 0.into();
        }
        v
    };
    let a = read("a.json", "11");
    assert_eq!(a, read("b.json", "11"));
    assert_ne!(a, read("c.json", "12"));
    assert_eq!(a["runs"], 20);
    assert_eq!(a["rows"].as_array().unwrap().len(), 2);
}
