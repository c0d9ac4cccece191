use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn edgepart(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edgepart"))
        .args(args)
        .env("EDGEPART_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn partition_writes_blocks_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let part = dir.path().join("grid.part");
    let out = edgepart(&["partition", "grid:6x6", "--k", "4", "--seed", "3", "--pes", "3", "--out", path(&part)]);
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["feasible"], true);
    assert!(report["message_bytes"].as_u64().unwrap() > 0);
    let blocks: Vec<usize> = fs::read_to_string(&part)
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(blocks.len(), 60);
    assert!(blocks.iter().all(|&b| b < 4));
}

#[test]
fn partition_is_reproducible() {
    let run = |alg: &str| {
        let out = edgepart(&["partition", "er:80:0.08@2", "--k", "4", "--algorithm", alg]);
        let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        v["vertex_cut"].clone()
    };
    for alg in ["dspac-lp", "random", "greedy", "greedy-degree", "jabeja-vc"] {
        assert_eq!(run(alg), run(alg), "{alg}");
    }
}

#[test]
fn unknown_algorithm_is_rejected() {
    let out = edgepart(&["partition", "ring:5", "--k", "2", "--algorithm", "metis"]);
    assert!(!out.status.success());
}

#[test]
fn bench_exit_code_follows_keep_going() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"instances": ["ring:12", "/does/not/exist.graph"],
            "algorithms": ["greedy", "random"], "k_values": [2], "repetitions": 3}"#,
    )
    .unwrap();
    let csv = dir.path().join("out.csv");
    let fail = edgepart(&["bench", path(&spec), "--out", path(&csv)]);
    assert!(!fail.status.success());
    let ok = edgepart(&["bench", path(&spec), "--out", path(&csv), "--keep-going"]);
    assert!(ok.status.success());
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    // header, 2 instances x 2 algorithms x 3 seeds, 4 means
    assert_eq!(lines.len(), 1 + 12 + 4);
    assert!(lines.iter().any(|l| l.contains("/does/not/exist.graph") && l.ends_with(")")));
}

#[test]
fn bench_writes_ratios_and_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"instances": ["er:60:0.1@1", "grid:5x8"],
            "algorithms": ["dspac-lp", "random"], "k_values": [2, 4]}"#,
    )
    .unwrap();
    let ratios = dir.path().join("ratios.csv");
    let agg = dir.path().join("agg.csv");
    let out = edgepart(&[
        "bench", path(&spec), "--reps", "2", "--ratios", path(&ratios), "--aggregate", path(&agg),
    ]);
    let rows = stdout(&out);
    assert_eq!(rows.lines().count(), 1 + 2 * 2 * 2 * 2 + 2 * 2 * 2);
    let ratios = fs::read_to_string(&ratios).unwrap();
    assert!(ratios.starts_with("algorithm,instance,k,ratio\n"));
    assert_eq!(ratios.lines().count(), 1 + 2 * 2 * 2);
    let agg = fs::read_to_string(&agg).unwrap();
    assert!(agg.starts_with("algorithm,k,instances,geometric_mean,shifted\n"));
    assert_eq!(agg.lines().count(), 1 + 2 * 2);
}

#[test]
fn scale_keeps_cut_across_pe_counts() {
    let out = edgepart(&["scale", "grid:12x12", "--pes", "1,2,4,8", "--seed", "5"]);
    let text = stdout(&out);
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r["vertex_cut"] == rows[0]["vertex_cut"]));
    assert_eq!(rows[0]["message_bytes"], "0.0");
    let bad = edgepart(&["scale", "ring:5", "--pes", "4,2"]);
    assert!(!bad.status.success());
}

fn csv_rows(text: &str) -> Vec<std::collections::HashMap<String, String>> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    lines
        .map(|l| {
            header
                .iter()
                .zip(l.split(','))
                .map(|(h, v)| (h.to_string(), v.to_string()))
                .collect()
        })
        .collect()
}

#[test]
fn convert_formats() {
    let hmetis = stdout(&edgepart(&["convert", "star:3", "--to", "hmetis"]));
    assert_eq!(hmetis, "4 3\n1 2 3\n1\n2\n3\n");

    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("p3.graph");
    fs::write(&graph, "3 2\n2\n1 3\n2\n").unwrap();
    let metis = stdout(&edgepart(&["convert", path(&graph), "--to", "metis"]));
    assert_eq!(metis, "3 2\n2\n1 3\n2\n");
    let split = stdout(&edgepart(&["convert", path(&graph), "--to", "split"]));
    let header = split.lines().find(|l| !l.starts_with('%')).unwrap();
    assert!(header.starts_with("4 3"));
    let spmv = stdout(&edgepart(&["convert", path(&graph), "--to", "spmv"]));
    assert!(spmv.starts_with("6 "));
    let edges = stdout(&edgepart(&["convert", path(&graph), "--to", "edge-list"]));
    assert_eq!(edges.lines().filter(|l| !l.starts_with('#')).count(), 2);
}

#[test]
fn oracle_reports_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let witness = dir.path().join("w.part");
    let out = edgepart(&["oracle", "star:4", "--k", "2", "--out", path(&witness)]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["vertex_cut"], 1);
    assert_eq!(fs::read_to_string(&witness).unwrap().lines().count(), 4);
    let too_big = edgepart(&["oracle", "grid:10x10", "--k", "8"]);
    assert!(!too_big.status.success());
}
