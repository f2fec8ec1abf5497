use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn netr0(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netr0"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = netr0(dir, args);
    assert!(
        out.status.success(),
        "netr0 {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    netr0(dir, args).status.code().expect("exit code")
}

/// A small corpus shared by the tests that only read it.
fn corpus() -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["generate", "--per-family", "8", "--out", "d.csv"]);
    let path = dir.path().join("d.csv");
    (dir, path)
}

fn data_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(String::from)
        .collect()
}

#[test]
fn generate_writes_header_provenance_and_rows() {
    let (dir, path) = corpus();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# netr0 generate"));
    assert!(text.contains("# config-sha256 "));
    assert!(text.contains("# seed 2020"));
    let rows = data_lines(&path);
    assert_eq!(rows[0], "avgdeg,spl,cc,den,dia,maxdeg,r0,family,seed,n");
    assert_eq!(rows.len(), 1 + 40);
    for fam in ["ER", "WS", "SF", "BA", "SBM"] {
        assert_eq!(rows.iter().filter(|r| r.contains(&format!(",{fam},"))).count(), 8);
    }
    drop(dir);
}

#[test]
fn generate_is_byte_identical_on_rerun() {
    let dir = TempDir::new().unwrap();
    let args = |out: &'static str| ["generate", "--per-family", "3", "--seed", "11", "--out", out];
    ok(dir.path(), &args("a.csv"));
    ok(dir.path(), &args("b.csv"));
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    ok(dir.path(), &["generate", "--per-family", "3", "--seed", "12", "--out", "c.csv"]);
    assert_ne!(a, std::fs::read(dir.path().join("c.csv")).unwrap());
}

#[test]
fn generate_single_family_and_config_overlay() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        "seed = 5\n[build]\nn = 150\n[build.ws]\ncount = 4\n",
    )
    .unwrap();
    ok(
        dir.path(),
        &["--config", "run.toml", "generate", "--family", "WS", "--out", "ws.csv"],
    );
    let rows = data_lines(&dir.path().join("ws.csv"));
    assert_eq!(rows.len(), 5);
    assert!(rows[1..].iter().all(|r| r.ends_with(",150") && r.contains(",WS,")));
    let text = std::fs::read_to_string(dir.path().join("ws.csv")).unwrap();
    assert!(text.contains("# seed 5"));
}

#[test]
fn bad_inputs_exit_with_code_one() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    assert_eq!(code(p, &["generate", "--family", "XX"]), 1);
    assert_eq!(code(p, &["generate", "--nodes", "20"]), 1);
    assert_eq!(code(p, &["train", "--data", "missing.csv"]), 1);
    assert_eq!(code(p, &["train"]), 1);
    assert_eq!(code(p, &["--config", "missing.toml", "generate"]), 1);
    std::fs::write(p.join("bad.toml"), "[build]\nn = \"many\"\n").unwrap();
    assert_eq!(code(p, &["--config", "bad.toml", "generate"]), 1);
    std::fs::write(p.join("junk.csv"), "a,b\n1,2\n").unwrap();
    assert_eq!(code(p, &["train", "--data", "junk.csv"]), 1);
    // clap usage errors
    assert_eq!(code(p, &["frobnicate"]), 2);
}

#[test]
fn train_predict_report_round_trip() {
    let (dir, _) = corpus();
    let p = dir.path();
    let out = ok(p, &["train", "--data", "d.csv", "--folds", "4", "--out", "m.json"]);
    assert!(out.contains("svr-rbf: 4-fold"));
    assert_eq!(out.lines().filter(|l| l.trim_start().starts_with("fold")).count(), 4);
    let model: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p.join("m.json")).unwrap()).unwrap();
    assert_eq!(model["provenance"]["seed"], "2020");
    assert_eq!(model["feature_names"].as_array().unwrap().len(), 6);

    let pred = ok(p, &["predict", "--model", "m.json", "--features", "20,2,0.1,0.1,4,40"]);
    let r0: f64 = pred
        .lines()
        .find_map(|l| l.strip_prefix("predicted R0 "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(r0.is_finite());
    assert!(pred.contains("herd immunity threshold"));
    assert_eq!(code(p, &["predict", "--model", "m.json", "--features", "1,2,3"]), 1);
    assert_eq!(code(p, &["predict", "--model", "m.json", "--features", "1,2,x,4,5,6"]), 1);

    let rep = ok(p, &["report", "--model", "m.json", "--data", "d.csv", "--subset", "15"]);
    assert!(rep.contains("mse ") && rep.contains("r2 "));
    let rows = data_lines(&p.join("report.csv"));
    assert_eq!(rows[0], "family,seed,true_r0,predicted_r0,residual");
    assert_eq!(rows.len(), 16);
    for row in &rows[1..] {
        let f: Vec<f64> = row.split(',').skip(2).map(|v| v.parse().unwrap()).collect();
        assert!((f[1] - f[0] - f[2]).abs() < 1e-9);
    }
    assert_eq!(code(p, &["report", "--model", "m.json", "--data", "d.csv", "--subset", "41"]), 1);
}

#[test]
fn training_is_reproducible() {
    let (dir, _) = corpus();
    let p = dir.path();
    for (model, out) in [("linear", "a.json"), ("linear", "b.json"), ("ann", "c.json"), ("ann", "d.json")] {
        ok(p, &["train", "--data", "d.csv", "--model", model, "--folds", "5", "--epochs", "200", "--out", out]);
    }
    let read = |f: &str| std::fs::read(p.join(f)).unwrap();
    assert_eq!(read("a.json"), read("b.json"));
    assert_eq!(read("c.json"), read("d.json"));
}

#[test]
fn hidden_width_above_the_bound_is_rejected() {
    let (dir, _) = corpus();
    let p = dir.path();
    // 40 rows, 10 folds: 36 training rows, bound floor(36 / 14) = 2
    let out = netr0(p, &["train", "--data", "d.csv", "--model", "ann", "--hidden", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bound"));
    ok(p, &["train", "--data", "d.csv", "--model", "ann", "--hidden", "2", "--epochs", "50"]);
    let capped = ok(p, &["train", "--data", "d.csv", "--model", "ann", "--epochs", "50"]);
    assert!(capped.contains("capped at 2"));
}

#[test]
fn rank_writes_table_csv_and_selection() {
    let (dir, _) = corpus();
    let p = dir.path();
    let out = ok(p, &["rank", "--data", "d.csv", "--select", "4", "--projected", "top4.csv"]);
    assert!(out.contains("components used"));
    let rows = data_lines(&p.join("ranking.csv"));
    assert_eq!(rows[0], "feature,raw_index,normalized_index,rank");
    assert_eq!(rows.len(), 7);
    let mut ranks: Vec<usize> = rows[1..].iter().map(|r| r.rsplit(',').next().unwrap().parse().unwrap()).collect();
    ranks.sort();
    assert_eq!(ranks, vec![1, 2, 3, 4, 5, 6]);
    let norm: Vec<f64> = rows[1..].iter().map(|r| r.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert!(norm.contains(&1.0) && norm.contains(&0.0));

    let top: Vec<&str> = {
        let mut by_rank: Vec<(usize, &str)> = rows[1..]
            .iter()
            .map(|r| (r.rsplit(',').next().unwrap().parse().unwrap(), r.split(',').next().unwrap()))
            .collect();
        by_rank.sort();
        by_rank.into_iter().take(4).map(|(_, f)| f).collect()
    };
    let selected = data_lines(&p.join("top4.csv"));
    assert_eq!(selected[0], format!("{},r0,family,seed,n", top.join(",")));
    assert_eq!(selected.len(), 41);

    // a model trained on the reduced columns predicts from an edge list
    ok(p, &["train", "--data", "top4.csv", "--model", "linear", "--folds", "3", "--out", "m4.json"]);
    let edges: String = (0..30).map(|i| format!("{i} {}\n{i} {}\n", (i + 1) % 30, (i + 7) % 30)).collect();
    std::fs::write(p.join("g.txt"), edges).unwrap();
    let pred = ok(p, &["predict", "--model", "m4.json", "--edges", "g.txt"]);
    assert!(pred.contains("30 nodes, 60 edges"));
    assert_eq!(pred.lines().find(|l| l.starts_with("features")).unwrap().split(' ').count(), 5);
}

#[test]
fn ranking_options_change_the_output() {
    let (dir, _) = corpus();
    let p = dir.path();
    ok(p, &["rank", "--data", "d.csv", "--out", "a.csv"]);
    ok(p, &["rank", "--data", "d.csv", "--scaling", "standardize", "--out", "b.csv"]);
    ok(p, &["rank", "--data", "d.csv", "--axis", "feature", "--out", "c.csv"]);
    let a = data_lines(&p.join("a.csv"));
    let b = data_lines(&p.join("b.csv"));
    let c = data_lines(&p.join("c.csv"));
    assert_ne!(a, b);
    assert_eq!(a.len(), c.len());
    assert_eq!(code(p, &["rank", "--data", "d.csv", "--energy", "1.5"]), 1);
    assert_eq!(code(p, &["rank", "--data", "d.csv", "--select", "7"]), 1);
}

#[test]
fn predict_with_simulation_reports_both_values() {
    let (dir, _) = corpus();
    let p = dir.path();
    ok(p, &["train", "--data", "d.csv", "--model", "linear", "--folds", "3", "--out", "m.json"]);
    // dense circulant graph: every node linked to its 20 nearest neighbours on each side
    let n = 200;
    let edges: String = (0..n)
        .flat_map(|i| (1..=20).map(move |d| format!("{i} {}\n", (i + d) % n)))
        .collect();
    std::fs::write(p.join("ring.txt"), edges).unwrap();
    let out = ok(p, &["predict", "--model", "m.json", "--edges", "ring.txt", "--simulate", "--out", "p.txt"]);
    assert!(out.contains("predicted R0") && out.contains("simulated R0"));
    let saved = std::fs::read_to_string(p.join("p.txt")).unwrap();
    assert!(saved.starts_with("# netr0 predict"));
    assert_eq!(code(p, &["predict", "--model", "m.json", "--edges", "nope.txt"]), 1);
}
