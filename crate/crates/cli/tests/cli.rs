use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_commvec");

const SMALL_SPEC: &str = r#"
seed = 11

[block]
users = 300
subs_per_block = 5

[lattice]
team_users = 25
hub_users = 30

[context]
comments = 300
"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(BIN)
        .current_dir(dir)
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "commvec {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn synth(dir: &Path) {
    fs::write(dir.join("spec.toml"), SMALL_SPEC).unwrap();
    run(dir, &["pipeline", "synth", "--spec", "spec.toml", "--out", "data"]);
}

#[test]
fn stage_by_stage_run() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d);

    run(d, &["ingest", "--input", "data/*.ndjson", "--bots", "data/bots.txt", "--out", "st"]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("st/ingest_report.json")).unwrap()).unwrap();
    assert_eq!(report["errors"], 3);
    assert!(report["records"].as_u64().unwrap() > 0);
    assert!(d.join("st/activity.tsv").is_file());

    run(d, &["cooccur", "--memberships", "st/memberships.tsv", "--out", "st/m.bin", "--report", "st/c.json"]);
    run(
        d,
        &[
            "embed", "--matrix", "st/m.bin", "--dim", "8", "--epochs", "15", "--seed", "2", "--out", "st/e.bin",
            "--loss-trace", "st/loss.json",
        ],
    );
    let trace: Vec<f64> = serde_json::from_str(&fs::read_to_string(d.join("st/loss.json")).unwrap()).unwrap();
    assert_eq!(trace.len(), 15);
    assert!(trace[14] < trace[0]);

    let nn = stdout(&run(d, &["query", "--embeddings", "st/e.bin", "nn", "b0_s00", "--k", "3"]));
    assert_eq!(nn.lines().count(), 3);
    assert!(!nn.contains("b0_s00\t"));

    let sim = stdout(&run(d, &["query", "--embeddings", "st/e.bin", "sim", "b0_s00", "b0_s01"]));
    let s: f64 = sim.trim().parse().unwrap();
    assert!((-1.0..=1.0).contains(&s));

    run(
        d,
        &["eval", "--embeddings", "st/e.bin", "--suite", "data/analogy.tsv", "--type", "analogy", "--report", "st/ev.json"],
    );
    let ev: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("st/ev.json")).unwrap()).unwrap();
    assert_eq!(ev["total"], 12);
}

#[test]
fn classify_with_baseline_and_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d);

    run(d, &["classify", "--corpus", "data/corpus.csv", "--channel", "none", "--seed", "1", "--report", "base.json"]);
    run(
        d,
        &[
            "classify", "--corpus", "data/corpus.csv", "--channel", "name", "--seed", "1", "--baseline", "base.json",
            "--report", "name.json",
        ],
    );
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("name.json")).unwrap()).unwrap();
    assert_eq!(r["channel"], "name");
    assert_eq!(r["flips"]["baseline"], "none");
    assert_eq!(r["predictions"].as_array().unwrap().len(), 300);

    let sweep = stdout(&run(
        d,
        &["classify", "--corpus", "data/corpus.csv", "--channel", "name", "--l2-sweep", "1,0.001"],
    ));
    let rows: Vec<serde_json::Value> = serde_json::from_str(&sweep).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1]["l2"], 0.001);
}

#[test]
fn neighborhood_without_embeddings_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d);
    let out = Command::new(BIN)
        .current_dir(d)
        .args(["classify", "--corpus", "data/corpus.csv", "--channel", "neighborhood"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--embeddings"));
}

#[test]
fn pipeline_run_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d);
    // keep the run short
    let cfg = fs::read_to_string(d.join("data/pipeline.toml")).unwrap();
    let cfg = cfg.replace("[embed]\n", "[embed]\ndim = 8\nepochs = 10\n");
    fs::write(d.join("data/pipeline.toml"), cfg).unwrap();

    let a = stdout(&run(d, &["pipeline", "run", "--config", "data/pipeline.toml", "--out-dir", "a"]));
    let b = stdout(&run(d, &["pipeline", "run", "--config", "data/pipeline.toml", "--out-dir", "b"]));
    assert_eq!(a.lines().count(), 5);
    assert_eq!(a, b);
    assert!(d.join("a/manifest.json").is_file());
    assert!(d.join("a/config.resolved.toml").is_file());

    // a different seed changes the trained artifacts
    let c = stdout(&run(
        d,
        &["pipeline", "run", "--config", "data/pipeline.toml", "--out-dir", "c", "--seed", "99"],
    ));
    assert_ne!(a, c);
}

#[test]
fn bad_arguments_fail_cleanly() {
    let out = Command::new(BIN).args(["eval", "--embeddings", "x", "--suite", "y", "--type", "bogus"]).output().unwrap();
    assert!(!out.status.success());
    let out = Command::new(BIN).args(["query", "--embeddings", "/nonexistent", "nn", "a"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}
