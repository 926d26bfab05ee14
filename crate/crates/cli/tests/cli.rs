//! Drives the `treasure` binary through the whole offline workflow.

use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn treasure(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treasure"))
        .args(args)
        .current_dir(cwd)
        .env_remove("TREASURE_SERVER")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = treasure(args, cwd);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn offline_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    let out = ok(&["gen-corpus", "--out", "corpus", "--pages", "120", "--cluster", "30", "--sample", "8", "--seed", "4"], cwd);
    assert!(out.contains("cluster    30 pages"), "{out}");

    let out = ok(
        &["build-tgraph", "--sample", "corpus/sample", "--targets", "corpus/sample/targets.txt", "--out", "corpus/tgraph.json"],
        cwd,
    );
    assert!(out.contains("2 targets"), "{out}");

    let out = ok(&["crawl", "--config", "corpus/crawl.conf", "--max-pages", "40", "--repository", "run"], cwd);
    assert!(out.contains("pages attempted 40"), "{out}");
    assert!(cwd.join("run/records.jsonl").exists());

    // a populated repository is refused without --resume or --fresh
    let again = treasure(&["crawl", "--config", "corpus/crawl.conf", "--repository", "run"], cwd);
    assert!(!again.status.success());
    assert!(String::from_utf8_lossy(&again.stderr).contains("error:"));
    ok(&["crawl", "--config", "corpus/crawl.conf", "--max-pages", "40", "--repository", "run", "--fresh"], cwd);

    let out = ok(&["metrics", "--repository", "run", "--labels", "corpus/labels.tsv", "--every", "10"], cwd);
    assert!(out.starts_with("strategy"), "{out}");
    let curve = std::fs::read_to_string(cwd.join("run/harvest_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 5);

    let out = ok(
        &[
            "compare", "--config", "corpus/crawl.conf", "--labels", "corpus/labels.tsv", "--out", "cmp", "--max-pages", "40",
            "--strategies", "treasure,breadth-first",
        ],
        cwd,
    );
    assert!(out.contains("treasure") && out.contains("breadth_first"), "{out}");
    let csv = std::fs::read_to_string(cwd.join("cmp/metrics.csv")).unwrap();
    assert!(csv.starts_with("strategy,pages_fetched,relevant_fetched"));

    let json = ok(&["--json", "metrics", "--repository", "cmp/treasure", "--labels", "corpus/labels.tsv", "--no-csv"], cwd);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert!(v["report"]["pages_fetched"].as_u64().unwrap() > 0);
    assert!(v["csv"].is_null());
}

#[test]
fn bad_input_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    std::fs::write(cwd.join("bad.conf"), "seeds = http://a.test/\nnot_a_key = 1\n").unwrap();
    let out = treasure(&["crawl", "--config", "bad.conf"], cwd);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("not_a_key"));
    let out = treasure(&["crawl", "--config", "missing.conf", "--set", "oops"], cwd);
    assert!(!out.status.success());
    let out = treasure(&["build-tgraph", "--sample", ".", "--out", "g.json"], cwd);
    assert!(!out.status.success());
}

#[test]
fn talks_to_a_separate_server() {
    let dir = tempfile::tempdir().unwrap();
    let mut server = Command::new(env!("CARGO_BIN_EXE_treasure"))
        .args(["serve", "--bind", "127.0.0.1:0"])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(server.stderr.take().unwrap()).read_line(&mut line).unwrap();
    let url = line.trim().rsplit(' ').next().unwrap().to_owned();
    assert!(url.starts_with("http://127.0.0.1:"), "{line}");
    let out = treasure(&["--server", &url, "gen-corpus", "--out", "c", "--pages", "60", "--cluster", "10", "--sample", "4"], dir.path());
    server.kill().unwrap();
    server.wait().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("c/manifest.tsv").exists());
}
