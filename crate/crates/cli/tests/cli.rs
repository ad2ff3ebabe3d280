use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kgrat_gateway::mock::MockServer;

const SUN: &str = "the Sun\temits\tfull-spectrum light\nfull-spectrum light\tintegrates into\twhite light\n";

fn kgrat(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgrat"))
        .args(args)
        .current_dir(dir)
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn workdir() -> (tempfile::TempDir, PathBuf) {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().to_path_buf();
    std::fs::write(p.join("sun.tsv"), SUN).unwrap();
    std::fs::write(
        p.join("qa.jsonl"),
        "{\"id\":\"sun\",\"instruction\":\"Answer.\",\"question\":\"What is the true color of the Sun?\",\"answer\":\"white light\"}\n",
    )
    .unwrap();
    (d, p)
}

fn manifest(dir: &Path, cmd: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{cmd}.manifest.json"))).unwrap()).unwrap()
}

#[test]
fn ingest_prints_counts_and_writes_snapshot() {
    let (_d, p) = workdir();
    let o = kgrat(&["ingest", "--graph", "sun.tsv", "--out", "o"], &p);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "3 entities, 2 relations, 2 triples");
    let m = manifest(&p.join("o"), "ingest");
    assert_eq!(m["results"]["triples"], 2);
    assert!(m["inputs"]["sun.tsv"].as_str().unwrap().len() == 64);
    assert!(m["outputs"]["graph.json"].is_string());

    let again = kgrat(&["ingest", "--graph", "o/graph.json", "--out", "o2"], &p);
    assert_eq!(stdout(&again), stdout(&o));
}

#[test]
fn empty_graph_has_zero_counts() {
    let (_d, p) = workdir();
    std::fs::write(p.join("empty.tsv"), "").unwrap();
    let o = kgrat(&["ingest", "--graph", "empty.tsv"], &p);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "0 entities, 0 relations, 0 triples");
}

#[test]
fn malformed_line_exits_two_and_names_it() {
    let (_d, p) = workdir();
    let mut text = SUN.repeat(3);
    text.push_str("only one field\n");
    std::fs::write(p.join("bad.tsv"), text).unwrap();
    let o = kgrat(&["ingest", "--graph", "bad.tsv"], &p);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 7"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_two() {
    let (_d, p) = workdir();
    assert_eq!(kgrat(&["frobnicate"], &p).status.code(), Some(2));
    assert_eq!(kgrat(&["ingest"], &p).status.code(), Some(2));
    assert_eq!(kgrat(&["ingest", "--graph", "missing.tsv"], &p).status.code(), Some(2));
    assert_eq!(kgrat(&["paths", "--graph", "sun.tsv"], &p).status.code(), Some(2));
    std::fs::write(p.join("bad.toml"), "[search]\nmax_paths = \"many\"\n").unwrap();
    assert_eq!(kgrat(&["ingest", "--graph", "sun.tsv", "--config", "bad.toml"], &p).status.code(), Some(2));
}

fn paths_json(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("paths.json")).unwrap()).unwrap()
}

#[test]
fn paths_finds_the_sun_path() {
    let (_d, p) = workdir();
    let q = ["paths", "--graph", "sun.tsv", "--question", "What is the true color of the Sun?", "--answer", "white light"];
    let o = kgrat(&[&q[..], &["--out", "lm"]].concat(), &p);
    assert!(o.status.success(), "{}", stderr(&o));
    let lm = paths_json(&p.join("lm"));
    assert_eq!(lm[0]["status"], "ok");
    assert_eq!(lm[0]["report"]["paths"][0]["cost"], 2);

    let z = kgrat(&[&q[..], &["--out", "z", "--zero-heuristic"]].concat(), &p);
    assert!(z.status.success());
    let z = paths_json(&p.join("z"));
    assert_eq!(z[0]["report"]["paths"], lm[0]["report"]["paths"]);
    assert!(z[0]["report"]["nodes_expanded"].as_u64() >= lm[0]["report"]["nodes_expanded"].as_u64());
}

#[test]
fn unknown_label_is_unmatched() {
    let (_d, p) = workdir();
    let o = kgrat(&["paths", "--graph", "sun.tsv", "--question", "What about Mars?", "--answer", "red"], &p);
    assert!(o.status.success());
    let v = paths_json(&p.join("kgrat-out"));
    assert_eq!(v[0]["status"], "unmatched");
    assert_eq!(v[0]["entities_q"].as_array().unwrap().len(), 0);
}

#[test]
fn synth_offline_is_byte_stable() {
    let (_d, p) = workdir();
    for out in ["a", "b"] {
        let o = kgrat(&["synth", "--graph", "sun.tsv", "--qa", "qa.jsonl", "--out", out], &p);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let a = std::fs::read(p.join("a/dataset.jsonl")).unwrap();
    assert_eq!(a, std::fs::read(p.join("b/dataset.jsonl")).unwrap());
    assert!(String::from_utf8(a).unwrap().contains("\"backend\":\"offline\""));
    let m = manifest(&p.join("a"), "synth");
    assert_eq!(m["outputs"]["dataset.jsonl"], manifest(&p.join("b"), "synth")["outputs"]["dataset.jsonl"]);
}

#[test]
fn synth_http_backend_records_mock_text() {
    let (_d, p) = workdir();
    let mock = MockServer::fixed("The Sun emits full-spectrum light, which integrates into white light.").unwrap();
    std::fs::write(
        p.join("http.toml"),
        format!("[synth]\nbackend = \"http\"\n[gateway]\nbase_url = \"{}\"\nmodel = \"mock\"\nbackoff_base = 0.01\n", mock.url()),
    )
    .unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_kgrat"))
        .args(["synth", "--graph", "sun.tsv", "--qa", "qa.jsonl", "--config", "http.toml"])
        .current_dir(&p)
        .env("OPENAI_API_KEY", "sk-mock")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(p.join("kgrat-out/dataset.jsonl")).unwrap();
    assert!(text.contains("which integrates into white light."));
    assert!(text.contains("\"backend\":\"http:mock\""));
    let req = &mock.requests()[0];
    assert_eq!(req.authorization.as_deref(), Some("Bearer sk-mock"));
    assert!(req.body.starts_with("{\"model\":\"mock\",\"temperature\":0,"));
}

#[test]
fn synth_http_without_key_fails_before_requests() {
    let (_d, p) = workdir();
    let mock = MockServer::fixed("x").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_kgrat"))
        .args(["synth", "--graph", "sun.tsv", "--qa", "qa.jsonl", "--backend", "http", "--base-url"])
        .arg(mock.url())
        .current_dir(&p)
        .env_remove("OPENAI_API_KEY")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("OPENAI_API_KEY"));
    assert_eq!(mock.request_count(), 0);
}

#[test]
fn flags_override_config_file() {
    let (_d, p) = workdir();
    std::fs::write(p.join("c.toml"), "seed = 5\n[search]\nmax_paths = 2\nmax_depth = 4\n").unwrap();
    let o = kgrat(&["paths", "--graph", "sun.tsv", "--question", "Sun", "--answer", "white light", "--config", "c.toml", "--max-depth", "6"], &p);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = manifest(&p.join("kgrat-out"), "paths");
    assert_eq!(m["config"]["search"]["max_paths"], 2);
    assert_eq!(m["config"]["search"]["max_depth"], 6);
    assert_eq!(m["config"]["heuristic"]["rng_seed"], 5);
    assert_eq!(m["config"]["heuristic"]["anchor_count"], 10);

    let o = kgrat(&["paths", "--graph", "sun.tsv", "--question", "Sun", "--answer", "white light", "--config", "c.toml", "--seed", "9"], &p);
    assert!(o.status.success());
    assert_eq!(manifest(&p.join("kgrat-out"), "paths")["seeds"]["heuristic"], 9);
}

#[test]
fn bench_reports_dominance_on_a_small_graph() {
    let (_d, p) = workdir();
    let o = kgrat(&["bench", "--nodes", "200", "--queries", "20"], &p);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("landmark <= zero expansions  20/20"), "{}", stdout(&o));
    let csv = std::fs::read_to_string(p.join("kgrat-out/bench.csv")).unwrap();
    assert_eq!(csv.lines().count(), 21);
}

#[test]
fn train_is_reproducible_and_checks_gradients() {
    let (_d, p) = workdir();
    let a = kgrat(&["train", "--steps", "60", "--out", "a", "--grad-check"], &p);
    assert!(a.status.success(), "{}", stderr(&a));
    let line = stdout(&a).lines().find(|l| l.starts_with("grad check")).unwrap().to_owned();
    let err: f64 = line.split_whitespace().nth(5).unwrap().parse().unwrap();
    assert!(err < 1e-4, "{line}");
    let b = kgrat(&["train", "--steps", "60", "--out", "b"], &p);
    assert!(b.status.success());
    assert_eq!(std::fs::read(p.join("a/checkpoint.json")).unwrap(), std::fs::read(p.join("b/checkpoint.json")).unwrap());
    assert_eq!(std::fs::read_to_string(p.join("a/trace.csv")).unwrap().lines().count(), 62);
}

#[test]
fn train_reads_synthesized_dataset() {
    let (_d, p) = workdir();
    assert!(kgrat(&["synth", "--graph", "sun.tsv", "--qa", "qa.jsonl"], &p).status.success());
    let o = kgrat(&["train", "--data", "kgrat-out/dataset.jsonl", "--steps", "20", "--out", "t"], &p);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(manifest(&p.join("t"), "train")["results"]["records"], 1);

    std::fs::write(p.join("broken.jsonl"), "{\"question\":\"q\",\"answer\":\"a\"}\nnot json\n").unwrap();
    let o = kgrat(&["train", "--data", "broken.jsonl"], &p);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"));
}
