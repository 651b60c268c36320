use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn asred(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asred"))
        .args(args)
        .env_remove("ARCANE_EMBED_URL")
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(dir: &Path, n: &str, seed: &str) -> std::path::PathBuf {
    let out = dir.join(format!("corpus-{seed}.json"));
    let o = asred(&["generate", "--n", n, "--r", "2", "--seed", seed, "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn generate_reduce_check() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate(dir.path(), "6", "1");
    let body: Value = serde_json::from_str(&std::fs::read_to_string(&corpus).unwrap()).unwrap();
    assert_eq!(body["assertions"].as_array().unwrap().len(), 18);
    assert!(body["metadata"]["ground_truth"]["planted"].is_object());

    let out = dir.path().join("out");
    let o = asred(&["reduce", "--corpus", path(&corpus), "--out", path(&out), "--seed", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("N reduced"), "{stdout}");
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["original_count"], 18);
    assert!(report["reduction_ratio"].as_f64().unwrap() > 0.3);
    assert_eq!(report["config"]["search_seed"], 3);

    let reduced = out.join("reduced.json");
    let o = asred(&["check", "--corpus", path(&corpus), "--corpus", path(&reduced)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("lasso: agree"));
}

#[test]
fn text_report_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate(dir.path(), "4", "2");
    let out = dir.path().join("out");
    let o = asred(&[
        "reduce",
        "--corpus",
        path(&corpus),
        "--out",
        path(&out),
        "--report",
        "text",
        "--workers",
        "1",
        "--mcts-iters",
        "20",
        "--patience",
        "2",
        "--no-coarse-partition",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(text.contains('%'));
    assert!(text.contains("coarse groups"), "{text}");
}

#[test]
fn check_detects_differences() {
    let dir = tempfile::tempdir().unwrap();
    let a = generate(dir.path(), "3", "4");
    let b = generate(dir.path(), "3", "5");
    let o = asred(&["check", "--corpus", path(&a), "--corpus", path(&b)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("lasso: differ"));
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none.json");
    let out = dir.path().join("out");
    let o = asred(&["reduce", "--corpus", path(&missing), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(2));

    let corpus = generate(dir.path(), "2", "6");
    let o = asred(&["reduce", "--corpus", path(&corpus), "--out", path(&out), "--alpha", "0.7"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha"));

    let o = asred(&["reduce", "--corpus", path(&corpus), "--out", path(&out), "--embedder", "url"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ARCANE_EMBED_URL"));

    let o = asred(&["check", "--corpus", path(&corpus)]);
    assert_eq!(o.status.code(), Some(2));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"name": "b", "assertions": [{"id": "x", "text": "a |->"}]}"#).unwrap();
    let o = asred(&["check", "--corpus", path(&bad), "--corpus", path(&corpus)]);
    assert_eq!(o.status.code(), Some(2));
}

/// Embedding service stub: a fixed three-dimensional vector per text,
/// derived from its length.
fn serve_embeddings() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let mut stream = stream.unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            let mut line = String::new();
            loop {
                line.clear();
                if reader.read_line(&mut line).unwrap() == 0 || line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            let req: Value = serde_json::from_slice(&body).unwrap();
            let vectors: Vec<Vec<f64>> = req["texts"]
                .as_array()
                .unwrap()
                .iter()
                .map(|t| vec![1.0, t.as_str().unwrap().len() as f64 / 100.0, 0.5])
                .collect();
            let payload = serde_json::json!({ "vectors": vectors }).to_string();
            let _ = write!(
                stream,
                "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{payload}",
                payload.len()
            );
        }
    });
    format!("http://{addr}")
}

#[test]
fn remote_embedder_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate(dir.path(), "3", "7");
    let out = dir.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_asred"))
        .args(["reduce", "--corpus", path(&corpus), "--out", path(&out), "--embedder", "url"])
        .env("ARCANE_EMBED_URL", serve_embeddings())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report["config"]["embedder"].as_str().unwrap().starts_with("remote http://127.0.0.1"));
}

#[test]
fn unreachable_embedder_fails() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate(dir.path(), "2", "8");
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    drop(listener);
    let out = dir.path().join("out");
    let o = asred(&["reduce", "--corpus", path(&corpus), "--out", path(&out), "--embedder", &url]);
    assert_eq!(o.status.code(), Some(1));
}
