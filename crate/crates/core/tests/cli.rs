mod common;

use std::fs;
use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::process::{Command, Output, Stdio};
use std::thread::sleep;
use std::time::{Duration, Instant};

use common::{data_dir, fixtures};

fn umlk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_umlk")).args(args).output().unwrap()
}

fn fixture(name: &str) -> String {
    fixtures().join(name).to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn grade_directory_as_ndjson() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["b.json", "a.json", "c.json"] {
        fs::copy(fixtures().join("library_clean.json"), dir.path().join(name)).unwrap();
    }
    fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let out = umlk(&[
        "grade",
        "--solution",
        &fixture("library.exercise"),
        "--input",
        dir.path().to_str().unwrap(),
        "--format",
        "ndjson",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let lines: Vec<serde_json::Value> = stdout(&out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 3);
    let paths: Vec<&str> = lines.iter().map(|l| l["path"].as_str().unwrap()).collect();
    assert!(paths[0].ends_with("a.json") && paths[2].ends_with("c.json"));
    assert_eq!(lines[0]["report"]["completeness"]["overall"], 1.0);
}

#[test]
fn grade_csv_rows() {
    let out = umlk(&[
        "grade",
        "--solution",
        &fixture("library.exercise"),
        "--input",
        &fixture("catalog"),
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut rows = text.lines();
    assert_eq!(rows.next(), Some("path,solution,completeness,syntactic,semantic"));
    let rows: Vec<&str> = rows.collect();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().any(|r| r.ends_with("SEM_WRONG_SYSTEM.json,0,1.0,0,1")));
    assert!(rows.iter().any(|r| r.ends_with("SYN_MISSING_NAME.json,0,1.0,1,0")));

    let perfect = umlk(&[
        "grade",
        "--solution",
        &fixture("shop.exercise"),
        "--input",
        &fixture("shop_clean.json"),
        "--format",
        "csv",
    ]);
    assert!(stdout(&perfect).lines().nth(1).unwrap().ends_with(",0,1.0,0,0"));
}

#[test]
fn grade_output_is_reproducible() {
    let args = [
        "grade",
        "--solution",
        &fixture("library.exercise"),
        "--input",
        &fixture("catalog"),
    ];
    let first = umlk(&args);
    let second = umlk(&args);
    assert_eq!(first.stdout, second.stdout);
    assert!(stdout(&first).contains("SEM_EXTRA_RELATION The association between 'Librarian' and 'Borrow book'"));
}

#[test]
fn grade_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(fixtures().join("shop_clean.json"), dir.path().join("good.json")).unwrap();
    fs::write(dir.path().join("bad.json"), "{\"version\": 1").unwrap();
    let out = umlk(&[
        "grade",
        "--solution",
        &fixture("shop.exercise"),
        "--input",
        dir.path().to_str().unwrap(),
        "--format",
        "ndjson",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout(&out).lines().count(), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("MALFORMED_INPUT"));

    let missing = umlk(&[
        "grade",
        "--solution",
        "/nonexistent/x",
        "--input",
        &fixture("shop_clean.json"),
    ]);
    assert_eq!(missing.status.code(), Some(1));
    let invalid = umlk(&[
        "grade",
        "--solution",
        &fixture("shop_clean.json"),
        "--input",
        &fixture("shop_clean.json"),
    ]);
    assert_eq!(invalid.status.code(), Some(3));
}

#[test]
fn validate_exit_codes() {
    assert_eq!(umlk(&["validate", &fixture("clinic.exercise")]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.exercise");
    let text = fs::read_to_string(fixtures().join("shop.exercise"))
        .unwrap()
        .replace(r#""owningSystem": "shop""#, r#""owningSystem": "bank""#);
    fs::write(&bad, text).unwrap();
    let out = umlk(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).contains("UC_IN_EXTERNAL_SYSTEM"));

    fs::write(&bad, "not a solution").unwrap();
    let out = umlk(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).contains("MALFORMED"));
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

fn http_get(port: u16, path: &str) -> Option<String> {
    let mut stream = TcpStream::connect(("127.0.0.1", port)).ok()?;
    write!(
        stream,
        "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n"
    )
    .ok()?;
    let mut response = String::new();
    stream.read_to_string(&mut response).ok()?;
    Some(response)
}

#[test]
fn serve_boots_answers_and_stops_on_interrupt() {
    let dir = data_dir();
    let port = free_port();
    let mut child = Command::new(env!("CARGO_BIN_EXE_umlk"))
        .args(["serve", "--data", dir.path().to_str().unwrap()])
        .env("UMLK_BIND", format!("127.0.0.1:{port}"))
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(10);
    let response = loop {
        if let Some(r) = http_get(port, "/api/health") {
            break r;
        }
        assert!(Instant::now() < deadline, "server did not come up");
        sleep(Duration::from_millis(50));
    };
    assert!(response.starts_with("HTTP/1.1 200"));
    assert!(response.contains(r#"{"status":"ok"}"#));

    let killed = Command::new("kill").args(["-INT", &child.id().to_string()]).status();
    if killed.is_ok_and(|s| s.success()) {
        let status = child.wait().unwrap();
        assert_eq!(status.code(), Some(0));
    } else {
        child.kill().unwrap();
        child.wait().unwrap();
    }
    assert!(dir.path().join("events.log").exists());
}

#[test]
fn serve_reports_bind_conflict() {
    let dir = tempfile::tempdir().unwrap();
    let taken = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = taken.local_addr().unwrap().to_string();
    let out = umlk(&["serve", "--data", dir.path().to_str().unwrap(), "--bind", &addr]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot bind"));
}
