use std::fs;
use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::path::{Path, PathBuf};
use std::process::Command;

use ovguard::bench::{generate_program, BenchSpec, LocClass};
use ovguard::config::RunConfig;
use ovguard::repair::RepairConfig;
use ovguard::service::{ReviewServer, ReviewService, ServiceError};
use ovguard::solver::BuiltinSolver;
use ovguard::store::{FindingStore, SourceInput};
use serde_json::{json, Value};
use tempfile::TempDir;

const TWO_SITES: &str = "int f(int a, int b)
{
    int x = a * a;
    int y = b + 100;
    int z = a - b;
    return x + y + z;
}
";

fn seeded_source() -> String {
    let spec = BenchSpec {
        functions: 2,
        loops: 3,
        false_positives: 2,
        seed_depth: 3,
        seed: 17,
        loc_class: LocClass::C500,
    };
    generate_program(&spec, "prog.c", &BuiltinSolver::default()).unwrap().source
}

/// A run over `text` saved as `dir/prog.c`, reported under the name
/// `prog.c` as the CLI does when run from `dir`.
fn store_in(dir: &Path, text: &str) -> FindingStore {
    let path = dir.join("prog.c");
    fs::write(&path, text).unwrap();
    let input = SourceInput {
        file: "prog.c".into(),
        path,
        text: text.to_string(),
    };
    FindingStore::create(
        &dir.join("runs"),
        &[input],
        &RunConfig::default(),
        &RepairConfig::default(),
        &BuiltinSolver::default(),
    )
    .unwrap()
}

fn service(dir: &Path, text: &str) -> ReviewService<BuiltinSolver> {
    ReviewService::new(store_in(dir, text), BuiltinSolver::default())
}

fn decide(id: &str, d: &str) -> (String, Vec<u8>) {
    (
        format!("/api/findings/{id}/decision"),
        serde_json::to_vec(&json!({ "decision": d })).unwrap(),
    )
}

#[test]
fn findings_list_matches_report_count() {
    let dir = TempDir::new().unwrap();
    let mut svc = service(dir.path(), &seeded_source());
    let reports = svc.store().reports.len();
    let r = svc.handle("GET", "/api/findings", b"");
    assert_eq!(r.status, 200);
    assert_eq!(r.body.as_array().unwrap().len(), reports);
    assert!(reports >= 1);
}

#[test]
fn finding_detail_carries_report_candidate_and_diff() {
    let dir = TempDir::new().unwrap();
    let mut svc = service(dir.path(), TWO_SITES);
    let id = svc.store().candidates.keys().next().unwrap().clone();
    let r = svc.handle("GET", &format!("/api/findings/{id}"), b"");
    assert_eq!(r.status, 200);
    assert_eq!(r.body["report"]["problem_id"], json!(id));
    assert_eq!(r.body["candidate"]["problem_id"], json!(id));
    assert_eq!(r.body["candidate"]["repair_type"], json!("in_place"));
    let diff = r.body["diff"].as_str().unwrap();
    assert_eq!(diff, svc.store().candidates[&id].diff);
    assert!(diff.starts_with("--- a/prog.c\n+++ b/prog.c\n"));
    assert_eq!(r.body["decision"]["decision"], json!("pending"));
}

#[test]
fn errors_use_the_documented_status_codes() {
    let dir = TempDir::new().unwrap();
    let mut svc = service(dir.path(), TWO_SITES);
    assert_eq!(svc.handle("GET", "/api/findings/T424242-IOF", b"").status, 404);
    let (url, body) = decide("T424242-IOF", "accepted");
    assert_eq!(svc.handle("POST", &url, &body).status, 404);
    assert_eq!(svc.handle("GET", "/api/nothing", b"").status, 404);
    assert_eq!(svc.handle("GET", "/", b"").status, 404);
    assert_eq!(svc.handle("DELETE", "/api/findings", b"").status, 405);
    assert_eq!(svc.handle("GET", "/api/apply", b"").status, 405);

    let id = svc.store().candidates.keys().next().unwrap().clone();
    let url = format!("/api/findings/{id}/decision");
    assert_eq!(svc.handle("POST", &url, b"not json").status, 400);
    assert_eq!(svc.handle("POST", &url, br#"{"decision":"applied"}"#).status, 400);
    assert_eq!(svc.handle("POST", &url, br#"{"decision":"maybe"}"#).status, 400);

    // The subtraction has no candidate to decide on.
    let without = svc
        .store()
        .reports
        .iter()
        .find(|r| !svc.store().candidates.contains_key(&r.problem_id))
        .unwrap()
        .problem_id
        .clone();
    let (url2, body) = decide(&without, "accepted");
    assert_eq!(svc.handle("POST", &url2, &body).status, 409);

    let (url, body) = decide(&id, "accepted");
    assert_eq!(svc.handle("POST", &url, &body).status, 200);
    assert_eq!(svc.handle("POST", "/api/apply", b"").status, 200);
    let (url, body) = decide(&id, "rejected");
    let r = svc.handle("POST", &url, &body);
    assert_eq!(r.status, 409);
    assert!(r.body["error"].as_str().unwrap().contains("already applied"));
}

#[test]
fn status_tracks_decisions_and_disk_state() {
    let dir = TempDir::new().unwrap();
    let mut svc = service(dir.path(), TWO_SITES);
    let ids: Vec<String> = svc.store().candidates.keys().cloned().collect();
    let (url, body) = decide(&ids[0], "rejected");
    assert_eq!(svc.handle("POST", &url, &body).status, 200);
    let s = svc.handle("GET", "/api/status", b"").body;
    assert_eq!(s["rejected"], json!(1));
    assert_eq!(s["pending"], json!(1));
    assert_eq!(s["reports"], json!(3));
    assert_eq!(s["candidates"], json!(2));
    assert_eq!(s["schema_version"], json!(1));

    // A rejection leaves the file alone even through apply.
    let r = svc.handle("POST", "/api/apply", b"");
    assert_eq!(r.body["applied"], json!([]));
    let s = svc.handle("GET", "/api/status", b"").body;
    assert_eq!(s["files"][0]["modified"], json!(false));
    assert_eq!(fs::read_to_string(dir.path().join("prog.c")).unwrap(), TWO_SITES);

    let (url, body) = decide(&ids[1], "accepted");
    svc.handle("POST", &url, &body);
    let r = svc.handle("POST", "/api/apply", b"");
    assert_eq!(r.body["applied"][0]["status"], json!("revalidated"));
    let s = svc.handle("GET", "/api/status", b"").body;
    assert_eq!(s["applied"], json!(1));
    assert_eq!(s["files"][0]["modified"], json!(true));
    let list = svc.handle("GET", "/api/findings", b"").body;
    let row = list.as_array().unwrap().iter().find(|f| f["problem_id"] == json!(ids[1])).unwrap();
    assert_eq!(row["decision"], json!("applied"));
    assert_eq!(row["revalidation"], json!("revalidated"));
}

fn http(addr: SocketAddr, method: &str, path: &str, body: &[u8]) -> (u16, Value) {
    let mut s = TcpStream::connect(addr).unwrap();
    let head = format!(
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len()
    );
    s.write_all(head.as_bytes()).unwrap();
    s.write_all(body).unwrap();
    let mut raw = String::new();
    s.read_to_string(&mut raw).unwrap();
    let status: u16 = raw.split_whitespace().nth(1).unwrap().parse().unwrap();
    let (headers, payload) = raw.split_once("\r\n\r\n").unwrap();
    assert!(headers.to_ascii_lowercase().contains("content-type: application/json"));
    (status, serde_json::from_str(payload).unwrap())
}

#[test]
fn serves_the_api_over_loopback_http() {
    let dir = TempDir::new().unwrap();
    let svc = service(dir.path(), TWO_SITES);
    let server = ReviewServer::bind("127.0.0.1:0".parse().unwrap(), false, svc).unwrap();
    let addr = server.local_addr();
    assert!(addr.ip().is_loopback());
    let stop = server.stop_handle();
    let worker = std::thread::spawn(move || server.run());

    let (status, list) = http(addr, "GET", "/api/findings", b"");
    assert_eq!(status, 200);
    assert_eq!(list.as_array().unwrap().len(), 3);
    let id = list[0]["problem_id"].as_str().unwrap().to_string();
    let (url, body) = decide(&id, "accepted");
    let (status, rec) = http(addr, "POST", &url, &body);
    assert_eq!(status, 200);
    assert_eq!(rec["decision"], json!("accepted"));
    let (status, summary) = http(addr, "POST", "/api/apply", b"");
    assert_eq!(status, 200);
    assert_eq!(summary["applied"].as_array().unwrap().len(), 1);
    let (status, _) = http(addr, "POST", &url, &body);
    assert_eq!(status, 409);
    let (status, _) = http(addr, "GET", "/api/findings/T000777-IOF", b"");
    assert_eq!(status, 404);

    stop.stop();
    let svc = worker.join().unwrap();
    assert_eq!(svc.store().status().applied, 1);
}

#[test]
fn non_loopback_bind_needs_explicit_permission() {
    let dir = TempDir::new().unwrap();
    let svc = service(dir.path(), TWO_SITES);
    let any: SocketAddr = "0.0.0.0:0".parse().unwrap();
    assert!(matches!(
        ReviewServer::bind(any, false, svc),
        Err(ServiceError::NotLoopback(_))
    ));
}

fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_ovguard"))
}

#[test]
fn api_apply_is_byte_equivalent_to_cli_apply() {
    let text = seeded_source();

    let cli = TempDir::new().unwrap();
    fs::write(cli.path().join("prog.c"), &text).unwrap();
    let out = Command::new(bin())
        .current_dir(cli.path())
        .args(["repair", "prog.c", "--store", "runs"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = fs::read_dir(cli.path().join("runs")).unwrap().next().unwrap().unwrap().path();
    let store = FindingStore::open(&run).unwrap();
    let ids: Vec<String> = store.candidates.keys().cloned().collect();
    assert!(!ids.is_empty());
    let mut args = vec!["apply".to_string(), "--run".into(), run.display().to_string()];
    args.extend(ids.iter().cloned());
    let out = Command::new(bin()).current_dir(cli.path()).args(&args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let api = TempDir::new().unwrap();
    let mut svc = service(api.path(), &text);
    for id in &ids {
        let (url, body) = decide(id, "accepted");
        assert_eq!(svc.handle("POST", &url, &body).status, 200);
    }
    let r = svc.handle("POST", "/api/apply", b"");
    assert_eq!(r.status, 200);

    let cli_bytes = fs::read(cli.path().join("prog.c")).unwrap();
    let api_bytes = fs::read(api.path().join("prog.c")).unwrap();
    assert_ne!(cli_bytes, text.as_bytes());
    assert_eq!(cli_bytes, api_bytes);
}
