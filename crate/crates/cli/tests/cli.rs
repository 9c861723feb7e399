use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn flowkit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowkit"))
        .args(args)
        .current_dir(dir)
        .env("NO_COLOR", "1")
        .output()
        .expect("spawn flowkit")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Materializes bundled files into `dir/examples` via `examples --emit`.
fn emit(dir: &Path, names: &[&str]) {
    fs::create_dir_all(dir.join("examples")).unwrap();
    for name in names {
        let out = flowkit(dir, &["examples", "--emit", name]);
        assert_eq!(out.status.code(), Some(0), "emit {name}");
        let file = if name.ends_with(".json") { name.to_string() } else { format!("{name}.fm") };
        fs::write(dir.join("examples").join(file), &out.stdout).unwrap();
    }
}

#[test]
fn validate_call_center_is_clean() {
    let dir = TempDir::new().unwrap();
    emit(dir.path(), &["callcenter"]);
    let out = flowkit(dir.path(), &["validate", "examples/callcenter.fm"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("0 errors"), "{}", stdout(&out));

    let out = flowkit(dir.path(), &["validate", "examples/callcenter.fm", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "[]");
}

#[test]
fn accept_trace_fires_the_junction_and_decline_does_not() {
    let dir = TempDir::new().unwrap();
    emit(dir.path(), &["callcenter", "callcenter-accept.json", "callcenter-decline.json"]);
    let mut fired = Vec::new();
    for scenario in ["accept", "decline"] {
        let json = format!("examples/callcenter-{scenario}.json");
        let out = flowkit(dir.path(), &["sim", "examples/callcenter.fm", "--scenario", &json, "--trace", "out.jsonl"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let trace = fs::read_to_string(dir.path().join("out.jsonl")).unwrap();
        let junction = trace.lines().any(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            v["action"] == "junction-fired"
        });
        fired.push(junction);
    }
    assert_eq!(fired, [true, false]);
}

#[test]
fn sim_writes_trace_to_stdout_and_events_to_file() {
    let dir = TempDir::new().unwrap();
    emit(dir.path(), &["joboffer", "joboffer.json"]);
    let out = flowkit(
        dir.path(),
        &["sim", "examples/joboffer.fm", "--scenario", "examples/joboffer.json", "--events", "events.json"],
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).lines().count() > 0);
    let events: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("events.json")).unwrap()).unwrap();
    assert_eq!(events["events"].as_array().unwrap().len(), 4);
}

#[test]
fn max_ticks_override_truncates() {
    let dir = TempDir::new().unwrap();
    emit(dir.path(), &["phosphorus", "phosphorus.json"]);
    let out = flowkit(
        dir.path(),
        &["sim", "examples/phosphorus.fm", "--scenario", "examples/phosphorus.json", "--max-ticks", "3"],
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tick limit"));
    let last = stdout(&out).lines().last().map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap());
    assert_eq!(last.unwrap()["tick"], 3);
}

#[test]
fn missing_files_are_io_errors() {
    let dir = TempDir::new().unwrap();
    assert_eq!(flowkit(dir.path(), &["validate", "does-not-exist.fm"]).status.code(), Some(2));
    emit(dir.path(), &["book"]);
    let out = flowkit(dir.path(), &["sim", "examples/book.fm", "--scenario", "nope.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    for args in
        [&["frobnicate"][..], &["validate", "--bogus", "x.fm"], &["render", "x.fm", "-o", "-", "--snapshot-tick", "1"]]
    {
        let out = flowkit(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"), "{args:?}");
    }
}

#[test]
fn emit_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let out = flowkit(dir.path(), &["examples", "--emit", "book"]);
    assert_eq!(out.status.code(), Some(0));
    let shipped = fs::read(Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus/book.fm")).unwrap();
    assert_eq!(out.stdout, shipped);

    let list = stdout(&flowkit(dir.path(), &["examples", "--list"]));
    assert_eq!(list.lines().count(), 5);
    assert_eq!(flowkit(dir.path(), &["examples", "--emit", "nothing"]).status.code(), Some(2));
}

#[test]
fn diagnostics_set_exit_one() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("broken.fm"), "thing @\n").unwrap();
    let out = flowkit(dir.path(), &["validate", "broken.fm"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("broken.fm:1:"), "{}", stdout(&out));

    fs::write(dir.path().join("empty.fm"), "").unwrap();
    let out = flowkit(dir.path(), &["validate", "empty.fm", "--json"]);
    let diags: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let has_error = diags.as_array().unwrap().iter().any(|d| d["severity"] == "error");
    assert_eq!(out.status.code(), Some(if has_error { 1 } else { 0 }));
}

#[test]
fn render_and_snapshot() {
    let dir = TempDir::new().unwrap();
    emit(dir.path(), &["book", "book.json"]);
    let out = flowkit(dir.path(), &["render", "examples/book.fm", "-o", "book.dot"]);
    assert_eq!(out.status.code(), Some(0));
    let dot = fs::read_to_string(dir.path().join("book.dot")).unwrap();
    assert!(dot.starts_with("digraph"));
    assert!(!dot.contains("peripheries=2"));

    flowkit(dir.path(), &["sim", "examples/book.fm", "--scenario", "examples/book.json", "--trace", "t.jsonl"]);
    let out =
        flowkit(dir.path(), &["render", "examples/book.fm", "-o", "-", "--snapshot-tick", "0", "--trace", "t.jsonl"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("peripheries=2"));
    let out =
        flowkit(dir.path(), &["render", "examples/book.fm", "-o", "-", "--snapshot-tick", "999", "--trace", "t.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fmt_prints_and_rewrites_canonical_text() {
    let dir = TempDir::new().unwrap();
    emit(dir.path(), &["speaker"]);
    let once = flowkit(dir.path(), &["fmt", "examples/speaker.fm"]);
    assert_eq!(once.status.code(), Some(0));
    assert_eq!(flowkit(dir.path(), &["fmt", "examples/speaker.fm", "--write"]).status.code(), Some(0));
    assert_eq!(fs::read(dir.path().join("examples/speaker.fm")).unwrap(), once.stdout);
    let twice = flowkit(dir.path(), &["fmt", "examples/speaker.fm"]);
    assert_eq!(twice.stdout, once.stdout);
}
