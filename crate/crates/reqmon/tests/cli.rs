use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

const BIN: &str = env!("CARGO_BIN_EXE_reqmon");

fn reqmon(dir: &Path, args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(BIN)
        .current_dir(dir)
        .args(args)
        .env_remove("REQMON_DATA_DIR")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = reqmon(dir, args, "");
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

const ROVER_RUN: &str = "\
{\"frame\":0,\"pred\":\"on_path\",\"score\":0.63}
{\"frame\":0,\"pred\":\"cone_encounter\",\"score\":0.12}
{\"frame\":1,\"pred\":\"on_path\",\"score\":0.58}
{\"frame\":1,\"pred\":\"cone_encounter\",\"score\":0.21}
{\"frame\":2,\"pred\":\"on_path\",\"score\":0.61}
{\"frame\":2,\"pred\":\"cone_encounter\",\"score\":0.52}
";

fn rover(dir: &Path) {
    ok(
        dir,
        &[
            "init", "-p", "p.json", "--name", "rover",
            "--prop", "on_path=the rover is on the designated path",
            "--prop", "cone_encounter=a traffic cone is in front of the rover",
        ],
    );
    ok(
        dir,
        &[
            "add-req", "-p", "p.json", "--id", "REQ-LIV-002", "--text",
            "Once the rover is navigating a designated path, it shall encounter a traffic cone.",
        ],
    );
}

#[test]
fn rover_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    rover(d);
    let authored = ok(d, &["author", "-p", "p.json", "--req", "REQ-LIV-002"]);
    assert!(authored.contains("G (on_path -> F cone_encounter)"), "{authored}");
    assert!(authored.contains("G (on_path -> cone_encounter)"), "{authored}");

    let out = reqmon(d, &["validate", "-p", "p.json", "--req", "REQ-LIV-002"], "maybe\na\n");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success());
    assert!(text.contains("on_path        |  T  ."), "{text}");
    assert!(text.contains("pruned [1]"), "{text}");
    assert!(text.contains("converged"), "{text}");

    std::fs::write(d.join("run.jsonl"), ROVER_RUN).unwrap();
    let verdicts = ok(d, &["monitor", "-p", "p.json", "--req", "REQ-LIV-002", "--scores", "run.jsonl"]);
    let lines: Vec<&str> = verdicts.lines().collect();
    assert_eq!(
        lines,
        [
            r#"{"frame":0,"req":"REQ-LIV-002","verdict":"presumably_false"}"#,
            r#"{"frame":1,"req":"REQ-LIV-002","verdict":"presumably_false"}"#,
            r#"{"frame":2,"req":"REQ-LIV-002","verdict":"presumably_true"}"#,
        ]
    );
    let piped = reqmon(d, &["monitor", "-p", "p.json", "--summary"], ROVER_RUN);
    assert_eq!(String::from_utf8(piped.stdout).unwrap(), verdicts);
    let summary = String::from_utf8(piped.stderr).unwrap();
    assert!(summary.contains(r#""segments":[]"#) && summary.contains(r#""first_presumably_true":2"#), "{summary}");

    let suite = ok(d, &["testgen", "-p", "p.json", "--req", "REQ-LIV-002"]);
    let header: serde_json::Value = serde_json::from_str(suite.lines().next().unwrap()).unwrap();
    assert_eq!(header["coverage"], 1.0);
    assert!(suite.contains("a traffic cone is in front of the rover"));
    ok(d, &["testgen", "-p", "p.json", "--req", "REQ-LIV-002", "--criterion", "state", "--out", "suite.jsonl"]);
    assert!(std::fs::read_to_string(d.join("suite.jsonl")).unwrap().contains("state_coverage"));

    let status = ok(d, &["status", "-p", "p.json"]);
    assert!(status.contains("Formalized"), "{status}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["init", "-p", "c.json", "--name", "c", "--prop", "p=cone", "--prop", "q=stop"]);
    for (id, line) in [
        ("R1", "globally, the system shall always satisfy p"),
        ("R2", "globally, the system shall eventually satisfy ~p"),
    ] {
        ok(d, &["add-req", "-p", "c.json", "--id", id, "--text", "x"]);
        ok(d, &["author", "-p", "c.json", "--req", id, "--candidate", line]);
    }
    let out = reqmon(d, &["analyze", "-p", "c.json"], "");
    assert_eq!(out.status.code(), Some(1));
    let report = String::from_utf8(out.stdout).unwrap();
    assert!(report.contains("R1") && report.contains("R2"), "{report}");

    assert_eq!(reqmon(d, &["analyze"], "").status.code(), Some(2));
    assert_eq!(reqmon(d, &["analyze", "-p", "missing.json"], "").status.code(), Some(2));
    let bad = reqmon(d, &["monitor", "-p", "c.json"], "{\"frame\": 0, \"pred\": \"p\"}\n");
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 1"));
    let unsorted = "{\"frame\":1,\"pred\":\"p\",\"score\":0.5}\n{\"frame\":1,\"pred\":\"q\",\"score\":0.5}\n{\"frame\":0,\"pred\":\"p\",\"score\":0.5}\n";
    assert_eq!(reqmon(d, &["monitor", "-p", "c.json"], unsorted).status.code(), Some(2));
    assert_eq!(reqmon(d, &["init", "-p", "c.json", "--name", "c", "--prop", "p=x"], "").status.code(), Some(2));
}

#[test]
fn coverage_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("m.csv"),
        "item,feature,score\nimg1,cone,0.5\nimg1,sign,0.1\nimg2,cone,0.6\nimg2,sign,0.2\n",
    )
    .unwrap();
    std::fs::write(d.join("g.csv"), "item,group\nimg1,day\nimg2,night\n").unwrap();
    let out = reqmon(d, &["coverage", "--scores", "m.csv", "--groups", "g.csv"], "");
    assert_eq!(out.status.code(), Some(1), "sign never clears 0.4");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("gap") && text.contains("night"), "{text}");
    let out = reqmon(d, &["coverage", "--scores", "m.csv", "--override", "sign=0.05", "--json"], "");
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["report"]["features"][1]["threshold"], 0.05);
}
