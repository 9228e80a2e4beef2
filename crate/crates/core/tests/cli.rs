mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Duration;

use common::{completion, write_chat_corpus, write_context_corpus, MockServer};
use langforge::dataset::ExportedConversation;
use langforge::pipeline::RunManifest;

fn langforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_langforge")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SMALL: &str = "language_name = \"Javanese\"\nlanguage_code = \"jav\"\nmacro_topics_per_seed = 2\n\
                     topics_per_macro = 2\nbroad_scenarios = 2\ndetailed_per_broad = 2\nmax_context_documents = 3\n";

fn setup(dir: &Path) -> (String, String, String) {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, SMALL).unwrap();
    let ctx = write_context_corpus(dir, "jav", 5);
    let chat = write_chat_corpus(dir, 12, |_| None);
    (cfg.display().to_string(), ctx.display().to_string(), chat.display().to_string())
}

#[test]
fn assemble_tran_exports_only_translated_records() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, ctx, chat) = setup(dir.path());
    let out = dir.path().join("out").display().to_string();
    let gen = langforge(&[
        "generate",
        "--config",
        &cfg,
        "--context-corpus",
        &ctx,
        "--translation-corpus",
        &chat,
        "--out",
        &out,
    ]);
    assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));

    let asm = langforge(&[
        "assemble",
        "--config",
        &cfg,
        "--context-corpus",
        &ctx,
        "--translation-corpus",
        &chat,
        "--out",
        &out,
        "--subset",
        "tran",
    ]);
    assert!(asm.status.success(), "{}", String::from_utf8_lossy(&asm.stderr));
    let datasets: Vec<_> =
        fs::read_dir(Path::new(&out).join("datasets")).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(datasets, vec!["tran.json"]);

    let records: Vec<ExportedConversation> =
        serde_json::from_str(&fs::read_to_string(Path::new(&out).join("datasets/tran.json")).unwrap()).unwrap();
    assert_eq!(records.len(), 12);
    let translated: Vec<serde_json::Value> = fs::read_to_string(Path::new(&out).join("checkpoints/translated.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let mut expected: Vec<String> =
        translated.iter().map(|t| t["turns"][0]["content"].as_str().unwrap().to_string()).collect();
    let mut got: Vec<String> = records.iter().map(|r| r.conversations[0].value.clone()).collect();
    expected.sort();
    got.sort();
    assert_eq!(got, expected);
    assert!(records.iter().all(|r| !r.conversations.iter().any(|m| m.value.contains("<think>"))));
}

#[test]
fn dry_run_prints_the_plan_without_side_effects() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, ctx, _) = setup(dir.path());
    let out = dir.path().join("never");
    let o = langforge(&[
        "generate",
        "--config",
        &cfg,
        "--context-corpus",
        &ctx,
        "--out",
        out.to_str().unwrap(),
        "--dry-run",
        "--endpoint",
        "http://127.0.0.1:9/v1",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    for stage in ["topics", "scenarios", "contexts", "revision", "responses", "translation"] {
        assert!(text.contains(stage), "{text}");
    }
    assert!(text.contains("translation   skip (no translation corpus configured)"), "{text}");
    assert!(text.contains("network calls: 0"));
    assert!(!out.exists());
}

#[test]
fn report_verifies_a_finished_run_and_flags_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, ctx, chat) = setup(dir.path());
    let out = dir.path().join("out");
    let run = langforge(&[
        "run",
        "--config",
        &cfg,
        "--context-corpus",
        &ctx,
        "--translation-corpus",
        &chat,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));

    let report = langforge(&["report", "--out", out.to_str().unwrap()]);
    assert!(report.status.success());
    let text = stdout(&report);
    assert!(text.contains("translation: dropped = parse failures + ratio filtered + transport drops"));
    assert!(!text.contains("VIOLATED"));

    let path = out.join("manifest.json");
    let mut m = RunManifest::load(&path).unwrap();
    m.stages.iter_mut().find(|s| s.stage == langforge::pipeline::Stage::Translation).unwrap().output += 1;
    fs::write(&path, m.to_json()).unwrap();
    let report = langforge(&["report", "--out", out.to_str().unwrap()]);
    assert_eq!(report.status.code(), Some(3));
    assert!(stdout(&report).contains("VIOLATED"));
}

#[test]
fn usage_errors_exit_with_2() {
    assert_eq!(langforge(&["generate"]).status.code(), Some(2), "missing language");
    assert_eq!(langforge(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(langforge(&["assemble", "--language", "X", "--subset", "nope"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "language_name = \"X\"\nunknown_key = 1\n").unwrap();
    assert_eq!(langforge(&["generate", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn assemble_without_checkpoints_is_a_stage_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = langforge(&["assemble", "--language", "Javanese", "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn emit_train_config_reports_the_diff() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("set.json");
    fs::write(&data, "[]\n").unwrap();
    let out = dir.path().join("c.yaml");
    let o = langforge(&[
        "emit-train-config",
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--set",
        "num_train_epochs=2.0",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let diff: Vec<&str> = text.lines().filter(|l| l.contains("->")).collect();
    assert_eq!(diff, vec!["num_train_epochs: 1.0 -> 2.0"]);
    assert!(fs::read_to_string(&out).unwrap().contains("num_train_epochs: 2.0\n"));

    let missing = langforge(&["emit-train-config", "--dataset", "/nonexistent.json", "--out", out.to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(3));
}

#[test]
fn eval_against_a_served_model() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("sib.jsonl");
    let rows: Vec<String> = (0..8)
        .map(|i| serde_json::json!({"index_id": i, "text": format!("Teks {i}"), "category": "travel"}).to_string())
        .collect();
    fs::write(&data, rows.join("\n")).unwrap();
    let server = MockServer::start(Duration::ZERO, |body| {
        let user = common::user_text(body);
        let answer = if user.ends_with("Teks 4\nCategories: science/technology, travel, politics, sports, health, entertainment, geography\nAnswer:") {
            "sports"
        } else {
            "travel"
        };
        (200, completion(answer))
    });
    let report = dir.path().join("r.json");
    let o = langforge(&[
        "eval",
        "--language",
        "Javanese",
        "--language-code",
        "jav_Latn",
        "--benchmark",
        "sib200",
        "--data",
        data.to_str().unwrap(),
        "--endpoint",
        &server.base_url,
        "--out",
        dir.path().to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["scored"], 5);
    assert_eq!(r["correct"], 4);
    assert_eq!(r["accuracy"], 0.8);
    for seen in server.seen() {
        assert_eq!(seen.body["temperature"], 0.0);
        assert_eq!(seen.body["repetition_penalty"], 1.0);
    }
}
