use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn sopstruct(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sopstruct"))
        .args(args)
        .current_dir(root())
        .env_remove("SOPSTRUCT_LLM_ENDPOINT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn evaluate_replay_writes_reports_and_artifacts() {
    let out = tempfile::tempdir().unwrap();
    let o = sopstruct(&[
        "evaluate",
        "--config",
        "fixtures/eval.json",
        "--mock-transcript",
        "fixtures/transcripts/fixtures.jsonl",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["report.md", "report.csv", "report.json", "domain.pddl"] {
        assert!(out.path().join(f).exists(), "{f}");
    }
    let doc = out.path().join("docs/corn_casserole");
    for f in ["sop.json", "problem.pddl", "plan.txt", "findings.jsonl", "segments.json", "verdicts.json", "transcript.jsonl"] {
        assert!(doc.join(f).exists(), "{f}");
    }
    let md = std::fs::read_to_string(out.path().join("report.md")).unwrap();
    assert!(md.contains("| Structured Plan Score | 100.00 |"));
    assert!(md.contains("- Model: mock"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = sopstruct(&[
            "evaluate",
            "--config",
            "fixtures/eval.json",
            "--mock-transcript",
            "fixtures/transcripts/fixtures.jsonl",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["report.md", "report.csv", "report.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn evaluate_without_client_is_a_config_error() {
    let out = tempfile::tempdir().unwrap();
    let o = sopstruct(&["evaluate", "--config", "fixtures/eval.json", "--out", out.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn score_precomputed_graphs_without_judges() {
    let out = tempfile::tempdir().unwrap();
    let o = sopstruct(&[
        "score",
        "--config",
        "fixtures/eval.json",
        "--dags",
        "fixtures/sops",
        "--format",
        "csv",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.path().join("report.csv")).unwrap();
    assert!(csv.contains("dataset,structured_plan,100\n"));
    assert!(csv.contains("dataset,completeness,\n"));
    assert!(!out.path().join("report.md").exists());
}

#[test]
fn validate_and_plan_fixture() {
    let o = sopstruct(&["validate", "fixtures/sops/api_lookup.json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["structured_plan_score"], 1);

    let o = sopstruct(&["plan", "fixtures/sops/api_lookup.json"]);
    assert_eq!(o.status.code(), Some(0));
    let plan = stdout(&o);
    assert!(plan.lines().last() == Some("execute-subtask3"), "{plan}");
}

#[test]
fn plan_file_is_checked_step_by_step() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plan.txt");
    std::fs::write(&path, "execute-subtask3\n").unwrap();
    let o = sopstruct(&["plan", "fixtures/sops/api_lookup.json", "--plan-file", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).starts_with("step 1:"));
}

#[test]
fn broken_graph_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cycle.json");
    std::fs::write(
        &path,
        r#"{"structured_SOP": {
            "a": {"name": "A", "description": "", "inputs": ["x"], "outputs": ["y"], "dependencies": ["b"], "inputs_from_dependencies": [], "category": "Decision"},
            "b": {"name": "B", "description": "", "inputs": ["y"], "outputs": ["z"], "dependencies": ["a"], "inputs_from_dependencies": [], "category": "Decision"}
        }}"#,
    )
    .unwrap();
    let o = sopstruct(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cycle"));
}

#[test]
fn emit_pddl_and_random_graphs() {
    let out = tempfile::tempdir().unwrap();
    let o = sopstruct(&["emit-pddl", "--random", "--seed", "9", "--out", out.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let domain = std::fs::read_to_string(out.path().join("domain.pddl")).unwrap();
    assert!(domain.contains("(domain sop-meta)"));
    assert!(out.path().join("problem.pddl").exists());

    let o = sopstruct(&["plan", "--random", "--seed", "9", "--search", "bfs"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn report_rerenders_json() {
    let out = tempfile::tempdir().unwrap();
    let o = sopstruct(&[
        "score",
        "--config",
        "fixtures/eval.json",
        "--dags",
        "fixtures/sops",
        "--format",
        "json",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = sopstruct(&["report", out.path().join("report.json").to_str().unwrap(), "--format", "md"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("# Evaluation results (%): fixtures"));
}
