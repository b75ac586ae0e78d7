use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn dqkit(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dqkit"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Two separated classes with one duplicated row and one missing cell.
fn labelled_csv(dirty: bool) -> String {
    let mut s = String::from("x,y,colour,label\n");
    for i in 0..60 {
        let (label, shift) = if i % 2 == 0 { ("a", 0.0) } else { ("b", 20.0) };
        let x = ((i * 7) % 13) as f64 * 0.5 + shift;
        let y = ((i * 5) % 11) as f64;
        let colour = ["red", "green", "blue"][i % 3];
        if dirty && i == 10 {
            s.push_str(&format!("{x},,{colour},{label}\n"));
        } else {
            s.push_str(&format!("{x},{y},{colour},{label}\n"));
        }
    }
    if dirty {
        s.push_str("3.5,4,green,b\n3.5,4,green,b\n");
    }
    s
}

struct Work {
    dir: TempDir,
}

impl Work {
    fn new(csv: &str) -> Work {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("data.csv"), csv).unwrap();
        Work { dir }
    }

    fn path(&self) -> &Path {
        self.dir.path()
    }

    fn run(&self, args: &[&str]) -> Output {
        dqkit(args, self.path())
    }

    fn write(&self, name: &str, text: &str) {
        fs::write(self.path().join(name), text).unwrap();
    }

    fn read(&self, name: &str) -> String {
        fs::read_to_string(self.path().join(name)).unwrap()
    }

    fn ledger_lines(&self, out: &str) -> Vec<Value> {
        self.read(&format!("{out}/ledger.jsonl"))
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect()
    }

    fn json_files(&self, out: &str) -> Vec<String> {
        let mut names: Vec<String> = fs::read_dir(self.path().join(out))
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .filter(|n| n.ends_with(".json") && !n.contains("schema") && !n.starts_with("readiness"))
            .collect();
        names.sort();
        names
    }
}

const ASSESS: [&str; 8] = [
    "assess",
    "--input",
    "data.csv",
    "--target",
    "label",
    "--out",
    "out",
    "--fixed-clock",
];

#[test]
fn assess_labelled_writes_ten_results() {
    let w = Work::new(&labelled_csv(false));
    let o = w.run(&ASSESS);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(w.json_files("out").len(), 10);
    assert_eq!(w.ledger_lines("out").len(), 10);
    let r: Value = serde_json::from_str(&w.read("out/data_duplicates.json")).unwrap();
    assert_eq!(r["score"], 1.0);
    assert_eq!(r["timestamp"], "2000-01-01T00:00:00Z");
    assert!(w.path().join("out/quality_result.schema.json").is_file());
}

#[test]
fn assess_unlabelled_skips_label_metrics() {
    let w = Work::new(&labelled_csv(false));
    let o = w.run(&["assess", "--input", "data.csv", "--out", "out"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(w.json_files("out").len(), 6);
    assert_eq!(stderr(&o).matches("warning:").count(), 4);
}

#[test]
fn missing_input_is_a_usage_error() {
    let w = Work::new("");
    let o = w.run(&["assess", "--input", "nope.csv", "--out", "out"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("nope.csv"));
}

#[test]
fn failing_metric_exits_2_after_writing_the_rest() {
    let w = Work::new(&labelled_csv(false));
    w.write(
        "cfg.toml",
        "[data_fairness]\nprotected_attribute = \"missing\"\nprivileged_values = [\"x\"]\nfavorable_label = \"a\"\n",
    );
    let mut args = ASSESS.to_vec();
    args.extend(["--config", "cfg.toml"]);
    let o = w.run(&args);
    assert_eq!(code(&o), 2);
    assert_eq!(w.json_files("out").len(), 9);
    assert!(stderr(&o).contains("data_fairness"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let w = Work::new(&labelled_csv(false));
    w.write("cfg.toml", "[class_overlap]\nneighbours = 4\n");
    let o = w.run(&["assess", "--input", "data.csv", "--config", "cfg.toml"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("neighbours"), "{}", stderr(&o));
}

#[test]
fn flags_override_the_config() {
    let w = Work::new(&labelled_csv(false));
    w.write("cfg.toml", "input = \"data.csv\"\ntarget = \"colour\"\nout = \"cfg_out\"\nmetrics = [\"class_parity\"]\n");
    let o = w.run(&["assess", "--config", "cfg.toml", "--target", "label", "--out", "flag_out"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(!w.path().join("cfg_out").exists());
    let r: Value = serde_json::from_str(&w.read("flag_out/class_parity.json")).unwrap();
    assert_eq!(r["details"]["class_counts"]["a"], 30);
}

#[test]
fn remediate_duplicates_rewrites_csv_and_grows_ledger() {
    let w = Work::new(&labelled_csv(true));
    assert_eq!(code(&w.run(&ASSESS)), 0);
    let o = w.run(&[
        "remediate", "--input", "data.csv", "--target", "label", "--out", "out", "--op", "remove_duplicates",
        "--fixed-clock",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(w.ledger_lines("out").len(), 11);
    let csv = w.read("out/remediated.csv");
    assert_eq!(csv.lines().count(), 1 + 61);
}

#[test]
fn plan_steps_are_recorded_in_order() {
    let w = Work::new(&labelled_csv(true));
    assert_eq!(code(&w.run(&ASSESS)), 0);
    w.write(
        "plan.json",
        r#"{"steps": [{"op": "remove_duplicates"}, {"op": "impute_missing"}, {"op": "remove_outliers"}]}"#,
    );
    let o = w.run(&[
        "remediate", "--input", "data.csv", "--target", "label", "--out", "out", "--plan", "plan.json",
        "--fixed-clock", "--force",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let ops: Vec<String> = w.ledger_lines("out")[10..]
        .iter()
        .map(|e| e["op_id"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(ops, ["remove_duplicates", "impute_missing", "remove_outliers"]);
}

#[test]
fn stale_decisions_exit_2_with_fingerprints() {
    let w = Work::new(&labelled_csv(true));
    assert_eq!(code(&w.run(&ASSESS)), 0);
    w.write(
        "decisions.json",
        r#"{"answers_fingerprint": "0000", "rows": [{"row": 1, "accept": true}]}"#,
    );
    let o = w.run(&[
        "remediate", "--input", "data.csv", "--target", "label", "--out", "out", "--op", "remove_duplicates",
        "--decisions", "decisions.json",
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("decisions answer fingerprint 0000, current result is "));
}

#[test]
fn unrecommended_op_needs_force() {
    let w = Work::new(&labelled_csv(false));
    assert_eq!(code(&w.run(&ASSESS)), 0);
    let base = [
        "remediate", "--input", "data.csv", "--target", "label", "--out", "out", "--op", "remove_duplicates",
    ];
    let o = w.run(&base);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--force"));
    let mut forced = base.to_vec();
    forced.push("--force");
    assert_eq!(code(&w.run(&forced)), 0);
}

#[test]
fn report_formats_and_contents() {
    let w = Work::new(&labelled_csv(true));
    assert_eq!(code(&w.run(&ASSESS)), 0);
    let o = w.run(&["report", "--out", "out", "--format", "json", "--fixed-clock"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let baseline: Value = serde_json::from_str(&w.read("out/readiness_report.json")).unwrap();
    assert!(baseline["summary"].as_array().unwrap().iter().all(|r| r["delta"] == 0.0));

    w.run(&[
        "remediate", "--input", "data.csv", "--target", "label", "--out", "out", "--op", "remove_duplicates",
    ]);
    let o = w.run(&["report", "--out", "out", "--format", "json,html", "--fixed-clock"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(w.path().join("out/readiness_report.html").is_file());
    let after: Value = serde_json::from_str(&w.read("out/readiness_report.json")).unwrap();
    let dup = after["summary"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["metric_id"] == "data_duplicates")
        .unwrap()
        .clone();
    assert!(dup["baseline_score"].as_f64().unwrap() < 1.0);
    assert_eq!(dup["latest_score"], 1.0);
    assert_eq!(after["lineage"].as_array().unwrap().len(), 11);
}

#[test]
fn empty_or_corrupt_ledger_exits_2() {
    let w = Work::new("");
    fs::create_dir(w.path().join("out")).unwrap();
    w.write("out/ledger.jsonl", "");
    assert_eq!(code(&w.run(&["report", "--out", "out"])), 2);
    w.write("out/ledger.jsonl", "{\"op_id\": 3}\n");
    let o = w.run(&["report", "--out", "out"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("corrupt ledger line 1"));
    assert_eq!(code(&w.run(&["report", "--out", "elsewhere"])), 1);
}

fn pipeline(w: &Work, out: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let run = |args: &[&str]| {
        let o = w.run(args);
        assert_eq!(code(&o), 0, "{args:?}: {}", stderr(&o));
    };
    run(&[
        "assess", "--input", "data.csv", "--target", "label", "--out", out, "--seed", "7", "--fixed-clock",
    ]);
    run(&[
        "remediate", "--input", "data.csv", "--target", "label", "--out", out, "--seed", "7", "--plan",
        "plan.json", "--fixed-clock", "--force",
    ]);
    let remediated = format!("{out}/remediated.csv");
    run(&[
        "assess", "--input", &remediated, "--target", "label", "--out", out, "--seed", "7", "--fixed-clock",
    ]);
    run(&["report", "--out", out, "--format", "json,md,html", "--fixed-clock"]);
    let mut files: Vec<(PathBuf, Vec<u8>)> = fs::read_dir(w.path().join(out))
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (PathBuf::from(p.file_name().unwrap()), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn pipeline_is_byte_deterministic() {
    let w = Work::new(&labelled_csv(true));
    w.write(
        "plan.json",
        r#"[{"op": "remove_duplicates"}, {"op": "impute_missing"}, {"op": "resample", "params": {"method": "smote"}}]"#,
    );
    let a = pipeline(&w, "a");
    let b = pipeline(&w, "b");
    assert_eq!(a.len(), b.len());
    assert!(a.len() >= 15);
    for ((na, ba), (nb, bb)) in a.iter().zip(&b) {
        assert_eq!(na, nb);
        assert!(ba == bb, "{} differs", na.display());
    }
    let ledger: Vec<Value> = w.ledger_lines("a");
    assert_eq!(ledger.len(), 10 + 3 + 10);
    for pair in ledger.windows(2) {
        assert_eq!(pair[0]["output_fingerprint"], pair[1]["input_fingerprint"]);
    }
}

#[test]
fn version_prints() {
    let o = dqkit(&["version"], Path::new("."));
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("dqkit "));
}
