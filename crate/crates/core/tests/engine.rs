mod common;

use chrono::{TimeZone, Utc};
use common::*;
use dqkit_core::engine::{render_report, EntryKind, ReadinessReport, ReportFormat, RowDecision};
use dqkit_core::fairness::FairnessSpec;
use dqkit_core::purity::detect_noise;
use dqkit_core::{Clock, ColumnKind, Dataset, DecisionFile, Engine, EngineConfig, Error, Ledger, MetricId, RemediationOp};
use serde_json::{json, Value as Json};

fn clock() -> Clock {
    Clock::Fixed(Utc.with_ymd_and_hms(2024, 5, 1, 12, 0, 0).unwrap())
}

fn noisy(seed: u64) -> Dataset {
    let pts = gaussian_points(seed, &[150, 150], &[[0.0, 0.0], [4.0, 0.0]]);
    points_dataset(&flip_labels(seed, &pts, 2, 0.1).0)
}

fn with_duplicates(ds: &Dataset) -> Dataset {
    let mut rows = ds.rows().to_vec();
    rows.push(rows[0].clone());
    rows.push(rows[1].clone());
    ds.with_rows(rows).unwrap()
}

fn unlabeled() -> Dataset {
    Dataset::from_rows(
        vec![("a".into(), ColumnKind::Numeric), ("b".into(), ColumnKind::Numeric)],
        (0..40).map(|i| vec![num(i as f64), num(((i * 7) % 13) as f64)]).collect(),
        None,
    )
    .unwrap()
}

#[test]
fn labelled_dataset_gets_all_ten_results() {
    let mut engine = Engine::new(EngineConfig::default(), clock());
    let summary = engine.run_all(&noisy(0), &MetricId::ALL).unwrap();
    assert_eq!(summary.results.len(), 10);
    assert!(summary.skipped.is_empty() && summary.failures.is_empty());
    let order: Vec<MetricId> = engine.ledger().entries().iter().map(|e| e.metric_id).collect();
    assert_eq!(order, MetricId::ALL.to_vec());
    assert!(summary.results.iter().all(|r| (0.0..=1.0).contains(&r.score)));
}

#[test]
fn unlabeled_dataset_skips_four_metrics() {
    let mut engine = Engine::new(EngineConfig::default(), clock());
    let summary = engine.run_all(&unlabeled(), &MetricId::ALL).unwrap();
    assert_eq!(summary.results.len(), 6);
    let skipped: Vec<MetricId> = summary.skipped.iter().map(|(m, _)| *m).collect();
    assert_eq!(
        skipped,
        vec![
            MetricId::ClassOverlap,
            MetricId::LabelPurity,
            MetricId::ClassParity,
            MetricId::DataFairness
        ]
    );
    assert_eq!(engine.ledger().len(), 6);
}

#[test]
fn one_failing_metric_does_not_abort_the_batch() {
    let cfg = EngineConfig {
        data_fairness: Some(FairnessSpec {
            protected_attribute: "no_such_column".into(),
            privileged_values: vec!["a".into()],
            favorable_label: "c0".into(),
            repair_level: 1.0,
        }),
        ..Default::default()
    };
    let mut engine = Engine::new(cfg, clock());
    let summary = engine.run_all(&noisy(1), &MetricId::ALL).unwrap();
    assert_eq!(summary.results.len(), 9);
    assert_eq!(summary.failures.len(), 1);
    assert_eq!(summary.failures[0].0, MetricId::DataFairness);
    assert!(summary.failures[0].1.contains("no_such_column"));
    let failed: Vec<_> = engine.ledger().entries().iter().filter(|e| e.failed()).collect();
    assert_eq!(failed.len(), 1);
    assert!(failed[0].result.is_none());
}

#[test]
fn label_metric_without_target_is_an_error() {
    let mut engine = Engine::new(EngineConfig::default(), clock());
    let err = engine.run_metric(&unlabeled(), MetricId::LabelPurity).unwrap_err();
    assert_eq!(err.to_string(), "target required");
}

#[test]
fn repeated_runs_record_identical_scores() {
    let ds = noisy(2);
    let mut engine = Engine::new(EngineConfig::default(), clock());
    let a = engine.run_metric(&ds, MetricId::LabelPurity).unwrap();
    let b = engine.run_metric(&ds, MetricId::LabelPurity).unwrap();
    assert_eq!(a, b);
    assert_eq!(engine.ledger().len(), 2);
}

#[test]
fn clean_duplicates_is_a_recorded_no_op() {
    let ds = noisy(3);
    let mut engine = Engine::new(EngineConfig::default(), clock());
    let r = engine
        .apply_remediation(&ds, RemediationOp::RemoveDuplicates, &json!({}), None)
        .unwrap();
    assert_eq!(r.dataset.fingerprint(), ds.fingerprint());
    assert_eq!(r.entry.rows_affected, 0);
    assert_eq!(r.entry.score_before, Some(1.0));
    assert_eq!(engine.ledger().len(), 1);
}

#[test]
fn accepting_three_of_five_suggestions_changes_three_rows() {
    let ds = noisy(0);
    let cfg = EngineConfig::default();
    let candidates = detect_noise(&ds, &cfg.purity()).unwrap().candidates;
    assert!(candidates.len() >= 5);
    let rows = candidates[..5]
        .iter()
        .enumerate()
        .map(|(i, c)| RowDecision {
            row: c.row,
            accept: i % 2 == 0,
            override_label: None,
        })
        .collect();
    let decisions = DecisionFile {
        answers_fingerprint: Some(ds.fingerprint().to_string()),
        rows,
        ..Default::default()
    };
    let mut engine = Engine::new(cfg, clock());
    let r = engine
        .apply_remediation(&ds, RemediationOp::CorrectLabels, &json!({}), Some(&decisions))
        .unwrap();
    assert_eq!(r.entry.rows_affected, 3);
    assert_eq!(r.entry.decisions_ref, Some(decisions.fingerprint()));
    let t = ds.target_index().unwrap();
    let changed = (0..ds.n_rows()).filter(|&i| ds.cell(i, t) != r.dataset.cell(i, t)).count();
    assert_eq!(changed, 3);
}

#[test]
fn stale_decisions_are_rejected_and_recorded_nowhere() {
    let ds = noisy(0);
    let decisions = DecisionFile {
        answers_fingerprint: Some("abc".into()),
        rows: vec![RowDecision {
            row: 0,
            accept: true,
            override_label: None,
        }],
        ..Default::default()
    };
    let mut engine = Engine::new(EngineConfig::default(), clock());
    let err = engine
        .apply_remediation(&ds, RemediationOp::CorrectLabels, &json!({}), Some(&decisions))
        .unwrap_err();
    assert!(matches!(err, Error::StaleDecisions { .. }));
    assert_eq!(
        err.to_string(),
        format!("decisions answer fingerprint abc, current result is {}", ds.fingerprint())
    );
    assert!(engine.ledger().is_empty());
}

#[test]
fn remediation_on_a_dataset_off_the_chain_is_refused() {
    let ds = noisy(0);
    let mut engine = Engine::new(EngineConfig::default(), clock());
    engine.run_metric(&ds, MetricId::DataDuplicates).unwrap();
    let other = noisy(1);
    let err = engine
        .apply_remediation(&other, RemediationOp::RemoveDuplicates, &json!({}), None)
        .unwrap_err();
    assert!(matches!(err, Error::ChainBroken { .. }));
}

#[test]
fn failed_remediation_keeps_the_score() {
    let ds = noisy(0);
    let mut engine = Engine::new(EngineConfig::default(), clock());
    let err = engine
        .apply_remediation(&ds, RemediationOp::RepairFeatures, &json!({}), None)
        .unwrap_err();
    assert!(err.to_string().contains("fairness spec"));
    let entry = &engine.ledger().entries()[0];
    assert!(entry.failed());
    assert_eq!(entry.score_after, entry.score_before);
    assert_eq!(entry.output_fingerprint, entry.input_fingerprint);
}

fn assessed_and_remediated() -> (Engine, Dataset) {
    let ds = with_duplicates(&noisy(4));
    let mut engine = Engine::new(EngineConfig::default(), clock());
    engine.run_all(&ds, &MetricId::ALL).unwrap();
    let mut current = ds;
    for (op, params) in [
        (RemediationOp::RemoveDuplicates, json!({})),
        (RemediationOp::CorrectLabels, json!({})),
        (RemediationOp::RemoveOutliers, json!({})),
    ] {
        current = engine.apply_remediation(&current, op, &params, None).unwrap().dataset;
    }
    (engine, current)
}

#[test]
fn report_has_ten_summary_rows_and_thirteen_lineage_entries() {
    let (engine, current) = assessed_and_remediated();
    let t = Utc.with_ymd_and_hms(2024, 5, 2, 0, 0, 0).unwrap();
    let report = ReadinessReport::from_ledger(engine.ledger(), t).unwrap();
    assert_eq!(report.summary.len(), 10);
    assert_eq!(report.lineage.len(), 13);
    assert_eq!(report.current_fingerprint, current.fingerprint());
    assert_eq!(
        report.lineage.iter().filter(|e| e.kind == EntryKind::Remediation).count(),
        3
    );
    engine.ledger().verify_chain().unwrap();
}

#[test]
fn markdown_embeds_the_json_scores() {
    let (engine, _) = assessed_and_remediated();
    let t = Utc.with_ymd_and_hms(2024, 5, 2, 0, 0, 0).unwrap();
    let json: Json = serde_json::from_str(&render_report(engine.ledger(), ReportFormat::Json, t).unwrap()).unwrap();
    let md = render_report(engine.ledger(), ReportFormat::Markdown, t).unwrap();
    for row in json["summary"].as_array().unwrap() {
        let id = row["metric_id"].as_str().unwrap();
        let line = md
            .lines()
            .find(|l| l.starts_with(&format!("| {id} |")))
            .unwrap_or_else(|| panic!("no markdown row for {id}"));
        let cells: Vec<f64> = line
            .split('|')
            .map(str::trim)
            .filter(|c| !c.is_empty())
            .skip(1)
            .map(|c| c.parse().unwrap())
            .collect();
        let want: Vec<f64> = ["baseline_score", "latest_score", "delta"]
            .iter()
            .map(|k| row[*k].as_f64().unwrap())
            .collect();
        assert_eq!(cells, want, "{id}");
    }
}

#[test]
fn another_remediation_moves_only_its_own_metric() {
    let (mut engine, current) = assessed_and_remediated();
    let t = Utc.with_ymd_and_hms(2024, 5, 2, 0, 0, 0).unwrap();
    let before = ReadinessReport::from_ledger(engine.ledger(), t).unwrap();
    engine
        .apply_remediation(&current, RemediationOp::Resample, &json!({ "method": "smote" }), None)
        .unwrap();
    let after = ReadinessReport::from_ledger(engine.ledger(), t).unwrap();
    for (b, a) in before.summary.iter().zip(&after.summary) {
        assert_eq!(b.metric_id, a.metric_id);
        assert_eq!(b.baseline_score, a.baseline_score);
        if a.metric_id != MetricId::ClassParity {
            assert_eq!(b.latest_score, a.latest_score, "{}", a.metric_id);
        }
    }
}

#[test]
fn report_regeneration_is_deterministic() {
    let t = Utc.with_ymd_and_hms(2024, 5, 2, 0, 0, 0).unwrap();
    let (a, _) = assessed_and_remediated();
    let (b, _) = assessed_and_remediated();
    assert_eq!(a.ledger().to_jsonl(), b.ledger().to_jsonl());
    for f in [ReportFormat::Json, ReportFormat::Markdown, ReportFormat::Html] {
        assert_eq!(
            render_report(a.ledger(), f, t).unwrap(),
            render_report(b.ledger(), f, t).unwrap()
        );
    }
}

#[test]
fn ledger_survives_a_round_trip_through_disk() {
    let (engine, _) = assessed_and_remediated();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ledger.jsonl");
    engine.ledger().save(&path).unwrap();
    let back = Ledger::load(&path).unwrap();
    assert_eq!(back.to_jsonl(), engine.ledger().to_jsonl());
    std::fs::write(&path, "{not json}\n").unwrap();
    assert!(Ledger::load(&path).unwrap_err().to_string().contains("corrupt ledger line 1"));
}
