mod support;

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use rand::{rngs::StdRng, SeedableRng};
use support::metrics_oracle::{oracle, OracleCase, OracleSpan};
use support::random_cases::{random_instance, RawCase, RawSpan};
use zeroshot_ie::evaluation::{
    compute_metrics, format_report, load_dataset, validate_zero_shot_splits, Evaluator, LabeledExample, MetricsReport,
};
use zeroshot_ie::{Document, Error, PipelineConfig, Span};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn to_lib(cases: &[RawCase]) -> (Vec<LabeledExample>, Vec<Document>) {
    let spans = |v: &[RawSpan]| v.iter().map(|(s, e, l)| Span::labeled(*s, *e, l.clone(), 1.0)).collect::<Vec<_>>();
    let gold = cases
        .iter()
        .map(|c| LabeledExample { text: c.text.clone(), entities: spans(&c.gold), relations: vec![] })
        .collect();
    let pred = cases
        .iter()
        .map(|c| {
            let mut d = Document::new(c.text.as_str());
            d.entities = spans(&c.pred);
            d
        })
        .collect();
    (gold, pred)
}

fn to_oracle(cases: &[RawCase]) -> Vec<OracleCase> {
    let spans = |v: &[RawSpan]| v.iter().map(|(s, e, l)| OracleSpan { start: *s, end: *e, label: l.clone() }).collect();
    cases.iter().map(|c| OracleCase { text: c.text.clone(), gold: spans(&c.gold), pred: spans(&c.pred) }).collect()
}

fn headline(r: &MetricsReport) -> [f64; 7] {
    [
        r.overall_precision_micro,
        r.overall_recall_micro,
        r.overall_f1_micro,
        r.overall_precision_macro,
        r.overall_recall_macro,
        r.overall_f1_macro,
        r.overall_accuracy.unwrap(),
    ]
}

#[test]
fn metrics_match_oracle_on_random_instances() {
    let mut rng = StdRng::seed_from_u64(7);
    for i in 0..1000 {
        let cases = random_instance(&mut rng);
        let (gold, pred) = to_lib(&cases);
        let got = headline(&compute_metrics(&gold, &pred).unwrap());
        let o = oracle(&to_oracle(&cases));
        let want = [o.p_micro, o.r_micro, o.f1_micro, o.p_macro, o.r_macro, o.f1_macro, o.accuracy];
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-12, "instance {i}: {got:?} vs {want:?}");
        }
    }
}

#[test]
fn renaming_classes_is_symmetric() {
    let mut rng = StdRng::seed_from_u64(11);
    let rename = |l: &String| match l.as_str() {
        "A" => "C".to_string(),
        "B" => "A".to_string(),
        _ => "B".to_string(),
    };
    for _ in 0..200 {
        let cases = random_instance(&mut rng);
        let renamed: Vec<RawCase> = cases
            .iter()
            .map(|c| RawCase {
                text: c.text.clone(),
                gold: c.gold.iter().map(|(s, e, l)| (*s, *e, rename(l))).collect(),
                pred: c.pred.iter().map(|(s, e, l)| (*s, *e, rename(l))).collect(),
            })
            .collect();
        let (g1, p1) = to_lib(&cases);
        let (g2, p2) = to_lib(&renamed);
        assert_eq!(headline(&compute_metrics(&g1, &p1).unwrap()), headline(&compute_metrics(&g2, &p2).unwrap()));
    }
}

#[test]
fn macro_between_class_extremes() {
    let mut rng = StdRng::seed_from_u64(13);
    for _ in 0..300 {
        let (gold, pred) = to_lib(&random_instance(&mut rng));
        let r = compute_metrics(&gold, &pred).unwrap();
        if r.per_class.is_empty() {
            assert_eq!(r.overall_f1_macro, 0.0);
            continue;
        }
        let f1s: Vec<f64> = r.per_class.values().map(|c| c.f1).collect();
        let lo = f1s.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = f1s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(lo - 1e-12 <= r.overall_f1_macro && r.overall_f1_macro <= hi + 1e-12);
        for v in headline(&r) {
            assert!((0.0..=1.0).contains(&v));
        }
    }
}

#[test]
fn fixture_dataset_loads_disjoint_splits() {
    let dataset = load_dataset(&fixtures().join("dataset")).unwrap();
    assert_eq!(dataset.keys().collect::<Vec<_>>(), ["test", "train", "validation"]);
    assert!(dataset.values().all(|s| s.examples.len() == 4));
    assert!(validate_zero_shot_splits(&dataset).ok);

    let overlap = validate_zero_shot_splits(&load_dataset(&fixtures().join("dataset_overlap")).unwrap());
    assert!(!overlap.ok);
    let classes: Vec<_> = overlap.violations.iter().map(|v| v.class.as_str()).collect();
    assert!(classes.contains(&"person") && classes.contains(&"city"));
}

#[test]
fn out_of_bounds_span_names_example() {
    let dir = tempdir();
    fs::write(
        dir.join("test.jsonl"),
        "{\"text\": \"short\", \"entities\": []}\n{\"text\": \"tiny\", \"entities\": [{\"start\": 2, \"end\": 9, \"label\": \"x\"}]}\n",
    )
    .unwrap();
    fs::write(dir.join("classes.test.json"), r#"{"entities": [{"name": "x"}]}"#).unwrap();
    let err = load_dataset(&dir).unwrap_err();
    assert!(matches!(err, Error::SpanOutOfBounds { example: 1, end: 9, .. }), "{err}");
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn empty_split_file_is_empty_split() {
    let dir = tempdir();
    fs::write(dir.join("validation.jsonl"), "").unwrap();
    fs::write(dir.join("classes.validation.json"), "{}").unwrap();
    let dataset = load_dataset(&dir).unwrap();
    assert!(dataset["validation"].examples.is_empty());
    fs::remove_dir_all(dir).unwrap();
}

fn tempdir() -> PathBuf {
    let id = format!("{:?}", std::thread::current().id()).replace(|c: char| !c.is_alphanumeric(), "");
    let dir = std::env::temp_dir().join(format!("zsie-eval-{}-{id}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn oracle_dictionary_scores_perfectly() {
    let config = PipelineConfig::load(&fixtures().join("configs/oracle-test.json")).unwrap();
    let dataset = load_dataset(&fixtures().join("dataset")).unwrap();
    let reports = Evaluator::new(config).evaluate(&dataset, &["test"]).unwrap();
    let r = &reports["test"];
    assert_eq!(headline(r), [1.0; 7]);
    assert!((r.samples_per_second * r.latency_in_seconds - 1.0).abs() < 1e-6);

    let table = format_report(&BTreeMap::from([("oracle".to_string(), reports)]));
    assert!(table.contains("100.00%"));
    for row in ["total_time_in_seconds", "samples_per_second", "latency_in_seconds"] {
        assert!(table.contains(row), "{row}");
    }
}

#[test]
fn two_splits_give_two_reports() {
    let config = PipelineConfig::load(&fixtures().join("configs/oracle-test.json")).unwrap();
    let dataset = load_dataset(&fixtures().join("dataset")).unwrap();
    let reports = Evaluator::new(config).evaluate(&dataset, &["test", "validation"]).unwrap();
    assert_eq!(reports.len(), 2);
    // the validation split brings its own classes, which the vocabulary does not cover
    assert_eq!(reports["validation"].overall_f1_micro, 0.0);
}

#[test]
fn unknown_split_rejected_before_running() {
    let config = PipelineConfig::load(&fixtures().join("configs/oracle-test.json")).unwrap();
    let dataset = load_dataset(&fixtures().join("dataset")).unwrap();
    let err = Evaluator::new(config).evaluate(&dataset, &["test", "dev"]).unwrap_err();
    assert!(matches!(err, Error::UnknownSplit(ref s) if s == "dev"));
}

#[test]
fn relation_task_uses_gold_entities() {
    let config = PipelineConfig::load(&fixtures().join("configs/relations.json")).unwrap();
    let dataset = load_dataset(&fixtures().join("dataset")).unwrap();
    let reports = Evaluator::new(config)
        .with_task(zeroshot_ie::evaluation::Task::Relations)
        .evaluate(&dataset, &["validation"])
        .unwrap();
    let r = &reports["validation"];
    assert!(r.overall_accuracy.is_none());
    assert!((0.0..=1.0).contains(&r.overall_f1_micro));
}
