use std::path::PathBuf;

use proptest::prelude::*;
use zeroshot_ie::components::{KbLinker, KnowledgeBase, KnowledgeBaseEntry, PatternMentionsExtractor};
use zeroshot_ie::pipeline::{LINKER_STAGE, MENTIONS_STAGE};
use zeroshot_ie::{ComponentSpec, Document, Entity, Error, Linker, Pipeline, PipelineConfig, Relation, Span, Stages};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn company_fruits() -> PipelineConfig {
    PipelineConfig::load(&fixtures().join("configs/company-fruits.json")).unwrap()
}

fn seven_texts() -> Vec<&'static str> {
    vec![
        "IBM headquarters are located in Armonk.",
        "Apples or oranges have a lot of vitamin C.",
        "",
        "The company sells pears, bananas and oranges.",
        "Apple announced a new phone while I ate an apple.",
        "Names of fruits such as pear, banana and orange.",
        "Microsoft is a company.",
    ]
}

#[test]
fn end_to_end_linker_skips_mentions() {
    let mut config = company_fruits();
    config.mentions_extractor = Some(ComponentSpec::new("pattern-mentions"));
    let pipeline = Pipeline::new(config).unwrap();
    let docs = pipeline.annotate(&seven_texts(), Some(2)).unwrap();
    assert_eq!(pipeline.call_counts().mentions, 0);
    assert_eq!(pipeline.call_counts().linker, 4);
    assert!(docs.iter().all(|d| d.mentions.is_empty() && !d.timing.contains_key(MENTIONS_STAGE)));
}

/// Labels every mention it is given with the first entity.
struct EchoLinker;

impl Linker for EchoLinker {
    fn predict(&self, docs: &[Document], entities: &[Entity], _: usize) -> zeroshot_ie::Result<Vec<Vec<Span>>> {
        Ok(docs
            .iter()
            .map(|d| {
                let mut spans: Vec<Span> =
                    d.mentions.iter().map(|m| Span::labeled(m.start, m.end, entities[0].name.clone(), 0.5)).collect();
                // a span outside the mention layer must be dropped by the pipeline
                if d.char_len() > 1 {
                    spans.push(Span::labeled(0, 1, entities[0].name.clone(), 0.9));
                }
                spans
            })
            .collect())
    }

    fn is_end_to_end(&self) -> bool {
        false
    }
}

#[test]
fn non_end_to_end_linker_counts_batches() {
    let config = PipelineConfig { entities: vec![Entity::new("X", "")], ..Default::default() };
    let stages = Stages {
        mentions: Some(Box::new(PatternMentionsExtractor::default())),
        linker: Some(Box::new(EchoLinker)),
        relations: None,
    };
    let pipeline = Pipeline::from_stages(config, stages).unwrap();
    let docs = pipeline.annotate(&seven_texts(), Some(3)).unwrap();
    assert_eq!(pipeline.call_counts().mentions, 3);
    assert_eq!(pipeline.call_counts().linker, 3);
    for d in &docs {
        let mentions: Vec<_> = d.mentions.iter().map(Span::key).collect();
        assert!(d.entities.iter().all(|e| mentions.contains(&e.key())));
        assert_eq!(d.entities.len(), d.mentions.len());
        assert!(d.timing.contains_key(MENTIONS_STAGE) && d.timing.contains_key(LINKER_STAGE));
    }
    pipeline.reset_counts();
    pipeline.annotate(&seven_texts(), Some(7)).unwrap();
    assert_eq!(pipeline.call_counts().mentions, 1);
}

#[test]
fn non_end_to_end_linker_needs_mentions() {
    let config = PipelineConfig { entities: vec![Entity::new("X", "")], ..Default::default() };
    let stages = Stages { linker: Some(Box::new(EchoLinker)), ..Default::default() };
    assert!(matches!(Pipeline::from_stages(config, stages), Err(Error::MissingMentionsExtractor { .. })));
}

#[test]
fn mentions_only_pipeline() {
    let pipeline = Pipeline::new(PipelineConfig::load(&fixtures().join("configs/mentions.json")).unwrap()).unwrap();
    let doc = pipeline.annotate_one("CH2O2 is similar to Acetamide").unwrap();
    assert_eq!(doc.mentions.len(), 2);
    assert!(doc.entities.is_empty() && doc.relations.is_empty());
}

#[test]
fn relations_reference_entity_layer() {
    let pipeline = Pipeline::new(PipelineConfig::load(&fixtures().join("configs/relations.json")).unwrap()).unwrap();
    let doc = pipeline.annotate_one("IBM headquarters are located in Armonk.").unwrap();
    assert_eq!(doc.entities.len(), 2);
    assert_eq!(doc.relations.len(), 2);
    let keys: Vec<_> = doc.entities.iter().map(Span::key).collect();
    for t in &doc.relations {
        assert!(keys.contains(&t.subject.key()) && keys.contains(&t.object.key()));
        assert_eq!(t.label, "located in");
    }
    // no entities, so the relation stage does not run for this document
    let empty = pipeline.annotate_one("nothing to see").unwrap();
    assert!(empty.relations.is_empty());
}

#[test]
fn relation_only_pipeline_over_given_entities() {
    let config = PipelineConfig {
        relations: vec![Relation::new("located in", "is located in a place")],
        relations_extractor: Some(ComponentSpec::new("cosine-relations")),
        ..Default::default()
    };
    let pipeline = Pipeline::new(config).unwrap();
    let mut doc = Document::new("IBM headquarters are located in Armonk.");
    doc.entities = vec![Span::labeled(0, 3, "company", 1.0), Span::labeled(32, 38, "location", 1.0)];
    let out = pipeline.annotate_docs(vec![doc, Document::new("no entities")], None).unwrap();
    assert!(!out.documents[0].relations.is_empty());
    assert!(out.documents[1].relations.is_empty());
    assert_eq!(pipeline.call_counts().relations, 1);
}

#[test]
fn kb_pipeline_from_file() {
    let pipeline = Pipeline::new(PipelineConfig::load(&fixtures().join("configs/kb.json")).unwrap()).unwrap();
    let doc = pipeline.annotate_one("IBM headquarters are located in Armonk.").unwrap();
    let ids: Vec<_> = doc.entities.iter().filter_map(|e| e.kb_id.as_deref()).collect();
    assert_eq!(ids, ["Q37156", "Q1452305"]);
}

#[test]
fn kb_linker_standalone_requires_mentions_in_config() {
    let kb = KnowledgeBase::new(vec![KnowledgeBaseEntry {
        id: "a".into(),
        title: "A".into(),
        aliases: vec![],
        description: String::new(),
    }])
    .unwrap();
    let stages = Stages { linker: Some(Box::new(KbLinker::new(kb))), ..Default::default() };
    let config = PipelineConfig { entities: vec![Entity::new("X", "")], ..Default::default() };
    assert!(Pipeline::from_stages(config, stages).is_err());
}

#[test]
fn empty_text_and_identity() {
    let pipeline = Pipeline::new(company_fruits()).unwrap();
    let doc = pipeline.annotate_one("").unwrap();
    assert_eq!(doc.text, "");
    assert!(doc.entities.is_empty() && doc.mentions.is_empty() && doc.relations.is_empty());
}

#[test]
fn batch_sizes_and_workers_agree() {
    let texts = seven_texts();
    let base = Pipeline::new(company_fruits()).unwrap();
    let strip = |docs: Vec<Document>| docs.into_iter().map(Document::without_timing).collect::<Vec<_>>();
    let a = strip(base.annotate(&texts, Some(3)).unwrap());
    let b = strip(base.annotate(&texts, Some(7)).unwrap());
    assert_eq!(a, b);
    let threaded = Pipeline::new(company_fruits()).unwrap().with_workers(3);
    assert_eq!(a, strip(threaded.annotate(&texts, Some(1)).unwrap()));
    assert_eq!(a, strip(base.annotate(&texts, None).unwrap()));
}

#[test]
fn timing_within_wall_time() {
    let pipeline = Pipeline::new(PipelineConfig::load(&fixtures().join("configs/relations.json")).unwrap()).unwrap();
    let started = std::time::Instant::now();
    let out = pipeline.annotate_docs(seven_texts().into_iter().map(Document::new).collect(), Some(2)).unwrap();
    let wall = started.elapsed().as_secs_f64();
    let staged: f64 = out.timings.iter().map(|t| t.seconds).sum();
    assert!(staged <= wall + 0.05);
    assert!(out.total_seconds <= wall + 0.05);
    for d in &out.documents {
        assert!(d.timing.values().sum::<f64>() <= wall + 0.05);
        assert!(d.timing.values().all(|s| *s >= 0.0));
    }
}

#[test]
fn non_text_inputs_rejected() {
    let pipeline = Pipeline::new(company_fruits()).unwrap();
    let inputs = [serde_json::json!("ok"), serde_json::json!({"text": "fine"}), serde_json::json!(5)];
    assert!(matches!(pipeline.annotate_values(&inputs, None), Err(Error::InvalidInput { index: 2 })));
    let ok = pipeline.annotate_values(&inputs[..2], None).unwrap();
    assert_eq!(ok.documents[1].text, "fine");
}

#[test]
fn unknown_component_named() {
    let mut config = company_fruits();
    config.linker = Some(ComponentSpec::new("linker-missing"));
    let err = Pipeline::new(config).unwrap_err();
    assert!(matches!(err, Error::UnknownComponent { .. }));
    assert!(err.to_string().contains("linker-missing"));
}

#[test]
fn zero_batch_size_rejected() {
    let pipeline = Pipeline::new(company_fruits()).unwrap();
    assert!(pipeline.annotate(&["x"], Some(0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn annotate_one_matches_annotate(text in "[A-Za-z ,.]{0,60}") {
        let pipeline = Pipeline::new(company_fruits()).unwrap();
        let one = pipeline.annotate_one(&text).unwrap().without_timing();
        let many = pipeline.annotate(&[text.as_str()], None).unwrap().remove(0).without_timing();
        prop_assert_eq!(&one.text, &text);
        prop_assert_eq!(one, many);
    }
}
