//! Stage orchestration: mentions, then linking, then relations.
//!
//! When the linker is end-to-end the mention stage is skipped entirely.
//! Inputs are processed in batches; each document's `timing` map receives
//! the elapsed seconds of every stage that ran on its batch.

use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde_json::Value;

use crate::components::{Linker, MentionsExtractor, Registry, RelationsExtractor};
use crate::error::{Error, Result};
use crate::model::{validate_stages, Document, PipelineConfig, RelationTriple, Span};

pub const MENTIONS_STAGE: &str = "mentions_extractor";
pub const LINKER_STAGE: &str = "linker";
pub const RELATIONS_STAGE: &str = "relations_extractor";

#[derive(Debug, Clone, PartialEq)]
pub struct StageTiming {
    pub stage: &'static str,
    pub seconds: f64,
    pub documents: usize,
}

/// Number of stage invocations (one per batch) since construction or the
/// last reset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StageCounts {
    pub mentions: usize,
    pub linker: usize,
    pub relations: usize,
}

#[derive(Debug, Default)]
struct Counters {
    mentions: AtomicUsize,
    linker: AtomicUsize,
    relations: AtomicUsize,
}

/// The component instances filling each stage.
#[derive(Default)]
pub struct Stages {
    pub mentions: Option<Box<dyn MentionsExtractor>>,
    pub linker: Option<Box<dyn Linker>>,
    pub relations: Option<Box<dyn RelationsExtractor>>,
}

pub struct Pipeline {
    config: PipelineConfig,
    stages: Stages,
    workers: usize,
    counters: Counters,
    exclusive: Option<Mutex<()>>,
}

impl std::fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pipeline")
            .field("config", &self.config)
            .field("workers", &self.workers)
            .field("counts", &self.call_counts())
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotateOutput {
    pub documents: Vec<Document>,
    /// Per-stage totals for this call.
    pub timings: Vec<StageTiming>,
    pub total_seconds: f64,
}

impl Pipeline {
    /// Builds every configured stage from the built-in registry.
    pub fn new(config: PipelineConfig) -> Result<Self> {
        Self::with_registry(config, &Registry::builtin())
    }

    pub fn with_registry(config: PipelineConfig, registry: &Registry) -> Result<Self> {
        config.validate_with(registry)?;
        let stages = Stages {
            mentions: config.mentions_extractor.as_ref().map(|s| registry.build_mentions(s)).transpose()?,
            linker: config.linker.as_ref().map(|s| registry.build_linker(s)).transpose()?,
            relations: config.relations_extractor.as_ref().map(|s| registry.build_relations(s)).transpose()?,
        };
        Self::from_stages(config, stages)
    }

    /// Uses the given component instances; stage references in `config` are
    /// ignored.
    pub fn from_stages(config: PipelineConfig, stages: Stages) -> Result<Self> {
        config.validate_classes()?;
        let linker_key = config.linker.as_ref().map_or("custom", |s| s.key.as_str());
        validate_stages(
            stages.mentions.is_some(),
            stages.linker.as_ref().map(|l| (linker_key, l.is_end_to_end())),
            stages.relations.is_some(),
        )?;
        let exclusive = stages.mentions.as_ref().is_some_and(|c| c.exclusive())
            || stages.linker.as_ref().is_some_and(|c| c.exclusive())
            || stages.relations.as_ref().is_some_and(|c| c.exclusive());
        Ok(Self {
            config,
            stages,
            workers: 1,
            counters: Counters::default(),
            exclusive: exclusive.then(|| Mutex::new(())),
        })
    }

    /// Worker threads for batch dispatch. Ignored when a component is
    /// exclusive.
    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn call_counts(&self) -> StageCounts {
        StageCounts {
            mentions: self.counters.mentions.load(Ordering::SeqCst),
            linker: self.counters.linker.load(Ordering::SeqCst),
            relations: self.counters.relations.load(Ordering::SeqCst),
        }
    }

    pub fn reset_counts(&self) {
        self.counters.mentions.store(0, Ordering::SeqCst);
        self.counters.linker.store(0, Ordering::SeqCst);
        self.counters.relations.store(0, Ordering::SeqCst);
    }

    fn runs_mention_stage(&self) -> bool {
        self.stages.mentions.is_some() && self.stages.linker.as_ref().is_none_or(|l| !l.is_end_to_end())
    }

    pub fn annotate<S: AsRef<str>>(&self, texts: &[S], batch_size: Option<usize>) -> Result<Vec<Document>> {
        let docs = texts.iter().map(|t| Document::new(t.as_ref())).collect();
        Ok(self.annotate_docs(docs, batch_size)?.documents)
    }

    pub fn annotate_one(&self, text: &str) -> Result<Document> {
        let mut docs = self.annotate(&[text], None)?;
        Ok(docs.remove(0))
    }

    /// Accepts JSON strings or `{"text": ...}` objects.
    pub fn annotate_values(&self, inputs: &[Value], batch_size: Option<usize>) -> Result<AnnotateOutput> {
        let docs = inputs
            .iter()
            .enumerate()
            .map(|(index, v)| match v {
                Value::String(s) => Ok(Document::new(s.as_str())),
                Value::Object(o) => match o.get("text") {
                    Some(Value::String(s)) => Ok(Document::new(s.as_str())),
                    _ => Err(Error::InvalidInput { index }),
                },
                _ => Err(Error::InvalidInput { index }),
            })
            .collect::<Result<Vec<_>>>()?;
        self.annotate_docs(docs, batch_size)
    }

    /// Annotates pre-built documents. Existing layers are kept, so a
    /// relation-only pipeline can run over gold entity spans.
    pub fn annotate_docs(&self, docs: Vec<Document>, batch_size: Option<usize>) -> Result<AnnotateOutput> {
        let _guard = self.exclusive.as_ref().map(|m| m.lock().unwrap_or_else(|p| p.into_inner()));
        let batch_size = batch_size.unwrap_or(self.config.batch_size);
        if batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be positive".into()));
        }
        let started = Instant::now();
        let mut batches: Vec<Vec<Document>> = Vec::new();
        let mut docs = docs.into_iter().peekable();
        while docs.peek().is_some() {
            batches.push(docs.by_ref().take(batch_size).collect());
        }

        let workers = if self.exclusive.is_some() { 1 } else { self.workers.min(batches.len()).max(1) };
        let results: Vec<Result<(Vec<Document>, Vec<StageTiming>)>> = if workers == 1 {
            batches.into_iter().map(|b| self.run_batch(b, batch_size)).collect()
        } else {
            let mut slots: Vec<Option<Result<_>>> = (0..batches.len()).map(|_| None).collect();
            let mut indexed: Vec<(usize, Vec<Document>)> = batches.into_iter().enumerate().collect();
            let per_worker = indexed.len().div_ceil(workers);
            std::thread::scope(|scope| {
                let mut handles = Vec::new();
                while !indexed.is_empty() {
                    let rest = indexed.split_off(per_worker.min(indexed.len()));
                    let group = std::mem::replace(&mut indexed, rest);
                    handles.push(scope.spawn(move || {
                        group.into_iter().map(|(i, b)| (i, self.run_batch(b, batch_size))).collect::<Vec<_>>()
                    }));
                }
                for handle in handles {
                    for (i, r) in handle.join().expect("annotation worker panicked") {
                        slots[i] = Some(r);
                    }
                }
            });
            slots.into_iter().map(|s| s.expect("every batch produces a result")).collect()
        };

        let mut documents = Vec::new();
        let mut totals: Vec<StageTiming> = Vec::new();
        for result in results {
            let (batch, timings) = result?;
            documents.extend(batch);
            for t in timings {
                match totals.iter_mut().find(|x| x.stage == t.stage) {
                    Some(x) => {
                        x.seconds += t.seconds;
                        x.documents += t.documents;
                    }
                    None => totals.push(t),
                }
            }
        }
        Ok(AnnotateOutput { documents, timings: totals, total_seconds: started.elapsed().as_secs_f64() })
    }

    fn run_batch(&self, mut docs: Vec<Document>, batch_size: usize) -> Result<(Vec<Document>, Vec<StageTiming>)> {
        let mut timings = Vec::new();
        let mut record = |stage: &'static str, started: Instant, docs: &mut [Document], n: usize| {
            let seconds = started.elapsed().as_secs_f64();
            for d in docs.iter_mut() {
                d.timing.insert(stage.to_string(), seconds);
            }
            timings.push(StageTiming { stage, seconds, documents: n });
        };

        if self.runs_mention_stage() {
            let extractor = self.stages.mentions.as_ref().expect("checked");
            let started = Instant::now();
            self.counters.mentions.fetch_add(1, Ordering::SeqCst);
            let predicted = extractor.predict(&docs, batch_size)?;
            check_aligned(MENTIONS_STAGE, docs.len(), predicted.len())?;
            for (doc, spans) in docs.iter_mut().zip(predicted) {
                let len = doc.char_len();
                for mut span in spans {
                    span.validate(len).map_err(|e| contract(MENTIONS_STAGE, e))?;
                    span.label = None;
                    doc.mentions.push(span);
                }
                doc.finalize();
            }
            let n = docs.len();
            record(MENTIONS_STAGE, started, &mut docs, n);
        }

        if let Some(linker) = &self.stages.linker {
            let started = Instant::now();
            self.counters.linker.fetch_add(1, Ordering::SeqCst);
            let predicted = linker.predict(&docs, &self.config.entities, batch_size)?;
            check_aligned(LINKER_STAGE, docs.len(), predicted.len())?;
            for (doc, spans) in docs.iter_mut().zip(predicted) {
                let len = doc.char_len();
                let candidates: Option<HashSet<(usize, usize)>> =
                    (!linker.is_end_to_end()).then(|| doc.mentions.iter().map(Span::key).collect());
                for span in spans {
                    span.validate(len).map_err(|e| contract(LINKER_STAGE, e))?;
                    if span.label.is_none() {
                        return Err(Error::ComponentContract {
                            stage: LINKER_STAGE,
                            message: format!("unlabeled span [{}, {})", span.start, span.end),
                        });
                    }
                    if candidates.as_ref().is_none_or(|c| c.contains(&span.key())) {
                        doc.entities.push(span);
                    }
                }
                doc.finalize();
            }
            let n = docs.len();
            record(LINKER_STAGE, started, &mut docs, n);
        }

        if let Some(extractor) = &self.stages.relations {
            let with_entities: Vec<usize> = (0..docs.len()).filter(|&i| !docs[i].entities.is_empty()).collect();
            if !with_entities.is_empty() {
                let started = Instant::now();
                self.counters.relations.fetch_add(1, Ordering::SeqCst);
                let subset: Vec<Document> = with_entities.iter().map(|&i| docs[i].clone()).collect();
                let predicted = extractor.predict(&subset, &self.config.relations, batch_size)?;
                check_aligned(RELATIONS_STAGE, subset.len(), predicted.len())?;
                for (&i, triples) in with_entities.iter().zip(predicted) {
                    let doc = &mut docs[i];
                    let entity_keys: HashSet<_> = doc.entities.iter().map(Span::key).collect();
                    doc.relations.extend(triples.into_iter().filter(|t: &RelationTriple| {
                        entity_keys.contains(&t.subject.key()) && entity_keys.contains(&t.object.key())
                    }));
                    doc.finalize();
                }
                let n = with_entities.len();
                record(RELATIONS_STAGE, started, &mut docs, n);
            }
        }
        Ok((docs, timings))
    }
}

fn check_aligned(stage: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::ComponentContract { stage, message: format!("returned {got} results for {expected} documents") })
    }
}

fn contract(stage: &'static str, e: Error) -> Error {
    Error::ComponentContract { stage, message: e.to_string() }
}
