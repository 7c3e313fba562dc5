//! Dataset loading, zero-shot split checks, span metrics and evaluation runs.

mod dataset;
mod metrics;
mod report;

use std::collections::BTreeMap;

pub use dataset::{
    load_dataset, ordered_split_names, validate_zero_shot_splits, ClassCatalog, Dataset, DatasetSplit, LabeledExample,
    SplitViolation, ZeroShotReport, SPLIT_NAMES,
};
pub use metrics::{
    bio_to_spans, compute_mention_metrics, compute_metrics, compute_relation_metrics, spans_to_bio, ClassMetrics,
    MetricsReport, UNLABELED,
};
pub use report::{format_percent, format_report, format_seconds, METRIC_ROWS};

use crate::components::Registry;
use crate::error::{Error, Result};
use crate::model::{Document, Entity, PipelineConfig};
use crate::pipeline::Pipeline;

/// What an evaluation scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    /// Labeled entity spans from the linker.
    Entities,
    /// Unlabeled mention boundaries.
    Mentions,
    /// Relation triples predicted over gold entity spans.
    Relations,
}

impl Task {
    /// The task implied by the configured stages.
    pub fn infer(config: &PipelineConfig) -> Self {
        if config.linker.is_some() {
            Task::Entities
        } else if config.relations_extractor.is_some() {
            Task::Relations
        } else {
            Task::Mentions
        }
    }
}

/// Runs a pipeline configuration over dataset splits. The split's class
/// catalog replaces the configured classes (keeping a configured entity's
/// vocabulary when the catalog entry has none).
#[derive(Debug, Clone)]
pub struct Evaluator {
    config: PipelineConfig,
    registry: Registry,
    workers: usize,
    task: Task,
}

impl Evaluator {
    pub fn new(config: PipelineConfig) -> Self {
        let task = Task::infer(&config);
        Self { config, registry: Registry::builtin(), workers: 1, task }
    }

    pub fn with_registry(mut self, registry: Registry) -> Self {
        self.registry = registry;
        self
    }

    /// Timing is only comparable at one worker, the default.
    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    pub fn with_task(mut self, task: Task) -> Self {
        self.task = task;
        self
    }

    fn config_for(&self, split: &DatasetSplit) -> PipelineConfig {
        let mut config = self.config.clone();
        if !split.classes.entities.is_empty() {
            config.entities = split
                .classes
                .entities
                .iter()
                .map(|e| {
                    let mut e: Entity = e.clone();
                    if e.vocabulary.is_none() {
                        e.vocabulary =
                            self.config.entities.iter().find(|c| c.name == e.name).and_then(|c| c.vocabulary.clone());
                    }
                    e
                })
                .collect();
        }
        if !split.classes.relations.is_empty() {
            config.relations = split.classes.relations.to_vec();
        }
        config
    }

    pub fn evaluate_split(&self, split: &DatasetSplit) -> Result<MetricsReport> {
        let pipeline = Pipeline::with_registry(self.config_for(split), &self.registry)?.with_workers(self.workers);
        let docs: Vec<Document> = split
            .examples
            .iter()
            .map(|ex| {
                let mut doc = Document::new(ex.text.as_str());
                if self.task == Task::Relations {
                    doc.entities = ex.entities.clone();
                }
                doc
            })
            .collect();
        let out = pipeline.annotate_docs(docs, None)?;
        let report = match self.task {
            Task::Entities => compute_metrics(&split.examples, &out.documents)?,
            Task::Mentions => compute_mention_metrics(&split.examples, &out.documents)?,
            Task::Relations => compute_relation_metrics(&split.examples, &out.documents)?,
        };
        Ok(report.with_timing(out.total_seconds, split.examples.len()))
    }

    pub fn evaluate(&self, dataset: &Dataset, splits: &[&str]) -> Result<BTreeMap<String, MetricsReport>> {
        if let Some(missing) = splits.iter().find(|s| !dataset.contains_key(**s)) {
            return Err(Error::UnknownSplit(missing.to_string()));
        }
        splits.iter().map(|name| Ok((name.to_string(), self.evaluate_split(&dataset[*name])?))).collect()
    }
}

/// Evaluates `config` on `splits` with default settings.
pub fn evaluate(
    config: &PipelineConfig,
    dataset: &Dataset,
    splits: &[&str],
) -> Result<BTreeMap<String, MetricsReport>> {
    Evaluator::new(config.clone()).evaluate(dataset, splits)
}
