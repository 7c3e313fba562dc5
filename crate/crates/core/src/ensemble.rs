//! Vote-based ensembling of linkers crossed with entity description variants.
//!
//! Every (linker, variant) pair is an independent sub-pipeline. Spans are
//! tallied on their exact `(start, end, label)` key and kept when at least
//! `threshold` of the sub-pipelines voted for them; a kept span's score is
//! its vote fraction.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde_json::Value;

use crate::components::{Linker, MentionsExtractor, Registry};
use crate::error::{Error, Result};
use crate::model::{check_unique, sort_spans, ComponentSpec, Document, Entity, Span};

pub const ENSEMBLE_KEY: &str = "ensemble";

#[derive(Debug, Clone, PartialEq)]
pub struct VoteTally {
    pub start: usize,
    pub end: usize,
    pub label: Option<String>,
    /// Distinct sub-pipelines that predicted this key.
    pub votes: usize,
    /// One score per voting sub-pipeline, ascending.
    pub scores: Vec<f64>,
}

impl VoteTally {
    pub fn mean_score(&self) -> f64 {
        if self.scores.is_empty() {
            0.0
        } else {
            self.scores.iter().sum::<f64>() / self.scores.len() as f64
        }
    }

    fn len(&self) -> usize {
        self.end - self.start
    }

    fn overlaps(&self, other: &VoteTally) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// Keeps tallies with `votes / n >= threshold`, preserving order.
pub fn vote_filter(tallies: &[VoteTally], n: usize, threshold: f64) -> Vec<VoteTally> {
    tallies.iter().filter(|t| t.votes as f64 / n as f64 >= threshold).cloned().collect()
}

/// Distinct voters and their scores for one key.
type Ballots = (BTreeSet<usize>, Vec<f64>);

/// Tallies per-document votes. `predictions[p][d]` is sub-pipeline `p`'s span
/// list for document `d`. Tallies come out sorted by key.
pub fn tally_votes(predictions: &[Vec<Vec<Span>>], docs: usize) -> Vec<Vec<VoteTally>> {
    (0..docs)
        .map(|d| {
            let mut table: BTreeMap<(usize, usize, Option<String>), Ballots> = BTreeMap::new();
            for (p, per_doc) in predictions.iter().enumerate() {
                for span in &per_doc[d] {
                    let entry = table.entry((span.start, span.end, span.label.clone())).or_default();
                    if entry.0.insert(p) {
                        entry.1.push(span.score.unwrap_or(0.0));
                    }
                }
            }
            table
                .into_iter()
                .map(|((start, end, label), (voters, mut scores))| {
                    scores.sort_by(f64::total_cmp);
                    VoteTally { start, end, label, votes: voters.len(), scores }
                })
                .collect()
        })
        .collect()
}

/// Higher votes, then higher mean sub-pipeline score, then longer span, then
/// smaller start; label settles exact ties.
fn resolve(kept: Vec<VoteTally>, n: usize) -> Vec<Span> {
    let mut ranked = kept;
    ranked.sort_by(|a, b| {
        b.votes
            .cmp(&a.votes)
            .then(b.mean_score().partial_cmp(&a.mean_score()).unwrap_or(Ordering::Equal))
            .then(b.len().cmp(&a.len()))
            .then(a.start.cmp(&b.start))
            .then(a.label.cmp(&b.label))
    });
    let mut chosen: Vec<VoteTally> = Vec::new();
    for t in ranked {
        if !chosen.iter().any(|c| c.overlaps(&t)) {
            chosen.push(t);
        }
    }
    let mut spans: Vec<Span> = chosen
        .into_iter()
        .map(|t| Span {
            start: t.start,
            end: t.end,
            label: t.label,
            score: Some(t.votes as f64 / n as f64),
            kb_id: None,
        })
        .collect();
    sort_spans(&mut spans);
    spans
}

fn check_threshold(threshold: f64) -> Result<()> {
    if threshold > 0.0 && threshold <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidThreshold(threshold))
    }
}

/// Linkers crossed with description variants.
#[derive(Clone)]
pub struct EnsembleConfig {
    pub linkers: Vec<Arc<dyn Linker>>,
    pub description_variants: Vec<Vec<Entity>>,
    pub threshold: f64,
}

impl std::fmt::Debug for EnsembleConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EnsembleConfig")
            .field("linkers", &self.linkers.len())
            .field("description_variants", &self.description_variants)
            .field("threshold", &self.threshold)
            .finish()
    }
}

impl EnsembleConfig {
    pub fn sub_pipelines(&self) -> usize {
        self.linkers.len() * self.description_variants.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.linkers.is_empty() || self.description_variants.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        check_threshold(self.threshold)?;
        let names = |v: &[Entity]| v.iter().map(|e| e.name.clone()).collect::<BTreeSet<_>>();
        let reference = names(&self.description_variants[0]);
        for (i, variant) in self.description_variants.iter().enumerate() {
            check_unique("entity", variant.iter().map(|e| e.name.as_str()))?;
            if names(variant) != reference {
                return Err(Error::InconsistentVariants { variant: i });
            }
        }
        Ok(())
    }

    /// Runs every sub-pipeline and returns the raw tallies per document.
    pub fn tallies(&self, docs: &[Document], batch_size: usize) -> Result<Vec<Vec<VoteTally>>> {
        self.validate()?;
        let mut predictions = Vec::with_capacity(self.sub_pipelines());
        for linker in &self.linkers {
            for variant in &self.description_variants {
                predictions.push(linker.predict(docs, variant, batch_size)?);
            }
        }
        Ok(tally_votes(&predictions, docs.len()))
    }
}

pub fn ensemble_predict(config: &EnsembleConfig, docs: &[Document], batch_size: usize) -> Result<Vec<Vec<Span>>> {
    let n = config.sub_pipelines();
    Ok(config
        .tallies(docs, batch_size)?
        .into_iter()
        .map(|t| resolve(vote_filter(&t, n, config.threshold), n))
        .collect())
}

/// The ensemble as a pipeline linker; end-to-end iff every member is.
#[derive(Debug, Clone)]
pub struct EnsembleLinker {
    config: EnsembleConfig,
}

impl EnsembleLinker {
    pub fn new(config: EnsembleConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn config(&self) -> &EnsembleConfig {
        &self.config
    }

    /// Builds from a config-file entry:
    /// `{"type": "ensemble", "linkers": [...], "description_variants": [[...]], "threshold": t}`.
    pub fn from_spec(spec: &ComponentSpec, registry: &Registry) -> Result<Self> {
        let invalid = |message: String| Error::InvalidParams { key: spec.key.clone(), message };
        let field = |name: &str| spec.extra.get(name).or_else(|| spec.params.get(name)).cloned();
        let members: Vec<ComponentSpec> = serde_json::from_value(field("linkers").unwrap_or(Value::Null))
            .map_err(|e| invalid(format!("`linkers`: {e}")))?;
        let variants: Vec<Vec<Entity>> = serde_json::from_value(field("description_variants").unwrap_or(Value::Null))
            .map_err(|e| invalid(format!("`description_variants`: {e}")))?;
        let threshold = field("threshold")
            .and_then(|v| v.as_f64())
            .ok_or_else(|| invalid("`threshold` must be a number".into()))?;
        let linkers = members.iter().map(|m| registry.build_linker(m).map(Arc::from)).collect::<Result<Vec<_>>>()?;
        Self::new(EnsembleConfig { linkers, description_variants: variants, threshold })
    }
}

impl Linker for EnsembleLinker {
    /// Entities passed by the pipeline are ignored; the description variants
    /// define the classes.
    fn predict(&self, docs: &[Document], _entities: &[Entity], batch_size: usize) -> Result<Vec<Vec<Span>>> {
        ensemble_predict(&self.config, docs, batch_size)
    }

    fn is_end_to_end(&self) -> bool {
        self.config.linkers.iter().all(|l| l.is_end_to_end())
    }

    fn exclusive(&self) -> bool {
        self.config.linkers.iter().any(|l| l.exclusive())
    }
}

/// Mention-extractor ensemble voting on label-free `(start, end)` keys.
#[derive(Clone)]
pub struct MentionsEnsemble {
    extractors: Vec<Arc<dyn MentionsExtractor>>,
    threshold: f64,
}

impl MentionsEnsemble {
    pub fn new(extractors: Vec<Arc<dyn MentionsExtractor>>, threshold: f64) -> Result<Self> {
        if extractors.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        check_threshold(threshold)?;
        Ok(Self { extractors, threshold })
    }
}

impl MentionsExtractor for MentionsEnsemble {
    fn predict(&self, docs: &[Document], batch_size: usize) -> Result<Vec<Vec<Span>>> {
        let n = self.extractors.len();
        let mut predictions = Vec::with_capacity(n);
        for ex in &self.extractors {
            let mut spans = ex.predict(docs, batch_size)?;
            for span in spans.iter_mut().flatten() {
                span.label = None;
                span.score.get_or_insert(1.0);
            }
            predictions.push(spans);
        }
        Ok(tally_votes(&predictions, docs.len())
            .into_iter()
            .map(|t| {
                resolve(vote_filter(&t, n, self.threshold), n).into_iter().map(|s| Span::new(s.start, s.end)).collect()
            })
            .collect())
    }

    fn exclusive(&self) -> bool {
        self.extractors.iter().any(|e| e.exclusive())
    }
}
