use serde::Deserialize;

use super::embedding::{embed, similarity, Embedding};
use super::{in_batches, parse_params, Linker};
use crate::error::{Error, Result};
use crate::model::{ComponentSpec, Document, Entity, Span};
use crate::text::tokenize;

pub const DEFAULT_NEGATIVE_THRESHOLD: f64 = 0.35;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SimilarityParams {
    threshold: f64,
}

impl Default for SimilarityParams {
    fn default() -> Self {
        Self { threshold: DEFAULT_NEGATIVE_THRESHOLD }
    }
}

/// End-to-end linker that labels each token with the entity whose
/// `name + description` embedding is closest to the token's local context
/// (previous token, token, next token). Tokens scoring below the threshold
/// fall into the negative class. Runs of equal labels merge into one span
/// scored by the mean token score.
#[derive(Debug, Clone)]
pub struct SimilarityLinker {
    threshold: f64,
}

impl Default for SimilarityLinker {
    fn default() -> Self {
        Self { threshold: DEFAULT_NEGATIVE_THRESHOLD }
    }
}

/// A token's best entity and its score, or `None` for the negative class.
pub type TokenLabel = Option<(usize, f64)>;

impl SimilarityLinker {
    pub fn new(threshold: f64) -> Self {
        Self { threshold }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub(crate) fn from_spec(spec: &ComponentSpec) -> Result<Self> {
        let p: SimilarityParams = parse_params(spec)?;
        if !p.threshold.is_finite() || p.threshold < 0.0 {
            return Err(Error::InvalidParams {
                key: spec.key.clone(),
                message: format!("threshold {} must be a non-negative number", p.threshold),
            });
        }
        Ok(Self::new(p.threshold))
    }

    pub fn entity_vectors(entities: &[Entity]) -> Vec<Embedding> {
        entities.iter().map(|e| embed(&format!("{} {}", e.name, e.description))).collect()
    }

    /// Per-token decisions as `(start, end, label)`, label being an index
    /// into `entities`.
    pub fn token_labels(&self, text: &str, entity_vectors: &[Embedding]) -> Vec<(usize, usize, TokenLabel)> {
        let tokens = tokenize(text);
        (0..tokens.len())
            .map(|i| {
                let prev = if i > 0 { tokens[i - 1].text } else { "" };
                let next = tokens.get(i + 1).map_or("", |t| t.text);
                let context = embed(&format!("{prev} {} {next}", tokens[i].text));
                let mut best: TokenLabel = None;
                for (e, ev) in entity_vectors.iter().enumerate() {
                    let score = similarity(&context, ev);
                    if best.is_none_or(|(_, s)| score > s) {
                        best = Some((e, score));
                    }
                }
                let label = best.filter(|(_, s)| *s >= self.threshold);
                (tokens[i].start, tokens[i].end, label)
            })
            .collect()
    }

    pub fn link_text(&self, text: &str, entities: &[Entity], entity_vectors: &[Embedding]) -> Vec<Span> {
        let mut spans = Vec::new();
        let mut run: Option<(usize, usize, usize, Vec<f64>)> = None;
        let flush = |run: &mut Option<(usize, usize, usize, Vec<f64>)>, spans: &mut Vec<Span>| {
            if let Some((start, end, e, scores)) = run.take() {
                let mean = scores.iter().sum::<f64>() / scores.len() as f64;
                spans.push(Span::labeled(start, end, entities[e].name.clone(), mean.clamp(0.0, 1.0)));
            }
        };
        for (start, end, label) in self.token_labels(text, entity_vectors) {
            match (label, run.as_mut()) {
                (Some((e, s)), Some(r)) if r.2 == e => {
                    r.1 = end;
                    r.3.push(s);
                }
                (Some((e, s)), _) => {
                    flush(&mut run, &mut spans);
                    run = Some((start, end, e, vec![s]));
                }
                (None, _) => flush(&mut run, &mut spans),
            }
        }
        flush(&mut run, &mut spans);
        spans
    }
}

impl Linker for SimilarityLinker {
    fn predict(&self, docs: &[Document], entities: &[Entity], batch_size: usize) -> Result<Vec<Vec<Span>>> {
        if entities.is_empty() {
            return Err(Error::NoEntitiesConfigured);
        }
        let vectors = Self::entity_vectors(entities);
        in_batches(docs, batch_size, |doc| Ok(self.link_text(&doc.text, entities, &vectors)))
    }

    fn is_end_to_end(&self) -> bool {
        true
    }
}
