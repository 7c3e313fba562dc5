use serde::Deserialize;

use super::embedding::{embed, similarity, Embedding};
use super::{in_batches, parse_params, RelationsExtractor};
use crate::error::{Error, Result};
use crate::model::{ComponentSpec, Document, Relation, RelationTriple, Span};
use crate::text::CharText;

pub const DEFAULT_RELATION_THRESHOLD: f64 = 0.1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RelationParams {
    #[serde(alias = "threshold")]
    thr: f64,
}

impl Default for RelationParams {
    fn default() -> Self {
        Self { thr: DEFAULT_RELATION_THRESHOLD }
    }
}

/// Classifies every ordered pair of distinct entity spans by the relation
/// whose `name + description` embedding is closest to the pair text
/// (`subject + gap + object`). Pairs whose best score is below the threshold
/// get no relation.
#[derive(Debug, Clone)]
pub struct CosineRelationExtractor {
    thr: f64,
}

impl Default for CosineRelationExtractor {
    fn default() -> Self {
        Self { thr: DEFAULT_RELATION_THRESHOLD }
    }
}

impl CosineRelationExtractor {
    pub fn new(thr: f64) -> Self {
        Self { thr }
    }

    pub fn threshold(&self) -> f64 {
        self.thr
    }

    pub(crate) fn from_spec(spec: &ComponentSpec) -> Result<Self> {
        let p: RelationParams = parse_params(spec)?;
        if !p.thr.is_finite() || p.thr < 0.0 {
            return Err(Error::InvalidParams {
                key: spec.key.clone(),
                message: format!("thr {} must be a non-negative number", p.thr),
            });
        }
        Ok(Self::new(p.thr))
    }

    pub fn relation_vectors(relations: &[Relation]) -> Vec<Embedding> {
        relations.iter().map(|r| embed(&format!("{} {}", r.name, r.description))).collect()
    }

    /// Text the pair is embedded from.
    pub fn pair_text(chars: &CharText<'_>, subject: &Span, object: &Span) -> String {
        let gap = if subject.end <= object.start {
            chars.slice(subject.end, object.start)
        } else if object.end <= subject.start {
            chars.slice(object.end, subject.start)
        } else {
            ""
        };
        format!("{} {} {}", chars.slice(subject.start, subject.end), gap, chars.slice(object.start, object.end))
    }

    /// Best relation index and score for every ordered pair, before thresholding.
    pub fn score_pairs(doc: &Document, relation_vectors: &[Embedding]) -> Vec<(usize, usize, usize, f64)> {
        let chars = CharText::new(&doc.text);
        let mut out = Vec::new();
        for (i, s) in doc.entities.iter().enumerate() {
            for (j, o) in doc.entities.iter().enumerate() {
                if i == j || s.key() == o.key() {
                    continue;
                }
                let pair = embed(&Self::pair_text(&chars, s, o));
                let mut best = (0, f64::NEG_INFINITY);
                for (r, rv) in relation_vectors.iter().enumerate() {
                    let score = similarity(&pair, rv);
                    if score > best.1 {
                        best = (r, score);
                    }
                }
                out.push((i, j, best.0, best.1));
            }
        }
        out
    }

    pub fn extract(
        &self,
        doc: &Document,
        relations: &[Relation],
        relation_vectors: &[Embedding],
    ) -> Vec<RelationTriple> {
        Self::score_pairs(doc, relation_vectors)
            .into_iter()
            .filter(|(_, _, _, score)| *score >= self.thr)
            .map(|(i, j, r, score)| RelationTriple {
                subject: doc.entities[i].clone(),
                object: doc.entities[j].clone(),
                label: relations[r].name.clone(),
                score,
            })
            .collect()
    }
}

impl RelationsExtractor for CosineRelationExtractor {
    fn predict(
        &self,
        docs: &[Document],
        relations: &[Relation],
        batch_size: usize,
    ) -> Result<Vec<Vec<RelationTriple>>> {
        if relations.is_empty() {
            return Err(Error::NoRelationsConfigured);
        }
        if let Some(doc) = docs.iter().position(|d| d.entities.is_empty()) {
            return Err(Error::MissingEntityAnnotations { doc });
        }
        let vectors = Self::relation_vectors(relations);
        in_batches(docs, batch_size, |doc| Ok(self.extract(doc, relations, &vectors)))
    }
}
