//! Exact-match span metrics with seqeval conventions.
//!
//! A prediction counts as a true positive iff its `(start, end, label)` key
//! is in the gold set. Micro scores pool counts over classes; macro scores
//! average per-class scores over every class seen in gold or predictions.
//! Every 0/0 ratio is 0.

use std::collections::{BTreeMap, BTreeSet};
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use super::dataset::LabeledExample;
use crate::error::{Error, Result};
use crate::model::{ensure_non_overlapping, Document, Span};
use crate::text::tokenize;

/// Class name used for unlabeled spans (mention evaluation).
pub const UNLABELED: &str = "MENTION";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub overall_precision_micro: f64,
    pub overall_recall_micro: f64,
    pub overall_f1_micro: f64,
    pub overall_precision_macro: f64,
    pub overall_recall_macro: f64,
    pub overall_f1_macro: f64,
    /// Token-level BIO accuracy; absent for relation evaluation.
    pub overall_accuracy: Option<f64>,
    pub per_class: BTreeMap<String, ClassMetrics>,
    pub total_time_in_seconds: f64,
    pub samples_per_second: f64,
    pub latency_in_seconds: f64,
}

impl MetricsReport {
    /// Sets the timing fields from a wall-clock total over `samples` inputs.
    pub fn with_timing(mut self, total_seconds: f64, samples: usize) -> Self {
        self.total_time_in_seconds = total_seconds;
        let usable = total_seconds > 0.0 && samples > 0;
        self.samples_per_second = if usable { samples as f64 / total_seconds } else { 0.0 };
        self.latency_in_seconds = if usable { total_seconds / samples as f64 } else { 0.0 };
        self
    }
}

pub(crate) fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub(crate) fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Counts {
    tp: usize,
    fp: usize,
    fn_: usize,
}

/// Gold and predicted keys of one example.
type KeyedPair<K> = (BTreeSet<(K, String)>, BTreeSet<(K, String)>);

type TripleKey = (((usize, usize), (usize, usize)), String);

/// Scores keyed predictions against keyed gold, one `(gold, pred)` pair of
/// sets per example. Labels are the last key component.
fn score<K: Ord + Eq + Hash + Clone>(pairs: &[KeyedPair<K>]) -> MetricsReport {
    let mut per_class: BTreeMap<String, Counts> = BTreeMap::new();
    for (gold, pred) in pairs {
        for key in pred {
            let c = per_class.entry(key.1.clone()).or_default();
            if gold.contains(key) {
                c.tp += 1;
            } else {
                c.fp += 1;
            }
        }
        for key in gold.difference(pred) {
            per_class.entry(key.1.clone()).or_default().fn_ += 1;
        }
    }
    let total = per_class.values().fold(Counts::default(), |a, c| Counts {
        tp: a.tp + c.tp,
        fp: a.fp + c.fp,
        fn_: a.fn_ + c.fn_,
    });
    let p = ratio(total.tp, total.tp + total.fp);
    let r = ratio(total.tp, total.tp + total.fn_);

    let classes: BTreeMap<String, ClassMetrics> = per_class
        .into_iter()
        .map(|(label, c)| {
            let precision = ratio(c.tp, c.tp + c.fp);
            let recall = ratio(c.tp, c.tp + c.fn_);
            let m = ClassMetrics { precision, recall, f1: harmonic(precision, recall), support: c.tp + c.fn_ };
            (label, m)
        })
        .collect();
    let mean = |f: fn(&ClassMetrics) -> f64| {
        if classes.is_empty() {
            0.0
        } else {
            classes.values().map(f).sum::<f64>() / classes.len() as f64
        }
    };
    MetricsReport {
        overall_precision_micro: p,
        overall_recall_micro: r,
        overall_f1_micro: harmonic(p, r),
        overall_precision_macro: mean(|m| m.precision),
        overall_recall_macro: mean(|m| m.recall),
        overall_f1_macro: mean(|m| m.f1),
        overall_accuracy: None,
        per_class: classes,
        total_time_in_seconds: 0.0,
        samples_per_second: 0.0,
        latency_in_seconds: 0.0,
    }
}

fn label_of(span: &Span) -> String {
    span.label.clone().unwrap_or_else(|| UNLABELED.to_string())
}

fn span_keys(spans: &[Span]) -> BTreeSet<((usize, usize), String)> {
    spans.iter().map(|s| (s.key(), label_of(s))).collect()
}

/// One BIO tag per alphanumeric token. A span not aligned to token
/// boundaries tags every token it intersects.
pub fn spans_to_bio(text: &str, spans: &[Span]) -> Result<Vec<String>> {
    ensure_non_overlapping(spans)?;
    let mut sorted: Vec<&Span> = spans.iter().collect();
    sorted.sort_by_key(|s| s.start);
    let mut tags = Vec::new();
    let mut previous: Option<usize> = None;
    let mut next = 0;
    for tok in tokenize(text) {
        while next < sorted.len() && sorted[next].end <= tok.start {
            next += 1;
        }
        let hit = sorted.get(next).filter(|s| s.start < tok.end).map(|_| next);
        tags.push(match hit {
            Some(i) if previous == Some(i) => format!("I-{}", label_of(sorted[i])),
            Some(i) => format!("B-{}", label_of(sorted[i])),
            None => "O".to_string(),
        });
        previous = hit;
    }
    Ok(tags)
}

/// Inverse of [`spans_to_bio`] on token-aligned spans. A stray `I-` tag opens
/// a new span.
pub fn bio_to_spans(text: &str, tags: &[String]) -> Vec<Span> {
    let mut spans: Vec<Span> = Vec::new();
    let mut open = false;
    for (tok, tag) in tokenize(text).iter().zip(tags) {
        if let Some(label) = tag.strip_prefix("I-") {
            if let Some(last) = spans.last_mut().filter(|s| open && s.label.as_deref() == Some(label)) {
                last.end = tok.end;
                continue;
            }
        }
        match tag.split_once('-') {
            Some((_, label)) => {
                spans.push(Span { label: Some(label.to_string()), ..Span::new(tok.start, tok.end) });
                open = true;
            }
            None => open = false,
        }
    }
    spans
}

fn check_alignment(gold: &[LabeledExample], pred: &[Document]) -> Result<()> {
    if gold.len() != pred.len() {
        return Err(Error::Alignment(format!("{} gold examples vs {} predictions", gold.len(), pred.len())));
    }
    if let Some(i) = gold.iter().zip(pred).position(|(g, p)| g.text != p.text) {
        return Err(Error::Alignment(format!("text of example {i} differs")));
    }
    Ok(())
}

fn token_accuracy(texts_and_spans: &[(&str, &[Span], &[Span])]) -> Result<f64> {
    let (mut same, mut total) = (0, 0);
    for (text, gold, pred) in texts_and_spans {
        let g = spans_to_bio(text, gold)?;
        let p = spans_to_bio(text, pred)?;
        same += g.iter().zip(&p).filter(|(a, b)| a == b).count();
        total += g.len();
    }
    Ok(ratio(same, total))
}

/// Entity-level metrics of the entity layer of `pred` against gold spans.
pub fn compute_metrics(gold: &[LabeledExample], pred: &[Document]) -> Result<MetricsReport> {
    check_alignment(gold, pred)?;
    let pairs: Vec<_> = gold.iter().zip(pred).map(|(g, p)| (span_keys(&g.entities), span_keys(&p.entities))).collect();
    let views: Vec<_> =
        gold.iter().zip(pred).map(|(g, p)| (g.text.as_str(), &g.entities[..], &p.entities[..])).collect();
    let mut report = score(&pairs);
    report.overall_accuracy = Some(token_accuracy(&views)?);
    Ok(report)
}

/// Label-free span metrics of the mention layer against gold entity
/// boundaries.
pub fn compute_mention_metrics(gold: &[LabeledExample], pred: &[Document]) -> Result<MetricsReport> {
    check_alignment(gold, pred)?;
    let strip = |spans: &[Span]| -> Vec<Span> { spans.iter().map(|s| Span::new(s.start, s.end)).collect() };
    let gold_spans: Vec<Vec<Span>> = gold.iter().map(|g| strip(&g.entities)).collect();
    let pred_spans: Vec<Vec<Span>> = pred.iter().map(|p| strip(&p.mentions)).collect();
    let pairs: Vec<_> = gold_spans.iter().zip(&pred_spans).map(|(g, p)| (span_keys(g), span_keys(p))).collect();
    let views: Vec<_> = gold
        .iter()
        .zip(gold_spans.iter().zip(&pred_spans))
        .map(|(g, (gs, ps))| (g.text.as_str(), &gs[..], &ps[..]))
        .collect();
    let mut report = score(&pairs);
    report.overall_accuracy = Some(token_accuracy(&views)?);
    Ok(report)
}

/// Triple-level metrics keyed on `(subject, object, label)` boundaries.
pub fn compute_relation_metrics(gold: &[LabeledExample], pred: &[Document]) -> Result<MetricsReport> {
    check_alignment(gold, pred)?;
    let keys = |triples: &[crate::model::RelationTriple]| -> BTreeSet<TripleKey> {
        triples.iter().map(|t| ((t.subject.key(), t.object.key()), t.label.clone())).collect()
    };
    let pairs: Vec<_> = gold.iter().zip(pred).map(|(g, p)| (keys(&g.relations), keys(&p.relations))).collect();
    Ok(score(&pairs))
}
