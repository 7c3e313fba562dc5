//! Shared data model: spans, class descriptors, documents and pipeline
//! configuration.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::text::CharText;

/// Half-open character interval `[start, end)`, optionally labeled and scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    /// Knowledge-base entry the span was linked to, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kb_id: Option<String>,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end, label: None, score: None, kb_id: None }
    }

    pub fn labeled(start: usize, end: usize, label: impl Into<String>, score: f64) -> Self {
        Self { start, end, label: Some(label.into()), score: Some(score), kb_id: None }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn key(&self) -> (usize, usize) {
        (self.start, self.end)
    }

    pub fn labeled_key(&self) -> (usize, usize, String) {
        (self.start, self.end, self.label.clone().unwrap_or_default())
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        span_overlaps(self, other)
    }

    /// Checks the span against a text of `text_len` characters.
    pub fn validate(&self, text_len: usize) -> Result<()> {
        let score_ok = self.score.is_none_or(|s| (0.0..=1.0).contains(&s));
        if self.start < self.end && self.end <= text_len && score_ok {
            Ok(())
        } else {
            Err(Error::InvalidSpan { start: self.start, end: self.end, len: text_len })
        }
    }
}

/// True iff `[a.start, a.end)` and `[b.start, b.end)` intersect.
pub fn span_overlaps(a: &Span, b: &Span) -> bool {
    a.start < b.end && b.start < a.end
}

/// Errors on the first pair of overlapping spans.
pub fn ensure_non_overlapping(spans: &[Span]) -> Result<()> {
    let mut sorted: Vec<&Span> = spans.iter().collect();
    sorted.sort_by_key(|s| (s.start, s.end));
    for pair in sorted.windows(2) {
        if pair[0].overlaps(pair[1]) {
            return Err(Error::OverlappingSpans { first: pair[0].key(), second: pair[1].key() });
        }
    }
    Ok(())
}

/// Resolves overlaps by keeping the higher score, then the longer span, then
/// the smaller start offset (label breaks any remaining tie). Output is in
/// text order.
pub fn resolve_overlaps(spans: Vec<Span>) -> Vec<Span> {
    let mut ranked = spans;
    ranked.sort_by(|a, b| {
        let sa = a.score.unwrap_or(0.0);
        let sb = b.score.unwrap_or(0.0);
        sb.partial_cmp(&sa)
            .unwrap_or(Ordering::Equal)
            .then(b.len().cmp(&a.len()))
            .then(a.start.cmp(&b.start))
            .then(a.label.cmp(&b.label))
    });
    let mut kept: Vec<Span> = Vec::with_capacity(ranked.len());
    for span in ranked {
        if !kept.iter().any(|k| k.overlaps(&span)) {
            kept.push(span);
        }
    }
    sort_spans(&mut kept);
    kept
}

pub(crate) fn sort_spans(spans: &mut [Span]) {
    spans.sort_by(|a, b| (a.start, a.end, &a.label).cmp(&(b.start, b.end, &b.label)));
}

/// An entity class described in natural language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Surface forms for dictionary linking.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocabulary: Option<Vec<String>>,
}

impl Entity {
    pub fn new(name: impl Into<String>, description: impl Into<String>) -> Self {
        Self { name: name.into(), description: description.into(), vocabulary: None }
    }

    pub fn with_vocabulary<I, S>(mut self, forms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.vocabulary = Some(forms.into_iter().map(Into::into).collect());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub name: String,
    #[serde(default)]
    pub description: String,
}

impl Relation {
    pub fn new(name: impl Into<String>, description: impl Into<String>) -> Self {
        Self { name: name.into(), description: description.into() }
    }
}

fn full_score() -> f64 {
    1.0
}

/// A labeled relation between an ordered pair of spans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationTriple {
    pub subject: Span,
    pub object: Span,
    pub label: String,
    #[serde(default = "full_score")]
    pub score: f64,
}

impl RelationTriple {
    pub fn key(&self) -> ((usize, usize), (usize, usize), String) {
        (self.subject.key(), self.object.key(), self.label.clone())
    }
}

/// Immutable text plus annotation layers added by the pipeline stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub text: String,
    #[serde(default)]
    pub mentions: Vec<Span>,
    #[serde(default)]
    pub entities: Vec<Span>,
    #[serde(default)]
    pub relations: Vec<RelationTriple>,
    /// Stage name to elapsed seconds.
    #[serde(default)]
    pub timing: BTreeMap<String, f64>,
}

pub fn doc_from_text(text: impl Into<String>) -> Document {
    Document::new(text)
}

impl Document {
    pub fn new(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            mentions: Vec::new(),
            entities: Vec::new(),
            relations: Vec::new(),
            timing: BTreeMap::new(),
        }
    }

    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }

    /// Text covered by `span`.
    pub fn span_text(&self, span: &Span) -> &str {
        CharText::new(&self.text).slice(span.start, span.end)
    }

    /// Checks every layer against the text and the entity layer for overlaps.
    pub fn validate(&self) -> Result<()> {
        let len = self.char_len();
        for span in self.mentions.iter().chain(&self.entities) {
            span.validate(len)?;
        }
        for triple in &self.relations {
            triple.subject.validate(len)?;
            triple.object.validate(len)?;
        }
        ensure_non_overlapping(&self.entities)
    }

    /// Deduplicates every layer and resolves entity overlaps.
    pub fn finalize(&mut self) {
        let mut seen = HashSet::new();
        self.mentions.retain(|s| seen.insert(s.key()));
        sort_spans(&mut self.mentions);

        let mut seen = HashSet::new();
        let entities =
            std::mem::take(&mut self.entities).into_iter().filter(|s| seen.insert(s.labeled_key())).collect();
        self.entities = resolve_overlaps(entities);

        let mut seen = HashSet::new();
        self.relations.retain(|t| seen.insert(t.key()));
    }

    /// Strips the timing layer, leaving only annotations.
    pub fn without_timing(mut self) -> Self {
        self.timing.clear();
        self
    }
}

/// A component reference in a configuration file: a registry key plus
/// parameters. Keys other than `type` and `params` are kept in `extra`
/// (the ensemble linker stores its members there).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    #[serde(rename = "type")]
    pub key: String,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub params: Value,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, Value>,
}

impl ComponentSpec {
    pub fn new(key: impl Into<String>) -> Self {
        Self { key: key.into(), params: Value::Null, extra: serde_json::Map::new() }
    }

    pub fn with_params(mut self, params: Value) -> Self {
        self.params = params;
        self
    }

    fn resolve_paths(&mut self, base: &std::path::Path) {
        if let Some(Value::String(p)) = self.params.get_mut("path") {
            if std::path::Path::new(p.as_str()).is_relative() {
                *p = base.join(p.as_str()).to_string_lossy().into_owned();
            }
        }
        if let Some(Value::Array(members)) = self.extra.get_mut("linkers") {
            for member in members {
                if let Ok(mut spec) = serde_json::from_value::<ComponentSpec>(member.clone()) {
                    spec.resolve_paths(base);
                    *member = serde_json::to_value(spec).expect("spec serializes");
                }
            }
        }
    }
}

fn default_batch_size() -> usize {
    32
}

fn default_device() -> String {
    "cpu".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default)]
    pub entities: Vec<Entity>,
    #[serde(default)]
    pub relations: Vec<Relation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mentions_extractor: Option<ComponentSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linker: Option<ComponentSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relations_extractor: Option<ComponentSpec>,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    /// Recorded for interface parity; baseline components ignore it.
    #[serde(default = "default_device")]
    pub device: String,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            entities: Vec::new(),
            relations: Vec::new(),
            mentions_extractor: None,
            linker: None,
            relations_extractor: None,
            batch_size: default_batch_size(),
            device: default_device(),
        }
    }
}

/// Answers whether a linker reference runs end-to-end (needs no mentions).
pub trait LinkerCatalog {
    fn linker_is_end_to_end(&self, spec: &ComponentSpec) -> Result<bool>;
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reads a configuration file. Relative `params.path` values of any
    /// component (ensemble members included) are resolved against the
    /// file's directory.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_json(&text)?;
        let base = path.parent().unwrap_or_else(|| std::path::Path::new(""));
        for spec in
            [&mut config.mentions_extractor, &mut config.linker, &mut config.relations_extractor].into_iter().flatten()
        {
            spec.resolve_paths(base);
        }
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every configuration rule, resolving linker end-to-end status
    /// through `catalog`.
    pub fn validate_with(&self, catalog: &dyn LinkerCatalog) -> Result<()> {
        let linker = match &self.linker {
            Some(spec) => Some((spec.key.as_str(), catalog.linker_is_end_to_end(spec)?)),
            None => None,
        };
        self.validate_classes()?;
        validate_stages(self.mentions_extractor.is_some(), linker, self.relations_extractor.is_some())
    }

    /// Batch size and class-name rules, independent of the configured stages.
    pub fn validate_classes(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be positive".into()));
        }
        check_unique("entity", self.entities.iter().map(|e| e.name.as_str()))?;
        check_unique("relation", self.relations.iter().map(|r| r.name.as_str()))?;
        if let Some(e) = self.entities.iter().find(|e| e.name.is_empty()) {
            return Err(Error::InvalidConfig(format!("entity with empty name (description `{}`)", e.description)));
        }
        if self.relations.iter().any(|r| r.name.is_empty()) {
            return Err(Error::InvalidConfig("relation with empty name".into()));
        }
        Ok(())
    }
}

/// Stage dependency rules. `linker` is `(key, is_end_to_end)`.
pub fn validate_stages(has_mentions: bool, linker: Option<(&str, bool)>, has_relations: bool) -> Result<()> {
    if !has_mentions && linker.is_none() && !has_relations {
        return Err(Error::EmptyConfig);
    }
    if let Some((key, false)) = linker {
        if !has_mentions {
            return Err(Error::MissingMentionsExtractor { linker: key.to_string() });
        }
    }
    Ok(())
}

pub(crate) fn check_unique<'a>(kind: &'static str, names: impl IntoIterator<Item = &'a str>) -> Result<()> {
    let mut seen = HashSet::new();
    for name in names {
        if !seen.insert(name) {
            return Err(Error::DuplicateClassName { kind, name: name.to_string() });
        }
    }
    Ok(())
}

/// Validates `config` against the built-in component registry and returns it
/// unchanged.
pub fn validate_config(config: PipelineConfig) -> Result<PipelineConfig> {
    config.validate_with(&crate::components::Registry::builtin())?;
    Ok(config)
}
