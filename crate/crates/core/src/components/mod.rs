//! Stage interfaces, the component registry, and the built-in baselines.
//!
//! A new component only has to implement `predict` for one of the three
//! stage traits; the pipeline takes care of batching, finalization and
//! attaching results to documents.

mod dictionary;
pub mod embedding;
mod kb;
mod pattern;
mod relations;
mod similarity;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde_json::Value;

pub use dictionary::DictionaryLinker;
pub use embedding::{cosine, embed, Embedding, DIM};
pub use kb::{kb_link, KbLinker, KnowledgeBase, KnowledgeBaseEntry, CONTEXT_WINDOW};
pub use pattern::PatternMentionsExtractor;
pub use relations::{CosineRelationExtractor, DEFAULT_RELATION_THRESHOLD};
pub use similarity::{SimilarityLinker, DEFAULT_NEGATIVE_THRESHOLD};

use crate::ensemble::{EnsembleLinker, ENSEMBLE_KEY};
use crate::error::{Error, Result};
use crate::model::{ComponentSpec, Document, Entity, LinkerCatalog, Relation, RelationTriple, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ComponentKind {
    MentionsExtractor,
    Linker,
    RelationsExtractor,
}

impl ComponentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ComponentKind::MentionsExtractor => "mentions_extractor",
            ComponentKind::Linker => "linker",
            ComponentKind::RelationsExtractor => "relations_extractor",
        }
    }
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentDescriptor {
    pub key: String,
    pub kind: ComponentKind,
    /// Linkers only. `None` for the ensemble, whose status follows its members.
    pub is_end_to_end: Option<bool>,
}

pub trait MentionsExtractor: Send + Sync {
    /// One unlabeled span list per document, order-aligned with `docs`.
    fn predict(&self, docs: &[Document], batch_size: usize) -> Result<Vec<Vec<Span>>>;

    /// Exclusive components are never called concurrently.
    fn exclusive(&self) -> bool {
        false
    }
}

pub trait Linker: Send + Sync {
    /// Labeled, scored spans per document. Non-end-to-end linkers read their
    /// candidates from each document's mention layer.
    fn predict(&self, docs: &[Document], entities: &[Entity], batch_size: usize) -> Result<Vec<Vec<Span>>>;

    fn is_end_to_end(&self) -> bool;

    fn exclusive(&self) -> bool {
        false
    }
}

pub trait RelationsExtractor: Send + Sync {
    fn predict(&self, docs: &[Document], relations: &[Relation], batch_size: usize)
        -> Result<Vec<Vec<RelationTriple>>>;

    fn exclusive(&self) -> bool {
        false
    }
}

/// Runs `f` over `docs` in chunks of `batch_size` and concatenates the results.
pub(crate) fn in_batches<T>(
    docs: &[Document],
    batch_size: usize,
    mut f: impl FnMut(&Document) -> Result<T>,
) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(docs.len());
    for chunk in docs.chunks(batch_size.max(1)) {
        for doc in chunk {
            out.push(f(doc)?);
        }
    }
    Ok(out)
}

pub(crate) fn parse_params<T: DeserializeOwned + Default>(spec: &ComponentSpec) -> Result<T> {
    if spec.params.is_null() {
        return Ok(T::default());
    }
    serde_json::from_value(spec.params.clone())
        .map_err(|e| Error::InvalidParams { key: spec.key.clone(), message: e.to_string() })
}

type Factory<T> = Arc<dyn Fn(&ComponentSpec, &Registry) -> Result<T> + Send + Sync>;

struct Registered<T> {
    descriptor: ComponentDescriptor,
    factory: Factory<T>,
}

impl<T> Clone for Registered<T> {
    fn clone(&self) -> Self {
        Self { descriptor: self.descriptor.clone(), factory: Arc::clone(&self.factory) }
    }
}

/// Maps registry keys to component constructors.
#[derive(Clone, Default)]
pub struct Registry {
    mentions: BTreeMap<String, Registered<Box<dyn MentionsExtractor>>>,
    linkers: BTreeMap<String, Registered<Box<dyn Linker>>>,
    relations: BTreeMap<String, Registered<Box<dyn RelationsExtractor>>>,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.descriptors().iter().map(|d| &d.key)).finish()
    }
}

impl Registry {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register_mentions("pattern-mentions", |spec, _| Ok(Box::new(PatternMentionsExtractor::from_spec(spec)?)));
        r.register_linker("similarity-linker", true, |spec, _| Ok(Box::new(SimilarityLinker::from_spec(spec)?)));
        r.register_linker("dictionary-linker", true, |spec, _| Ok(Box::new(DictionaryLinker::from_spec(spec)?)));
        r.register_linker("kb-linker", false, |spec, _| Ok(Box::new(KbLinker::from_spec(spec)?)));
        r.register_relations("cosine-relations", |spec, _| Ok(Box::new(CosineRelationExtractor::from_spec(spec)?)));
        r
    }

    pub fn register_mentions<F>(&mut self, key: &str, factory: F)
    where
        F: Fn(&ComponentSpec, &Registry) -> Result<Box<dyn MentionsExtractor>> + Send + Sync + 'static,
    {
        let descriptor =
            ComponentDescriptor { key: key.to_string(), kind: ComponentKind::MentionsExtractor, is_end_to_end: None };
        self.mentions.insert(key.to_string(), Registered { descriptor, factory: Arc::new(factory) });
    }

    pub fn register_linker<F>(&mut self, key: &str, end_to_end: bool, factory: F)
    where
        F: Fn(&ComponentSpec, &Registry) -> Result<Box<dyn Linker>> + Send + Sync + 'static,
    {
        let descriptor =
            ComponentDescriptor { key: key.to_string(), kind: ComponentKind::Linker, is_end_to_end: Some(end_to_end) };
        self.linkers.insert(key.to_string(), Registered { descriptor, factory: Arc::new(factory) });
    }

    pub fn register_relations<F>(&mut self, key: &str, factory: F)
    where
        F: Fn(&ComponentSpec, &Registry) -> Result<Box<dyn RelationsExtractor>> + Send + Sync + 'static,
    {
        let descriptor =
            ComponentDescriptor { key: key.to_string(), kind: ComponentKind::RelationsExtractor, is_end_to_end: None };
        self.relations.insert(key.to_string(), Registered { descriptor, factory: Arc::new(factory) });
    }

    /// Every registered component, grouped by kind then key. The ensemble
    /// linker is always listed.
    pub fn descriptors(&self) -> Vec<ComponentDescriptor> {
        let mut out: Vec<_> = self.mentions.values().map(|r| r.descriptor.clone()).collect();
        out.extend(self.linkers.values().map(|r| r.descriptor.clone()));
        out.push(ComponentDescriptor {
            key: ENSEMBLE_KEY.to_string(),
            kind: ComponentKind::Linker,
            is_end_to_end: None,
        });
        out.extend(self.relations.values().map(|r| r.descriptor.clone()));
        out
    }

    pub fn build_mentions(&self, spec: &ComponentSpec) -> Result<Box<dyn MentionsExtractor>> {
        let entry = self.mentions.get(&spec.key).ok_or_else(|| Error::UnknownComponent {
            kind: ComponentKind::MentionsExtractor.as_str(),
            key: spec.key.clone(),
        })?;
        (entry.factory)(spec, self)
    }

    pub fn build_linker(&self, spec: &ComponentSpec) -> Result<Box<dyn Linker>> {
        if spec.key == ENSEMBLE_KEY {
            return Ok(Box::new(EnsembleLinker::from_spec(spec, self)?));
        }
        let entry = self
            .linkers
            .get(&spec.key)
            .ok_or_else(|| Error::UnknownComponent { kind: ComponentKind::Linker.as_str(), key: spec.key.clone() })?;
        (entry.factory)(spec, self)
    }

    pub fn build_relations(&self, spec: &ComponentSpec) -> Result<Box<dyn RelationsExtractor>> {
        let entry = self.relations.get(&spec.key).ok_or_else(|| Error::UnknownComponent {
            kind: ComponentKind::RelationsExtractor.as_str(),
            key: spec.key.clone(),
        })?;
        (entry.factory)(spec, self)
    }
}

impl LinkerCatalog for Registry {
    fn linker_is_end_to_end(&self, spec: &ComponentSpec) -> Result<bool> {
        if spec.key == ENSEMBLE_KEY {
            let members = spec.extra.get("linkers").and_then(Value::as_array).ok_or_else(|| Error::InvalidParams {
                key: spec.key.clone(),
                message: "missing `linkers` list".into(),
            })?;
            if members.is_empty() {
                return Err(Error::EmptyEnsemble);
            }
            for member in members {
                let member: ComponentSpec = serde_json::from_value(member.clone())
                    .map_err(|e| Error::InvalidParams { key: spec.key.clone(), message: e.to_string() })?;
                if !self.linker_is_end_to_end(&member)? {
                    return Ok(false);
                }
            }
            return Ok(true);
        }
        self.linkers
            .get(&spec.key)
            .and_then(|r| r.descriptor.is_end_to_end)
            .ok_or_else(|| Error::UnknownComponent { kind: ComponentKind::Linker.as_str(), key: spec.key.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_keys() {
        let keys: Vec<_> = Registry::builtin().descriptors().into_iter().map(|d| d.key).collect();
        assert_eq!(
            keys,
            ["pattern-mentions", "dictionary-linker", "kb-linker", "similarity-linker", "ensemble", "cosine-relations"]
        );
    }

    #[test]
    fn unknown_key_is_named() {
        let err = Registry::builtin().build_linker(&ComponentSpec::new("linker-missing")).err().unwrap();
        assert!(err.to_string().contains("linker-missing"));
    }

    #[test]
    fn bad_params_rejected() {
        let spec = ComponentSpec::new("similarity-linker").with_params(serde_json::json!({"bogus": 1}));
        assert!(matches!(Registry::builtin().build_linker(&spec), Err(Error::InvalidParams { .. })));
    }

    #[test]
    fn ensemble_end_to_end_follows_members() {
        let r = Registry::builtin();
        let spec: ComponentSpec = serde_json::from_value(serde_json::json!({
            "type": "ensemble",
            "linkers": [{"type": "similarity-linker"}, {"type": "kb-linker", "params": {"entries": []}}],
            "description_variants": [],
            "threshold": 0.5
        }))
        .unwrap();
        assert!(!r.linker_is_end_to_end(&spec).unwrap());
    }
}
