use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::embedding::{embed, similarity, Embedding};
use super::{in_batches, parse_params, Linker};
use crate::error::{Error, Result};
use crate::model::{ComponentSpec, Document, Entity, Span};
use crate::text::{normalize_surface, CharText};

/// Characters of context taken on each side of a mention for disambiguation.
pub const CONTEXT_WINDOW: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeBaseEntry {
    pub id: String,
    pub title: String,
    #[serde(default)]
    pub aliases: Vec<String>,
    #[serde(default)]
    pub description: String,
}

impl KnowledgeBaseEntry {
    fn matches(&self, normalized_mention: &str) -> bool {
        std::iter::once(&self.title).chain(&self.aliases).any(|alias| normalize_surface(alias) == normalized_mention)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnowledgeBase {
    entries: Vec<KnowledgeBaseEntry>,
}

impl KnowledgeBase {
    pub fn new(entries: Vec<KnowledgeBaseEntry>) -> Result<Self> {
        let mut ids = HashSet::new();
        for e in &entries {
            if !ids.insert(e.id.as_str()) {
                return Err(Error::InvalidConfig(format!("duplicate knowledge base id `{}`", e.id)));
            }
        }
        Ok(Self { entries })
    }

    /// Reads one JSON entry per line; blank lines are skipped.
    pub fn from_jsonl(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry = serde_json::from_str(line).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
            entries.push(entry);
        }
        Self::new(entries)
    }

    pub fn entries(&self) -> &[KnowledgeBaseEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Links a mention to a knowledge-base entry. Candidates are entries with an
/// alias (title included) equal to the mention after case and whitespace
/// normalization; the winner maximizes the similarity between the mention's
/// surrounding text and the entry description. `None` means no candidate.
pub fn kb_link(mention: &Span, doc: &Document, kb: &[KnowledgeBaseEntry]) -> Result<Option<(String, f64)>> {
    let chars = CharText::new(&doc.text);
    mention.validate(chars.len())?;
    link_with(mention, &chars, kb, &kb.iter().map(|e| embed(&e.description)).collect::<Vec<_>>())
        .map(|hit| hit.map(|(i, score)| (kb[i].id.clone(), score)))
}

fn link_with(
    mention: &Span,
    chars: &CharText<'_>,
    kb: &[KnowledgeBaseEntry],
    descriptions: &[Embedding],
) -> Result<Option<(usize, f64)>> {
    if kb.is_empty() {
        return Err(Error::EmptyKnowledgeBase);
    }
    let surface = normalize_surface(chars.slice(mention.start, mention.end));
    let window = chars.slice(mention.start.saturating_sub(CONTEXT_WINDOW), mention.end + CONTEXT_WINDOW);
    let context = embed(window);
    let mut best: Option<(usize, f64)> = None;
    for (i, entry) in kb.iter().enumerate() {
        if !entry.matches(&surface) {
            continue;
        }
        let score = similarity(&context, &descriptions[i]);
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((i, score));
        }
    }
    Ok(best)
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct KbParams {
    path: Option<String>,
    entries: Option<Vec<KnowledgeBaseEntry>>,
}

/// Mention-consuming linker over a local knowledge base. Each linked span
/// carries the entry id in `kb_id`; its label is the configured entity whose
/// name equals the entry id or title, falling back to the entity whose
/// description is closest to the entry's.
#[derive(Debug, Clone)]
pub struct KbLinker {
    kb: KnowledgeBase,
    descriptions: Vec<Embedding>,
}

impl KbLinker {
    pub fn new(kb: KnowledgeBase) -> Self {
        let descriptions = kb.entries.iter().map(|e| embed(&e.description)).collect();
        Self { kb, descriptions }
    }

    pub(crate) fn from_spec(spec: &ComponentSpec) -> Result<Self> {
        let p: KbParams = parse_params(spec)?;
        let kb = match (p.path, p.entries) {
            (Some(path), None) => KnowledgeBase::from_jsonl(Path::new(&path))?,
            (None, Some(entries)) => KnowledgeBase::new(entries)?,
            _ => {
                return Err(Error::InvalidParams {
                    key: spec.key.clone(),
                    message: "exactly one of `path` or `entries` is required".into(),
                })
            }
        };
        Ok(Self::new(kb))
    }

    pub fn knowledge_base(&self) -> &KnowledgeBase {
        &self.kb
    }

    fn classify(entry: &KnowledgeBaseEntry, entities: &[Entity], entity_vectors: &[Embedding]) -> usize {
        let named = entities
            .iter()
            .position(|e| e.name.eq_ignore_ascii_case(&entry.id) || e.name.eq_ignore_ascii_case(&entry.title));
        named.unwrap_or_else(|| {
            let v = embed(&format!("{} {}", entry.title, entry.description));
            let mut best = (0, f64::NEG_INFINITY);
            for (i, ev) in entity_vectors.iter().enumerate() {
                let s = similarity(&v, ev);
                if s > best.1 {
                    best = (i, s);
                }
            }
            best.0
        })
    }
}

impl Linker for KbLinker {
    fn predict(&self, docs: &[Document], entities: &[Entity], batch_size: usize) -> Result<Vec<Vec<Span>>> {
        if entities.is_empty() {
            return Err(Error::NoEntitiesConfigured);
        }
        let entity_vectors: Vec<_> = entities.iter().map(|e| embed(&format!("{} {}", e.name, e.description))).collect();
        in_batches(docs, batch_size, |doc| {
            let chars = CharText::new(&doc.text);
            let mut spans = Vec::new();
            for mention in &doc.mentions {
                mention.validate(chars.len())?;
                if let Some((i, score)) = link_with(mention, &chars, self.kb.entries(), &self.descriptions)? {
                    let entry = &self.kb.entries()[i];
                    let label = &entities[Self::classify(entry, entities, &entity_vectors)].name;
                    let mut span = Span::labeled(mention.start, mention.end, label.clone(), score);
                    span.kb_id = Some(entry.id.clone());
                    spans.push(span);
                }
            }
            Ok(spans)
        })
    }

    fn is_end_to_end(&self) -> bool {
        false
    }
}
