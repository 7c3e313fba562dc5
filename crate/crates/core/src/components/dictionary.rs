use std::collections::HashMap;

use super::{in_batches, Linker};
use crate::error::{Error, Result};
use crate::model::{ComponentSpec, Document, Entity, Span};
use crate::text::{tokenize, CharText};

/// Gazetteer linker: case-insensitive longest match of each entity's
/// vocabulary, anchored at token boundaries. Every hit scores 1.0.
#[derive(Debug, Clone, Default)]
pub struct DictionaryLinker;

struct Gazetteer<'a> {
    forms: HashMap<String, &'a str>,
    max_tokens: usize,
}

impl<'a> Gazetteer<'a> {
    fn new(entities: &'a [Entity]) -> Self {
        let mut forms = HashMap::new();
        let mut max_tokens = 0;
        for entity in entities {
            for form in entity.vocabulary.iter().flatten() {
                let n = tokenize(form).len();
                if n == 0 {
                    continue;
                }
                max_tokens = max_tokens.max(n);
                // first entity in configuration order owns a shared form
                forms.entry(form.trim().to_lowercase()).or_insert(entity.name.as_str());
            }
        }
        Self { forms, max_tokens }
    }

    fn scan(&self, text: &str) -> Vec<Span> {
        let chars = CharText::new(text);
        let tokens = chars.tokens();
        let mut spans = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let longest = (i..tokens.len().min(i + self.max_tokens)).rev().find_map(|j| {
                let surface = chars.slice(tokens[i].start, tokens[j].end).to_lowercase();
                self.forms.get(&surface).map(|label| (j, *label))
            });
            match longest {
                Some((j, label)) => {
                    spans.push(Span::labeled(tokens[i].start, tokens[j].end, label, 1.0));
                    i = j + 1;
                }
                None => i += 1,
            }
        }
        spans
    }
}

impl DictionaryLinker {
    pub(crate) fn from_spec(spec: &ComponentSpec) -> Result<Self> {
        if !spec.params.is_null() && spec.params.as_object().is_none_or(|o| !o.is_empty()) {
            return Err(Error::InvalidParams {
                key: spec.key.clone(),
                message: "takes no parameters; vocabulary comes from the entities".into(),
            });
        }
        Ok(Self)
    }

    pub fn link_text(&self, text: &str, entities: &[Entity]) -> Vec<Span> {
        Gazetteer::new(entities).scan(text)
    }
}

impl Linker for DictionaryLinker {
    fn predict(&self, docs: &[Document], entities: &[Entity], batch_size: usize) -> Result<Vec<Vec<Span>>> {
        if entities.is_empty() {
            return Err(Error::NoEntitiesConfigured);
        }
        let gazetteer = Gazetteer::new(entities);
        in_batches(docs, batch_size, |doc| Ok(gazetteer.scan(&doc.text)))
    }

    fn is_end_to_end(&self) -> bool {
        true
    }
}
