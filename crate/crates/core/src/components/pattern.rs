use serde::Deserialize;

use super::{in_batches, parse_params, MentionsExtractor};
use crate::error::{Error, Result};
use crate::model::{ComponentSpec, Document, Span};
use crate::text::tokenize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct PatternParams {
    chars: String,
    ignore_case: bool,
}

impl Default for PatternParams {
    fn default() -> Self {
        Self { chars: "s".into(), ignore_case: false }
    }
}

/// Emits every token containing at least one of a set of characters.
#[derive(Debug, Clone)]
pub struct PatternMentionsExtractor {
    chars: Vec<char>,
    ignore_case: bool,
}

impl Default for PatternMentionsExtractor {
    fn default() -> Self {
        Self::containing("s")
    }
}

impl PatternMentionsExtractor {
    pub fn containing(chars: &str) -> Self {
        Self { chars: chars.chars().collect(), ignore_case: false }
    }

    pub fn ignore_case(mut self, yes: bool) -> Self {
        self.ignore_case = yes;
        self
    }

    pub(crate) fn from_spec(spec: &ComponentSpec) -> Result<Self> {
        let p: PatternParams = parse_params(spec)?;
        if p.chars.is_empty() {
            return Err(Error::InvalidParams { key: spec.key.clone(), message: "`chars` is empty".into() });
        }
        Ok(Self::containing(&p.chars).ignore_case(p.ignore_case))
    }

    fn matches(&self, token: &str) -> bool {
        if self.ignore_case {
            let lowered = token.to_lowercase();
            self.chars.iter().flat_map(|c| c.to_lowercase()).any(|c| lowered.contains(c))
        } else {
            token.chars().any(|c| self.chars.contains(&c))
        }
    }

    pub fn extract(&self, text: &str) -> Vec<Span> {
        tokenize(text).into_iter().filter(|t| self.matches(t.text)).map(|t| Span::new(t.start, t.end)).collect()
    }
}

impl MentionsExtractor for PatternMentionsExtractor {
    fn predict(&self, docs: &[Document], batch_size: usize) -> Result<Vec<Vec<Span>>> {
        in_batches(docs, batch_size, |doc| Ok(self.extract(&doc.text)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::doc_from_text;

    fn words(text: &str, ex: &PatternMentionsExtractor) -> Vec<String> {
        let doc = doc_from_text(text);
        ex.predict(std::slice::from_ref(&doc), 8).unwrap()[0].iter().map(|s| doc.span_text(s).to_string()).collect()
    }

    #[test]
    fn letter_s_example() {
        let text = "CH2O2 is a chemical compound similar to Acetamide used in \
                    International Business Machines Corporation (IBM).";
        assert_eq!(
            words(text, &PatternMentionsExtractor::default()),
            ["is", "similar", "used", "Business", "Machines"]
        );
    }

    #[test]
    fn empty_and_no_match() {
        let ex = PatternMentionsExtractor::default();
        assert!(words("", &ex).is_empty());
        assert!(words("AAA BBB", &ex).is_empty());
        assert_eq!(words("AAA BBB", &PatternMentionsExtractor::containing("b").ignore_case(true)), ["BBB"]);
    }

    #[test]
    fn empty_chars_rejected() {
        let spec = ComponentSpec::new("pattern-mentions").with_params(serde_json::json!({"chars": ""}));
        assert!(PatternMentionsExtractor::from_spec(&spec).is_err());
    }
}
