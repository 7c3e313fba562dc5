//! Character-offset text utilities.
//!
//! All spans in this crate address text by Unicode scalar value (char)
//! offsets. [`CharText`] caches the char-to-byte mapping so slicing is O(1).

/// A maximal run of alphanumeric characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub start: usize,
    pub end: usize,
    pub text: &'a str,
}

#[derive(Debug, Clone)]
pub struct CharText<'a> {
    text: &'a str,
    // byte offset of every char, plus a trailing text.len()
    offsets: Vec<usize>,
}

impl<'a> CharText<'a> {
    pub fn new(text: &'a str) -> Self {
        let mut offsets: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        offsets.push(text.len());
        Self { text, offsets }
    }

    pub fn as_str(&self) -> &'a str {
        self.text
    }

    /// Length in chars.
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Substring over char offsets `[start, end)`, clamped to the text.
    pub fn slice(&self, start: usize, end: usize) -> &'a str {
        let end = end.min(self.len());
        let start = start.min(end);
        &self.text[self.offsets[start]..self.offsets[end]]
    }

    pub fn tokens(&self) -> Vec<Token<'a>> {
        let mut tokens = Vec::new();
        let mut run_start: Option<usize> = None;
        for (i, c) in self.text.chars().enumerate() {
            match (c.is_alphanumeric(), run_start) {
                (true, None) => run_start = Some(i),
                (false, Some(s)) => {
                    tokens.push(self.token(s, i));
                    run_start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = run_start {
            tokens.push(self.token(s, self.len()));
        }
        tokens
    }

    fn token(&self, start: usize, end: usize) -> Token<'a> {
        Token { start, end, text: self.slice(start, end) }
    }
}

pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// Tokenizes on maximal alphanumeric runs, the tokenizer shared by every
/// baseline component and by metric computation.
pub fn tokenize(text: &str) -> Vec<Token<'_>> {
    CharText::new(text).tokens()
}

/// Lowercases and collapses whitespace runs to single spaces.
pub fn normalize_surface(text: &str) -> String {
    text.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}
