//! Static HTML renderings of annotated documents.
//!
//! [`render_entities`] highlights entity spans inline, one color per class.
//! [`render_relations`] draws entity boxes in text order with an SVG arc per
//! relation triple; arc height grows with the box index distance so labels
//! of nested arcs do not collide. Layout uses integer coordinates only, so
//! output is byte-stable.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::model::{ensure_non_overlapping, Document, Span};
use crate::text::CharText;

pub const DEFAULT_PALETTE: [&str; 12] = [
    "#7aecec", "#bfeeb7", "#feca74", "#ff9561", "#aa9cfc", "#c887fb", "#9cc9cc", "#ffeb80", "#ff8197", "#f0d0ff",
    "#bfe1d9", "#e4e7d2",
];

const UNLABELED: &str = "ENTITY";

pub fn escape_html(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Palette {
    colors: Vec<String>,
}

impl Default for Palette {
    fn default() -> Self {
        Self { colors: DEFAULT_PALETTE.iter().map(|c| c.to_string()).collect() }
    }
}

impl Palette {
    pub fn new(colors: Vec<String>) -> Result<Self> {
        if colors.is_empty() {
            return Err(Error::InvalidConfig("palette needs at least one color".into()));
        }
        Ok(Self { colors })
    }

    pub fn colors(&self) -> &[String] {
        &self.colors
    }

    /// Sorted, deduplicated class names mapped to palette entries in order,
    /// cycling once the palette runs out.
    pub fn assign<S: AsRef<str>>(&self, names: &[S]) -> BTreeMap<String, String> {
        let sorted: BTreeSet<&str> = names.iter().map(AsRef::as_ref).collect();
        sorted
            .into_iter()
            .enumerate()
            .map(|(i, name)| (name.to_string(), self.colors[i % self.colors.len()].clone()))
            .collect()
    }
}

pub fn assign_colors<S: AsRef<str>>(names: &[S]) -> BTreeMap<String, String> {
    Palette::default().assign(names)
}

fn label(span: &Span) -> &str {
    span.label.as_deref().unwrap_or(UNLABELED)
}

const ENT_STYLE: &str = "\
.entities { line-height: 2.5; direction: ltr; white-space: pre-wrap; font-family: sans-serif; }
mark.entity { padding: 0.45em 0.6em; margin: 0 0.25em; line-height: 1; border-radius: 0.35em; }
mark.entity .entity-label { font-size: 0.8em; font-weight: bold; line-height: 1; vertical-align: middle; margin-left: 0.5rem; text-transform: uppercase; }
";

const REL_STYLE: &str = "\
.relations { font-family: sans-serif; }
.relations .text { white-space: pre-wrap; }
.rel-arc { fill: none; stroke: #555555; stroke-width: 2; }
.rel-arrow { fill: #555555; }
.rel-label { font-size: 12px; text-anchor: middle; }
.box-text { font-size: 14px; text-anchor: middle; }
.box-label { font-size: 11px; font-weight: bold; text-anchor: middle; }
";

fn page(title: &str, style: &str, body: &str) -> String {
    format!(
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>{title}</title>\n\
         <style>\n{style}</style>\n</head>\n<body>\n{body}</body>\n</html>\n"
    )
}

#[derive(Debug, Clone, Default)]
pub struct Renderer {
    palette: Palette,
}

impl Renderer {
    pub fn new(palette: Palette) -> Self {
        Self { palette }
    }

    fn colors_for(&self, doc: &Document) -> BTreeMap<String, String> {
        let names: Vec<&str> = doc.entities.iter().map(label).collect();
        self.palette.assign(&names)
    }

    pub fn render_entities(&self, doc: &Document) -> Result<String> {
        let chars = CharText::new(&doc.text);
        for s in &doc.entities {
            s.validate(chars.len())?;
        }
        ensure_non_overlapping(&doc.entities)?;
        let colors = self.colors_for(doc);
        let mut spans: Vec<&Span> = doc.entities.iter().collect();
        spans.sort_by_key(|s| s.start);

        let mut body = String::from("<div class=\"entities\">");
        let mut cursor = 0;
        for s in spans {
            body.push_str(&escape_html(chars.slice(cursor, s.start)));
            let name = label(s);
            let _ = write!(
                body,
                "<mark class=\"entity\" style=\"background: {}\">{}<span class=\"entity-label\">{}</span></mark>",
                colors[name],
                escape_html(chars.slice(s.start, s.end)),
                escape_html(name)
            );
            cursor = s.end;
        }
        body.push_str(&escape_html(chars.slice(cursor, chars.len())));
        body.push_str("</div>\n");
        Ok(page("Entities", ENT_STYLE, &body))
    }

    pub fn render_relations(&self, doc: &Document) -> Result<String> {
        const MARGIN: usize = 20;
        const GAP: usize = 40;
        const BOX_HEIGHT: usize = 44;
        const LEVEL: usize = 30;
        const CHAR_WIDTH: usize = 8;

        let chars = CharText::new(&doc.text);
        for s in &doc.entities {
            s.validate(chars.len())?;
        }
        let mut boxes: Vec<&Span> = doc.entities.iter().collect();
        boxes.sort_by_key(|s| (s.start, s.end));
        let index: HashMap<(usize, usize), usize> = boxes.iter().enumerate().map(|(i, s)| (s.key(), i)).collect();
        let mut arcs = Vec::with_capacity(doc.relations.len());
        let mut stacked: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &doc.relations {
            let find =
                |s: &Span| index.get(&s.key()).copied().ok_or(Error::DanglingRelation { start: s.start, end: s.end });
            let (from, to) = (find(&t.subject)?, find(&t.object)?);
            let pair = (from.min(to), from.max(to));
            let level = stacked.entry(pair).or_insert(0);
            arcs.push((from, to, *level, t.label.as_str()));
            *level += 1;
        }

        let widest = boxes
            .iter()
            .map(|s| chars.slice(s.start, s.end).chars().count().max(label(s).chars().count()))
            .max()
            .unwrap_or(0);
        let slot = (CHAR_WIDTH * widest + 24).max(120);
        let height_of = |from: usize, to: usize, level: usize| LEVEL * from.abs_diff(to).max(1) + LEVEL / 2 * level;
        let tallest = arcs.iter().map(|&(f, t, l, _)| height_of(f, t, l)).max().unwrap_or(0);
        let top = MARGIN + tallest + if arcs.is_empty() { 0 } else { 20 };
        let width = 2 * MARGIN + boxes.len() * slot + boxes.len().saturating_sub(1) * GAP;
        let svg_height = top + BOX_HEIGHT + MARGIN;
        let left = |i: usize| MARGIN + i * (slot + GAP);
        let center = |i: usize| left(i) + slot / 2;

        let colors = self.colors_for(doc);
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{svg_height}\" \
             viewBox=\"0 0 {width} {svg_height}\">"
        );
        for (i, s) in boxes.iter().enumerate() {
            let name = label(s);
            let _ = writeln!(
                svg,
                "<g class=\"entity-box\"><rect x=\"{}\" y=\"{top}\" width=\"{slot}\" height=\"{BOX_HEIGHT}\" rx=\"6\" \
                 fill=\"{}\"/><text class=\"box-text\" x=\"{}\" y=\"{}\">{}</text><text class=\"box-label\" x=\"{}\" \
                 y=\"{}\">{}</text></g>",
                left(i),
                colors[name],
                center(i),
                top + 18,
                escape_html(chars.slice(s.start, s.end)),
                center(i),
                top + 36,
                escape_html(name)
            );
        }
        for &(from, to, level, name) in &arcs {
            // arcs leave a box right of center when heading right, left of center otherwise
            let (x1, x2) =
                if from < to { (center(from) + 8, center(to) - 8) } else { (center(from) - 8, center(to) + 8) };
            let h = height_of(from, to, level);
            let control = top - h * 4 / 3;
            let apex = top - h;
            let _ = writeln!(
                svg,
                "<g class=\"relation\"><path class=\"rel-arc\" d=\"M {x1},{top} C {x1},{control} {x2},{control} {x2},{top}\"/>\
                 <path class=\"rel-arrow\" d=\"M {x2},{top} L {},{} L {},{} Z\"/>\
                 <text class=\"rel-label\" x=\"{}\" y=\"{}\">{}</text></g>",
                x2 - 4,
                top - 8,
                x2 + 4,
                top - 8,
                (x1 + x2) / 2,
                apex - 4,
                escape_html(name)
            );
        }
        svg.push_str("</svg>\n");

        let body =
            format!("<div class=\"relations\">\n<p class=\"text\">{}</p>\n{svg}</div>\n", escape_html(&doc.text));
        Ok(page("Relations", REL_STYLE, &body))
    }
}

pub fn render_entities(doc: &Document) -> Result<String> {
    Renderer::default().render_entities(doc)
}

pub fn render_relations(doc: &Document) -> Result<String> {
    Renderer::default().render_relations(doc)
}
