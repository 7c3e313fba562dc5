use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Entity, Relation, RelationTriple, Span};
use crate::text::char_len;

/// Canonical split names, in report order.
pub const SPLIT_NAMES: [&str; 3] = ["train", "validation", "test"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub text: String,
    #[serde(default)]
    pub entities: Vec<Span>,
    #[serde(default)]
    pub relations: Vec<RelationTriple>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassCatalog {
    #[serde(default)]
    pub entities: Vec<Entity>,
    #[serde(default)]
    pub relations: Vec<Relation>,
}

impl ClassCatalog {
    fn dedup(&mut self) {
        let mut seen = HashSet::new();
        self.entities.retain(|e| seen.insert(e.name.clone()));
        let mut seen = HashSet::new();
        self.relations.retain(|r| seen.insert(r.name.clone()));
    }

    pub fn entity_names(&self) -> BTreeSet<&str> {
        self.entities.iter().map(|e| e.name.as_str()).collect()
    }

    pub fn relation_names(&self) -> BTreeSet<&str> {
        self.relations.iter().map(|r| r.name.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub name: String,
    pub examples: Vec<LabeledExample>,
    pub classes: ClassCatalog,
}

impl DatasetSplit {
    pub fn new(name: impl Into<String>, examples: Vec<LabeledExample>, classes: ClassCatalog) -> Result<Self> {
        let mut split = Self { name: name.into(), examples, classes };
        split.classes.dedup();
        split.check()?;
        Ok(split)
    }

    fn check(&self) -> Result<()> {
        let entity_names = self.classes.entity_names();
        let relation_names = self.classes.relation_names();
        for (example, ex) in self.examples.iter().enumerate() {
            let len = char_len(&ex.text);
            let spans = ex.entities.iter().chain(ex.relations.iter().flat_map(|r| [&r.subject, &r.object]));
            for s in spans {
                if s.start >= s.end || s.end > len {
                    return Err(Error::SpanOutOfBounds {
                        split: self.name.clone(),
                        example,
                        start: s.start,
                        end: s.end,
                    });
                }
            }
            let unknown = ex
                .entities
                .iter()
                .filter_map(|s| s.label.as_deref())
                .find(|l| !entity_names.contains(l))
                .or_else(|| ex.relations.iter().map(|r| r.label.as_str()).find(|l| !relation_names.contains(l)));
            if let Some(label) = unknown {
                return Err(Error::UnknownClass { split: self.name.clone(), example, label: label.to_string() });
            }
        }
        Ok(())
    }
}

pub type Dataset = BTreeMap<String, DatasetSplit>;

fn read_examples(path: &Path) -> Result<Vec<LabeledExample>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

fn read_catalog(path: &Path) -> Result<ClassCatalog> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// Loads `{split}.jsonl` plus `classes.{split}.json` for every canonical
/// split present in `dir`. A split file without its classes file is an
/// I/O error; a directory with no split files at all is as well.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let mut splits = Dataset::new();
    for name in SPLIT_NAMES {
        let examples_path = dir.join(format!("{name}.jsonl"));
        if !examples_path.exists() {
            continue;
        }
        let examples = read_examples(&examples_path)?;
        let classes = read_catalog(&dir.join(format!("classes.{name}.json")))?;
        splits.insert(name.to_string(), DatasetSplit::new(name, examples, classes)?);
    }
    if splits.is_empty() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no train/validation/test .jsonl files"),
        ));
    }
    Ok(splits)
}

/// Splits ordered canonically: train, validation, test, then any others by name.
pub fn ordered_split_names<'a, I: IntoIterator<Item = &'a String>>(names: I) -> Vec<&'a String> {
    let mut v: Vec<_> = names.into_iter().collect();
    v.sort_by_key(|n| (SPLIT_NAMES.iter().position(|c| c == n).unwrap_or(SPLIT_NAMES.len()), n.as_str()));
    v
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitViolation {
    pub class: String,
    /// `entity` or `relation`.
    pub kind: &'static str,
    pub first: String,
    pub second: String,
}

impl std::fmt::Display for SplitViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} class `{}` appears in both {} and {}", self.kind, self.class, self.first, self.second)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ZeroShotReport {
    pub ok: bool,
    pub violations: Vec<SplitViolation>,
}

/// Checks that no class name is shared between any two splits. Entity and
/// relation catalogs are checked independently.
pub fn validate_zero_shot_splits(splits: &Dataset) -> ZeroShotReport {
    let names = ordered_split_names(splits.keys());
    let mut violations = Vec::new();
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            let (sa, sb) = (&splits[*a].classes, &splits[*b].classes);
            let mut push = |kind, shared: Vec<&str>| {
                violations.extend(shared.into_iter().map(|c| SplitViolation {
                    class: c.to_string(),
                    kind,
                    first: a.to_string(),
                    second: b.to_string(),
                }))
            };
            push("entity", sa.entity_names().intersection(&sb.entity_names()).copied().collect());
            push("relation", sa.relation_names().intersection(&sb.relation_names()).copied().collect());
        }
    }
    ZeroShotReport { ok: violations.is_empty(), violations }
}
