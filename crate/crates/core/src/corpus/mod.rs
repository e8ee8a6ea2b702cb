//! Deprecation records: extraction from release-notes HTML, tokenization,
//! the line-delimited dataset format and the bundled golden examples.

mod dataset;
mod html;
mod tokenize;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::transition::{CodeEntity, Transition};
use crate::tree::{annotation_to_tree, CodeExpression, SemTree, TreeError};

pub use dataset::{parse_dataset, read_dataset, to_jsonl, write_dataset};
pub use html::{extract_deprecations, DeprecationItem, ExtractConfig, Source};
pub use tokenize::{item_to_example, tokenize};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("example `{id}`: {message}")]
    Invalid { id: String, message: String },
}

/// One token of an example. Linguistic fields are absent until the
/// preprocessor has run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinguisticToken {
    pub surface: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dep: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head: Option<usize>,
    #[serde(default)]
    pub is_code: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code_entity_id: Option<usize>,
}

impl LinguisticToken {
    pub fn word(surface: impl Into<String>) -> Self {
        LinguisticToken {
            surface: surface.into(),
            lemma: None,
            pos: None,
            dep: None,
            head: None,
            is_code: false,
            code_entity_id: None,
        }
    }

    pub fn code(surface: impl Into<String>, entity: usize) -> Self {
        LinguisticToken {
            is_code: true,
            code_entity_id: Some(entity),
            ..LinguisticToken::word(surface)
        }
    }

    pub fn is_annotated(&self) -> bool {
        self.head.is_some() || self.dep.is_some() || self.pos.is_some()
    }
}

/// A code entity covering tokens `start..end`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSpan {
    pub start: usize,
    pub end: usize,
    pub entity: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedExample {
    pub id: String,
    pub library: String,
    #[serde(default)]
    pub version: String,
    pub text: String,
    pub tokens: Vec<LinguisticToken>,
    pub code_spans: Vec<CodeSpan>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gold_depr: Vec<CodeExpression>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gold_repl: Vec<CodeExpression>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_tree: Option<SemTree>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub units: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub workarounds: Vec<String>,
    #[serde(default)]
    pub gold: bool,
    /// Reference transition sequence, when one is known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivation: Option<Vec<Transition>>,
    /// Fields this version does not know about, kept verbatim.
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl AnnotatedExample {
    /// Code entities in text order, one per code span.
    pub fn entities(&self) -> Vec<CodeEntity> {
        self.code_spans
            .iter()
            .enumerate()
            .map(|(i, span)| CodeEntity {
                id: i,
                text: span.entity.clone(),
                tokens: Some((span.start, span.end)),
            })
            .collect()
    }

    pub fn has_annotation(&self) -> bool {
        self.gold_tree.is_some() || !self.gold_depr.is_empty()
    }

    /// The stored gold tree, or one built from the gold expressions.
    pub fn gold_semtree(&self) -> Result<Option<SemTree>, TreeError> {
        if let Some(tree) = &self.gold_tree {
            return Ok(Some(tree.clone()));
        }
        if self.gold_depr.is_empty() {
            return Ok(None);
        }
        annotation_to_tree(&self.gold_depr, &self.gold_repl).map(Some)
    }

    /// Gold code-expression strings for the set metrics.
    pub fn gold_sets(&self) -> Option<(Vec<String>, Vec<String>)> {
        if !self.gold_depr.is_empty() {
            let render = |xs: &[CodeExpression]| xs.iter().map(CodeExpression::render).collect();
            return Some((render(&self.gold_depr), render(&self.gold_repl)));
        }
        self.gold_tree.as_ref().map(SemTree::code_expressions)
    }

    /// First unit label, or `unlabeled`.
    pub fn unit(&self) -> &str {
        self.units.first().map(String::as_str).unwrap_or("unlabeled")
    }

    /// Structural checks beyond the schema.
    pub fn check(&self) -> Result<(), String> {
        let n = self.tokens.len();
        let mut last_end = 0;
        for (i, span) in self.code_spans.iter().enumerate() {
            if span.start >= span.end || span.end > n {
                return Err(format!("code span {i} ({}..{}) outside 0..{n}", span.start, span.end));
            }
            if span.start < last_end {
                return Err(format!("code span {i} overlaps its predecessor"));
            }
            last_end = span.end;
            let covered: String = self.tokens[span.start..span.end]
                .iter()
                .map(|t| t.surface.as_str())
                .collect();
            if covered != span.entity {
                return Err(format!(
                    "code span {i} entity `{}` differs from its tokens `{covered}`",
                    span.entity
                ));
            }
            if let Some(t) = self.tokens[span.start..span.end]
                .iter()
                .find(|t| !t.is_code || t.code_entity_id != Some(i))
            {
                return Err(format!("token `{}` in code span {i} is not marked as entity {i}", t.surface));
            }
        }
        for (j, t) in self.tokens.iter().enumerate() {
            if let Some(h) = t.head {
                if h >= n {
                    return Err(format!("token {j} head {h} out of range"));
                }
            }
            if let Some(e) = t.code_entity_id {
                let inside = self
                    .code_spans
                    .get(e)
                    .is_some_and(|s| (s.start..s.end).contains(&j));
                if !inside {
                    return Err(format!("token {j} claims entity {e} but lies outside its span"));
                }
            }
        }
        if self.gold && !self.has_annotation() {
            return Err("gold example without gold expressions".into());
        }
        if let Some(tree) = &self.gold_tree {
            if !self.gold_depr.is_empty() {
                let built = annotation_to_tree(&self.gold_depr, &self.gold_repl)
                    .map_err(|e| e.to_string())?;
                if &built != tree {
                    return Err(format!("gold_tree {tree} disagrees with gold expressions {built}"));
                }
            }
        }
        Ok(())
    }
}

/// The bundled golden mini-corpus, built from deprecation texts of the
/// pandas, networkx and Python standard library release notes.
pub fn golden() -> Vec<AnnotatedExample> {
    parse_dataset(include_str!("../../data/golden.jsonl"))
        .expect("bundled golden corpus is well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transition::run;

    #[test]
    fn bundled_derivations_reach_their_gold_trees() {
        let data = golden();
        assert_eq!(data.len(), 12);
        let mut derivable = 0;
        for example in &data {
            let Some(seq) = &example.derivation else { continue };
            derivable += 1;
            let tree = run(&example.entities(), seq).unwrap_or_else(|e| panic!("{}: {e}", example.id));
            assert_eq!(Some(tree), example.gold_semtree().unwrap(), "{}", example.id);
        }
        assert_eq!(derivable, 10);
    }

    #[test]
    fn dataset_round_trip() {
        let data = golden();
        let text = to_jsonl(&data);
        let again = parse_dataset(&text).unwrap();
        assert_eq!(again, data);
        assert_eq!(to_jsonl(&again), text);
    }
}
