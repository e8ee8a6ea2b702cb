//! Split-on-"deprecated" heuristic: code entities before the first
//! deprecation verb are deprecated, those after it are replacements.

use std::collections::BTreeSet;

use crate::corpus::AnnotatedExample;

const TRIGGERS: [&str; 3] = ["deprecate", "deprecated", "deprecates"];

/// Returns `(depr, repl)` code-entity texts. Without a trigger word every
/// entity is deprecated and `repl` is empty.
pub fn split_baseline(example: &AnnotatedExample) -> (BTreeSet<String>, BTreeSet<String>) {
    let split = example
        .tokens
        .iter()
        .position(|t| !t.is_code && TRIGGERS.contains(&t.surface.to_lowercase().as_str()));
    let mut depr = BTreeSet::new();
    let mut repl = BTreeSet::new();
    for span in &example.code_spans {
        match split {
            Some(at) if span.start > at => repl.insert(span.entity.clone()),
            _ => depr.insert(span.entity.clone()),
        };
    }
    (depr, repl)
}
