use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::TreeError;

/// A code expression as written by annotators, e.g. `MultiIndex.copy(levels)`,
/// `urllib.request` or `Series.clip(lower=threshold)`.
///
/// Only the last dot before the call parentheses separates the callable from
/// its namespace; argument text is kept verbatim with whitespace removed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CodeExpression {
    raw: String,
    namespace: Vec<String>,
    name: String,
    args: Vec<String>,
    call: bool,
}

impl CodeExpression {
    pub fn parse(raw: &str) -> Result<Self, TreeError> {
        let fail = |reason: &str| TreeError::Conversion {
            raw: raw.to_string(),
            reason: reason.to_string(),
        };
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            return Err(fail("empty expression"));
        }

        let (path, args, call) = match trimmed.find('(') {
            None => {
                if trimmed.contains(')') {
                    return Err(fail("unbalanced ')'"));
                }
                (trimmed, Vec::new(), false)
            }
            Some(open) => {
                if !trimmed.ends_with(')') {
                    return Err(fail("text after the argument list"));
                }
                let inner = &trimmed[open + 1..trimmed.len() - 1];
                (&trimmed[..open], split_args(inner).map_err(&fail)?, true)
            }
        };

        let mut segments: Vec<String> = Vec::new();
        for segment in path.split('.') {
            let segment = segment.trim();
            if segment.is_empty() {
                return Err(fail("empty name segment"));
            }
            if !segment.chars().all(is_identifier_char) {
                return Err(fail("invalid character in name"));
            }
            segments.push(segment.to_string());
        }
        let name = segments.pop().expect("split yields at least one segment");

        Ok(CodeExpression {
            raw: trimmed.to_string(),
            namespace: segments,
            name,
            args,
            call,
        })
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    /// Namespace segments before the final name.
    pub fn namespace(&self) -> &[String] {
        &self.namespace
    }

    /// Dotted namespace prefix, if any.
    pub fn prefix(&self) -> Option<String> {
        if self.namespace.is_empty() {
            None
        } else {
            Some(self.namespace.join("."))
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn args(&self) -> &[String] {
        &self.args
    }

    pub fn is_call(&self) -> bool {
        self.call
    }

    /// Dotted path without the argument list.
    pub fn path(&self) -> String {
        match self.prefix() {
            Some(p) => format!("{p}.{}", self.name),
            None => self.name.clone(),
        }
    }

    /// A non-call dotted name whose owner follows the CapWords class
    /// convention (`Calendar.day_name`, `RangeIndex._start`). Dotted names
    /// under lowercase owners are module paths (`urllib.request`).
    pub fn is_attribute(&self) -> bool {
        !self.call
            && self
                .namespace
                .last()
                .and_then(|owner| owner.chars().next())
                .is_some_and(|c| c.is_uppercase())
    }

    /// Re-renders the parsed parts; equals `raw` modulo whitespace.
    pub fn render(&self) -> String {
        let mut out = self.path();
        if self.call {
            out.push('(');
            out.push_str(&self.args.join(", "));
            out.push(')');
        }
        out
    }
}

fn is_identifier_char(c: char) -> bool {
    !(c.is_whitespace() || matches!(c, '.' | '(' | ')' | ',' | '=' | '"' | '\''))
}

fn split_args(inner: &str) -> Result<Vec<String>, &'static str> {
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut args = Vec::new();
    let mut depth = 0i32;
    let mut current = String::new();
    for c in inner.chars() {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => {
                depth -= 1;
                if depth < 0 {
                    return Err("unbalanced ')'");
                }
            }
            ',' if depth == 0 => {
                args.push(std::mem::take(&mut current));
                continue;
            }
            _ => {}
        }
        if !c.is_whitespace() {
            current.push(c);
        }
    }
    if depth != 0 {
        return Err("unbalanced '('");
    }
    args.push(current);
    if args.iter().any(|a| a.is_empty()) {
        return Err("empty argument");
    }
    Ok(args)
}

impl fmt::Display for CodeExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

impl FromStr for CodeExpression {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CodeExpression::parse(s)
    }
}

impl Serialize for CodeExpression {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.raw)
    }
}

impl<'de> Deserialize<'de> for CodeExpression {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        CodeExpression::parse(&raw).map_err(serde::de::Error::custom)
    }
}

/// Canonical form used by the set metrics: whitespace removed and one
/// trailing `()` dropped. Case is preserved.
pub fn normalize_code(text: &str) -> String {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    match compact.strip_suffix("()") {
        Some(stripped) => stripped.to_string(),
        None => compact,
    }
}
