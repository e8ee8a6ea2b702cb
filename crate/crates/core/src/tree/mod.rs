//! Semantic trees for deprecation notes.
//!
//! ```text
//! root -> depr [repl]      func -> <code> arg*
//! depr -> ns+              arg  -> <code>
//! repl -> ns+              attr -> <code>
//! ns   -> <code> [func | attr]
//! ```

mod bracket;
mod code;
mod validate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use bracket::{parse_sexpr, Child, LabeledTree};
pub use code::{normalize_code, CodeExpression};
pub use validate::{validate, Violation};

/// Reserved namespace code for functions mentioned without an owner.
pub const NO_NAMESPACE: &str = "⟨none⟩";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("malformed `{label}` node: {message}")]
    Shape { label: String, message: String },
    #[error("cannot convert code expression `{raw}`: {reason}")]
    Conversion { raw: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Root,
    Depr,
    Repl,
    Ns,
    Func,
    Arg,
    Attr,
}

impl Label {
    pub const ALL: [Label; 7] = [
        Label::Root,
        Label::Depr,
        Label::Repl,
        Label::Ns,
        Label::Func,
        Label::Arg,
        Label::Attr,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Root => "root",
            Label::Depr => "depr",
            Label::Repl => "repl",
            Label::Ns => "ns",
            Label::Func => "func",
            Label::Arg => "arg",
            Label::Attr => "attr",
        }
    }

    /// Whether nodes with this label carry a code string.
    pub fn has_code(self) -> bool {
        matches!(self, Label::Ns | Label::Func | Label::Arg | Label::Attr)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Label::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| TreeError::UnknownLabel(s.to_string()))
    }
}

/// A (possibly incomplete) semantic tree. Grammar conformance is checked by
/// [`validate`], not enforced by construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SemTree {
    pub label: Label,
    pub code: Option<String>,
    pub children: Vec<SemTree>,
}

impl SemTree {
    pub fn node(label: Label, children: Vec<SemTree>) -> Self {
        SemTree {
            label,
            code: None,
            children,
        }
    }

    pub fn leaf(label: Label, code: impl Into<String>) -> Self {
        SemTree::with_code(label, code, Vec::new())
    }

    pub fn with_code(label: Label, code: impl Into<String>, children: Vec<SemTree>) -> Self {
        let mut code = code.into();
        if label == Label::Func {
            code = strip_call_suffix(&code).to_string();
        }
        SemTree {
            label,
            code: Some(code),
            children,
        }
    }

    pub fn height(&self) -> usize {
        1 + self.children.iter().map(SemTree::height).max().unwrap_or(0)
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(SemTree::node_count).sum::<usize>()
    }

    /// Single-line bracketed notation: `(label code child ...)`.
    pub fn to_bracketed(&self) -> String {
        self.to_string()
    }

    pub fn to_labeled(&self) -> LabeledTree {
        let mut children = Vec::with_capacity(self.children.len() + 1);
        if let Some(code) = &self.code {
            children.push(Child::Atom(code.clone()));
        }
        children.extend(self.children.iter().map(|c| Child::Tree(c.to_labeled())));
        LabeledTree::new(self.label.as_str(), children)
    }

    pub fn from_labeled(tree: &LabeledTree) -> Result<Self, TreeError> {
        let label: Label = tree.label.parse()?;
        let mut code = None;
        let mut children = Vec::new();
        for (i, child) in tree.children.iter().enumerate() {
            match child {
                Child::Atom(a) if i == 0 => code = Some(a.clone()),
                Child::Atom(a) => {
                    return Err(TreeError::Shape {
                        label: tree.label.clone(),
                        message: format!("unexpected atom `{a}` after the code string"),
                    })
                }
                Child::Tree(t) => children.push(SemTree::from_labeled(t)?),
            }
        }
        Ok(match code {
            Some(code) => SemTree::with_code(label, code, children),
            None => SemTree::node(label, children),
        })
    }

    /// Deprecated and replacement code expressions spelled out by this tree.
    /// The reserved empty namespace is omitted from the rendering.
    pub fn code_expressions(&self) -> (Vec<String>, Vec<String>) {
        let mut depr = Vec::new();
        let mut repl = Vec::new();
        let sides: Vec<&SemTree> = if self.label == Label::Root {
            self.children.iter().collect()
        } else {
            vec![self]
        };
        for side in sides {
            let out = match side.label {
                Label::Depr => &mut depr,
                Label::Repl => &mut repl,
                _ => continue,
            };
            out.extend(side.children.iter().filter_map(render_expression));
        }
        (depr, repl)
    }
}

fn render_expression(node: &SemTree) -> Option<String> {
    let code = node.code.as_deref()?;
    let own = match node.label {
        Label::Func => {
            let args: Vec<&str> = node
                .children
                .iter()
                .filter_map(|a| a.code.as_deref())
                .collect();
            format!("{code}({})", args.join(", "))
        }
        _ => code.to_string(),
    };
    if node.label != Label::Ns {
        return Some(own);
    }
    let inner = node.children.first().and_then(render_expression);
    Some(match (code == NO_NAMESPACE, inner) {
        (true, Some(inner)) => inner,
        (true, None) => String::new(),
        (false, Some(inner)) => format!("{code}.{inner}"),
        (false, None) => code.to_string(),
    })
}

fn strip_call_suffix(code: &str) -> &str {
    code.strip_suffix("()").unwrap_or(code)
}

impl fmt::Display for SemTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.label)?;
        if let Some(code) = &self.code {
            write!(f, " {code}")?;
        }
        for child in &self.children {
            write!(f, " {child}")?;
        }
        f.write_str(")")
    }
}

impl FromStr for SemTree {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_bracketed(s)
    }
}

impl Serialize for SemTree {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SemTree {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_bracketed(&text).map_err(serde::de::Error::custom)
    }
}

/// Inverse of [`SemTree::to_bracketed`]. Grammar violations are accepted so
/// that intermediate constituents can be written down; trailing `()` on
/// function codes is normalized away.
pub fn parse_bracketed(text: &str) -> Result<SemTree, TreeError> {
    SemTree::from_labeled(&parse_sexpr(text)?)
}

/// Builds the ns-rooted chain for one annotated expression.
pub fn expression_tree(expr: &CodeExpression) -> SemTree {
    let prefix = expr.prefix();
    if expr.is_call() {
        let args = expr
            .args()
            .iter()
            .map(|a| SemTree::leaf(Label::Arg, a.as_str()))
            .collect();
        let func = SemTree::with_code(Label::Func, expr.name(), args);
        SemTree::with_code(
            Label::Ns,
            prefix.unwrap_or_else(|| NO_NAMESPACE.to_string()),
            vec![func],
        )
    } else if expr.is_attribute() {
        let attr = SemTree::leaf(Label::Attr, expr.name());
        SemTree::with_code(Label::Ns, prefix.unwrap_or_default(), vec![attr])
    } else {
        SemTree::leaf(Label::Ns, expr.path())
    }
}

/// Converts gold code annotations into a grammar-shaped tree.
pub fn annotation_to_tree(
    depr: &[CodeExpression],
    repl: &[CodeExpression],
) -> Result<SemTree, TreeError> {
    if depr.is_empty() {
        return Err(TreeError::Conversion {
            raw: String::new(),
            reason: "no deprecated expressions".into(),
        });
    }
    let mut children = vec![SemTree::node(
        Label::Depr,
        depr.iter().map(expression_tree).collect(),
    )];
    if !repl.is_empty() {
        children.push(SemTree::node(
            Label::Repl,
            repl.iter().map(expression_tree).collect(),
        ));
    }
    Ok(SemTree::node(Label::Root, children))
}

/// String-input convenience over [`annotation_to_tree`].
pub fn annotation_strings_to_tree<S: AsRef<str>>(
    depr: &[S],
    repl: &[S],
) -> Result<SemTree, TreeError> {
    let parse = |xs: &[S]| -> Result<Vec<CodeExpression>, TreeError> {
        xs.iter().map(|x| CodeExpression::parse(x.as_ref())).collect()
    };
    annotation_to_tree(&parse(depr)?, &parse(repl)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MULTIINDEX_LISTING: &str = "(root
  (depr
    (ns MultiIndex
      (func copy() (arg levels)))
    (ns MultiIndex
      (func copy() (arg codes))))
  (repl
    (ns MultiIndex
      (func set_levels() (arg levels)))
    (ns MultiIndex
      (func set_codes() (arg codes)))))";

    fn multiindex_tree() -> SemTree {
        annotation_strings_to_tree(
            &["MultiIndex.copy(levels)", "MultiIndex.copy(codes)"],
            &["MultiIndex.set_levels(levels)", "MultiIndex.set_codes(codes)"],
        )
        .unwrap()
    }

    fn squash(s: &str) -> String {
        s.split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
            .replace("() ", " ")
    }

    #[test]
    fn listing_parses_to_annotation_tree() {
        let parsed = parse_bracketed(MULTIINDEX_LISTING).unwrap();
        assert_eq!(parsed, multiindex_tree());
        assert_eq!(parsed.to_bracketed(), squash(MULTIINDEX_LISTING));
        assert!(validate(&parsed).is_empty());
    }

    #[test]
    fn leaf_and_nested_rendering() {
        assert_eq!(SemTree::leaf(Label::Arg, "levels").to_bracketed(), "(arg levels)");
        let t = SemTree::with_code(
            Label::Ns,
            "Series",
            vec![SemTree::with_code(
                Label::Func,
                "clip",
                vec![SemTree::leaf(Label::Arg, "lower=threshold")],
            )],
        );
        assert_eq!(t.to_bracketed(), "(ns Series (func clip (arg lower=threshold)))");
        assert_eq!(parse_bracketed(&t.to_bracketed()).unwrap(), t);
    }

    #[test]
    fn namespace_row() {
        let t = annotation_strings_to_tree(&["urllib"], &["urllib.request"]).unwrap();
        assert_eq!(t.to_bracketed(), "(root (depr (ns urllib)) (repl (ns urllib.request)))");
    }

    #[test]
    fn namespace_less_function() {
        let t = annotation_strings_to_tree::<&str>(&["bellman_ford()"], &[]).unwrap();
        assert_eq!(t.to_bracketed(), "(root (depr (ns ⟨none⟩ (func bellman_ford))))");
        assert!(validate(&t).is_empty());
        assert_eq!(t.code_expressions(), (vec!["bellman_ford()".to_string()], vec![]));
    }

    #[test]
    fn attribute_expressions() {
        let t = annotation_strings_to_tree(&["Calendar.iterweekdays()"], &["Calendar.day_name"])
            .unwrap();
        assert_eq!(
            t.to_bracketed(),
            "(root (depr (ns Calendar (func iterweekdays))) (repl (ns Calendar (attr day_name))))"
        );
        let (d, r) = t.code_expressions();
        assert_eq!(d, ["Calendar.iterweekdays()"]);
        assert_eq!(r, ["Calendar.day_name"]);
    }

    #[test]
    fn conversion_errors_name_the_expression() {
        let err = annotation_strings_to_tree(&["ok()", "bad("], &[]).unwrap_err();
        assert!(err.to_string().contains("bad("), "{err}");
        assert!(annotation_strings_to_tree::<&str>(&[], &["x"]).is_err());
    }

    #[test]
    fn unknown_labels_and_stray_atoms() {
        assert_eq!(
            parse_bracketed("(method x)").unwrap_err(),
            TreeError::UnknownLabel("method".into())
        );
        assert!(matches!(
            parse_bracketed("(func bellman_ford_predecessor _and_distance)"),
            Err(TreeError::Shape { .. })
        ));
        // grammar violations are representable
        assert!(parse_bracketed("(repl (arg x) (root))").is_ok());
    }

    #[test]
    fn labels_round_trip() {
        for l in Label::ALL {
            assert_eq!(l.as_str().parse::<Label>().unwrap(), l);
        }
    }
}
