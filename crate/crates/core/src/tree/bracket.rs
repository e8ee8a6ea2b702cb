//! Generic bracketed (s-expression) trees with free-form labels.
//!
//! The semantic tree format is a restricted dialect of this one; metrics
//! also run on generic trees such as `(a (b (c d)) (e))`.

use std::fmt;

use super::TreeError;

/// A node of a bracketed tree: a label followed by atoms and subtrees.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledTree {
    pub label: String,
    pub children: Vec<Child>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Child {
    Atom(String),
    Tree(LabeledTree),
}

impl LabeledTree {
    pub fn new(label: impl Into<String>, children: Vec<Child>) -> Self {
        LabeledTree {
            label: label.into(),
            children,
        }
    }

    /// Height with atoms counting as 1 and childless nodes as 1.
    pub fn height(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(|c| match c {
                Child::Atom(_) => 1,
                Child::Tree(t) => t.height(),
            })
            .max()
            .unwrap_or(0)
    }

    /// Every node of the tree in pre-order, starting with `self`.
    pub fn nodes(&self) -> Vec<&LabeledTree> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            out.push(node);
            for child in node.children.iter().rev() {
                if let Child::Tree(t) = child {
                    stack.push(t);
                }
            }
        }
        out
    }
}

impl fmt::Display for LabeledTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.label)?;
        for child in &self.children {
            match child {
                Child::Atom(a) => write!(f, " {a}")?,
                Child::Tree(t) => write!(f, " {t}")?,
            }
        }
        f.write_str(")")
    }
}

/// Reads one bracketed tree. Atoms may contain balanced parentheses
/// (`copy()`, `clip(lower=threshold)`) as long as the `(` is glued to
/// preceding atom characters.
pub fn parse_sexpr(text: &str) -> Result<LabeledTree, TreeError> {
    let mut reader = Reader { text, pos: 0 };
    reader.skip_ws();
    let tree = reader.tree()?;
    reader.skip_ws();
    if reader.pos < text.len() {
        return Err(reader.error("trailing input after tree"));
    }
    Ok(tree)
}

struct Reader<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Reader<'a> {
    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn bump(&mut self, c: char) {
        self.pos += c.len_utf8();
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.bump(c);
        }
    }

    fn error(&self, message: &str) -> TreeError {
        let message = if self.pos >= self.text.len() {
            format!("{message} (at end of input)")
        } else {
            message.to_string()
        };
        TreeError::Syntax {
            position: self.pos,
            message,
        }
    }

    fn tree(&mut self) -> Result<LabeledTree, TreeError> {
        match self.peek() {
            Some('(') => self.bump('('),
            Some(_) => return Err(self.error("expected '('")),
            None => return Err(self.error("expected '('")),
        }
        self.skip_ws();
        let label = self.label()?;
        let mut children = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                None => return Err(self.error("unclosed '('")),
                Some(')') => {
                    self.bump(')');
                    return Ok(LabeledTree { label, children });
                }
                Some('(') => children.push(Child::Tree(self.tree()?)),
                Some(_) => children.push(Child::Atom(self.atom()?)),
            }
        }
    }

    fn label(&mut self) -> Result<String, TreeError> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_whitespace() || c == '(' || c == ')' {
                break;
            }
            self.bump(c);
        }
        if self.pos == start {
            return Err(self.error("missing label"));
        }
        Ok(self.text[start..self.pos].to_string())
    }

    fn atom(&mut self) -> Result<String, TreeError> {
        let start = self.pos;
        let mut depth = 0usize;
        while let Some(c) = self.peek() {
            match c {
                '(' => depth += 1,
                ')' if depth == 0 => break,
                ')' => depth -= 1,
                c if c.is_whitespace() && depth == 0 => break,
                _ => {}
            }
            self.bump(c);
        }
        if depth > 0 {
            return Err(self.error("unbalanced '(' inside atom"));
        }
        let atom: String = self.text[start..self.pos]
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect();
        Ok(atom)
    }
}
