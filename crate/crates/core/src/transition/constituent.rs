use crate::tree::{Label, SemTree};

/// How a code string in a constituent relates to its source entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    /// The entity's own leaf; exactly one per consumed entity.
    Primary,
    /// Split off the same entity (dotted prefix, inline arguments).
    Part,
    /// Duplicated by a distributing reduce or a reuse transition.
    Copy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Origin {
    pub entity: usize,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Code {
    pub text: String,
    /// `None` for codes synthesized by the parser (the empty namespace).
    pub origin: Option<Origin>,
}

impl Code {
    pub fn new(text: impl Into<String>, origin: Origin) -> Self {
        Code {
            text: text.into(),
            origin: Some(origin),
        }
    }

    pub fn synthetic(text: impl Into<String>) -> Self {
        Code {
            text: text.into(),
            origin: None,
        }
    }

    pub fn copied(&self) -> Code {
        Code {
            text: self.text.clone(),
            origin: self.origin.map(|o| Origin {
                provenance: Provenance::Copy,
                ..o
            }),
        }
    }
}

/// A partial semantic tree on the parser stack, with provenance on codes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Constituent {
    pub label: Label,
    pub code: Option<Code>,
    pub children: Vec<Constituent>,
}

impl Constituent {
    pub fn new(label: Label, code: Option<Code>, children: Vec<Constituent>) -> Self {
        Constituent {
            label,
            code,
            children,
        }
    }

    pub fn leaf(label: Label, code: Code) -> Self {
        Constituent::new(label, Some(code), Vec::new())
    }

    pub fn to_tree(&self) -> SemTree {
        let children = self.children.iter().map(Constituent::to_tree).collect();
        match &self.code {
            Some(code) => SemTree::with_code(self.label, code.text.clone(), children),
            None => SemTree::node(self.label, children),
        }
    }

    pub fn height(&self) -> usize {
        1 + self.children.iter().map(Constituent::height).max().unwrap_or(0)
    }

    /// Deep copy with every origin marked as a copy.
    pub fn copied(&self) -> Constituent {
        Constituent {
            label: self.label,
            code: self.code.as_ref().map(Code::copied),
            children: self.children.iter().map(Constituent::copied).collect(),
        }
    }

    pub fn visit_codes(&self, f: &mut impl FnMut(&Code)) {
        if let Some(code) = &self.code {
            f(code);
        }
        for child in &self.children {
            child.visit_codes(f);
        }
    }

    /// First entity reached in pre-order: the head entity for headed
    /// constituents, the leftmost leaf otherwise.
    pub fn anchor_entity(&self) -> Option<usize> {
        if let Some(origin) = self.code.as_ref().and_then(|c| c.origin) {
            return Some(origin.entity);
        }
        self.children.iter().find_map(Constituent::anchor_entity)
    }

    /// The function this constituent denotes: itself, or the member of an
    /// ns wrapper.
    pub fn func(&self) -> Option<&Constituent> {
        match self.label {
            Label::Func => Some(self),
            Label::Ns => match self.children.as_slice() {
                [c] if c.label == Label::Func => Some(c),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn func_mut(&mut self) -> Option<&mut Constituent> {
        match self.label {
            Label::Func => Some(self),
            Label::Ns => match self.children.as_mut_slice() {
                [c] if c.label == Label::Func => Some(c),
                _ => None,
            },
            _ => None,
        }
    }
}
