use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::TransitionError;
use crate::tree::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TransitionKind {
    Shift,
    Unary,
    ReduceLx,
    ReduceRx,
    ReduceLxEach,
    ReduceRxEach,
    ReuseArgsRx,
    ReuseNsRx,
    ReuseFuncsRx,
}

impl TransitionKind {
    pub const ALL: [TransitionKind; 9] = [
        TransitionKind::Shift,
        TransitionKind::Unary,
        TransitionKind::ReduceLx,
        TransitionKind::ReduceRx,
        TransitionKind::ReduceLxEach,
        TransitionKind::ReduceRxEach,
        TransitionKind::ReuseArgsRx,
        TransitionKind::ReuseNsRx,
        TransitionKind::ReuseFuncsRx,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TransitionKind::Shift => "shift",
            TransitionKind::Unary => "unary_x",
            TransitionKind::ReduceLx => "reduce_lx",
            TransitionKind::ReduceRx => "reduce_rx",
            TransitionKind::ReduceLxEach => "reduce_lx_each",
            TransitionKind::ReduceRxEach => "reduce_rx_each",
            TransitionKind::ReuseArgsRx => "reuse_args_rx",
            TransitionKind::ReuseNsRx => "reuse_ns_rx",
            TransitionKind::ReuseFuncsRx => "reuse_funcs_rx",
        }
    }

    pub fn takes_label(self) -> bool {
        !matches!(
            self,
            TransitionKind::Shift
                | TransitionKind::ReuseArgsRx
                | TransitionKind::ReuseNsRx
                | TransitionKind::ReuseFuncsRx
        )
    }
}

/// A transition: a kind plus the constituent label it builds, present
/// exactly for unary and reduce kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transition {
    kind: TransitionKind,
    label: Option<Label>,
}

impl Transition {
    pub fn new(kind: TransitionKind, label: Option<Label>) -> Result<Self, TransitionError> {
        if kind.takes_label() != label.is_some() {
            let shown = label.map(Label::as_str).unwrap_or("");
            return Err(TransitionError::Parse(format!("{}({shown})", kind.name())));
        }
        Ok(Transition { kind, label })
    }

    pub fn shift() -> Self {
        Transition::plain(TransitionKind::Shift)
    }

    pub fn unary(label: Label) -> Self {
        Transition::labeled(TransitionKind::Unary, label)
    }

    pub fn reduce_lx(label: Label) -> Self {
        Transition::labeled(TransitionKind::ReduceLx, label)
    }

    pub fn reduce_rx(label: Label) -> Self {
        Transition::labeled(TransitionKind::ReduceRx, label)
    }

    pub fn reduce_lx_each(label: Label) -> Self {
        Transition::labeled(TransitionKind::ReduceLxEach, label)
    }

    pub fn reduce_rx_each(label: Label) -> Self {
        Transition::labeled(TransitionKind::ReduceRxEach, label)
    }

    pub fn reuse_args() -> Self {
        Transition::plain(TransitionKind::ReuseArgsRx)
    }

    pub fn reuse_ns() -> Self {
        Transition::plain(TransitionKind::ReuseNsRx)
    }

    pub fn reuse_funcs() -> Self {
        Transition::plain(TransitionKind::ReuseFuncsRx)
    }

    fn plain(kind: TransitionKind) -> Self {
        Transition { kind, label: None }
    }

    fn labeled(kind: TransitionKind, label: Label) -> Self {
        Transition {
            kind,
            label: Some(label),
        }
    }

    pub fn kind(&self) -> TransitionKind {
        self.kind
    }

    pub fn label(&self) -> Option<Label> {
        self.label
    }

    /// Every well-formed transition, in a fixed order.
    pub fn inventory() -> Vec<Transition> {
        let mut out = Vec::new();
        for kind in TransitionKind::ALL {
            if kind.takes_label() {
                out.extend(Label::ALL.iter().map(|&l| Transition::labeled(kind, l)));
            } else {
                out.push(Transition::plain(kind));
            }
        }
        out
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.label {
            Some(l) => write!(f, "{}({l})", self.kind.name()),
            None => write!(f, "{}()", self.kind.name()),
        }
    }
}

impl FromStr for Transition {
    type Err = TransitionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TransitionError::Parse(s.to_string());
        let s = s.trim();
        let open = s.find('(').ok_or_else(bad)?;
        let inner = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        let kind = TransitionKind::ALL
            .into_iter()
            .find(|k| k.name() == &s[..open])
            .ok_or_else(bad)?;
        let label = if inner.is_empty() {
            None
        } else {
            Some(inner.parse::<Label>().map_err(|_| bad())?)
        };
        Transition::new(kind, label).map_err(|_| bad())
    }
}

impl Serialize for Transition {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Transition {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Space-separated encoding of a transition sequence.
pub fn encode_sequence(seq: &[Transition]) -> String {
    seq.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

pub fn parse_sequence(text: &str) -> Result<Vec<Transition>, TransitionError> {
    text.split_whitespace().map(str::parse).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encoding_matches_confusion_matrix_headers() {
        assert_eq!(Transition::shift().to_string(), "shift()");
        assert_eq!(Transition::reduce_lx_each(Label::Func).to_string(), "reduce_lx_each(func)");
        assert_eq!(Transition::reuse_args().to_string(), "reuse_args_rx()");
        assert_eq!(Transition::unary(Label::Root).to_string(), "unary_x(root)");
    }

    #[test]
    fn inventory_round_trips() {
        let all = Transition::inventory();
        assert_eq!(all.len(), 1 + 5 * 7 + 3);
        for t in all {
            assert_eq!(t.to_string().parse::<Transition>().unwrap(), t);
        }
    }

    #[test]
    fn label_presence_is_enforced() {
        for bad in ["shift(arg)", "unary_x()", "reuse_ns_rx(ns)", "reduce_rx(method)", "pop()", "shift"] {
            assert!(bad.parse::<Transition>().is_err(), "{bad}");
        }
    }
}
