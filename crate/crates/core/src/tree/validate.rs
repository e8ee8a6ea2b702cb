use std::fmt;

use super::{Label, SemTree, NO_NAMESPACE};

/// A grammar violation at `path` (labels with sibling indices, e.g.
/// `root/depr[0]/ns[1]`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Returns every grammar violation in `tree`; empty means well-formed.
pub fn validate(tree: &SemTree) -> Vec<Violation> {
    let mut out = Vec::new();
    let path = tree.label.to_string();
    if tree.label != Label::Root {
        out.push(Violation {
            path: path.clone(),
            message: "top label must be root".into(),
        });
    }
    check(tree, &path, &mut out);
    out
}

fn check(node: &SemTree, path: &str, out: &mut Vec<Violation>) {
    let mut report = |message: String| {
        out.push(Violation {
            path: path.to_string(),
            message,
        })
    };

    match (&node.code, node.label.has_code()) {
        (Some(_), false) => report(format!("{} must not carry code", node.label)),
        (None, true) => report(format!("{} requires a code string", node.label)),
        (Some(code), true) => {
            if code.is_empty() || code.chars().any(char::is_whitespace) {
                report("code must be non-empty without whitespace".into());
            } else if code == NO_NAMESPACE && node.label != Label::Ns {
                report(format!("reserved namespace code used on {}", node.label));
            }
        }
        (None, false) => {}
    }

    let labels: Vec<Label> = node.children.iter().map(|c| c.label).collect();
    match node.label {
        Label::Root => {
            if labels.is_empty() || labels.len() > 2 {
                report(format!("root needs 1 or 2 children, found {}", labels.len()));
            }
            if let Some(&first) = labels.first() {
                if first != Label::Depr {
                    report(format!("first child of root must be depr, found {first}"));
                }
            }
            if let Some(&second) = labels.get(1) {
                if second != Label::Repl {
                    report(format!("second child of root must be repl, found {second}"));
                }
            }
        }
        Label::Depr | Label::Repl => {
            if labels.is_empty() {
                report(format!("{} needs at least one ns child", node.label));
            }
            for (i, l) in labels.iter().enumerate() {
                if *l != Label::Ns {
                    report(format!("child {i} of {} must be ns, found {l}", node.label));
                }
            }
        }
        Label::Ns => {
            if labels.len() > 1 {
                report(format!("ns takes at most one child, found {}", labels.len()));
            }
            if let Some(&l) = labels.first() {
                if !matches!(l, Label::Func | Label::Attr) {
                    report(format!("child of ns must be func or attr, found {l}"));
                }
            }
        }
        Label::Func => {
            for (i, l) in labels.iter().enumerate() {
                if *l != Label::Arg {
                    report(format!("child {i} of func must be arg, found {l}"));
                }
            }
        }
        Label::Arg | Label::Attr => {
            if !labels.is_empty() {
                report(format!("{} must be a leaf", node.label));
            }
        }
    }

    for (i, child) in node.children.iter().enumerate() {
        check(child, &format!("{path}/{}[{i}]", child.label), out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::parse_bracketed;

    fn violations(text: &str) -> Vec<Violation> {
        validate(&parse_bracketed(text).unwrap())
    }

    #[test]
    fn valid_namespace_tree() {
        assert!(violations("(root (depr (ns urllib)) (repl (ns urllib.request)))").is_empty());
    }

    #[test]
    fn root_must_start_with_depr() {
        let v = violations("(root (repl (ns X)))");
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].message.contains("first child of root must be depr"));
        assert_eq!(v[0].path, "root");
    }

    #[test]
    fn non_root_top_label() {
        let v = violations("(func copy() (arg levels) (arg codes))");
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].message, "top label must be root");
    }

    #[test]
    fn paths_point_at_offenders() {
        let v = violations("(root (depr (ns A (func f (ns B)))))");
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, "root/depr[0]/ns[0]/func[0]");
        let v = violations("(root (depr (ns A) (func g)))");
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, "root/depr[0]");
    }

    #[test]
    fn reserved_namespace_only_on_ns() {
        assert!(violations("(root (depr (ns ⟨none⟩ (func f))))").is_empty());
        assert_eq!(violations("(root (depr (ns A (func ⟨none⟩))))").len(), 1);
    }
}
