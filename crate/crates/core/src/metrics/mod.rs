//! Evaluation measures: height-weighted subtree F1 over trees, IOU and
//! exact match over code-expression sets, and corpus aggregation.

mod report;
mod sets;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::tree::{Child, LabeledTree, SemTree};

pub use report::{
    evaluate_corpus, fold_assignment, Breakdown, CorpusReport, ExampleScore, FoldInfo,
    MetricsError, Prediction,
};
pub use sets::{exact_match, iou, normalize_set, ratio_to_f64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub exact: bool,
}

impl TreeScore {
    pub const PERFECT: TreeScore = TreeScore {
        precision: 1.0,
        recall: 1.0,
        f1: 1.0,
        exact: true,
    };

    pub const ZERO: TreeScore = TreeScore {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
        exact: false,
    };

    fn from_weights(matched: usize, pred_total: usize, gold_total: usize) -> TreeScore {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(matched, pred_total);
        let recall = ratio(matched, gold_total);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        TreeScore {
            precision,
            recall,
            f1,
            exact: false,
        }
    }
}

/// Every node's subtree, starting with the tree itself. Bare atoms are not
/// subtrees.
pub fn subtrees(tree: &LabeledTree) -> Vec<&LabeledTree> {
    tree.nodes()
}

/// Canonical string and height of every subtree, in pre-order.
fn keyed_subtrees(tree: &LabeledTree) -> Vec<(String, usize)> {
    fn walk(node: &LabeledTree, out: &mut Vec<(String, usize)>) -> (String, usize) {
        let slot = out.len();
        out.push((String::new(), 0));
        let mut key = format!("({}", node.label);
        let mut height = 0;
        for child in &node.children {
            key.push(' ');
            match child {
                Child::Atom(a) => {
                    key.push_str(a);
                    height = height.max(1);
                }
                Child::Tree(t) => {
                    let (k, h) = walk(t, out);
                    key.push_str(&k);
                    height = height.max(h);
                }
            }
        }
        key.push(')');
        out[slot] = (key.clone(), height + 1);
        (key, height + 1)
    }
    let mut out = Vec::new();
    walk(tree, &mut out);
    out
}

/// Gold-side subtree multiset, reusable across many predictions.
#[derive(Debug, Clone)]
pub struct SubtreeIndex {
    canonical: String,
    counts: HashMap<String, usize>,
    total_weight: usize,
}

impl SubtreeIndex {
    pub fn new(gold: &LabeledTree) -> Self {
        let mut counts = HashMap::new();
        let mut total_weight = 0;
        let keyed = keyed_subtrees(gold);
        let canonical = keyed[0].0.clone();
        for (key, height) in keyed {
            total_weight += height;
            *counts.entry(key).or_insert(0) += 1;
        }
        SubtreeIndex {
            canonical,
            counts,
            total_weight,
        }
    }

    pub fn for_tree(gold: &SemTree) -> Self {
        SubtreeIndex::new(&gold.to_labeled())
    }

    pub fn score(&self, pred: &LabeledTree) -> TreeScore {
        let keyed = keyed_subtrees(pred);
        if keyed[0].0 == self.canonical {
            return TreeScore::PERFECT;
        }
        let mut pred_counts: HashMap<&str, (usize, usize)> = HashMap::new();
        let mut pred_total = 0;
        for (key, height) in &keyed {
            pred_total += height;
            pred_counts.entry(key.as_str()).or_insert((0, *height)).0 += 1;
        }
        let matched = pred_counts
            .iter()
            .map(|(key, &(count, height))| {
                count.min(self.counts.get(*key).copied().unwrap_or(0)) * height
            })
            .sum();
        TreeScore::from_weights(matched, pred_total, self.total_weight)
    }

    pub fn score_tree(&self, pred: &SemTree) -> TreeScore {
        self.score(&pred.to_labeled())
    }
}

/// Height-weighted subtree precision, recall and F1 on generic trees.
pub fn labeled_tree_f1(pred: &LabeledTree, gold: &LabeledTree) -> TreeScore {
    SubtreeIndex::new(gold).score(pred)
}

/// Height-weighted subtree F1 between a predicted and a gold semantic tree.
pub fn tree_f1(pred: &SemTree, gold: &SemTree) -> TreeScore {
    labeled_tree_f1(&pred.to_labeled(), &gold.to_labeled())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{parse_bracketed, parse_sexpr};

    const GOLD: &str = "(root (depr (ns MultiIndex (func copy (arg levels))) (ns MultiIndex (func copy (arg codes)))) \
        (repl (ns MultiIndex (func set_levels (arg levels))) (ns MultiIndex (func set_codes (arg codes)))))";

    #[test]
    fn nested_example_subtrees() {
        let tree = parse_sexpr("(a (b (c d)) (e))").unwrap();
        let subs: Vec<String> = subtrees(&tree).iter().map(|t| t.to_string()).collect();
        assert_eq!(subs, ["(a (b (c d)) (e))", "(b (c d))", "(c d)", "(e)"]);
    }

    #[test]
    fn subtree_counts() {
        let arg = parse_sexpr("(arg levels)").unwrap();
        assert_eq!(subtrees(&arg).len(), 1);
        let gold = parse_bracketed(GOLD).unwrap().to_labeled();
        assert_eq!(subtrees(&gold).len(), 15);
    }

    #[test]
    fn identical_and_disjoint() {
        let gold = parse_bracketed(GOLD).unwrap();
        assert_eq!(tree_f1(&gold, &gold), TreeScore::PERFECT);
        let other = parse_bracketed("(root (depr (ns urllib)))").unwrap();
        let s = tree_f1(&other, &gold);
        assert_eq!((s.precision, s.recall, s.f1, s.exact), (0.0, 0.0, 0.0, false));
    }

    #[test]
    fn dropping_one_arg() {
        let gold = parse_bracketed(GOLD).unwrap();
        let pred = parse_bracketed(&GOLD.replacen(" (arg codes)", "", 1)).unwrap();
        let s = tree_f1(&pred, &gold);
        // gold: root 6, depr 5, repl 5, ns 4x4, func 4x3, arg 4x2
        // pred: one arg gone, its func and ns shrink by one level
        let gold_total = 52.0;
        let pred_total = 48.0;
        // repl 5 + three intact ns 12 + three intact funcs 9 + three args 6
        let matched = 32.0;
        assert!((s.precision - matched / pred_total).abs() < 1e-12, "{s:?}");
        assert!((s.recall - matched / gold_total).abs() < 1e-12);
        assert!(!s.exact);
    }

    #[test]
    fn height_weights() {
        let gold = parse_sexpr("(a (b x) (c y))").unwrap();
        let pred = parse_sexpr("(a (b x) (c z))").unwrap();
        let s = labeled_tree_f1(&pred, &gold);
        // matched (b x) weight 2 of total 3 + 2 + 2
        assert!((s.precision - 2.0 / 7.0).abs() < 1e-15);
        assert!((s.recall - 2.0 / 7.0).abs() < 1e-15);
    }
}
