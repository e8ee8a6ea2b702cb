use std::collections::BTreeSet;

use num_rational::Ratio;

use crate::tree::normalize_code;

pub fn normalize_set<S: AsRef<str>>(items: &[S]) -> BTreeSet<String> {
    items.iter().map(|s| normalize_code(s.as_ref())).collect()
}

fn side_iou(pred: &BTreeSet<String>, gold: &BTreeSet<String>) -> Ratio<u64> {
    let inter = pred.intersection(gold).count() as u64;
    let union = pred.union(gold).count() as u64;
    if union == 0 {
        Ratio::from_integer(1)
    } else {
        Ratio::new(inter, union)
    }
}

/// Intersection-over-union per side, averaged over the sides where gold is
/// non-empty. With no gold replacement, a non-empty predicted replacement
/// counts as a zero-scoring second side.
pub fn iou<S: AsRef<str>>(
    pred_depr: &[S],
    pred_repl: &[S],
    gold_depr: &[S],
    gold_repl: &[S],
) -> Ratio<u64> {
    let depr = side_iou(&normalize_set(pred_depr), &normalize_set(gold_depr));
    let (pred_repl, gold_repl) = (normalize_set(pred_repl), normalize_set(gold_repl));
    match (gold_repl.is_empty(), pred_repl.is_empty()) {
        (true, true) => depr,
        (true, false) => depr / 2,
        (false, _) => (depr + side_iou(&pred_repl, &gold_repl)) / 2,
    }
}

/// Set equality on both sides after normalization.
pub fn exact_match<S: AsRef<str>>(
    pred_depr: &[S],
    pred_repl: &[S],
    gold_depr: &[S],
    gold_repl: &[S],
) -> bool {
    normalize_set(pred_depr) == normalize_set(gold_depr)
        && normalize_set(pred_repl) == normalize_set(gold_repl)
}

pub fn ratio_to_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    const NONE: &[&str] = &[];

    #[test]
    fn half_overlap() {
        assert_eq!(iou(&["A"], NONE, &["A", "B"], NONE), Ratio::new(1, 2));
    }

    #[test]
    fn identical_and_disjoint() {
        assert_eq!(iou(&["A"], &["X"], &["A"], &["X"]), Ratio::from_integer(1));
        assert_eq!(iou(&["A"], &["X"], &["B"], &["Y"]), Ratio::from_integer(0));
    }

    #[test]
    fn spurious_replacement_halves_score() {
        assert_eq!(iou(&["A"], &["X"], &["A"], NONE), Ratio::new(1, 2));
    }

    #[test]
    fn sides_average() {
        // depr 1/2, repl 1 -> 3/4
        assert_eq!(iou(&["A", "C"], &["X"], &["A"], &["X"]), Ratio::new(3, 4));
    }

    #[test]
    fn exact_match_normalizes() {
        assert!(exact_match(&["f()", " A.b "], NONE, &["A.b", "f"], NONE));
        assert!(!exact_match(&["f", "g"], NONE, &["f"], NONE));
        assert!(!exact_match(&["F"], NONE, &["f"], NONE));
    }
}
