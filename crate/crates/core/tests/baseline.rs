use std::collections::BTreeSet;

use deprec_parse::baseline::split_baseline;
use deprec_parse::corpus::{golden, tokenize, AnnotatedExample};
use deprec_parse::metrics::{exact_match, iou};
use num_rational::Ratio;

fn example(text: &str, codes: &[&str]) -> AnnotatedExample {
    let spans: Vec<(usize, usize)> = codes
        .iter()
        .map(|c| {
            let start = text.find(c).unwrap();
            (start, start + c.len())
        })
        .collect();
    let (tokens, code_spans) = tokenize(text, &spans);
    AnnotatedExample {
        id: "t".into(),
        library: "test".into(),
        version: String::new(),
        text: text.into(),
        tokens,
        code_spans,
        gold_depr: Vec::new(),
        gold_repl: Vec::new(),
        gold_tree: None,
        units: Vec::new(),
        workarounds: Vec::new(),
        gold: false,
        derivation: None,
        extra: Default::default(),
    }
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

#[test]
fn splits_on_deprecated() {
    let ex = example("A and B are deprecated; use X and Y instead", &["A", "B", "X", "Y"]);
    assert_eq!(split_baseline(&ex), (set(&["A", "B"]), set(&["X", "Y"])));
}

#[test]
fn no_trigger_puts_everything_on_the_deprecated_side() {
    let ex = example("foo was removed in favour of bar", &["foo", "bar"]);
    assert_eq!(split_baseline(&ex), (set(&["foo", "bar"]), set(&[])));
}

#[test]
fn sentence_initial_trigger_sends_everything_to_replacements() {
    let ex = golden().into_iter().find(|e| e.id == "multiindex-copy").unwrap();
    let (depr, repl) = split_baseline(&ex);
    assert!(depr.is_empty());
    assert_eq!(repl.len(), ex.code_spans.len());
    let (gd, gr) = ex.gold_sets().unwrap();
    let score = iou(&depr.into_iter().collect::<Vec<_>>(), &repl.into_iter().collect::<Vec<_>>(), &gd, &gr);
    assert_eq!(score, Ratio::new(0, 1));
}

#[test]
fn outputs_partition_the_entities() {
    for ex in golden() {
        let (depr, repl) = split_baseline(&ex);
        assert!(depr.is_disjoint(&repl) || ex.code_spans.iter().map(|s| &s.entity).collect::<BTreeSet<_>>().len() < ex.code_spans.len());
        let all: BTreeSet<String> = ex.code_spans.iter().map(|s| s.entity.clone()).collect();
        assert_eq!(&depr | &repl, all, "{}", ex.id);
    }
}

#[test]
fn half_correct_prediction_scores_exactly_one_half() {
    let score = iou(&["A"], &[] as &[&str], &["A", "B"], &[] as &[&str]);
    assert_eq!(score, Ratio::new(1, 2));
    assert!(!exact_match(&["A"], &[] as &[&str], &["A", "B"], &[] as &[&str]));
}

#[test]
fn golden_set_matches() {
    let matched: Vec<String> = golden()
        .into_iter()
        .filter(|ex| {
            let (depr, repl) = split_baseline(ex);
            let (gd, gr) = ex.gold_sets().unwrap();
            exact_match(&depr.into_iter().collect::<Vec<_>>(), &repl.into_iter().collect::<Vec<_>>(), &gd, &gr)
        })
        .map(|ex| ex.id)
        .collect();
    println!("baseline exact set matches: {matched:?}");
    assert!(matched.len() < golden().len());
}
