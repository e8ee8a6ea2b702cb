use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::sets::{exact_match, iou, ratio_to_f64};
use super::{SubtreeIndex, TreeScore};
use crate::corpus::AnnotatedExample;
use crate::tree::SemTree;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no prediction for gold example `{0}`")]
    MissingPrediction(String),
    #[error("prediction `{0}` matches no example in the dataset")]
    UnknownPrediction(String),
    #[error("more than one prediction for `{0}`")]
    DuplicatePrediction(String),
    #[error("example `{id}`: {message}")]
    Gold { id: String, message: String },
    #[error("fold assignment covers {got} examples, dataset has {expected}")]
    FoldLength { got: usize, expected: usize },
}

/// A system output for one example: a tree (parsers) or flat code sets
/// (the split baseline).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<SemTree>,
    #[serde(default)]
    pub depr: Vec<String>,
    #[serde(default)]
    pub repl: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_prob: Option<f64>,
    /// True when decoding ended without a terminal state.
    #[serde(default)]
    pub partial: bool,
}

impl Prediction {
    pub fn from_tree(id: impl Into<String>, tree: SemTree, log_prob: Option<f64>, partial: bool) -> Self {
        let (depr, repl) = tree.code_expressions();
        Prediction {
            id: id.into(),
            tree: Some(tree),
            depr,
            repl,
            log_prob,
            partial,
        }
    }

    pub fn from_sets(id: impl Into<String>, depr: Vec<String>, repl: Vec<String>) -> Self {
        Prediction {
            id: id.into(),
            tree: None,
            depr,
            repl,
            log_prob: None,
            partial: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleScore {
    pub id: String,
    pub library: String,
    pub unit: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fold: Option<usize>,
    /// Tree overlap; absent for set-only predictions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<TreeScore>,
    /// Exact rational IOU as `numer/denom`.
    pub iou: String,
    pub iou_value: f64,
    pub exact_set: bool,
    /// Parenthesis count of the predicted tree's bracketed form.
    pub complexity: usize,
    pub partial: bool,
}

impl ExampleScore {
    pub fn f1(&self) -> f64 {
        self.tree.map_or(0.0, |t| t.f1)
    }

    pub fn exact_tree(&self) -> bool {
        self.tree.is_some_and(|t| t.exact)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub count: usize,
    pub exact_tree: usize,
    pub exact_set: usize,
    pub mean_f1: f64,
    pub mean_iou: f64,
}

impl Breakdown {
    fn of<'a>(scores: impl IntoIterator<Item = &'a ExampleScore>) -> Breakdown {
        let mut b = Breakdown::default();
        let (mut f1, mut iou) = (0.0, 0.0);
        for s in scores {
            b.count += 1;
            b.exact_tree += usize::from(s.exact_tree());
            b.exact_set += usize::from(s.exact_set);
            f1 += s.f1();
            iou += s.iou_value;
        }
        if b.count > 0 {
            b.mean_f1 = f1 / b.count as f64;
            b.mean_iou = iou / b.count as f64;
        }
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldInfo {
    pub k: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub overall: Breakdown,
    /// Number of predictions that carried a tree.
    pub tree_predictions: usize,
    pub by_library: BTreeMap<String, Breakdown>,
    pub by_unit: BTreeMap<String, Breakdown>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub by_fold: BTreeMap<usize, Breakdown>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub folds: Option<FoldInfo>,
    pub examples: Vec<ExampleScore>,
}

/// Seeded assignment of `n` examples to `k` folds of near-equal size.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let k = k.max(1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        folds[i] = pos % k;
    }
    folds
}

/// Scores one prediction per annotated example. `folds`, when given, is
/// aligned with `dataset`.
pub fn evaluate_corpus(
    predictions: &[Prediction],
    dataset: &[AnnotatedExample],
    folds: Option<&[usize]>,
) -> Result<CorpusReport, MetricsError> {
    if let Some(f) = folds {
        if f.len() != dataset.len() {
            return Err(MetricsError::FoldLength {
                got: f.len(),
                expected: dataset.len(),
            });
        }
    }
    let mut by_id: HashMap<&str, &Prediction> = HashMap::new();
    for p in predictions {
        if by_id.insert(p.id.as_str(), p).is_some() {
            return Err(MetricsError::DuplicatePrediction(p.id.clone()));
        }
    }
    for p in predictions {
        if !dataset.iter().any(|e| e.id == p.id) {
            return Err(MetricsError::UnknownPrediction(p.id.clone()));
        }
    }

    let mut examples = Vec::new();
    let mut tree_predictions = 0;
    for (i, example) in dataset.iter().enumerate() {
        if !example.has_annotation() {
            continue;
        }
        let pred = by_id
            .get(example.id.as_str())
            .ok_or_else(|| MetricsError::MissingPrediction(example.id.clone()))?;
        let gold_error = |message: String| MetricsError::Gold {
            id: example.id.clone(),
            message,
        };
        let gold_tree = example
            .gold_semtree()
            .map_err(|e| gold_error(e.to_string()))?
            .ok_or_else(|| gold_error("no gold tree".into()))?;
        let (gold_depr, gold_repl) = example
            .gold_sets()
            .ok_or_else(|| gold_error("no gold expressions".into()))?;
        let tree = pred.tree.as_ref().map(|t| {
            tree_predictions += 1;
            SubtreeIndex::for_tree(&gold_tree).score_tree(t)
        });
        let ratio = iou(&pred.depr, &pred.repl, &gold_depr, &gold_repl);
        let complexity = pred
            .tree
            .as_ref()
            .map_or(0, |t| t.to_bracketed().chars().filter(|&c| c == '(' || c == ')').count());
        examples.push(ExampleScore {
            id: example.id.clone(),
            library: example.library.clone(),
            unit: example.unit().to_string(),
            fold: folds.map(|f| f[i]),
            tree,
            iou: format!("{}/{}", ratio.numer(), ratio.denom()),
            iou_value: ratio_to_f64(ratio),
            exact_set: exact_match(&pred.depr, &pred.repl, &gold_depr, &gold_repl),
            complexity,
            partial: pred.partial,
        });
    }

    let group = |key: &dyn Fn(&ExampleScore) -> String| {
        let mut groups: BTreeMap<String, Vec<&ExampleScore>> = BTreeMap::new();
        for s in &examples {
            groups.entry(key(s)).or_default().push(s);
        }
        groups
            .into_iter()
            .map(|(k, v)| (k, Breakdown::of(v)))
            .collect::<BTreeMap<_, _>>()
    };
    let by_library = group(&|s| s.library.clone());
    let by_unit = group(&|s| s.unit.clone());
    let mut by_fold: BTreeMap<usize, Vec<&ExampleScore>> = BTreeMap::new();
    for s in &examples {
        if let Some(f) = s.fold {
            by_fold.entry(f).or_default().push(s);
        }
    }
    Ok(CorpusReport {
        overall: Breakdown::of(&examples),
        tree_predictions,
        by_library,
        by_unit,
        by_fold: by_fold.into_iter().map(|(k, v)| (k, Breakdown::of(v))).collect(),
        folds: None,
        examples,
    })
}

impl CorpusReport {
    /// Text table with one score row: exact matches, the mean, then unit and
    /// library columns. Tree predictions are scored by F1, set-only ones by
    /// IOU; scores are percentages.
    pub fn render_table(&self, system: &str) -> String {
        let trees = self.tree_predictions > 0;
        let (metric, exact) = if trees { ("F1", "EM(tree)") } else { ("IOU", "EM(set)") };
        let mean = |b: &Breakdown| 100.0 * if trees { b.mean_f1 } else { b.mean_iou };
        let em = |b: &Breakdown| if trees { b.exact_tree } else { b.exact_set };

        let mut headers = vec![exact.to_string(), "Mean".to_string()];
        let mut counts = vec![self.overall.count.to_string(), self.overall.count.to_string()];
        let mut scores = vec![em(&self.overall).to_string(), format!("{:.1}", mean(&self.overall))];
        for (name, b) in self.by_unit.iter().chain(&self.by_library) {
            headers.push(name.clone());
            counts.push(b.count.to_string());
            scores.push(format!("{:.1}", mean(b)));
        }
        let label = format!("{system} ({metric})");
        let first = label.len().max(5);
        let widths: Vec<usize> = headers
            .iter()
            .zip(&scores)
            .map(|(h, s)| h.len().max(s.len()).max(5))
            .collect();
        let mut out = String::new();
        let mut row = |name: &str, cells: &[String]| {
            let _ = write!(out, "{name:<first$}");
            for (cell, w) in cells.iter().zip(&widths) {
                let _ = write!(out, " | {cell:>w$}");
            }
            out.push('\n');
        };
        row("", &headers);
        row("count", &counts);
        row(&label, &scores);
        if trees {
            let _ = writeln!(
                out,
                "exact set matches: {} of {}",
                self.overall.exact_set, self.overall.count
            );
        }
        out
    }
}
