use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::hash::Hasher;
use std::path::Path;

use fnv::FnvHasher;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{extract_features, FeatureVector};
use super::{ScorerError, TransitionScorer};
use crate::corpus::LinguisticToken;
use crate::transition::{CodeEntity, ParserState, Transition, TransitionError};

const FORMAT: &str = "deprec-parse-model";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
    pub seed: u64,
    /// Hash space has `2^dim_bits` buckets.
    pub dim_bits: u32,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            epochs: 20,
            batch_size: 32,
            l2: 1e-4,
            seed: 0,
            dim_bits: 20,
        }
    }
}

/// One supervised decision: the state's features, its legal transitions
/// and the oracle's choice among them.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingInstance {
    pub features: FeatureVector,
    pub legal: Vec<Transition>,
    pub gold: Transition,
}

/// Replays `sequence` and records one instance per step.
pub fn instances_from_sequence(
    entities: &[CodeEntity],
    tokens: &[LinguisticToken],
    sequence: &[Transition],
) -> Result<Vec<TrainingInstance>, TransitionError> {
    let mut state = ParserState::initial(entities.to_vec());
    let mut out = Vec::with_capacity(sequence.len());
    for (index, &t) in sequence.iter().enumerate() {
        out.push(TrainingInstance {
            features: extract_features(&state, tokens),
            legal: state.legal_transitions(),
            gold: t,
        });
        state = state.apply(t).map_err(|e| match e {
            TransitionError::Illegal { transition, reason } => TransitionError::IllegalAt {
                index,
                transition,
                reason,
            },
            other => other,
        })?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub l2: f64,
    pub seed: u64,
    pub instances: usize,
    pub train_accuracy: f64,
}

/// Multinomial logistic regression over hashed (feature, transition)
/// pairs, normalized over the legal transitions of each state.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorerModel {
    dim_bits: u32,
    vocabulary: Vec<Transition>,
    weights: Vec<f64>,
    bias: Vec<f64>,
    meta: TrainingMeta,
}

/// Gradient of [`ScorerModel::loss`]: sparse over weights, dense over biases.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradient {
    pub weights: BTreeMap<usize, f64>,
    pub bias: Vec<f64>,
}

/// Vocabulary class (if known) and signed hash slots of one legal transition.
type CompiledOption = (Option<usize>, Vec<(usize, f64)>);

struct Compiled {
    options: Vec<CompiledOption>,
    gold: usize,
}

fn slot(key: &str, class: usize, mask: u64) -> (usize, f64) {
    let mut h = FnvHasher::default();
    h.write(key.as_bytes());
    h.write_u8(0xff);
    h.write_u32(class as u32);
    // splitmix64 finalizer spreads fnv's weak high bits
    let mut z = h.finish();
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^= z >> 31;
    let sign = if z >> 63 == 1 { -1.0 } else { 1.0 };
    ((z & mask) as usize, sign)
}

fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|l| (l - max).exp()).sum();
    let log_z = max + sum.ln();
    logits.iter().map(|l| l - log_z).collect()
}

impl ScorerModel {
    /// A zero-initialized model over `vocabulary`.
    pub fn new(vocabulary: Vec<Transition>, dim_bits: u32) -> Self {
        let n = vocabulary.len();
        ScorerModel {
            dim_bits,
            vocabulary,
            weights: vec![0.0; 1 << dim_bits],
            bias: vec![0.0; n],
            meta: TrainingMeta::default(),
        }
    }

    pub fn vocabulary(&self) -> &[Transition] {
        &self.vocabulary
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn meta(&self) -> &TrainingMeta {
        &self.meta
    }

    pub fn weight(&self, index: usize) -> f64 {
        self.weights[index]
    }

    pub fn set_weight(&mut self, index: usize, value: f64) {
        self.weights[index] = value;
    }

    pub fn bias(&self, class: usize) -> f64 {
        self.bias[class]
    }

    pub fn set_bias(&mut self, class: usize, value: f64) {
        self.bias[class] = value;
    }

    fn class(&self, t: Transition) -> Option<usize> {
        self.vocabulary.binary_search(&t).ok()
    }

    fn compile(&self, inst: &TrainingInstance) -> Compiled {
        let mask = (self.weights.len() - 1) as u64;
        let options = inst
            .legal
            .iter()
            .map(|&t| {
                let class = self.class(t);
                let slots = class.map_or_else(Vec::new, |c| {
                    inst.features.keys().map(|k| slot(k, c, mask)).collect()
                });
                (class, slots)
            })
            .collect();
        let gold = inst
            .legal
            .iter()
            .position(|&t| t == inst.gold)
            .expect("gold transition is legal");
        Compiled { options, gold }
    }

    fn logits(&self, compiled: &Compiled) -> Vec<f64> {
        compiled
            .options
            .iter()
            .map(|(class, slots)| match class {
                Some(c) => self.bias[*c] + slots.iter().map(|&(i, s)| s * self.weights[i]).sum::<f64>(),
                None => 0.0,
            })
            .collect()
    }

    /// Mean cross-entropy over `batch` plus `l2 / 2 * |w|^2`.
    pub fn loss(&self, batch: &[TrainingInstance], l2: f64) -> f64 {
        let ce: f64 = batch
            .iter()
            .map(|inst| {
                let c = self.compile(inst);
                -log_softmax(&self.logits(&c))[c.gold]
            })
            .sum();
        let norm: f64 = self.weights.iter().map(|w| w * w).sum();
        ce / batch.len() as f64 + 0.5 * l2 * norm
    }

    /// Analytic gradient of [`ScorerModel::loss`].
    pub fn gradient(&self, batch: &[TrainingInstance], l2: f64) -> Gradient {
        let compiled: Vec<Compiled> = batch.iter().map(|i| self.compile(i)).collect();
        let refs: Vec<&Compiled> = compiled.iter().collect();
        let mut g = self.ce_gradient(&refs);
        for (i, w) in self.weights.iter().enumerate() {
            if *w != 0.0 {
                *g.weights.entry(i).or_insert(0.0) += l2 * w;
            }
        }
        g
    }

    fn ce_gradient(&self, batch: &[&Compiled]) -> Gradient {
        let mut g = Gradient {
            weights: BTreeMap::new(),
            bias: vec![0.0; self.bias.len()],
        };
        let scale = 1.0 / batch.len() as f64;
        for c in batch {
            let logp = log_softmax(&self.logits(c));
            for (j, (class, slots)) in c.options.iter().enumerate() {
                let Some(class) = class else { continue };
                let delta = (logp[j].exp() - f64::from(u8::from(j == c.gold))) * scale;
                g.bias[*class] += delta;
                for &(i, s) in slots {
                    *g.weights.entry(i).or_insert(0.0) += s * delta;
                }
            }
        }
        g
    }

    /// Log-probabilities of the legal transitions of `state`, in the order
    /// of [`ParserState::legal_transitions`].
    pub fn score_state(
        &self,
        state: &ParserState,
        tokens: &[LinguisticToken],
    ) -> Result<Vec<(Transition, f64)>, ScorerError> {
        let legal = state.legal_transitions();
        if legal.is_empty() {
            return Err(ScorerError::NoLegalTransitions(state.signature()));
        }
        let features = extract_features(state, tokens);
        let gold = legal[0];
        let compiled = self.compile(&TrainingInstance {
            features,
            legal: legal.clone(),
            gold,
        });
        let logp = log_softmax(&self.logits(&compiled));
        Ok(legal.into_iter().zip(logp).collect())
    }

    fn predict(&self, compiled: &Compiled) -> usize {
        let logits = self.logits(compiled);
        let mut best = 0;
        for (j, l) in logits.iter().enumerate() {
            if *l > logits[best] {
                best = j;
            }
        }
        best
    }

    /// Fraction of instances whose gold transition has the highest score.
    pub fn accuracy(&self, instances: &[TrainingInstance]) -> f64 {
        if instances.is_empty() {
            return 0.0;
        }
        let hits = instances
            .iter()
            .filter(|inst| {
                let c = self.compile(inst);
                self.predict(&c) == c.gold
            })
            .count();
        hits as f64 / instances.len() as f64
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ScorerError> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| ScorerError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScorerError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| ScorerError::Io(format!("{}: {e}", path.display())))?;
        ScorerModel::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: FORMAT.into(),
            version: FORMAT_VERSION,
            dim_bits: self.dim_bits,
            vocabulary: self.vocabulary.clone(),
            bias: self.bias.clone(),
            weights: self
                .weights
                .iter()
                .enumerate()
                .filter(|(_, w)| **w != 0.0)
                .map(|(i, w)| (i, *w))
                .collect(),
            meta: self.meta.clone(),
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ScorerError> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| ScorerError::Format(e.to_string()))?;
        if file.format != FORMAT || file.version != FORMAT_VERSION {
            return Err(ScorerError::Format(format!(
                "unsupported model format {} v{}",
                file.format, file.version
            )));
        }
        if file.dim_bits > 30 || file.bias.len() != file.vocabulary.len() {
            return Err(ScorerError::Format("inconsistent model dimensions".into()));
        }
        let mut sorted = file.vocabulary.clone();
        sorted.sort();
        sorted.dedup();
        if sorted != file.vocabulary {
            return Err(ScorerError::Format("vocabulary must be sorted and unique".into()));
        }
        let mut model = ScorerModel::new(file.vocabulary, file.dim_bits);
        model.bias = file.bias;
        model.meta = file.meta;
        for (i, w) in file.weights {
            let slot = model
                .weights
                .get_mut(i)
                .ok_or_else(|| ScorerError::Format(format!("weight index {i} out of range")))?;
            *slot = w;
        }
        Ok(model)
    }
}

impl TransitionScorer for ScorerModel {
    fn score(
        &self,
        state: &ParserState,
        tokens: &[LinguisticToken],
    ) -> Result<Vec<(Transition, f64)>, ScorerError> {
        self.score_state(state, tokens)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    dim_bits: u32,
    vocabulary: Vec<Transition>,
    bias: Vec<f64>,
    weights: Vec<(usize, f64)>,
    meta: TrainingMeta,
}

/// Mini-batch SGD on the cross-entropy of the gold transitions.
pub fn train(instances: &[TrainingInstance], cfg: &TrainConfig) -> Result<ScorerModel, ScorerError> {
    if instances.is_empty() {
        return Err(ScorerError::EmptyTrainingSet);
    }
    if cfg.batch_size == 0 || cfg.dim_bits == 0 || cfg.dim_bits > 30 {
        return Err(ScorerError::Config(format!(
            "batch size {} and hash bits {} must be positive (bits at most 30)",
            cfg.batch_size, cfg.dim_bits
        )));
    }
    for inst in instances {
        if !inst.legal.contains(&inst.gold) {
            return Err(ScorerError::Config(format!("gold transition {} is not legal", inst.gold)));
        }
    }
    let vocabulary: BTreeSet<Transition> = instances
        .iter()
        .flat_map(|i| i.legal.iter().copied().chain([i.gold]))
        .collect();
    let gold_classes: BTreeSet<Transition> = instances.iter().map(|i| i.gold).collect();
    if gold_classes.len() == 1 {
        log::warn!("all training instances share one gold transition");
    }
    let mut model = ScorerModel::new(vocabulary.into_iter().collect(), cfg.dim_bits);
    let compiled: Vec<Compiled> = instances.iter().map(|i| model.compile(i)).collect();
    let mut order: Vec<usize> = (0..compiled.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let decay = 1.0 - cfg.learning_rate * cfg.l2;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&Compiled> = chunk.iter().map(|&i| &compiled[i]).collect();
            let g = model.ce_gradient(&batch);
            if decay != 1.0 {
                model.weights.iter_mut().for_each(|w| *w *= decay);
            }
            for (i, d) in g.weights {
                model.weights[i] -= cfg.learning_rate * d;
            }
            for (b, d) in model.bias.iter_mut().zip(g.bias) {
                *b -= cfg.learning_rate * d;
            }
        }
        log::debug!("epoch {epoch}: loss {:.6}", model.loss(instances, cfg.l2));
    }
    let accuracy = model.accuracy(instances);
    model.meta = TrainingMeta {
        epochs: cfg.epochs,
        learning_rate: cfg.learning_rate,
        batch_size: cfg.batch_size,
        l2: cfg.l2,
        seed: cfg.seed,
        instances: instances.len(),
        train_accuracy: accuracy,
    };
    log::info!(
        "trained on {} instances, {} transitions, accuracy {:.3}",
        instances.len(),
        model.vocabulary.len(),
        accuracy
    );
    Ok(model)
}
