//! Beam-search and greedy decoding with a transition scorer.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AnnotatedExample, LinguisticToken};
use crate::metrics::Prediction;
use crate::scorer::{ScorerError, TransitionScorer};
use crate::transition::{encode_sequence, CodeEntity, ParserState, Transition, TransitionError};
use crate::tree::SemTree;

pub const DEFAULT_BEAM_WIDTH: usize = 10;

#[derive(Debug, Error, PartialEq)]
pub enum DecodeError {
    #[error("no code entities to parse")]
    EmptyInput,
    #[error("invalid decoder configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error("scorer proposed an illegal transition: {0}")]
    Illegal(#[from] TransitionError),
}

/// Step cap used when none is given: `4n + 8` for `n` entities.
pub fn default_max_steps(entities: usize) -> usize {
    4 * entities + 8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseOutput {
    pub tree: SemTree,
    /// Cumulative log-probability of `sequence`.
    pub log_prob: f64,
    /// True when no terminal state was reached and `tree` is forced.
    pub partial: bool,
    pub sequence: Vec<Transition>,
}

impl ParseOutput {
    /// Comparison key: complete parses before partial ones, then
    /// log-probability.
    pub fn quality(&self) -> (bool, f64) {
        (!self.partial, self.log_prob)
    }
}

struct Item {
    state: ParserState,
    score: f64,
    signature: String,
    encoding: String,
}

impl Item {
    fn new(state: ParserState, score: f64) -> Self {
        Item {
            signature: state.signature(),
            encoding: encode_sequence(state.history()),
            state,
            score,
        }
    }

    /// Score descending, then serialized state, then history.
    fn rank(&self, other: &Item) -> Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then_with(|| self.signature.cmp(&other.signature))
            .then_with(|| self.encoding.cmp(&other.encoding))
    }

    fn into_output(self) -> ParseOutput {
        ParseOutput {
            tree: self.state.forced_tree(),
            log_prob: self.score,
            partial: !self.state.is_terminal(),
            sequence: self.state.history().to_vec(),
        }
    }
}

fn check(entities: &[CodeEntity], width: usize, max_steps: usize) -> Result<(), DecodeError> {
    if entities.is_empty() {
        return Err(DecodeError::EmptyInput);
    }
    if width == 0 {
        return Err(DecodeError::Config("beam width must be at least 1".into()));
    }
    if max_steps == 0 {
        return Err(DecodeError::Config("max_steps must be at least 1".into()));
    }
    Ok(())
}

fn has_moves(state: &ParserState) -> bool {
    !state.legal_transitions().is_empty()
}

/// Keeps the `width` best expansions by cumulative log-probability.
/// Terminal states leave the beam for a pool of finished parses; search
/// stops when the beam is empty, the step cap is hit, or no beam item can
/// still beat the best finished parse. Without any finished parse the best
/// item of the last beam is returned under a forced root.
pub fn beam_parse(
    scorer: &dyn TransitionScorer,
    entities: &[CodeEntity],
    tokens: &[LinguisticToken],
    width: usize,
    max_steps: Option<usize>,
) -> Result<ParseOutput, DecodeError> {
    let max_steps = max_steps.unwrap_or_else(|| default_max_steps(entities.len()));
    check(entities, width, max_steps)?;
    let mut beam = vec![Item::new(ParserState::initial(entities.to_vec()), 0.0)];
    let mut finished: Option<Item> = None;
    let mut last_partial: Option<Item> = None;

    for _ in 0..max_steps {
        let mut expanded: HashMap<String, Item> = HashMap::new();
        for item in beam.iter().filter(|i| has_moves(&i.state)) {
            for (t, lp) in scorer.score(&item.state, tokens)? {
                let next = item.state.apply(t)?;
                let next = Item::new(next, item.score + lp);
                match expanded.get(&next.signature) {
                    Some(seen) if seen.rank(&next) != Ordering::Greater => {}
                    _ => {
                        expanded.insert(next.signature.clone(), next);
                    }
                }
            }
        }
        let mut ranked: Vec<Item> = expanded.into_values().collect();
        ranked.sort_by(Item::rank);
        ranked.truncate(width);

        beam = Vec::with_capacity(ranked.len());
        for item in ranked {
            if item.state.is_terminal() {
                if finished.as_ref().is_none_or(|f| item.rank(f) == Ordering::Less) {
                    finished = Some(item);
                }
            } else {
                beam.push(item);
            }
        }
        if let Some(top) = beam.first() {
            last_partial = Some(Item::new(top.state.clone(), top.score));
        }
        let settled = match (&finished, beam.first()) {
            (_, None) => true,
            (Some(f), Some(b)) => f.score >= b.score,
            (None, Some(_)) => false,
        };
        if settled {
            break;
        }
    }

    let best = finished
        .or(last_partial)
        .unwrap_or_else(|| Item::new(ParserState::initial(entities.to_vec()), 0.0));
    Ok(best.into_output())
}

/// Follows the highest-scoring legal transition at every step, breaking
/// ties as [`beam_parse`] does.
pub fn greedy_parse(
    scorer: &dyn TransitionScorer,
    entities: &[CodeEntity],
    tokens: &[LinguisticToken],
    max_steps: Option<usize>,
) -> Result<ParseOutput, DecodeError> {
    let max_steps = max_steps.unwrap_or_else(|| default_max_steps(entities.len()));
    check(entities, 1, max_steps)?;
    let mut current = Item::new(ParserState::initial(entities.to_vec()), 0.0);
    for _ in 0..max_steps {
        if current.state.is_terminal() || !has_moves(&current.state) {
            break;
        }
        let mut options = Vec::new();
        for (t, lp) in scorer.score(&current.state, tokens)? {
            let next = current.state.apply(t)?;
            options.push(Item::new(next, current.score + lp));
        }
        match options.into_iter().min_by(Item::rank) {
            Some(best) => current = best,
            None => break,
        }
    }
    Ok(current.into_output())
}

/// Decodes one dataset example into a prediction. Examples without code
/// entities get an empty partial prediction.
pub fn predict(
    scorer: &dyn TransitionScorer,
    example: &AnnotatedExample,
    width: usize,
) -> Result<Prediction, DecodeError> {
    let entities = example.entities();
    if entities.is_empty() {
        let mut empty = Prediction::from_sets(example.id.clone(), Vec::new(), Vec::new());
        empty.partial = true;
        return Ok(empty);
    }
    let out = beam_parse(scorer, &entities, &example.tokens, width, None)?;
    Ok(Prediction::from_tree(
        example.id.clone(),
        out.tree,
        Some(out.log_prob),
        out.partial,
    ))
}
