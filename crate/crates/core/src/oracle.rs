//! Breadth-limited search for a transition sequence that derives a gold
//! tree, guided by subtree overlap with the gold tree.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::AnnotatedExample;
use crate::metrics::SubtreeIndex;
use crate::scorer::{instances_from_sequence, TrainingInstance};
use crate::transition::{encode_sequence, CodeEntity, ParserState, Transition};
use crate::tree::SemTree;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("no code entities to parse")]
    EmptyInput,
    #[error("invalid oracle configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub max_breadth: usize,
    /// Maximum transition-sequence length.
    pub max_depth: usize,
    pub accept_threshold: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            max_breadth: 100,
            max_depth: 15,
            accept_threshold: 0.90,
        }
    }
}

impl OracleConfig {
    pub fn check(&self) -> Result<(), OracleError> {
        if self.max_breadth == 0 {
            return Err(OracleError::Config("max_breadth must be at least 1".into()));
        }
        if self.max_depth == 0 {
            return Err(OracleError::Config("max_depth must be at least 1".into()));
        }
        if !(self.accept_threshold > 0.0 && self.accept_threshold <= 1.0) {
            return Err(OracleError::Config(format!(
                "accept_threshold {} outside (0, 1]",
                self.accept_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub sequence: Vec<Transition>,
    /// The forced tree of the final state.
    pub tree: SemTree,
    pub overlap: f64,
    pub accepted: bool,
    /// Whether the sequence ends in a terminal state.
    pub terminal: bool,
}

struct Candidate {
    state: ParserState,
    overlap: f64,
    encoding: String,
}

impl Candidate {
    fn new(state: ParserState, index: &SubtreeIndex) -> Self {
        let overlap = index.score_tree(&state.forced_tree()).f1;
        let encoding = encode_sequence(state.history());
        Candidate {
            state,
            overlap,
            encoding,
        }
    }

    /// Overlap descending, then length ascending, then encoding ascending.
    fn rank(&self, other: &Candidate) -> Ordering {
        other
            .overlap
            .total_cmp(&self.overlap)
            .then_with(|| self.state.history().len().cmp(&other.state.history().len()))
            .then_with(|| self.encoding.cmp(&other.encoding))
    }
}

/// Level-synchronous beam search: every frontier state is expanded by all
/// legal transitions, duplicates (same buffer and stack) are merged, and
/// the best `max_breadth` states survive to the next level. Returns the best
/// terminal state found, or the best partial one when none is terminal.
pub fn find_gold_sequence(
    entities: &[CodeEntity],
    gold: &SemTree,
    cfg: &OracleConfig,
) -> Result<OracleResult, OracleError> {
    cfg.check()?;
    if entities.is_empty() {
        return Err(OracleError::EmptyInput);
    }
    let index = SubtreeIndex::for_tree(gold);
    let mut frontier = vec![Candidate::new(ParserState::initial(entities.to_vec()), &index)];
    let mut best_partial: Option<Candidate> = None;
    let mut best_terminal: Option<Candidate> = None;

    for _ in 0..cfg.max_depth {
        let mut level: HashMap<String, Candidate> = HashMap::new();
        for cand in &frontier {
            for t in cand.state.legal_transitions() {
                let next = cand.state.apply(t).expect("legal transition applies");
                let next = Candidate::new(next, &index);
                let key = next.state.signature();
                match level.get(&key) {
                    Some(seen) if seen.rank(&next) != Ordering::Greater => {}
                    _ => {
                        level.insert(key, next);
                    }
                }
            }
        }
        let mut level: Vec<Candidate> = level.into_values().collect();
        level.sort_by(Candidate::rank);

        let (terminal, open): (Vec<Candidate>, Vec<Candidate>) =
            level.into_iter().partition(|c| c.state.is_terminal());
        if let Some(best) = terminal.into_iter().next() {
            if best_terminal.as_ref().is_none_or(|b| best.rank(b) == Ordering::Less) {
                best_terminal = Some(best);
            }
        }
        frontier = open;
        frontier.truncate(cfg.max_breadth);
        if let Some(top) = frontier.first() {
            if best_partial.as_ref().is_none_or(|b| top.rank(b) == Ordering::Less) {
                best_partial = Some(Candidate {
                    state: top.state.clone(),
                    overlap: top.overlap,
                    encoding: top.encoding.clone(),
                });
            }
        }
        if frontier.is_empty() || best_terminal.as_ref().is_some_and(|b| b.overlap >= 1.0) {
            break;
        }
    }

    let best = best_terminal
        .or(best_partial)
        .unwrap_or_else(|| Candidate::new(ParserState::initial(entities.to_vec()), &index));
    Ok(OracleResult {
        tree: best.state.forced_tree(),
        terminal: best.state.is_terminal(),
        accepted: best.overlap >= cfg.accept_threshold,
        overlap: best.overlap,
        sequence: best.state.history().to_vec(),
    })
}

/// Oracle outcome for one dataset example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub id: String,
    pub result: OracleResult,
}

/// Runs the oracle on every annotated example with code entities and
/// turns the accepted terminal sequences into training instances.
pub fn oracle_training_set(
    examples: &[AnnotatedExample],
    cfg: &OracleConfig,
) -> Result<(Vec<TrainingInstance>, Vec<OracleRecord>), OracleError> {
    cfg.check()?;
    let mut instances = Vec::new();
    let mut records = Vec::new();
    for ex in examples {
        let Ok(Some(gold)) = ex.gold_semtree() else { continue };
        let entities = ex.entities();
        if entities.is_empty() {
            continue;
        }
        let result = find_gold_sequence(&entities, &gold, cfg)?;
        if result.accepted && result.terminal {
            let steps = instances_from_sequence(&entities, &ex.tokens, &result.sequence)
                .expect("oracle sequences replay");
            instances.extend(steps);
        } else {
            log::info!("{}: oracle rejected (overlap {:.3})", ex.id, result.overlap);
        }
        records.push(OracleRecord {
            id: ex.id.clone(),
            result,
        });
    }
    Ok((instances, records))
}
