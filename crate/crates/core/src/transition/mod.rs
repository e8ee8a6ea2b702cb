//! Shift-reduce transition system over code entities.
//!
//! A configuration holds a buffer of unconsumed code entities and a stack of
//! bare entities and partial constituents. Reduces follow the `lx`/`rx`
//! convention: `lx` has its head on top of the stack (mentioned after its
//! dependents), `rx` has the head below its dependents.

mod constituent;
mod kind;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::tree::{CodeExpression, Label, SemTree, NO_NAMESPACE};

pub use constituent::{Code, Constituent, Origin, Provenance};
pub use kind::{encode_sequence, parse_sequence, Transition, TransitionKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransitionError {
    #[error("{transition} is not applicable: {reason}")]
    Illegal { transition: Transition, reason: String },
    #[error("transition #{index} ({transition}) is not applicable: {reason}")]
    IllegalAt {
        index: usize,
        transition: Transition,
        reason: String,
    },
    #[error("derivation ended in a non-terminal state {state}")]
    NotTerminal { state: String },
    #[error("cannot parse transition `{0}`")]
    Parse(String),
}

/// A code entity marked up in the source text.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CodeEntity {
    /// Position of the entity in textual order.
    pub id: usize,
    pub text: String,
    /// Token range `[start, end)` the entity covers, when known.
    pub tokens: Option<(usize, usize)>,
}

impl CodeEntity {
    pub fn new(id: usize, text: impl Into<String>) -> Self {
        CodeEntity {
            id,
            text: text.into(),
            tokens: None,
        }
    }

    /// Entities numbered in the order given.
    pub fn sequence<S: AsRef<str>>(texts: &[S]) -> Vec<CodeEntity> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| CodeEntity::new(i, t.as_ref()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StackItem {
    Entity(CodeEntity),
    Node(Constituent),
}

impl StackItem {
    pub fn as_node(&self) -> Option<&Constituent> {
        match self {
            StackItem::Node(c) => Some(c),
            StackItem::Entity(_) => None,
        }
    }

    fn has_label(&self, label: Label) -> bool {
        self.as_node().is_some_and(|c| c.label == label)
    }

    pub fn height(&self) -> usize {
        match self {
            StackItem::Entity(_) => 0,
            StackItem::Node(c) => c.height(),
        }
    }

    /// Entity whose token anchors this item in the text.
    pub fn anchor_entity(&self) -> Option<usize> {
        match self {
            StackItem::Entity(e) => Some(e.id),
            StackItem::Node(c) => c.anchor_entity(),
        }
    }
}

impl fmt::Display for StackItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StackItem::Entity(e) => f.write_str(&e.text),
            StackItem::Node(c) => write!(f, "{}", c.to_tree()),
        }
    }
}

/// Parser configuration. Immutable: [`ParserState::apply`] returns a new one.
#[derive(Debug, Clone)]
pub struct ParserState {
    entities: Arc<[CodeEntity]>,
    next: usize,
    stack: Vec<StackItem>,
    history: Vec<Transition>,
}

impl PartialEq for ParserState {
    fn eq(&self, other: &Self) -> bool {
        self.entities == other.entities
            && self.next == other.next
            && self.stack == other.stack
            && self.history == other.history
    }
}

/// The stack rewrite a transition performs.
#[derive(Debug, Clone)]
struct Effect {
    shift: bool,
    pop: usize,
    push: Vec<StackItem>,
}

impl ParserState {
    pub fn initial(entities: Vec<CodeEntity>) -> Self {
        ParserState {
            entities: entities.into(),
            next: 0,
            stack: Vec::new(),
            history: Vec::new(),
        }
    }

    pub fn entities(&self) -> &[CodeEntity] {
        &self.entities
    }

    pub fn buffer(&self) -> &[CodeEntity] {
        &self.entities[self.next..]
    }

    pub fn stack(&self) -> &[StackItem] {
        &self.stack
    }

    pub fn history(&self) -> &[Transition] {
        &self.history
    }

    /// Item `depth` positions below the top (0 = top).
    pub fn stack_item(&self, depth: usize) -> Option<&StackItem> {
        self.stack.len().checked_sub(depth + 1).map(|i| &self.stack[i])
    }

    pub fn is_terminal(&self) -> bool {
        self.buffer().is_empty() && self.stack.len() == 1 && self.stack[0].has_label(Label::Root)
    }

    pub fn legal_transitions(&self) -> Vec<Transition> {
        Transition::inventory()
            .into_iter()
            .filter(|t| self.effect(*t).is_ok())
            .collect()
    }

    pub fn is_legal(&self, t: Transition) -> bool {
        self.effect(t).is_ok()
    }

    pub fn apply(&self, t: Transition) -> Result<ParserState, TransitionError> {
        let effect = self.effect(t)?;
        let mut next = self.clone();
        if effect.shift {
            next.next += 1;
        }
        let keep = next.stack.len() - effect.pop;
        next.stack.truncate(keep);
        next.stack.extend(effect.push);
        next.history.push(t);
        Ok(next)
    }

    /// The finished tree, or the constituents on the stack joined under a
    /// forced root (bare entities dropped) when the state is not terminal.
    pub fn forced_tree(&self) -> SemTree {
        if let [StackItem::Node(c)] = self.stack.as_slice() {
            if c.label == Label::Root {
                return c.to_tree();
            }
        }
        SemTree::node(
            Label::Root,
            self.stack
                .iter()
                .filter_map(StackItem::as_node)
                .map(Constituent::to_tree)
                .collect(),
        )
    }

    pub fn buffer_string(&self) -> String {
        let items: Vec<&str> = self.buffer().iter().map(|e| e.text.as_str()).collect();
        format!("[{}]", items.join(", "))
    }

    pub fn stack_string(&self) -> String {
        let items: Vec<String> = self.stack.iter().map(ToString::to_string).collect();
        format!("[{}]", items.join(", "))
    }

    /// Serialized (buffer, stack) pair; equal signatures mean equal
    /// configurations regardless of history.
    pub fn signature(&self) -> String {
        format!("{} {}", self.buffer_string(), self.stack_string())
    }

    /// Sum of item heights on the stack.
    pub fn stack_height(&self) -> usize {
        self.stack.iter().map(StackItem::height).sum()
    }

    /// Every input entity is accounted for exactly once across the buffer,
    /// bare stack entities and primary leaves; copies and parts only point
    /// at valid entities.
    pub fn conserves_entities(&self) -> bool {
        let n = self.entities.len();
        let mut seen = vec![0usize; n];
        for e in self.buffer() {
            seen[e.id] += 1;
        }
        let mut valid = true;
        for item in &self.stack {
            match item {
                StackItem::Entity(e) => seen[e.id] += 1,
                StackItem::Node(c) => c.visit_codes(&mut |code| {
                    if let Some(origin) = code.origin {
                        if origin.entity >= n {
                            valid = false;
                        } else if origin.provenance == Provenance::Primary {
                            seen[origin.entity] += 1;
                        }
                    }
                }),
            }
        }
        valid && seen.iter().all(|&c| c == 1)
    }

    fn effect(&self, t: Transition) -> Result<Effect, TransitionError> {
        let effect = self.raw_effect(t)?;
        let kept = self.stack[..self.stack.len() - effect.pop].iter();
        if !viable_levels(kept.chain(&effect.push)) {
            return Err(TransitionError::Illegal {
                transition: t,
                reason: "depr or repl constituent could never join a root".to_string(),
            });
        }
        Ok(effect)
    }

    fn raw_effect(&self, t: Transition) -> Result<Effect, TransitionError> {
        let illegal = |reason: &str| TransitionError::Illegal {
            transition: t,
            reason: reason.to_string(),
        };
        let label = t.label();
        match t.kind() {
            TransitionKind::Shift => {
                let front = self.buffer().first().ok_or_else(|| illegal("buffer is empty"))?;
                Ok(Effect {
                    shift: true,
                    pop: 0,
                    push: vec![StackItem::Entity(front.clone())],
                })
            }
            TransitionKind::Unary => {
                let label = label.expect("labeled kind");
                let top = self.stack_item(0).ok_or_else(|| illegal("stack is empty"))?;
                let node = self.unary(top, label).map_err(illegal)?;
                Ok(replace(1, vec![node]))
            }
            TransitionKind::ReduceRx | TransitionKind::ReduceLx => {
                let label = label.expect("labeled kind");
                let head_on_top = t.kind() == TransitionKind::ReduceLx;
                self.reduce(label, head_on_top).map_err(illegal)
            }
            TransitionKind::ReduceRxEach | TransitionKind::ReduceLxEach => {
                let label = label.expect("labeled kind");
                let head_on_top = t.kind() == TransitionKind::ReduceLxEach;
                self.reduce_each(label, head_on_top).map_err(illegal)
            }
            TransitionKind::ReuseArgsRx => self.reuse_args().map_err(illegal),
            TransitionKind::ReuseNsRx => self.reuse_ns().map_err(illegal),
            TransitionKind::ReuseFuncsRx => self.reuse_funcs().map_err(illegal),
        }
    }

    fn unary(&self, top: &StackItem, label: Label) -> Result<Constituent, &'static str> {
        match (top, label) {
            (StackItem::Entity(e), Label::Arg) => arg_from(e),
            (StackItem::Entity(e), Label::Attr) => attr_from(e, Provenance::Primary),
            (StackItem::Entity(e), Label::Func) => func_from(e, Provenance::Primary),
            (StackItem::Entity(e), Label::Ns) => ns_from(e, Provenance::Primary, None),
            (StackItem::Node(c), Label::Ns) if matches!(c.label, Label::Func | Label::Attr) => {
                Ok(Constituent::new(
                    Label::Ns,
                    Some(Code::synthetic(NO_NAMESPACE)),
                    vec![c.clone()],
                ))
            }
            (StackItem::Node(c), Label::Depr | Label::Repl) if c.label == Label::Ns => {
                Ok(Constituent::new(label, None, vec![c.clone()]))
            }
            (StackItem::Node(c), Label::Root) if c.label == Label::Depr => {
                if self.stack.len() != 1 || !self.buffer().is_empty() {
                    return Err("root must span the whole input");
                }
                Ok(Constituent::new(Label::Root, None, vec![c.clone()]))
            }
            (StackItem::Entity(_), _) => Err("label cannot be raised from a bare entity"),
            (StackItem::Node(_), _) => Err("label cannot be raised from this constituent"),
        }
    }

    /// Length of the run of items satisfying `pred` ending `skip` items
    /// below the top.
    fn run_below(&self, skip: usize, pred: impl Fn(&StackItem) -> bool) -> usize {
        self.stack
            .iter()
            .rev()
            .skip(skip)
            .take_while(|item| pred(item))
            .count()
    }

    fn reduce(&self, label: Label, head_on_top: bool) -> Result<Effect, &'static str> {
        let len = self.stack.len();
        match label {
            Label::Depr | Label::Repl => {
                if head_on_top {
                    return Err("headless labels only reduce right");
                }
                let run = self.run_below(0, |i| i.has_label(Label::Ns));
                if run == 0 {
                    return Err("no ns constituents on top of the stack");
                }
                let children = self.nodes_from(len - run);
                Ok(replace(run, vec![Constituent::new(label, None, children)]))
            }
            Label::Root => {
                if len != 2 || !self.buffer().is_empty() {
                    return Err("root must span the whole input");
                }
                let (first, second) = if head_on_top {
                    (Label::Repl, Label::Depr)
                } else {
                    (Label::Depr, Label::Repl)
                };
                if !self.stack[0].has_label(first) || !self.stack[1].has_label(second) {
                    return Err("root combines one depr and one repl constituent");
                }
                let depr = self.node_at(if head_on_top { 1 } else { 0 });
                let repl = self.node_at(if head_on_top { 0 } else { 1 });
                Ok(replace(2, vec![Constituent::new(Label::Root, None, vec![depr, repl])]))
            }
            Label::Func => {
                let (head_idx, run) = if head_on_top {
                    let run = self.run_below(1, |i| i.has_label(Label::Arg));
                    (len.checked_sub(1).ok_or("stack is empty")?, run)
                } else {
                    let run = self.run_below(0, |i| i.has_label(Label::Arg));
                    (len.checked_sub(run + 1).ok_or("no head below the arguments")?, run)
                };
                if run == 0 {
                    return Err("no arg constituents next to the head");
                }
                let head = func_head(&self.stack[head_idx], Provenance::Primary)?;
                let args_start = if head_on_top { head_idx - run } else { head_idx + 1 };
                let args = self.nodes_from_range(args_start, args_start + run);
                Ok(replace(run + 1, vec![attach_args(head, args)]))
            }
            Label::Ns => {
                if len < 2 {
                    return Err("ns needs a head and a member");
                }
                let (head, member) = if head_on_top {
                    (&self.stack[len - 1], &self.stack[len - 2])
                } else {
                    (&self.stack[len - 2], &self.stack[len - 1])
                };
                let member = match member {
                    StackItem::Node(c) if matches!(c.label, Label::Func | Label::Attr) => c.clone(),
                    _ => return Err("ns member must be a func or attr constituent"),
                };
                Ok(replace(2, vec![ns_head(head, Provenance::Primary, member)?]))
            }
            Label::Arg | Label::Attr => Err("leaf labels cannot be reduced"),
        }
    }

    fn reduce_each(&self, label: Label, head_on_top: bool) -> Result<Effect, &'static str> {
        let len = self.stack.len();
        let dependent: fn(&StackItem) -> bool = match label {
            Label::Func => |i| i.has_label(Label::Arg),
            Label::Ns => |i| i.has_label(Label::Func) || i.has_label(Label::Attr),
            _ => return Err("only func and ns distribute over dependents"),
        };
        let (head_idx, run) = if head_on_top {
            (len.checked_sub(1).ok_or("stack is empty")?, self.run_below(1, dependent))
        } else {
            let run = self.run_below(0, dependent);
            (len.checked_sub(run + 1).ok_or("no head below the dependents")?, run)
        };
        if run < 2 {
            return Err("needs at least two dependents");
        }
        let start = if head_on_top { head_idx - run } else { head_idx + 1 };
        let dependents = self.nodes_from_range(start, start + run);
        let head = &self.stack[head_idx];
        let mut out = Vec::with_capacity(run);
        for (i, dep) in dependents.into_iter().enumerate() {
            let provenance = if i == 0 { Provenance::Primary } else { Provenance::Copy };
            let node = match label {
                Label::Func => attach_args(func_head(head, provenance)?, vec![dep]),
                _ => ns_head(head, provenance, dep)?,
            };
            out.push(node);
        }
        Ok(replace(run + 1, out))
    }

    /// The nearest depr constituent directly below `k` items, where `k` is
    /// the number of its members.
    fn reuse_source(&self) -> Result<(&Constituent, usize), &'static str> {
        let (pos, depr) = self
            .stack
            .iter()
            .enumerate()
            .rev()
            .skip(1)
            .find_map(|(i, item)| {
                item.as_node()
                    .filter(|c| c.label == Label::Depr)
                    .map(|c| (i, c))
            })
            .ok_or("no completed depr constituent below the top")?;
        let k = self.stack.len() - pos - 1;
        if depr.children.len() != k {
            return Err("item count does not match the deprecated members");
        }
        Ok((depr, pos + 1))
    }

    fn reuse_args(&self) -> Result<Effect, &'static str> {
        let (depr, start) = self.reuse_source()?;
        let funcs = depr_funcs(depr)?;
        if funcs.iter().all(|f| f.children.is_empty()) {
            return Err("deprecated functions have no arguments to copy");
        }
        let mut out = Vec::new();
        for (item, func) in self.stack[start..].iter().zip(funcs) {
            let head = func_head(item, Provenance::Primary)?;
            if head.func().is_some_and(|f| !f.children.is_empty()) {
                return Err("replacement function already has arguments");
            }
            let args = func.children.iter().map(Constituent::copied).collect();
            out.push(attach_args(head, args));
        }
        Ok(replace(out.len(), out))
    }

    fn reuse_ns(&self) -> Result<Effect, &'static str> {
        let (depr, start) = self.reuse_source()?;
        let mut out = Vec::new();
        for (item, ns) in self.stack[start..].iter().zip(&depr.children) {
            let code = ns.code.as_ref().ok_or("deprecated member without namespace")?;
            if code.text == NO_NAMESPACE {
                return Err("deprecated member has no namespace to copy");
            }
            let member_label = ns
                .children
                .first()
                .map(|c| c.label)
                .ok_or("deprecated namespace has no member")?;
            let member = match item {
                StackItem::Node(c) if matches!(c.label, Label::Func | Label::Attr) => c.clone(),
                StackItem::Node(_) => return Err("replacement item is not a func or attr"),
                StackItem::Entity(e) => {
                    let built = match member_label {
                        Label::Func => func_from(e, Provenance::Primary)?,
                        _ => attr_from(e, Provenance::Primary)?,
                    };
                    if built.label == Label::Ns {
                        return Err("replacement entity already has a namespace");
                    }
                    built
                }
            };
            out.push(Constituent::new(Label::Ns, Some(code.copied()), vec![member]));
        }
        Ok(replace(out.len(), out))
    }

    fn reuse_funcs(&self) -> Result<Effect, &'static str> {
        let (depr, start) = self.reuse_source()?;
        let funcs = depr_funcs(depr)?;
        let mut out = Vec::new();
        for (item, func) in self.stack[start..].iter().zip(funcs) {
            let arg = match item {
                StackItem::Node(c) if c.label == Label::Arg => c.clone(),
                _ => return Err("replacement items must be arg constituents"),
            };
            let code = func.code.as_ref().map(Code::copied);
            out.push(Constituent::new(Label::Func, code, vec![arg]));
        }
        Ok(replace(out.len(), out))
    }

    fn node_at(&self, idx: usize) -> Constituent {
        self.stack[idx].as_node().cloned().expect("checked node")
    }

    fn nodes_from(&self, start: usize) -> Vec<Constituent> {
        self.nodes_from_range(start, self.stack.len())
    }

    fn nodes_from_range(&self, start: usize, end: usize) -> Vec<Constituent> {
        self.stack[start..end]
            .iter()
            .filter_map(StackItem::as_node)
            .cloned()
            .collect()
    }
}

/// Depr and repl constituents may only sit at the bottom two stack slots,
/// and two of them must be one of each.
fn viable_levels<'a>(stack: impl Iterator<Item = &'a StackItem>) -> bool {
    let mut bottom = None;
    for (i, item) in stack.enumerate() {
        let level = [Label::Depr, Label::Repl].into_iter().find(|&l| item.has_label(l));
        match (i, level, bottom) {
            (_, None, _) => {}
            (0, Some(l), _) => bottom = Some(l),
            (1, Some(l), Some(b)) if l != b => {}
            _ => return false,
        }
    }
    true
}

fn replace(pop: usize, push: Vec<Constituent>) -> Effect {
    Effect {
        shift: false,
        pop,
        push: push.into_iter().map(StackItem::Node).collect(),
    }
}

fn parse_entity(e: &CodeEntity) -> Result<CodeExpression, &'static str> {
    CodeExpression::parse(&e.text).map_err(|_| "entity is not a code expression")
}

fn origin(e: &CodeEntity, provenance: Provenance) -> Origin {
    Origin {
        entity: e.id,
        provenance,
    }
}

fn part_of(provenance: Provenance) -> Provenance {
    match provenance {
        Provenance::Primary => Provenance::Part,
        other => other,
    }
}

fn arg_from(e: &CodeEntity) -> Result<Constituent, &'static str> {
    let text: String = e.text.chars().filter(|c| !c.is_whitespace()).collect();
    if text.is_empty() {
        return Err("empty entity");
    }
    Ok(Constituent::leaf(
        Label::Arg,
        Code::new(text, origin(e, Provenance::Primary)),
    ))
}

fn wrap_prefix(
    expr: &CodeExpression,
    e: &CodeEntity,
    provenance: Provenance,
    member: Constituent,
) -> Constituent {
    match expr.prefix() {
        Some(prefix) => Constituent::new(
            Label::Ns,
            Some(Code::new(prefix, origin(e, part_of(provenance)))),
            vec![member],
        ),
        None => member,
    }
}

/// `A.b.f(x)` becomes `(ns A.b (func f (arg x)))`; undotted names stay a
/// bare func.
fn func_from(e: &CodeEntity, provenance: Provenance) -> Result<Constituent, &'static str> {
    let expr = parse_entity(e)?;
    let args = expr
        .args()
        .iter()
        .map(|a| Constituent::leaf(Label::Arg, Code::new(a.clone(), origin(e, part_of(provenance)))))
        .collect();
    let func = Constituent::new(
        Label::Func,
        Some(Code::new(expr.name().to_string(), origin(e, provenance))),
        args,
    );
    Ok(wrap_prefix(&expr, e, provenance, func))
}

fn attr_from(e: &CodeEntity, provenance: Provenance) -> Result<Constituent, &'static str> {
    let expr = parse_entity(e)?;
    if expr.is_call() {
        return Err("calls cannot be attributes");
    }
    let attr = Constituent::leaf(
        Label::Attr,
        Code::new(expr.name().to_string(), origin(e, provenance)),
    );
    Ok(wrap_prefix(&expr, e, provenance, attr))
}

fn ns_from(
    e: &CodeEntity,
    provenance: Provenance,
    member: Option<Constituent>,
) -> Result<Constituent, &'static str> {
    let expr = parse_entity(e)?;
    if expr.is_call() {
        return Err("calls cannot be namespaces");
    }
    Ok(Constituent::new(
        Label::Ns,
        Some(Code::new(expr.path(), origin(e, provenance))),
        member.into_iter().collect(),
    ))
}

/// Head of an ns reduce: a bare entity or a memberless ns constituent.
fn ns_head(
    item: &StackItem,
    provenance: Provenance,
    member: Constituent,
) -> Result<Constituent, &'static str> {
    match item {
        StackItem::Entity(e) => ns_from(e, provenance, Some(member)),
        StackItem::Node(c) if c.label == Label::Ns && c.children.is_empty() => {
            let mut ns = if provenance == Provenance::Copy { c.copied() } else { c.clone() };
            ns.children.push(member);
            Ok(ns)
        }
        StackItem::Node(_) => Err("ns head must be an entity or an empty ns"),
    }
}

/// Head of a func reduce: a bare entity, a func, or an ns holding a func.
fn func_head(item: &StackItem, provenance: Provenance) -> Result<Constituent, &'static str> {
    match item {
        StackItem::Entity(e) => func_from(e, provenance),
        StackItem::Node(c) if c.func().is_some() => Ok(if provenance == Provenance::Copy {
            c.copied()
        } else {
            c.clone()
        }),
        StackItem::Node(_) => Err("head is not a function"),
    }
}

fn attach_args(mut head: Constituent, args: Vec<Constituent>) -> Constituent {
    head.func_mut()
        .expect("func_head returns a function")
        .children
        .extend(args);
    head
}

fn depr_funcs(depr: &Constituent) -> Result<Vec<&Constituent>, &'static str> {
    depr.children
        .iter()
        .map(|ns| {
            ns.children
                .first()
                .filter(|c| c.label == Label::Func)
                .ok_or("deprecated member is not a function")
        })
        .collect()
}

/// Replays `seq` from the initial state of `entities`.
pub fn replay(entities: &[CodeEntity], seq: &[Transition]) -> Result<ParserState, TransitionError> {
    let mut state = ParserState::initial(entities.to_vec());
    for (index, &t) in seq.iter().enumerate() {
        state = state.apply(t).map_err(|e| match e {
            TransitionError::Illegal { transition, reason } => TransitionError::IllegalAt {
                index,
                transition,
                reason,
            },
            other => other,
        })?;
    }
    Ok(state)
}

/// Replays `seq` and returns the finished tree.
pub fn run(entities: &[CodeEntity], seq: &[Transition]) -> Result<SemTree, TransitionError> {
    let state = replay(entities, seq)?;
    if !state.is_terminal() {
        return Err(TransitionError::NotTerminal {
            state: state.signature(),
        });
    }
    Ok(state.forced_tree())
}

#[cfg(test)]
mod tests;
