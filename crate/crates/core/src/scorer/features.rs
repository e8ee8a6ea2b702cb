use std::collections::{BTreeSet, VecDeque};

use crate::corpus::LinguisticToken;
use crate::transition::{ParserState, StackItem};

/// Label shown for a bare code entity on the stack.
pub const CODE_LABEL: &str = "⟨code⟩";

/// Children considered by the indexed templates.
const MAX_CHILDREN: usize = 3;
/// Dependency path length after which path templates are truncated.
const MAX_PATH_HOPS: usize = 8;

/// Sparse binary feature vector: the set of instantiated template keys,
/// each of the form `group:template=value`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureVector(BTreeSet<String>);

impl FeatureVector {
    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, key: &str) -> bool {
        self.0.contains(key)
    }

    fn add(&mut self, group: &str, template: &str, value: impl AsRef<str>) {
        self.0.insert(format!("{group}:{template}={}", value.as_ref()));
    }
}

impl FromIterator<String> for FeatureVector {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        FeatureVector(iter.into_iter().collect())
    }
}

/// A parser-state element reduced to what the templates read.
struct Element<'a> {
    surface: &'a str,
    /// Index of the governing token, when the entity's tokens are known.
    token: Option<usize>,
    node: Option<&'a crate::transition::Constituent>,
}

/// Instantiates the unary templates for Q0, S0 and S1 and the path
/// templates for the Q0-S0, Q0-S1 and S0-S1 pairs. Without dependency
/// annotations only surface, lemma and constituent-label templates fire.
pub fn extract_features(state: &ParserState, tokens: &[LinguisticToken]) -> FeatureVector {
    let mut out = FeatureVector::default();
    let element = |entity: usize, node| {
        let e = &state.entities()[entity];
        Element {
            surface: e.text.as_str(),
            token: e.tokens.map(|(start, _)| start).filter(|&i| i < tokens.len()),
            node,
        }
    };
    let q0 = state.buffer().first().map(|e| element(e.id, None));
    let stack_element = |depth| {
        state.stack_item(depth).and_then(|item| match item {
            StackItem::Entity(e) => Some(element(e.id, None)),
            StackItem::Node(c) => c.anchor_entity().map(|id| element(id, Some(c))),
        })
    };
    let (s0, s1) = (stack_element(0), stack_element(1));
    let graph = DepGraph::new(tokens);

    for (group, el) in [("Q0", &q0), ("S0", &s0), ("S1", &s1)] {
        let Some(el) = el else { continue };
        lexical(&mut out, group, el, tokens, &graph);
        if group != "Q0" {
            structural(&mut out, group, el.node);
        }
    }
    if let (Some(a), Some(b)) = (&s0, &s1) {
        let label = |e: &Element| e.node.map_or(CODE_LABEL, |n| n.label.as_str());
        out.add("S0-S1", "labels", format!("{}|{}", label(a), label(b)));
    }
    for (group, a, b) in [("Q0-S0", &q0, &s0), ("Q0-S1", &q0, &s1), ("S0-S1", &s0, &s1)] {
        if let (Some(a), Some(b)) = (a, b) {
            if let (Some(x), Some(y)) = (a.token, b.token) {
                path(&mut out, group, x, y, tokens, &graph);
            }
        }
    }
    out
}

fn lemma(token: &LinguisticToken) -> String {
    token
        .lemma
        .clone()
        .unwrap_or_else(|| token.surface.to_lowercase())
}

fn lexical(
    out: &mut FeatureVector,
    group: &str,
    el: &Element,
    tokens: &[LinguisticToken],
    graph: &DepGraph,
) {
    out.add(group, "surface", el.surface);
    let Some(i) = el.token else {
        out.add(group, "lemma", el.surface.to_lowercase());
        return;
    };
    let tok = &tokens[i];
    out.add(group, "lemma", lemma(tok));
    if !graph.annotated {
        return;
    }
    if let Some(dep) = &tok.dep {
        out.add(group, "dep", dep);
    }
    let mut add_token = |prefix: &str, j: usize| {
        let t = &tokens[j];
        out.add(group, prefix, lemma(t));
        if let Some(pos) = &t.pos {
            out.add(group, &format!("{prefix}_pos"), pos);
        }
        if let Some(dep) = &t.dep {
            out.add(group, &format!("{prefix}_dep"), dep);
        }
    };
    if let Some(h) = graph.head(i) {
        add_token("head", h);
    }
    let root = graph.root(i);
    add_token("root", root);
    let mut add_children = |prefix: &str, j: usize| {
        for (k, &c) in graph.children[j].iter().take(MAX_CHILDREN).enumerate() {
            let t = &tokens[c];
            out.add(group, &format!("{prefix}_{k}"), lemma(t));
            if let Some(pos) = &t.pos {
                out.add(group, &format!("{prefix}_pos_{k}"), pos);
            }
            if let Some(dep) = &t.dep {
                out.add(group, &format!("{prefix}_dep_{k}"), dep);
            }
        }
    };
    add_children("child", i);
    if let Some(h) = graph.head(i) {
        add_children("head_child", h);
    }
    add_children("root_child", root);
}

fn structural(out: &mut FeatureVector, group: &str, node: Option<&crate::transition::Constituent>) {
    let Some(node) = node else {
        out.add(group, "label", CODE_LABEL);
        return;
    };
    out.add(group, "label", node.label.as_str());
    for (i, child) in node.children.iter().take(MAX_CHILDREN).enumerate() {
        out.add(group, &format!("child_label_{i}"), child.label.as_str());
        if let Some(grandchild) = child.children.first() {
            out.add(group, &format!("sub_child_label_{i}"), grandchild.label.as_str());
        }
    }
}

fn path(
    out: &mut FeatureVector,
    group: &str,
    from: usize,
    to: usize,
    tokens: &[LinguisticToken],
    graph: &DepGraph,
) {
    if !graph.annotated {
        return;
    }
    let Some(nodes) = graph.shortest_path(from, to) else {
        return;
    };
    let truncated = nodes.len() > MAX_PATH_HOPS + 1;
    let nodes = &nodes[..nodes.len().min(MAX_PATH_HOPS + 1)];
    let last = nodes.len() - 1;
    let mut lemmas: Vec<String> = nodes
        .iter()
        .enumerate()
        .map(|(k, &j)| match k {
            0 => "⟨x⟩".to_string(),
            k if k == last && !truncated => "⟨y⟩".to_string(),
            _ => lemma(&tokens[j]),
        })
        .collect();
    let mut pos: Vec<String> = nodes
        .iter()
        .map(|&j| tokens[j].pos.clone().unwrap_or_default())
        .collect();
    let mut dep: Vec<String> = nodes[1..]
        .iter()
        .map(|&j| tokens[j].dep.clone().unwrap_or_default())
        .collect();
    if truncated {
        for v in [&mut lemmas, &mut pos, &mut dep] {
            v.push("…".into());
        }
    }
    out.add(group, "path_lemma", lemmas.join(" "));
    out.add(group, "path_pos", pos.join(", "));
    out.add(group, "path_dep", dep.join(", "));
}

/// Undirected view of the head annotations.
struct DepGraph {
    annotated: bool,
    heads: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
}

impl DepGraph {
    fn new(tokens: &[LinguisticToken]) -> Self {
        let annotated = tokens.iter().any(|t| t.head.is_some());
        let heads: Vec<Option<usize>> = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| t.head.filter(|&h| h != i && h < tokens.len()))
            .collect();
        let mut children = vec![Vec::new(); tokens.len()];
        for (i, h) in heads.iter().enumerate() {
            if let Some(h) = h {
                children[*h].push(i);
            }
        }
        DepGraph {
            annotated,
            heads,
            children,
        }
    }

    fn head(&self, i: usize) -> Option<usize> {
        self.heads[i]
    }

    /// Sentence root reached by following heads; cycles stop at the start.
    fn root(&self, mut i: usize) -> usize {
        let start = i;
        for _ in 0..self.heads.len() {
            match self.heads[i] {
                Some(h) if h != start => i = h,
                _ => break,
            }
        }
        i
    }

    fn shortest_path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let n = self.heads.len();
        let mut prev = vec![usize::MAX; n];
        prev[from] = from;
        let mut queue = VecDeque::from([from]);
        while let Some(i) = queue.pop_front() {
            if i == to {
                let mut path = vec![to];
                let mut j = to;
                while j != from {
                    j = prev[j];
                    path.push(j);
                }
                path.reverse();
                return Some(path);
            }
            let neighbours = self.heads[i].into_iter().chain(self.children[i].iter().copied());
            for j in neighbours {
                if prev[j] == usize::MAX {
                    prev[j] = i;
                    queue.push_back(j);
                }
            }
        }
        None
    }
}
