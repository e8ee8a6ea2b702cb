use ego_tree::NodeRef;
use scraper::{Html, Node};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Source {
    pub library: String,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
}

/// A list item found under a deprecations heading. `spans` are byte ranges
/// of inline code in `text`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeprecationItem {
    pub text: String,
    pub spans: Vec<(usize, usize)>,
    pub source: Source,
}

impl DeprecationItem {
    pub fn code_texts(&self) -> Vec<&str> {
        self.spans.iter().map(|&(s, e)| &self.text[s..e]).collect()
    }
}

#[derive(Debug, Clone)]
pub struct ExtractConfig {
    /// Heading texts (case-insensitive) that open a deprecations section.
    pub synonyms: Vec<String>,
    /// Elements whose content is inline code.
    pub code_tags: Vec<String>,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            synonyms: vec!["deprecations".into(), "deprecated".into()],
            code_tags: vec!["code".into(), "tt".into()],
        }
    }
}

/// Collects the list items under every matching section heading, up to the
/// next heading of the same or a higher level.
pub fn extract_deprecations(html: &str, source: &Source, cfg: &ExtractConfig) -> Vec<DeprecationItem> {
    let doc = Html::parse_document(html);
    if !doc.errors.is_empty() {
        log::warn!(
            "{} recoverable HTML parse errors; extracting best effort",
            doc.errors.len()
        );
    }
    let mut walker = Walker {
        cfg,
        source,
        active: None,
        items: Vec::new(),
    };
    walker.visit(doc.tree.root());
    walker.items
}

struct Walker<'a> {
    cfg: &'a ExtractConfig,
    source: &'a Source,
    active: Option<u8>,
    items: Vec<DeprecationItem>,
}

impl Walker<'_> {
    fn visit(&mut self, node: NodeRef<'_, Node>) {
        if let Node::Element(el) = node.value() {
            let name = el.name();
            if let Some(level) = heading_level(name) {
                let text = heading_text(node);
                if self.cfg.synonyms.iter().any(|s| s.eq_ignore_ascii_case(&text)) {
                    self.active = Some(level);
                } else if self.active.is_some_and(|a| level <= a) {
                    self.active = None;
                }
                return;
            }
            if name == "li" && self.active.is_some() {
                let mut item = ItemText::default();
                item.render(node, self.cfg);
                if let Some(item) = item.finish(self.source) {
                    self.items.push(item);
                }
                return;
            }
        }
        for child in node.children() {
            self.visit(child);
        }
    }
}

fn heading_level(name: &str) -> Option<u8> {
    match name.as_bytes() {
        [b'h', d @ b'1'..=b'6'] => Some(d - b'0'),
        _ => None,
    }
}

fn is_headerlink(node: NodeRef<'_, Node>) -> bool {
    matches!(node.value(), Node::Element(el) if el.name() == "a" && el.has_class("headerlink", scraper::CaseSensitivity::CaseSensitive))
}

fn heading_text(node: NodeRef<'_, Node>) -> String {
    fn collect(node: NodeRef<'_, Node>, out: &mut String) {
        if is_headerlink(node) {
            return;
        }
        if let Node::Text(t) = node.value() {
            out.push_str(t);
        }
        for child in node.children() {
            collect(child, out);
        }
    }
    let mut out = String::new();
    collect(node, &mut out);
    let text = out.replace('¶', "");
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn raw_text(node: NodeRef<'_, Node>, out: &mut String) {
    if let Node::Text(t) = node.value() {
        out.push_str(t);
    }
    for child in node.children() {
        raw_text(child, out);
    }
}

#[derive(Default)]
struct ItemText {
    text: String,
    spans: Vec<(usize, usize)>,
}

impl ItemText {
    fn push(&mut self, s: &str) {
        for c in s.chars() {
            if c.is_whitespace() {
                if !self.text.is_empty() && !self.text.ends_with(' ') {
                    self.text.push(' ');
                }
            } else {
                self.text.push(c);
            }
        }
    }

    fn render(&mut self, node: NodeRef<'_, Node>, cfg: &ExtractConfig) {
        match node.value() {
            Node::Text(t) => self.push(t),
            Node::Element(el) => {
                let name = el.name();
                if is_headerlink(node) {
                    return;
                }
                if cfg.code_tags.iter().any(|t| t == name) {
                    let mut code = String::new();
                    raw_text(node, &mut code);
                    let code = code.split_whitespace().collect::<Vec<_>>().join(" ");
                    if !code.is_empty() {
                        let start = self.text.len();
                        self.text.push_str(&code);
                        self.spans.push((start, self.text.len()));
                    }
                    return;
                }
                let block = matches!(name, "p" | "div" | "ul" | "ol" | "li" | "br" | "blockquote");
                if block {
                    self.push(" ");
                }
                for child in node.children() {
                    self.render(child, cfg);
                }
                if block {
                    self.push(" ");
                }
            }
            _ => {}
        }
    }

    fn finish(mut self, source: &Source) -> Option<DeprecationItem> {
        while self.text.ends_with(' ') {
            self.text.pop();
        }
        if self.text.is_empty() {
            return None;
        }
        Some(DeprecationItem {
            text: self.text,
            spans: self.spans,
            source: source.clone(),
        })
    }
}
