use serde_json::Map;

use super::{AnnotatedExample, CodeSpan, DeprecationItem, LinguisticToken};

/// Splits `text` on whitespace and punctuation, keeping each code span
/// (byte range) as one atomic token.
pub fn tokenize(text: &str, spans: &[(usize, usize)]) -> (Vec<LinguisticToken>, Vec<CodeSpan>) {
    let mut tokens = Vec::new();
    let mut code_spans = Vec::new();
    let mut pos = 0;
    for &(start, end) in spans {
        words(&text[pos..start], &mut tokens);
        let entity = &text[start..end];
        code_spans.push(CodeSpan {
            start: tokens.len(),
            end: tokens.len() + 1,
            entity: entity.to_string(),
        });
        tokens.push(LinguisticToken::code(entity, code_spans.len() - 1));
        pos = end;
    }
    words(&text[pos..], &mut tokens);
    (tokens, code_spans)
}

fn words(text: &str, out: &mut Vec<LinguisticToken>) {
    let mut word = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() || c == '_' {
            word.push(c);
            continue;
        }
        if !word.is_empty() {
            out.push(LinguisticToken::word(std::mem::take(&mut word)));
        }
        if !c.is_whitespace() {
            out.push(LinguisticToken::word(c.to_string()));
        }
    }
    if !word.is_empty() {
        out.push(LinguisticToken::word(word));
    }
}

/// An unannotated dataset record for an extracted item.
pub fn item_to_example(item: &DeprecationItem, id: impl Into<String>) -> AnnotatedExample {
    let (tokens, code_spans) = tokenize(&item.text, &item.spans);
    let mut extra = Map::new();
    if let Some(url) = &item.source.url {
        extra.insert("url".into(), url.clone().into());
    }
    AnnotatedExample {
        id: id.into(),
        library: item.source.library.clone(),
        version: item.source.version.clone(),
        text: item.text.clone(),
        tokens,
        code_spans,
        gold_depr: Vec::new(),
        gold_repl: Vec::new(),
        gold_tree: None,
        units: Vec::new(),
        workarounds: Vec::new(),
        gold: false,
        derivation: None,
        extra,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn code_spans_stay_atomic() {
        let text = "Use Series.clip(lower=threshold) instead.";
        let (tokens, spans) = tokenize(text, &[(4, 32)]);
        let surfaces: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
        assert_eq!(surfaces, ["Use", "Series.clip(lower=threshold)", "instead", "."]);
        assert_eq!(spans[0].start, 1);
        assert_eq!(spans[0].entity, "Series.clip(lower=threshold)");
        assert!(tokens[1].is_code);
    }
}
