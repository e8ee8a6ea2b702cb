use deprec_parse::corpus::{
    extract_deprecations, item_to_example, parse_dataset, to_jsonl, ExtractConfig, Source,
};

fn fixture() -> String {
    std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/whatsnew.html")).unwrap()
}

fn source() -> Source {
    Source {
        library: "pandas".into(),
        version: "1.0.0".into(),
        url: Some("https://example.org/whatsnew/v1.0.0.html".into()),
    }
}

#[test]
fn collects_items_under_the_deprecations_heading() {
    let items = extract_deprecations(&fixture(), &source(), &ExtractConfig::default());
    let texts: Vec<&str> = items.iter().map(|i| i.text.as_str()).collect();
    assert_eq!(
        texts,
        [
            "Deprecated parameters levels and codes in MultiIndex.copy(). Use the set_levels() and set_codes() methods instead.",
            "Series.clip_lower() is deprecated, use Series.clip(lower=threshold) instead.",
            "The fastpath keyword of SingleBlockManager is deprecated and will be removed.",
        ]
    );
    assert_eq!(
        items[0].code_texts(),
        ["levels", "codes", "MultiIndex.copy()", "set_levels()", "set_codes()"]
    );
    assert_eq!(items[1].code_texts(), ["Series.clip_lower()", "Series.clip(lower=threshold)"]);
}

#[test]
fn extracted_items_become_valid_records() {
    let items = extract_deprecations(&fixture(), &source(), &ExtractConfig::default());
    let examples: Vec<_> = items
        .iter()
        .enumerate()
        .map(|(i, item)| item_to_example(item, format!("pandas-{i}")))
        .collect();
    for ex in &examples {
        ex.check().unwrap();
        assert!(!ex.gold);
        assert_eq!(ex.extra["url"], "https://example.org/whatsnew/v1.0.0.html");
    }
    assert_eq!(examples[0].entities().len(), 5);
    assert_eq!(parse_dataset(&to_jsonl(&examples)).unwrap(), examples);
}

#[test]
fn custom_headings_select_other_sections() {
    let cfg = ExtractConfig {
        synonyms: vec!["bug fixes".into()],
        ..ExtractConfig::default()
    };
    let items = extract_deprecations(&fixture(), &source(), &cfg);
    assert_eq!(items.len(), 1);
    assert_eq!(items[0].code_texts(), ["Series.mask()"]);
}
