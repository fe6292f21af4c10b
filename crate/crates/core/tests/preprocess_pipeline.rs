//! End-to-end behavior of the preprocessing pipeline: golden normalization
//! examples, entity rules, byte accounting, and idempotence.

use tweetopic_core::preprocess::{
    ByteLabel, ConsumedBy, DiscardReason, Pipeline, PipelineConfig, Rule,
};

fn default_pipeline() -> Pipeline {
    Pipeline::default_pipeline()
}

/// Pipeline with an explicit stopword list (empty by default) so tests
/// control exactly what gets removed.
fn pipeline_with_stopwords(stopwords: &[&str]) -> Pipeline {
    let config = PipelineConfig::default()
        .with_stopwords(stopwords.iter().map(|s| s.to_string()))
        .with_lexicon(["goal", "yes", "good", "cool", "go", "cats", "and", "dogs"].map(String::from));
    Pipeline::new(config).unwrap()
}

fn tokens(p: &Pipeline, text: &str) -> Vec<String> {
    p.preprocess(text).tokens
}

#[test]
fn golden_hashtag_unpacking() {
    let p = default_pipeline();
    assert_eq!(
        tokens(&p, "#ILoveComputerScience"),
        vec!["<hashtag>", "i", "love", "computer", "science", "</hashtag>"]
    );
}

#[test]
fn golden_elongation() {
    let p = default_pipeline();
    let out = p.preprocess("gooooal");
    assert_eq!(out.tokens, vec!["goal"]);
    assert_eq!(out.annotations.len(), 1);
    assert_eq!(out.annotations[0].tag.as_str(), "elongated");
    assert_eq!((out.annotations[0].start, out.annotations[0].end), (0, 1));
}

#[test]
fn golden_repetition() {
    let p = default_pipeline();
    let out = p.preprocess("go go go go");
    assert_eq!(out.tokens, vec!["<repeated>", "go"]);
    assert!(out
        .annotations
        .iter()
        .any(|a| a.tag.as_str() == "repeated" && a.start == 0 && a.end == 2));
}

#[test]
fn composed_pipeline_example() {
    let p = default_pipeline();
    let out = p.preprocess("#GoGoGo gooooal!!!");
    assert_eq!(
        out.tokens,
        vec!["<hashtag>", "<repeated>", "go", "</hashtag>", "goal"]
    );
    let tags: Vec<&str> = out.annotations.iter().map(|a| a.tag.as_str()).collect();
    assert!(tags.contains(&"hashtag"));
    assert!(tags.contains(&"repeated"));
    assert!(tags.contains(&"elongated"));
}

#[test]
fn empty_input_is_flagged_empty() {
    let p = default_pipeline();
    let out = p.preprocess("");
    assert!(out.is_empty());
    assert!(out.tokens.is_empty() && out.annotations.is_empty());
}

#[test]
fn entity_normalization_rule_table() {
    let p = pipeline_with_stopwords(&[]);
    assert_eq!(
        p.normalize_entities("RT @bob check https://x.co"),
        "<user> check <url>"
    );
    assert_eq!(
        p.normalize_entities("50% off at 5pm"),
        "<percent> off at <time>"
    );
    assert_eq!(p.normalize_entities("plain words only"), "plain words only");
}

#[test]
fn entity_placeholders_become_annotated_tokens() {
    let p = pipeline_with_stopwords(&[]);
    let out = p.preprocess("email me at bob@x.co or call 555-123-4567 before 2024-01-02");
    assert!(out.tokens.contains(&"<email>".to_string()));
    assert!(out.tokens.contains(&"<phone>".to_string()));
    assert!(out.tokens.contains(&"<date>".to_string()));
    for tag in ["email", "phone", "date"] {
        let a = out
            .annotations
            .iter()
            .find(|a| a.tag.as_str() == tag)
            .unwrap_or_else(|| panic!("missing {tag} annotation"));
        assert_eq!(out.tokens[a.start], format!("<{tag}>"));
    }
}

#[test]
fn numbers_money_users_are_replaced() {
    let p = pipeline_with_stopwords(&[]);
    assert_eq!(
        p.normalize_entities("@alice paid $5.99 for 3 tickets"),
        "<user> paid <money> for <number> tickets"
    );
}

#[test]
fn emoticons_and_rt_are_removed() {
    let p = pipeline_with_stopwords(&[]);
    assert_eq!(p.normalize_entities("RT great game :) :-D <3"), "great game");
}

#[test]
fn stopwords_are_removed_outside_hashtags() {
    let p = pipeline_with_stopwords(&["the", "i"]);
    assert_eq!(tokens(&p, "the game i saw"), vec!["game", "saw"]);
    // Inside an unpacked hashtag, words survive stopword removal.
    assert_eq!(
        tokens(&p, "#ILoveDogs"),
        vec!["<hashtag>", "i", "love", "dogs", "</hashtag>"]
    );
}

#[test]
fn case_invariant_no_uppercase_outside_placeholders() {
    let p = default_pipeline();
    for text in [
        "Breaking NEWS: Rust 1.0 RELEASED!",
        "#ILoveComputerScience",
        "GOOOOAL by Ronaldo at 5PM",
        "Mixed CaSe tExT with @UserName",
    ] {
        for tok in tokens(&p, text) {
            assert!(
                !tok.chars().any(|c| c.is_uppercase()),
                "token {tok:?} from {text:?} contains uppercase"
            );
        }
    }
}

#[test]
fn accounting_partitions_every_byte() {
    let p = default_pipeline();
    let samples = [
        "",
        "RT @bob check https://x.co :) #ILoveComputerScience gooooal!!!",
        "the quick brown fox",
        "50% off at 5pm, call 555-123-4567 or bob@x.co",
        "go go go go   spaced\tout",
        "#catsanddogs unicode caf\u{e9} text \u{1f600}",
        "a $5 deal on 2024-01-02 (really!)",
    ];
    for text in samples {
        let (_, acct) = p.preprocess_detailed(text);
        assert!(
            acct.is_complete(),
            "every byte of {text:?} must be labeled exactly once"
        );
        assert_eq!(acct.labels().len(), text.len());
    }
}

#[test]
fn accounting_labels_are_meaningful() {
    let p = pipeline_with_stopwords(&["the"]);
    let text = "the gooooal https://x.co";
    let (_, acct) = p.preprocess_detailed(text);
    let labels = acct.labels();
    // "the" discarded as a stopword.
    assert_eq!(labels[0], ByteLabel::Discarded(DiscardReason::Stopword));
    // Elongation consumed three of the o's.
    let consumed_elong = acct.count(ByteLabel::Consumed(ConsumedBy::Elongation));
    assert_eq!(consumed_elong, 3);
    // URL replaced by a placeholder.
    assert_eq!(
        labels[text.find("https").unwrap()],
        ByteLabel::Consumed(ConsumedBy::Entity(Rule::Url))
    );
}

#[test]
fn idempotence_on_rendered_output() {
    let p = default_pipeline();
    let samples = [
        "RT @bob check https://x.co :) #ILoveComputerScience gooooal!!!",
        "go go go go",
        "#GoGoGo gooooal!!!",
        "50% off at 5pm for the first 100 callers",
        "I looove this sooo much #BestDayEver",
        "@alice emailed bob@x.co on 2024-01-02 :P",
        "offff to the races",
    ];
    for text in samples {
        let first = p.preprocess(text);
        let rendered = first.render();
        let second = p.preprocess(&rendered);
        assert_eq!(
            first.tokens, second.tokens,
            "pipeline must be idempotent on {text:?} (rendered: {rendered:?})"
        );
    }
}

#[test]
fn determinism_across_runs_and_pipelines() {
    let text = "RT @bob check https://x.co :) #ILoveComputerScience gooooal!!! 50% off";
    let a = default_pipeline().preprocess(text);
    let b = default_pipeline().preprocess(text);
    assert_eq!(a, b);
}

#[test]
fn config_hash_tracks_word_lists() {
    let a = Pipeline::new(PipelineConfig::default()).unwrap();
    let b = Pipeline::new(PipelineConfig::default().with_stopwords(["extra"].map(String::from)))
        .unwrap();
    assert_ne!(a.config_hash(), b.config_hash());
    let c = Pipeline::new(PipelineConfig::default()).unwrap();
    assert_eq!(a.config_hash(), c.config_hash());
}

#[test]
fn rule_subsets_apply_in_order() {
    // Only lowercasing: no entity replacement, hashtags stay whole.
    let p = Pipeline::new(PipelineConfig::counting()).unwrap();
    assert_eq!(
        tokens(&p, "RT @bob 50% #Tag gooooal"),
        vec!["rt", "bob", "50", "#tag", "gooooal"]
    );
    // Duplicate rules are rejected.
    let mut rules = Rule::registry().to_vec();
    rules.push(Rule::Url);
    assert!(Pipeline::new(PipelineConfig::default().with_rules(rules)).is_err());
}

#[test]
fn annotation_spans_index_valid_positions() {
    let p = default_pipeline();
    let out = p.preprocess("#GoGoGo gooooal https://x.co @bob 5pm");
    for a in &out.annotations {
        assert!(a.start < a.end, "span {a:?} must be non-empty");
        assert!(a.end <= out.tokens.len(), "span {a:?} must index tokens");
    }
}
