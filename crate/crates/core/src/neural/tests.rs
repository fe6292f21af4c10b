use super::*;
use crate::features::parse_embeddings;
use std::path::PathBuf;

fn doc(tokens: &[&str]) -> TokenizedTweet {
    TokenizedTweet {
        tokens: tokens.iter().map(|t| t.to_string()).collect(),
        annotations: Vec::new(),
    }
}

/// Embedding table: two signal tokens plus filler, dimension 8.
fn toy_table() -> EmbeddingTable {
    let mut body = String::new();
    body.push_str("alpha 1 0 0 0 0.2 0 0 0\n");
    body.push_str("bravo 0 1 0 0 0 0.2 0 0\n");
    for (i, tok) in ["the", "went", "to", "today", "really", "again"].iter().enumerate() {
        let mut row = vec![0.0f64; 8];
        row[2 + (i % 6) / 2] = 0.1 + 0.05 * i as f64;
        row[7] = -0.05 * (i as f64 + 1.0);
        let vals: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        body.push_str(&format!("{tok} {}\n", vals.join(" ")));
    }
    parse_embeddings(&body, &PathBuf::from("<toy>")).unwrap()
}

/// Linearly separable 2-class toy: 20 docs, 2 signal words.
fn separable_toy() -> (Vec<TokenizedTweet>, Vec<usize>) {
    let fillers = ["the", "went", "to", "today", "really", "again"];
    let mut docs = Vec::new();
    let mut labels = Vec::new();
    for i in 0..10 {
        let f1 = fillers[i % fillers.len()];
        let f2 = fillers[(i + 2) % fillers.len()];
        docs.push(doc(&[f1, "alpha", f2, "today"]));
        labels.push(0);
        docs.push(doc(&[f2, "bravo", f1, "again"]));
        labels.push(1);
    }
    (docs, labels)
}

fn refs(docs: &[TokenizedTweet]) -> Vec<&TokenizedTweet> {
    docs.iter().collect()
}

fn smoke_config(arch: Arch) -> NeuralConfig {
    NeuralConfig {
        arch,
        size: 8,
        dropout: 0.25,
        activation: Activation::Relu,
        optimizer: OptimizerKind::Adam,
        batch_size: 8,
        learning_rate: 0.01,
        max_len: DEFAULT_MAX_LEN,
        seed: 11,
    }
}

#[test]
fn cnn_conv_param_arithmetic() {
    // size = 50, dim = 300: sum over widths {3,4,5} of (w*300 + 1)*50.
    let mut body = String::new();
    let zeros = vec!["0"; 300].join(" ");
    body.push_str(&format!("x {zeros}\n"));
    let table = parse_embeddings(&body, &PathBuf::from("<dim300>")).unwrap();
    let mut config = smoke_config(Arch::Cnn);
    config.size = 50;
    let model = build_model(config, &table, 2).unwrap();
    assert_eq!(model.conv_param_count(), 180_150);
}

#[test]
fn lstm_recurrent_param_arithmetic() {
    let mut body = String::new();
    let zeros = vec!["0"; 300].join(" ");
    body.push_str(&format!("x {zeros}\n"));
    let table = parse_embeddings(&body, &PathBuf::from("<dim300>")).unwrap();
    let mut config = smoke_config(Arch::Lstm);
    config.size = 75;
    let model = build_model(config, &table, 2).unwrap();
    assert_eq!(model.recurrent_param_count(), 112_800);
}

#[test]
fn bilstm_feature_width_is_twice_size() {
    let table = toy_table();
    let model = build_model(smoke_config(Arch::Bilstm), &table, 2).unwrap();
    assert_eq!(model.feature_dim(), 16);
}

#[test]
fn rejects_single_class() {
    let table = toy_table();
    assert!(matches!(
        build_model(smoke_config(Arch::Cnn), &table, 1),
        Err(Error::InvalidParameter { .. })
    ));
}

fn train_smoke(arch: Arch) {
    let table = toy_table();
    let (docs, labels) = separable_toy();
    let mut model = build_model(smoke_config(arch), &table, 2).unwrap();
    let d = refs(&docs);
    model
        .train(&table, &d, &labels, &d, &labels, 5, 30)
        .unwrap();
    let (classes, rows) = model.predict(&table, &d).unwrap();
    let correct = classes.iter().zip(&labels).filter(|(a, b)| a == b).count();
    assert_eq!(correct, docs.len(), "{arch:?} must fit the separable toy");
    for row in &rows {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn cnn_fits_separable_toy() {
    train_smoke(Arch::Cnn);
}

#[test]
fn lstm_fits_separable_toy() {
    train_smoke(Arch::Lstm);
}

#[test]
fn bilstm_fits_separable_toy() {
    train_smoke(Arch::Bilstm);
}

#[test]
fn zero_patience_stops_at_first_non_improvement() {
    let table = toy_table();
    let (docs, labels) = separable_toy();
    let mut model = build_model(smoke_config(Arch::Cnn), &table, 2).unwrap();
    let d = refs(&docs);
    let history = model
        .train(&table, &d, &labels, &d, &labels, 0, 100)
        .unwrap();
    // Every epoch but the last improved; the last did not.
    for row in &history[..history.len() - 1] {
        assert_eq!(row.val_loss, row.best_val_loss);
    }
    if history.len() < 100 {
        let last = history.last().unwrap();
        assert!(last.val_loss >= last.best_val_loss);
        assert_eq!(last.patience_left, 0);
    }
}

#[test]
fn same_seed_same_loss_curves() {
    let table = toy_table();
    let (docs, labels) = separable_toy();
    let d = refs(&docs);
    let mut m1 = build_model(smoke_config(Arch::Lstm), &table, 2).unwrap();
    let h1 = m1.train(&table, &d, &labels, &d, &labels, 3, 8).unwrap();
    let mut m2 = build_model(smoke_config(Arch::Lstm), &table, 2).unwrap();
    let h2 = m2.train(&table, &d, &labels, &d, &labels, 3, 8).unwrap();
    assert_eq!(h1, h2);
    assert_eq!(m1.get_params(), m2.get_params());
}

#[test]
fn early_stopping_restores_best_weights() {
    let table = toy_table();
    let (docs, labels) = separable_toy();
    // Train on half, validate on the other half so val loss can fluctuate.
    let d = refs(&docs);
    let (train_d, val_d) = d.split_at(10);
    let (train_l, val_l) = labels.split_at(10);
    let mut config = smoke_config(Arch::Cnn);
    config.learning_rate = 0.05;
    let mut model = build_model(config, &table, 2).unwrap();
    let history = model
        .train(&table, train_d, train_l, val_d, val_l, 2, 25)
        .unwrap();
    let min_val = history.iter().map(|h| h.val_loss).fold(f64::INFINITY, f64::min);
    let restored = model.loss(&table, val_d, val_l).unwrap();
    assert!(
        (restored - min_val).abs() < 1e-12,
        "restored weights must replay the best validation loss: {restored} vs {min_val}"
    );
    // best_val_loss is non-increasing over the history.
    for w in history.windows(2) {
        assert!(w[1].best_val_loss <= w[0].best_val_loss);
    }
}

#[test]
fn prediction_is_deterministic_and_dropout_free() {
    let table = toy_table();
    let (docs, labels) = separable_toy();
    let d = refs(&docs);
    let mut model = build_model(smoke_config(Arch::Bilstm), &table, 2).unwrap();
    model.train(&table, &d, &labels, &d, &labels, 3, 5).unwrap();
    let (c1, p1) = model.predict(&table, &d).unwrap();
    let (c2, p2) = model.predict(&table, &d).unwrap();
    assert_eq!(c1, c2);
    assert_eq!(p1, p2, "predict must be bit-identical across calls");
    // Empty batch yields empty outputs.
    let (c0, p0) = model.predict(&table, &[]).unwrap();
    assert!(c0.is_empty() && p0.is_empty());
}

#[test]
fn untrained_model_refuses_to_predict() {
    let table = toy_table();
    let model = build_model(smoke_config(Arch::Cnn), &table, 2).unwrap();
    let binding = [doc(&["alpha"])];
    let d: Vec<&TokenizedTweet> = binding.iter().collect();
    assert!(matches!(model.predict(&table, &d), Err(Error::Untrained)));
}

#[test]
fn one_filter_cnn_gradient_matches_finite_differences() {
    let table = toy_table();
    let mut config = smoke_config(Arch::Cnn);
    config.size = 1;
    config.activation = Activation::Tanh;
    config.seed = 3;
    let mut model = build_model(config, &table, 2).unwrap();
    let two_token = [doc(&["alpha", "went"])];
    let d: Vec<&TokenizedTweet> = two_token.iter().collect();
    let labels = [0usize];

    let (_, analytic) = model.loss_and_gradient(&table, &d, &labels).unwrap();
    let params = model.get_params();
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        let mut p = params.clone();
        p[i] += eps;
        model.set_params(&p);
        let up = model.loss(&table, &d, &labels).unwrap();
        p[i] -= 2.0 * eps;
        model.set_params(&p);
        let down = model.loss(&table, &d, &labels).unwrap();
        let numeric = (up - down) / (2.0 * eps);
        let denom = numeric.abs().max(analytic[i].abs()).max(1e-6);
        worst = worst.max((numeric - analytic[i]).abs() / denom);
    }
    model.set_params(&params);
    assert!(worst < 1e-3, "worst relative gradient error {worst}");
}

#[test]
fn max_len_never_changes_short_documents() {
    let table = toy_table();
    let (docs, labels) = separable_toy();
    let d = refs(&docs);
    for arch in [Arch::Cnn, Arch::Lstm, Arch::Bilstm] {
        let mut small = smoke_config(arch);
        small.max_len = 8;
        let mut large = smoke_config(arch);
        large.max_len = 64;
        let mut m1 = build_model(small, &table, 2).unwrap();
        let mut m2 = build_model(large, &table, 2).unwrap();
        m1.train(&table, &d, &labels, &d, &labels, 3, 5).unwrap();
        m2.train(&table, &d, &labels, &d, &labels, 3, 5).unwrap();
        // All toy docs are 4 tokens, far below both caps: identical runs.
        let (c1, p1) = m1.predict(&table, &d).unwrap();
        let (c2, p2) = m2.predict(&table, &d).unwrap();
        assert_eq!(c1, c2, "{arch:?}");
        assert_eq!(p1, p2, "{arch:?}");
    }
}

#[test]
fn truncation_applies_beyond_max_len() {
    let table = toy_table();
    let (docs, labels) = separable_toy();
    let d = refs(&docs);
    let mut config = smoke_config(Arch::Lstm);
    config.max_len = 2;
    let mut model = build_model(config, &table, 2).unwrap();
    model.train(&table, &d, &labels, &d, &labels, 3, 5).unwrap();
    // Docs identical in their first two tokens predict identically.
    let a = doc(&["the", "alpha", "today", "again"]);
    let b = doc(&["the", "alpha", "really", "went", "bravo"]);
    let (ca, pa) = model.predict(&table, &[&a]).unwrap();
    let (cb, pb) = model.predict(&table, &[&b]).unwrap();
    assert_eq!(ca, cb);
    assert_eq!(pa, pb);
}

#[test]
fn weights_and_history_serialize() {
    let table = toy_table();
    let (docs, labels) = separable_toy();
    let d = refs(&docs);
    let mut model = build_model(smoke_config(Arch::Cnn), &table, 2).unwrap();
    let history = model.train(&table, &d, &labels, &d, &labels, 3, 3).unwrap();
    let hist_json = NeuralModel::history_json(&history);
    assert!(hist_json.contains("train_loss"));
    let weights_json = model.weights_json();
    let v: serde_json::Value = serde_json::from_str(&weights_json).unwrap();
    assert_eq!(v["format_version"], 1);
    assert_eq!(v["params"].as_array().unwrap().len(), model.param_count());
}
