//! Public-API checks: distribution shape, the zero-parameter fixed point,
//! early-training behavior on a small corpus, and checkpoint fidelity.

use graph_core::synth::{generate_corpus, SynthConfig};
use graph_core::{SemanticGraph, Sentence};
use scorer::{train, Model, ModelConfig, Vocab};

fn corpus() -> Vec<SemanticGraph> {
    generate_corpus(&SynthConfig {
        sentences: 8,
        min_len: 3,
        max_len: 6,
        arc_ratio: 0.8,
        singleton_share: None,
        seed: 42,
    })
    .unwrap()
}

#[test]
fn pointer_distributions_normalize_at_every_step() {
    let graphs = corpus();
    let vocab = Vocab::from_corpus(&graphs);
    let model = Model::new(ModelConfig::default(), vocab, 9).unwrap();
    for g in &graphs {
        let enc = model.encode(g.sentence(), None).unwrap();
        let ctx = model.scoring_context(&enc);
        let mut state = model.initial_decoder_state();
        for focus in 1..=g.n() {
            let (step, next) = model.score_step(&ctx, &state, focus, None);
            assert_eq!(step.probs.len(), g.n() + 1);
            assert!((step.probs.sum() - 1.0).abs() < 1e-6);
            assert!(step.probs.iter().all(|&p| p >= 0.0));
            assert_eq!(step.log_probs.len(), step.probs.len());
            state = next;
        }
    }
}

#[test]
fn zero_parameters_hit_the_recurrence_fixed_point() {
    // With every weight at zero each gate input is zero, so both recurrence
    // directions keep h = c = 0 and the lone token's state is exactly zero.
    let sentence = Sentence::from_triples(&[("word", "word", "N")]).unwrap();
    let graphs = vec![SemanticGraph::new(sentence.clone())];
    let vocab = Vocab::from_corpus(&graphs);
    let mut model = Model::new(ModelConfig::default(), vocab, 9).unwrap();
    model.set_parameter_vector(&vec![0.0; model.parameter_count()]);
    let enc = model.encode(&sentence, None).unwrap();
    assert_eq!(enc.n(), 1);
    assert!(enc.state(0).iter().all(|&v| v == 0.0));
    assert!(enc.state(1).iter().all(|&v| v == 0.0));
}

#[test]
fn training_loss_strictly_decreases_over_first_ten_epochs() {
    let graphs = corpus();
    let vocab = Vocab::from_corpus(&graphs);
    let config = ModelConfig {
        epochs: 10,
        ..ModelConfig::default()
    };
    let mut model = Model::new(config, vocab, 9).unwrap();
    let metrics = train(&mut model, &graphs, None, None, None).unwrap();
    assert_eq!(metrics.epoch_losses.len(), 10);
    for pair in metrics.epoch_losses.windows(2) {
        assert!(
            pair[1] < pair[0],
            "epoch loss rose from {} to {}",
            pair[0],
            pair[1]
        );
    }
}

#[test]
fn checkpoints_preserve_scoring_behavior() {
    let graphs = corpus();
    let vocab = Vocab::from_corpus(&graphs);
    let config = ModelConfig {
        epochs: 3,
        ..ModelConfig::default()
    };
    let mut model = Model::new(config, vocab, 9).unwrap();
    train(&mut model, &graphs, None, None, None).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    model.save(&path).unwrap();
    let loaded = Model::load(&path).unwrap();

    for g in &graphs {
        assert_eq!(
            model.sentence_loss(g, None).unwrap(),
            loaded.sentence_loss(g, None).unwrap()
        );
    }
    let g = &graphs[0];
    let enc = model.encode(g.sentence(), None).unwrap();
    let ctx = model.scoring_context(&enc);
    let (step, _) = model.score_step(&ctx, &model.initial_decoder_state(), 1, None);
    let enc2 = loaded.encode(g.sentence(), None).unwrap();
    let ctx2 = loaded.scoring_context(&enc2);
    let (step2, _) = loaded.score_step(&ctx2, &loaded.initial_decoder_state(), 1, None);
    assert_eq!(step.scores, step2.scores);
}
