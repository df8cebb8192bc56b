//! Decoding must stay valid under arbitrary parameters, width 1 must match
//! greedy, and on short sentences the beam must find the global optimum.

use decoder::{parse_beam, parse_greedy, ParseResult};
use graph_core::synth::{generate_corpus, SynthConfig};
use graph_core::{SemanticGraph, ROOT_LABEL};
use scorer::{DecoderState, Model, ModelConfig, ScoringContext, Vocab};
use transitions::{Configuration, Transition};

fn tiny_config() -> ModelConfig {
    ModelConfig {
        word_dim: 5,
        lemma_dim: 4,
        pos_dim: 3,
        char_dim: 3,
        cnn_window: 3,
        cnn_filters: 4,
        encoder_layers: 1,
        encoder_size: 6,
        decoder_layers: 1,
        decoder_size: 6,
        arc_mlp_size: 5,
        label_mlp_size: 4,
        ..ModelConfig::default()
    }
}

fn test_corpus() -> Vec<SemanticGraph> {
    generate_corpus(&SynthConfig {
        sentences: 20,
        min_len: 1,
        max_len: 7,
        arc_ratio: 0.9,
        singleton_share: None,
        seed: 23,
    })
    .unwrap()
}

fn random_model(seed: u64) -> Model {
    Model::new(tiny_config(), Vocab::from_corpus(&test_corpus()), seed).unwrap()
}

// Labels are irrelevant to pointer replay, but apply still checks the
// reserved ROOT label, so head 0 has to carry it.
fn skeleton_transition(target: usize, focus: usize) -> Transition {
    if target == focus {
        Transition::Shift
    } else if target == 0 {
        Transition::attach(0, ROOT_LABEL)
    } else {
        Transition::attach(target, "x")
    }
}

fn assert_valid(result: &ParseResult, n: usize) {
    assert!(result.graph.is_acyclic());
    let shifts = result
        .transitions
        .iter()
        .filter(|t| matches!(t, Transition::Shift))
        .count();
    assert_eq!(shifts, n, "decoding ends after exactly n Shifts");
    assert!(result.transitions.len() <= n + n * (n + 1) / 2);
    for (head, _, label) in result.graph.arcs() {
        assert_eq!(label == ROOT_LABEL, head == 0);
    }
    assert!(result.log_prob <= 1e-12);
    assert!(result.log_prob.is_finite());
}

#[test]
fn random_models_always_decode_to_valid_graphs() {
    for seed in 0..6 {
        let model = random_model(seed);
        for graph in &test_corpus() {
            let sentence = graph.sentence();
            let n = sentence.len();
            assert_valid(&parse_greedy(&model, sentence, None).unwrap(), n);
            assert_valid(&parse_beam(&model, sentence, None, 3).unwrap(), n);
        }
    }
}

#[test]
fn beam_of_one_reproduces_greedy() {
    for seed in 0..6 {
        let model = random_model(seed);
        for graph in &test_corpus() {
            let sentence = graph.sentence();
            let greedy = parse_greedy(&model, sentence, None).unwrap();
            let beam = parse_beam(&model, sentence, None, 1).unwrap();
            assert_eq!(beam.transitions, greedy.transitions);
            assert_eq!(
                beam.graph.arcs().collect::<Vec<_>>(),
                greedy.graph.arcs().collect::<Vec<_>>()
            );
            assert!((beam.log_prob - greedy.log_prob).abs() < 1e-12);
        }
    }
}

// Replays the scoring loop with plain argmax-over-legal picks and no label
// machinery. Greedy must produce the same pointer skeleton, and across the
// sweep the unconstrained argmax must actually be illegal somewhere,
// otherwise the fallback rule was never exercised.
#[test]
fn greedy_matches_a_plain_rescoring_loop() {
    let mut fallbacks = 0;
    for seed in 0..6 {
        let model = random_model(seed);
        for graph in &test_corpus() {
            let sentence = graph.sentence();
            let states = model.encode(sentence, None).unwrap();
            let ctx = model.scoring_context(&states);
            let mut state = model.initial_decoder_state();
            let mut config = Configuration::initial(sentence.clone());
            let mut targets = Vec::new();
            while !config.is_terminal() {
                let focus = config.focus();
                let (step, next) =
                    model.score_step(&ctx, &state, focus, config.last_attached_head());
                let legal: Vec<usize> = (0..step.log_probs.len())
                    .filter(|&j| j == focus || config.is_legal(&Transition::attach(j, "x")))
                    .collect();
                let best = |candidates: &[usize]| -> usize {
                    let mut best = candidates[0];
                    for &j in &candidates[1..] {
                        if step.log_probs[j] > step.log_probs[best] {
                            best = j;
                        }
                    }
                    best
                };
                let unconstrained: Vec<usize> = (0..step.log_probs.len()).collect();
                if best(&unconstrained) != best(&legal) {
                    fallbacks += 1;
                }
                let target = best(&legal);
                let transition = skeleton_transition(target, focus);
                config.apply(&transition).unwrap();
                targets.push(target);
                state = next;
            }

            let greedy = parse_greedy(&model, sentence, None).unwrap();
            let skeleton: Vec<usize> = greedy
                .transitions
                .iter()
                .scan(1usize, |focus, t| {
                    Some(match t {
                        Transition::Shift => {
                            let j = *focus;
                            *focus += 1;
                            j
                        }
                        Transition::Attach { head, .. } => *head,
                    })
                })
                .collect();
            assert_eq!(skeleton, targets);
        }
    }
    assert!(fallbacks > 0, "sweep never hit an illegal argmax");
}

struct Candidate {
    targets: Vec<usize>,
    log_prob: f64,
}

fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn enumerate_terminal_sequences(
    model: &Model,
    ctx: &ScoringContext,
    config: &Configuration,
    state: &DecoderState,
    log_prob: f64,
    targets: &mut Vec<usize>,
    out: &mut Vec<Candidate>,
) {
    if config.is_terminal() {
        out.push(Candidate {
            targets: targets.clone(),
            log_prob,
        });
        return;
    }
    let focus = config.focus();
    let (step, next) = model.score_step(ctx, state, focus, config.last_attached_head());
    let legal: Vec<usize> = (0..step.log_probs.len())
        .filter(|&j| j == focus || config.is_legal(&Transition::attach(j, "x")))
        .collect();
    let norm = logsumexp(&legal.iter().map(|&j| step.log_probs[j]).collect::<Vec<_>>());
    for &target in &legal {
        let transition = skeleton_transition(target, focus);
        let mut child = config.clone();
        child.apply(&transition).unwrap();
        targets.push(target);
        enumerate_terminal_sequences(
            model,
            ctx,
            &child,
            &next,
            log_prob + step.log_probs[target] - norm,
            targets,
            out,
        );
        targets.pop();
    }
}

// On a 2-token sentence every terminal sequence can be enumerated. A beam
// wide enough to hold them all must return the global optimum.
#[test]
fn wide_beam_finds_the_global_optimum_on_two_tokens() {
    let corpus = test_corpus();
    let sentence = corpus
        .iter()
        .map(|g| g.sentence())
        .find(|s| s.len() == 2)
        .expect("corpus holds a 2-token sentence");

    for seed in 0..6 {
        let model = random_model(seed);
        let states = model.encode(sentence, None).unwrap();
        let ctx = model.scoring_context(&states);
        let mut all = Vec::new();
        enumerate_terminal_sequences(
            &model,
            &ctx,
            &Configuration::initial(sentence.clone()),
            &model.initial_decoder_state(),
            0.0,
            &mut Vec::new(),
            &mut all,
        );
        assert!(all.len() > 1);
        let best = all
            .iter()
            .max_by(|a, b| a.log_prob.total_cmp(&b.log_prob))
            .unwrap();

        let beam = parse_beam(&model, sentence, None, all.len()).unwrap();
        let skeleton: Vec<usize> = beam
            .transitions
            .iter()
            .scan(1usize, |focus, t| {
                Some(match t {
                    Transition::Shift => {
                        let j = *focus;
                        *focus += 1;
                        j
                    }
                    Transition::Attach { head, .. } => *head,
                })
            })
            .collect();
        assert!((beam.log_prob - best.log_prob).abs() < 1e-9);
        assert_eq!(skeleton, best.targets);
    }
}
