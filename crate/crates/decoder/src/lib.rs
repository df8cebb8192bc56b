//! Greedy and beam-search inference over the transition system.
//!
//! Both decoders score each step with the pointer model and scan targets in
//! descending log-probability. Pointing at the focus means Shift; anything
//! else proposes an Attach, skipped when illegal (duplicate arc or cycle).
//! Shift is always legal before the terminal configuration, so the scan
//! cannot stall. Accumulated scores are log-probabilities renormalized over
//! the legal target set of each step, and ties break toward the lowest
//! position. Labels are assigned per arc after the pointer commits, so they
//! never influence the transition sequence.

mod stats;

pub use stats::{linear_fit, oracle_stats, LinearFit, SentenceStat};

use graph_core::{SemanticGraph, Sentence, ROOT_LABEL};
use scorer::{DecoderState, DecoderStep, Model, ScorerError, ScoringContext};
use thiserror::Error;
use transitions::{Configuration, Transition};

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("beam width must be at least 1")]
    ZeroWidth,
    #[error(transparent)]
    Scorer(#[from] ScorerError),
}

/// A decoded sentence: the graph, the transition sequence that built it, and
/// the accumulated log-probability of that sequence.
#[derive(Debug, Clone)]
pub struct ParseResult {
    pub graph: SemanticGraph,
    pub transitions: Vec<Transition>,
    pub log_prob: f64,
}

/// Decodes one sentence by always taking the best legal target.
pub fn parse_greedy(
    model: &Model,
    sentence: &Sentence,
    external: Option<&[Vec<f64>]>,
) -> Result<ParseResult, DecodeError> {
    let states = model.encode(sentence, external)?;
    let ctx = model.scoring_context(&states);
    let mut state = model.initial_decoder_state();
    let mut config = Configuration::initial(sentence.clone());
    let mut transitions = Vec::new();
    let mut log_prob = 0.0;
    while !config.is_terminal() {
        let focus = config.focus();
        let (step, next) = model.score_step(&ctx, &state, focus, config.last_attached_head());
        let legal = legal_targets(&config);
        let norm = logsumexp(legal.iter().map(|&j| step.log_probs[j]));
        let mut order: Vec<usize> = (0..step.log_probs.len()).collect();
        order.sort_by(|&a, &b| step.log_probs[b].total_cmp(&step.log_probs[a]));
        let target = order
            .into_iter()
            .find(|j| legal.contains(j))
            .expect("Shift keeps the legal set non-empty");
        let transition = build_transition(model, &ctx, &step, focus, target);
        log_prob += step.log_probs[target] - norm;
        config.apply(&transition).expect("scanned target is legal");
        transitions.push(transition);
        state = next;
    }
    Ok(ParseResult {
        graph: config.into_graph(),
        transitions,
        log_prob,
    })
}

struct BeamItem {
    config: Configuration,
    state: DecoderState,
    log_prob: f64,
    transitions: Vec<Transition>,
}

/// Decodes one sentence keeping the `width` best partial sequences. Terminal
/// items are frozen and compete with live expansions on accumulated
/// log-probability. Width 1 reproduces [`parse_greedy`] exactly.
pub fn parse_beam(
    model: &Model,
    sentence: &Sentence,
    external: Option<&[Vec<f64>]>,
    width: usize,
) -> Result<ParseResult, DecodeError> {
    if width == 0 {
        return Err(DecodeError::ZeroWidth);
    }
    let states = model.encode(sentence, external)?;
    let ctx = model.scoring_context(&states);
    let mut beam = vec![BeamItem {
        config: Configuration::initial(sentence.clone()),
        state: model.initial_decoder_state(),
        log_prob: 0.0,
        transitions: Vec::new(),
    }];
    while beam.iter().any(|item| !item.config.is_terminal()) {
        let mut pool = Vec::new();
        for item in beam {
            if item.config.is_terminal() {
                pool.push(item);
                continue;
            }
            let focus = item.config.focus();
            let (step, next) =
                model.score_step(&ctx, &item.state, focus, item.config.last_attached_head());
            let legal = legal_targets(&item.config);
            let norm = logsumexp(legal.iter().map(|&j| step.log_probs[j]));
            for &target in &legal {
                let transition = build_transition(model, &ctx, &step, focus, target);
                let mut config = item.config.clone();
                config
                    .apply(&transition)
                    .expect("target drawn from the legal set");
                let mut transitions = item.transitions.clone();
                transitions.push(transition);
                pool.push(BeamItem {
                    config,
                    state: next.clone(),
                    log_prob: item.log_prob + step.log_probs[target] - norm,
                    transitions,
                });
            }
        }
        // Stable sort; expansions were pushed in ascending target order, so
        // ties keep the lowest position in front.
        pool.sort_by(|a, b| b.log_prob.total_cmp(&a.log_prob));
        pool.truncate(width);
        beam = pool;
    }
    let best = beam.swap_remove(0);
    Ok(ParseResult {
        graph: best.config.into_graph(),
        transitions: best.transitions,
        log_prob: best.log_prob,
    })
}

fn build_transition(
    model: &Model,
    ctx: &ScoringContext,
    step: &DecoderStep,
    focus: usize,
    target: usize,
) -> Transition {
    if target == focus {
        Transition::Shift
    } else {
        Transition::attach(target, pick_label(model, ctx, step, target))
    }
}

/// Legal pointer targets in ascending order. The focus stands for Shift and
/// is always present.
fn legal_targets(config: &Configuration) -> Vec<usize> {
    let n = config.sentence().len();
    let focus = config.focus();
    (0..=n)
        .filter(|&j| j == focus || config.is_legal(&Transition::attach(j, "")))
        .collect()
}

/// Best label for an arc from `head`. ROOT arcs always carry [`ROOT_LABEL`];
/// everywhere else that label is masked out and ties break toward the lowest
/// label id.
fn pick_label(model: &Model, ctx: &ScoringContext, step: &DecoderStep, head: usize) -> String {
    if head == 0 {
        return ROOT_LABEL.to_string();
    }
    let log_probs = model.score_labels(ctx, step, head);
    let root = model.vocab().root_label_id();
    let mut best = usize::MAX;
    let mut best_score = f64::NEG_INFINITY;
    for (id, &score) in log_probs.iter().enumerate() {
        if id != root && score > best_score {
            best = id;
            best_score = score;
        }
    }
    model.vocab().label(best).to_string()
}

fn logsumexp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use graph_core::synth::{generate_corpus, SynthConfig};
    use scorer::{ModelConfig, Vocab};

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

    fn tiny_model(seed: u64) -> Model {
        let corpus = generate_corpus(&SynthConfig {
            sentences: 6,
            min_len: 2,
            max_len: 5,
            arc_ratio: 0.8,
            singleton_share: None,
            seed: 11,
        })
        .unwrap();
        Model::new(tiny_config(), Vocab::from_corpus(&corpus), seed).unwrap()
    }

    fn zeroed_model(seed: u64) -> Model {
        let mut model = tiny_model(seed);
        let zeros = vec![0.0; model.parameter_count()];
        model.set_parameter_vector(&zeros);
        model
    }

    fn sentence(n: usize) -> Sentence {
        let triples: Vec<(String, String, String)> = (1..=n)
            .map(|i| (format!("w{i}"), format!("l{i}"), "N".to_string()))
            .collect();
        let views: Vec<(&str, &str, &str)> = triples
            .iter()
            .map(|(w, l, p)| (w.as_str(), l.as_str(), p.as_str()))
            .collect();
        Sentence::from_triples(&views).unwrap()
    }

    #[test]
    fn zero_beam_width_is_rejected() {
        let model = tiny_model(1);
        let result = parse_beam(&model, &sentence(2), None, 0);
        assert!(matches!(result, Err(DecodeError::ZeroWidth)));
    }

    #[test]
    fn empty_sentence_decodes_to_the_empty_graph() {
        let model = tiny_model(1);
        let empty = Sentence::from_triples(&[]).unwrap();
        for result in [
            parse_greedy(&model, &empty, None).unwrap(),
            parse_beam(&model, &empty, None, 3).unwrap(),
        ] {
            assert_eq!(result.transitions, Vec::<Transition>::new());
            assert_eq!(result.graph.arc_count(), 0);
            assert_eq!(result.log_prob, 0.0);
        }
    }

    // With every parameter at zero each step distribution is uniform, so the
    // lowest-index tie-break walks 0, 1, 2, ... At focus f every position
    // below f is attached before the scan reaches the Shift slot at f, and
    // positions above f are never reached. The output is therefore every
    // left-to-right arc, built in n + n(n+1)/2 transitions, the worst case
    // of the termination bound.
    #[test]
    fn uniform_scores_attach_every_forward_arc() {
        let model = zeroed_model(1);
        let n = 4;
        let result = parse_greedy(&model, &sentence(n), None).unwrap();

        assert_eq!(result.transitions.len(), n + n * (n + 1) / 2);
        let shifts = result
            .transitions
            .iter()
            .filter(|t| matches!(t, Transition::Shift))
            .count();
        assert_eq!(shifts, n);

        for head in 0..=n {
            for dependent in 1..=n {
                if head < dependent {
                    let expected = if head == 0 { ROOT_LABEL } else { "dep" };
                    assert_eq!(result.graph.label(head, dependent), Some(expected));
                } else {
                    assert!(!result.graph.contains_arc(head, dependent));
                }
            }
        }

        // At focus f the k-th pick renormalizes over the n + 1 - k targets
        // that are still legal.
        let mut expected_log_prob = 0.0;
        for f in 1..=n {
            for k in 0..=f {
                expected_log_prob -= ((n + 1 - k) as f64).ln();
            }
        }
        assert!((result.log_prob - expected_log_prob).abs() < 1e-9);
    }

    // Boosting the ROOT label bias makes ROOT the unmasked argmax for every
    // arc, which must leak nowhere: token heads keep the best real label and
    // the pointer sequence is untouched by label parameters.
    #[test]
    fn root_label_never_leaks_onto_token_heads() {
        let baseline = zeroed_model(1);
        let mut model = zeroed_model(1);
        let num_labels = model.vocab().num_labels();
        let root = model.vocab().root_label_id();
        let mut flat = model.parameter_vector();
        let bias_start = flat.len() - num_labels;
        flat[bias_start + root] = 10.0;
        model.set_parameter_vector(&flat);

        let n = 3;
        let states = model.encode(&sentence(n), None).unwrap();
        let ctx = model.scoring_context(&states);
        let (step, _) = model.score_step(&ctx, &model.initial_decoder_state(), 1, None);
        let label_scores = model.score_labels(&ctx, &step, 2);
        let argmax = label_scores
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(argmax, root, "bias boost must land on the ROOT label row");

        let result = parse_greedy(&model, &sentence(n), None).unwrap();
        for (head, _, label) in result.graph.arcs() {
            if head == 0 {
                assert_eq!(label, ROOT_LABEL);
            } else {
                assert_eq!(label, "dep");
            }
        }
        let plain = parse_greedy(&baseline, &sentence(n), None).unwrap();
        assert_eq!(result.transitions.len(), plain.transitions.len());
        let heads = |r: &ParseResult| -> Vec<Option<usize>> {
            r.transitions
                .iter()
                .map(|t| match t {
                    Transition::Shift => None,
                    Transition::Attach { head, .. } => Some(*head),
                })
                .collect()
        };
        assert_eq!(heads(&result), heads(&plain));
    }

    #[test]
    fn decoded_graphs_are_acyclic_with_exactly_n_shifts() {
        for seed in 0..4 {
            let model = tiny_model(seed);
            for n in 1..=5 {
                let result = parse_greedy(&model, &sentence(n), None).unwrap();
                assert!(result.graph.is_acyclic());
                let shifts = result
                    .transitions
                    .iter()
                    .filter(|t| matches!(t, Transition::Shift))
                    .count();
                assert_eq!(shifts, n);
                assert!(result.transitions.len() <= n + n * (n + 1) / 2);
            }
        }
    }
}
