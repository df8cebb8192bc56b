//! Teacher-forced training: Adam over batch-mean gradients with global-norm
//! clipping, singleton UNK replacement, dropout, and a plateau schedule that
//! multiplies the learning rate when a dev metric stops improving. Every run
//! is a pure function of the corpus and the seed.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use graph_core::SemanticGraph;

use crate::error::ScorerError;
use crate::external::{validate_external, ExternalEmbeddings};
use crate::model::{Model, PassNoise};

const ADAM_EPS: f64 = 1e-8;

/// Callback evaluating the current model on held-out data; higher is better.
pub type DevMetric<'a> = &'a mut dyn FnMut(&Model) -> f64;

/// Per-epoch progress hook: (epoch, mean train loss, dev score, learning rate).
pub type EpochHook<'a> = &'a mut dyn FnMut(usize, f64, Option<f64>, f64);

#[derive(Debug, Clone)]
pub struct TrainMetrics {
    pub epoch_losses: Vec<f64>,
    pub dev_scores: Vec<Option<f64>>,
    pub best_dev: Option<f64>,
    pub final_learning_rate: f64,
}

pub fn train(
    model: &mut Model,
    corpus: &[SemanticGraph],
    external: Option<&ExternalEmbeddings>,
    mut dev_metric: Option<DevMetric>,
    mut on_epoch: Option<EpochHook>,
) -> Result<TrainMetrics, ScorerError> {
    if corpus.is_empty() {
        return Err(ScorerError::EmptyCorpus);
    }
    let config = model.config().clone();
    if config.external_dim > 0 {
        let ext = external.ok_or_else(|| {
            ScorerError::External("config reserves external dimensions but none were given".into())
        })?;
        let counts: Vec<usize> = corpus.iter().map(|g| g.n()).collect();
        validate_external(ext, &counts, config.external_dim)?;
    } else if external.is_some() {
        return Err(ScorerError::External(
            "external embeddings given but the config reserves no dimensions for them".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let count = model.parameter_count();
    let mut adam_m = vec![0.0; count];
    let mut adam_v = vec![0.0; count];
    let mut adam_t = 0u32;

    let mut learning_rate = config.learning_rate;
    let mut best_dev: Option<f64> = None;
    let mut best_params: Option<Vec<f64>> = None;
    let mut stall = 0usize;

    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut dev_scores = Vec::with_capacity(config.epochs);
    let mut indices: Vec<usize> = (0..corpus.len()).collect();

    for epoch in 1..=config.epochs {
        indices.shuffle(&mut rng);
        let mut epoch_loss = 0.0;

        for batch in indices.chunks(config.batch_size) {
            let mut grads = model.params.zeros_like();
            let mut batch_loss = 0.0;
            for &i in batch {
                let graph = &corpus[i];
                let noise = PassNoise::sample(&config, model.vocab(), graph.sentence(), &mut rng);
                let ext = external.map(|e| e[i].as_slice());
                batch_loss += model.sentence_gradients(graph, ext, Some(&noise), &mut grads)?;
            }
            grads.scale(1.0 / batch.len() as f64);
            epoch_loss += batch_loss;

            let norm = grads.global_norm();
            if !batch_loss.is_finite() || !norm.is_finite() {
                return Err(ScorerError::NonFinite { epoch });
            }
            if norm > config.gradient_clip {
                grads.scale(config.gradient_clip / norm);
            }

            adam_t += 1;
            let g = grads.flatten();
            let mut theta = model.parameter_vector();
            let m_corr = 1.0 - config.beta1.powi(adam_t as i32);
            let v_corr = 1.0 - config.beta2.powi(adam_t as i32);
            for k in 0..count {
                adam_m[k] = config.beta1 * adam_m[k] + (1.0 - config.beta1) * g[k];
                adam_v[k] = config.beta2 * adam_v[k] + (1.0 - config.beta2) * g[k] * g[k];
                let m_hat = adam_m[k] / m_corr;
                let v_hat = adam_v[k] / v_corr;
                theta[k] -= learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPS);
            }
            model.set_parameter_vector(&theta);
        }

        let mean_loss = epoch_loss / corpus.len() as f64;
        epoch_losses.push(mean_loss);

        let dev = dev_metric.as_mut().map(|f| f(model));
        dev_scores.push(dev);
        if let Some(score) = dev {
            if !score.is_finite() {
                return Err(ScorerError::NonFinite { epoch });
            }
            if best_dev.map_or(true, |b| score > b) {
                best_dev = Some(score);
                best_params = Some(model.parameter_vector());
                stall = 0;
            } else {
                stall += 1;
                if stall >= config.decay_patience {
                    learning_rate *= config.decay_rate;
                    stall = 0;
                }
            }
        }

        if let Some(hook) = on_epoch.as_mut() {
            hook(epoch, mean_loss, dev, learning_rate);
        }
    }

    if let Some(best) = best_params {
        model.set_parameter_vector(&best);
    }

    Ok(TrainMetrics {
        epoch_losses,
        dev_scores,
        best_dev,
        final_learning_rate: learning_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ModelConfig;
    use crate::vocab::Vocab;
    use graph_core::{Arc, Sentence, ROOT_LABEL};

    fn corpus() -> Vec<SemanticGraph> {
        let mut graphs = Vec::new();
        for (a, b) in [("cats", "sleep"), ("dogs", "bark"), ("cats", "bark")] {
            let s = Sentence::from_triples(&[(a, a, "N"), (b, b, "V")]).unwrap();
            let mut g = SemanticGraph::new(s);
            g.add_arc(Arc::new(0, 2, ROOT_LABEL).unwrap()).unwrap();
            g.add_arc(Arc::new(2, 1, "arg").unwrap()).unwrap();
            graphs.push(g);
        }
        graphs
    }

    fn small_config(lr: f64, epochs: usize) -> ModelConfig {
        ModelConfig {
            word_dim: 4,
            lemma_dim: 4,
            pos_dim: 2,
            char_dim: 2,
            cnn_filters: 3,
            encoder_layers: 1,
            encoder_size: 6,
            decoder_layers: 1,
            decoder_size: 8,
            arc_mlp_size: 6,
            label_mlp_size: 4,
            learning_rate: lr,
            batch_size: 2,
            epochs,
            seed: 5,
            ..ModelConfig::default()
        }
    }

    fn fresh_model(config: &ModelConfig, graphs: &[SemanticGraph]) -> Model {
        let vocab = Vocab::from_corpus(graphs);
        Model::new(config.clone(), vocab, 21).unwrap()
    }

    #[test]
    fn zero_learning_rate_leaves_parameters_bit_identical() {
        let graphs = corpus();
        let config = small_config(0.0, 3);
        let mut model = fresh_model(&config, &graphs);
        let before = model.parameter_vector();
        train(&mut model, &graphs, None, None, None).unwrap();
        assert_eq!(before, model.parameter_vector());
    }

    #[test]
    fn loss_trajectory_is_bitwise_deterministic() {
        let graphs = corpus();
        let config = small_config(0.01, 5);
        let mut a = fresh_model(&config, &graphs);
        let mut b = fresh_model(&config, &graphs);
        let ma = train(&mut a, &graphs, None, None, None).unwrap();
        let mb = train(&mut b, &graphs, None, None, None).unwrap();
        assert_eq!(ma.epoch_losses, mb.epoch_losses);
        assert_eq!(a.parameter_vector(), b.parameter_vector());
    }

    #[test]
    fn loss_drops_on_a_tiny_corpus() {
        let graphs = corpus();
        let config = small_config(0.01, 10);
        let mut model = fresh_model(&config, &graphs);
        let metrics = train(&mut model, &graphs, None, None, None).unwrap();
        let first = metrics.epoch_losses[0];
        let last = *metrics.epoch_losses.last().unwrap();
        assert!(
            last < first * 0.7,
            "loss failed to drop: first {first}, last {last}"
        );
    }

    #[test]
    fn plateau_decays_learning_rate_and_restores_best() {
        let graphs = corpus();
        let config = ModelConfig {
            decay_patience: 2,
            decay_rate: 0.5,
            ..small_config(0.01, 6)
        };
        let mut model = fresh_model(&config, &graphs);
        // A dev metric that only ever gets worse forces decay at epochs 3 and 5
        // (patience resets after each cut) and pins the best model at epoch 1.
        let mut score = 1.0;
        let mut dev = |_: &Model| {
            score -= 0.1;
            score
        };
        let metrics = train(&mut model, &graphs, None, Some(&mut dev), None).unwrap();
        assert!((metrics.final_learning_rate - 0.01 * 0.25).abs() < 1e-12);
        assert!((metrics.best_dev.unwrap() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let graphs = corpus();
        let config = small_config(0.01, 1);
        let mut model = fresh_model(&config, &graphs);
        assert!(matches!(
            train(&mut model, &[], None, None, None),
            Err(ScorerError::EmptyCorpus)
        ));
    }

    #[test]
    fn epoch_hook_sees_every_epoch() {
        let graphs = corpus();
        let config = small_config(0.01, 4);
        let mut model = fresh_model(&config, &graphs);
        let mut seen = Vec::new();
        let mut hook = |epoch: usize, loss: f64, _dev: Option<f64>, lr: f64| {
            seen.push((epoch, loss.is_finite(), lr));
        };
        train(&mut model, &graphs, None, None, Some(&mut hook)).unwrap();
        assert_eq!(seen.len(), 4);
        assert_eq!(seen[0].0, 1);
        assert!(seen.iter().all(|(_, finite, _)| *finite));
    }

    #[test]
    fn external_embedding_bookkeeping_is_enforced() {
        let graphs = corpus();
        let config = small_config(0.01, 1);
        let mut model = fresh_model(&config, &graphs);
        let ext: ExternalEmbeddings = vec![vec![vec![0.0; 2]; 2]; 3];
        assert!(matches!(
            train(&mut model, &graphs, Some(&ext), None, None),
            Err(ScorerError::External(_))
        ));

        let config = ModelConfig {
            external_dim: 2,
            ..small_config(0.01, 1)
        };
        let mut model = fresh_model(&config, &graphs);
        assert!(matches!(
            train(&mut model, &graphs, None, None, None),
            Err(ScorerError::External(_))
        ));
        train(&mut model, &graphs, Some(&ext), None, None).unwrap();
    }
}
