//! The pointer model itself: a character CNN plus embedding concatenation,
//! a bidirectional LSTM encoder with a learned ROOT state prepended, an LSTM
//! decoder running once per pointer action, and biaffine scorers for arcs and
//! labels. Forward and backward passes are written out by hand; the gradient
//! of every parameter is checked against finite differences in the tests.
//!
//! Scoring convention for a sentence of n tokens: positions 0..=n index the
//! encoder states, position 0 being ROOT. At focus word i the pointer scores
//! all n+1 positions; emitting i itself means Shift, anything else means
//! attach that head.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use ndarray::{Array1, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use graph_core::{SemanticGraph, Sentence};

use crate::config::ModelConfig;
use crate::error::ScorerError;
use crate::layers::{
    char_cnn_backward, char_cnn_forward, log_softmax, lstm_step, lstm_step_backward, mlp_backward,
    mlp_forward, CharCnnCache, LstmStepCache, MlpCache,
};
use crate::layers::add_outer;
use crate::params::Parameters;
use crate::vocab::Vocab;

#[derive(Debug, Clone)]
pub struct Model {
    config: ModelConfig,
    vocab: Vocab,
    pub(crate) params: Parameters,
}

/// Encoder outputs h_0..h_n; h_0 is the learned ROOT state.
#[derive(Debug, Clone)]
pub struct EncoderStates {
    pub(crate) states: Vec<Array1<f64>>,
}

impl EncoderStates {
    pub fn n(&self) -> usize {
        self.states.len() - 1
    }

    pub fn state(&self, position: usize) -> &Array1<f64> {
        &self.states[position]
    }
}

/// Hidden and cell state of each decoder layer. Cheap to clone, which beam
/// search relies on.
#[derive(Debug, Clone)]
pub struct DecoderState {
    h: Vec<Array1<f64>>,
    c: Vec<Array1<f64>>,
}

/// One scored pointer step: raw biaffine scores and their softmax over the
/// n+1 positions.
#[derive(Debug, Clone)]
pub struct DecoderStep {
    pub scores: Array1<f64>,
    pub log_probs: Array1<f64>,
    pub probs: Array1<f64>,
    s: Array1<f64>,
}

/// Per-sentence precomputation: the encoder-side MLP images of every state
/// and their products with the biaffine weights, so each decoder step costs
/// O(n) dot products.
pub struct ScoringContext {
    states: Vec<Array1<f64>>,
    f2: Vec<MlpCache>,
    g2: Vec<MlpCache>,
    /// arc_w · f2_j per position.
    w_f2: Vec<Array1<f64>>,
    /// arc_v · f2_j + arc_b per position.
    enc_score: Vec<f64>,
    /// Row l = label_w[l] · g2_j, shape (labels, label_mlp).
    wl_g2: Vec<ndarray::Array2<f64>>,
    /// label_v · g2_j + label_b per position, length labels.
    enc_label: Vec<Array1<f64>>,
}

impl ScoringContext {
    pub fn n(&self) -> usize {
        self.states.len() - 1
    }
}

/// Training-time noise, fixed per sentence pass so the backward pass and any
/// finite-difference probe see the same function.
pub(crate) struct PassNoise {
    pub word_unk: Vec<bool>,
    pub lemma_unk: Vec<bool>,
    pub input_masks: Vec<Array1<f64>>,
    /// [layer][token] masks over encoder layer outputs.
    pub encoder_masks: Vec<Vec<Array1<f64>>>,
    /// One mask over the decoder output, shared by all steps.
    pub decoder_mask: Array1<f64>,
}

impl PassNoise {
    pub(crate) fn sample(
        config: &ModelConfig,
        vocab: &Vocab,
        sentence: &Sentence,
        rng: &mut impl Rng,
    ) -> PassNoise {
        let n = sentence.len();
        let mask = |dim: usize, p: f64, rng: &mut dyn rand::RngCore| -> Array1<f64> {
            if p == 0.0 {
                Array1::ones(dim)
            } else {
                Array1::from_shape_simple_fn(dim, || {
                    if rng.random_bool(p) {
                        0.0
                    } else {
                        1.0 / (1.0 - p)
                    }
                })
            }
        };
        let word_unk = sentence
            .tokens()
            .iter()
            .map(|t| {
                vocab.is_word_singleton(vocab.word_id(t.form()))
                    && config.unk_replace_prob > 0.0
                    && rng.random_bool(config.unk_replace_prob)
            })
            .collect();
        let lemma_unk = sentence
            .tokens()
            .iter()
            .map(|t| {
                vocab.is_lemma_singleton(vocab.lemma_id(t.lemma()))
                    && config.unk_replace_prob > 0.0
                    && rng.random_bool(config.unk_replace_prob)
            })
            .collect();
        let input_masks = (0..n)
            .map(|_| mask(config.input_dim(), config.embedding_dropout, rng))
            .collect();
        let encoder_masks = (0..config.encoder_layers)
            .map(|_| {
                (0..n)
                    .map(|_| mask(config.state_dim(), config.lstm_dropout, rng))
                    .collect()
            })
            .collect();
        let decoder_mask = mask(config.decoder_size, config.lstm_dropout, rng);
        PassNoise {
            word_unk,
            lemma_unk,
            input_masks,
            encoder_masks,
            decoder_mask,
        }
    }
}

pub(crate) struct EncodeTrace {
    word_ids: Vec<usize>,
    lemma_ids: Vec<usize>,
    pos_ids: Vec<usize>,
    char_caches: Vec<CharCnnCache>,
    layers: Vec<EncLayerTrace>,
    pub(crate) states: Vec<Array1<f64>>,
}

struct EncLayerTrace {
    fwd: Vec<LstmStepCache>,
    /// Indexed by token position; the scan ran right to left.
    bwd: Vec<LstmStepCache>,
}

struct StepForward {
    dec_caches: Vec<LstmStepCache>,
    s: Array1<f64>,
    f1: MlpCache,
    scores: Array1<f64>,
    new_state: DecoderState,
}

struct StepTrace {
    focus: usize,
    last_head: Option<usize>,
    target: usize,
    label: Option<usize>,
    dec_caches: Vec<LstmStepCache>,
    f1: MlpCache,
    probs: Array1<f64>,
    g1: Option<MlpCache>,
    label_probs: Option<Array1<f64>>,
}

struct TeacherStep {
    focus: usize,
    last_head: Option<usize>,
    target: usize,
    label: Option<usize>,
}

pub(crate) struct Trace {
    enc: EncodeTrace,
    ctx: ScoringContext,
    steps: Vec<StepTrace>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointData {
    config: ModelConfig,
    vocab: Vocab,
    params: Parameters,
}

impl Model {
    pub fn new(config: ModelConfig, vocab: Vocab, seed: u64) -> Result<Model, ScorerError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = Parameters::init(&config, &vocab, &mut rng);
        Ok(Model {
            config,
            vocab,
            params,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn parameter_count(&self) -> usize {
        self.params.count()
    }

    pub fn parameter_vector(&self) -> Vec<f64> {
        self.params.flatten()
    }

    pub fn set_parameter_vector(&mut self, flat: &[f64]) {
        self.params.assign_from_flat(flat);
    }

    pub fn save(&self, path: &Path) -> Result<(), ScorerError> {
        let file = File::create(path)?;
        let data = CheckpointData {
            config: self.config.clone(),
            vocab: self.vocab.clone(),
            params: self.params.clone(),
        };
        serde_json::to_writer(BufWriter::new(file), &data)
            .map_err(|e| ScorerError::Checkpoint(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Model, ScorerError> {
        let file = File::open(path)?;
        let data: CheckpointData = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| ScorerError::Checkpoint(e.to_string()))?;
        data.config.validate()?;
        let expected = Parameters::init(&data.config, &data.vocab, &mut ChaCha8Rng::seed_from_u64(0));
        if expected.shape_signature() != data.params.shape_signature() {
            return Err(ScorerError::Checkpoint(
                "stored parameter shapes do not match the stored config and vocabulary".into(),
            ));
        }
        Ok(Model {
            config: data.config,
            vocab: data.vocab,
            params: data.params,
        })
    }

    /// Runs the encoder. `external` must be given iff the config reserves
    /// external dimensions, one vector per token.
    pub fn encode(
        &self,
        sentence: &Sentence,
        external: Option<&[Vec<f64>]>,
    ) -> Result<EncoderStates, ScorerError> {
        let trace = self.encode_internal(sentence, external, None)?;
        Ok(EncoderStates {
            states: trace.states,
        })
    }

    pub fn scoring_context(&self, states: &EncoderStates) -> ScoringContext {
        self.context_from_states(&states.states)
    }

    pub fn initial_decoder_state(&self) -> DecoderState {
        DecoderState {
            h: (0..self.config.decoder_layers)
                .map(|_| Array1::zeros(self.config.decoder_size))
                .collect(),
            c: (0..self.config.decoder_layers)
                .map(|_| Array1::zeros(self.config.decoder_size))
                .collect(),
        }
    }

    /// Scores one pointer step at `focus` and advances the decoder. The
    /// returned step holds probabilities over positions 0..=n.
    pub fn score_step(
        &self,
        ctx: &ScoringContext,
        state: &DecoderState,
        focus: usize,
        last_head: Option<usize>,
    ) -> (DecoderStep, DecoderState) {
        let sf = self.step_forward(ctx, state, focus, last_head, None);
        let (log_probs, probs) = log_softmax(&sf.scores);
        (
            DecoderStep {
                scores: sf.scores,
                log_probs,
                probs,
                s: sf.s,
            },
            sf.new_state,
        )
    }

    /// Log-probabilities over labels for attaching `head` at the step that
    /// produced `step`.
    pub fn score_labels(
        &self,
        ctx: &ScoringContext,
        step: &DecoderStep,
        head: usize,
    ) -> Array1<f64> {
        let g1 = mlp_forward(&self.params.label_mlp_dec, &step.s);
        let scores = self.label_scores(ctx, head, &g1.y);
        log_softmax(&scores).0
    }

    /// Teacher-forced joint loss: pointer cross-entropy at every oracle step
    /// plus label cross-entropy at every attach.
    pub fn sentence_loss(
        &self,
        graph: &SemanticGraph,
        external: Option<&[Vec<f64>]>,
    ) -> Result<f64, ScorerError> {
        Ok(self.forward_teacher(graph, external, None)?.0)
    }

    /// Loss plus the full analytic gradient in `parameter_vector` order.
    pub fn loss_and_gradients(
        &self,
        graph: &SemanticGraph,
        external: Option<&[Vec<f64>]>,
    ) -> Result<(f64, Vec<f64>), ScorerError> {
        let mut grads = self.params.zeros_like();
        let loss = self.sentence_gradients(graph, external, None, &mut grads)?;
        Ok((loss, grads.flatten()))
    }

    pub(crate) fn sentence_gradients(
        &self,
        graph: &SemanticGraph,
        external: Option<&[Vec<f64>]>,
        noise: Option<&PassNoise>,
        grads: &mut Parameters,
    ) -> Result<f64, ScorerError> {
        let (loss, trace) = self.forward_teacher(graph, external, noise)?;
        self.backward(&trace, noise, grads);
        Ok(loss)
    }

    fn teacher_steps(&self, graph: &SemanticGraph) -> Result<Vec<TeacherStep>, ScorerError> {
        let n = graph.n();
        let mut steps = Vec::with_capacity(n + graph.arc_count());
        for focus in 1..=n {
            let mut last = None;
            for head in graph.heads_of(focus) {
                let label = graph.label(head, focus).expect("arc present");
                let id = self
                    .vocab
                    .label_id(label)
                    .ok_or_else(|| ScorerError::UnknownLabel(label.to_string()))?;
                steps.push(TeacherStep {
                    focus,
                    last_head: last,
                    target: head,
                    label: Some(id),
                });
                last = Some(head);
            }
            steps.push(TeacherStep {
                focus,
                last_head: last,
                target: focus,
                label: None,
            });
        }
        Ok(steps)
    }

    fn forward_teacher(
        &self,
        graph: &SemanticGraph,
        external: Option<&[Vec<f64>]>,
        noise: Option<&PassNoise>,
    ) -> Result<(f64, Trace), ScorerError> {
        if !graph.is_acyclic() {
            return Err(ScorerError::CyclicGold);
        }
        let enc = self.encode_internal(graph.sentence(), external, noise)?;
        let ctx = self.context_from_states(&enc.states);
        let teacher = self.teacher_steps(graph)?;

        let mut state = self.initial_decoder_state();
        let mut loss = 0.0;
        let mut steps = Vec::with_capacity(teacher.len());
        for ts in teacher {
            let sf = self.step_forward(
                &ctx,
                &state,
                ts.focus,
                ts.last_head,
                noise.map(|z| &z.decoder_mask),
            );
            let (log_probs, probs) = log_softmax(&sf.scores);
            loss -= log_probs[ts.target];

            let (g1, label_probs) = if let Some(gold_label) = ts.label {
                let g1 = mlp_forward(&self.params.label_mlp_dec, &sf.s);
                let scores = self.label_scores(&ctx, ts.target, &g1.y);
                let (l_log, l_probs) = log_softmax(&scores);
                loss -= l_log[gold_label];
                (Some(g1), Some(l_probs))
            } else {
                (None, None)
            };

            steps.push(StepTrace {
                focus: ts.focus,
                last_head: ts.last_head,
                target: ts.target,
                label: ts.label,
                dec_caches: sf.dec_caches,
                f1: sf.f1,
                probs,
                g1,
                label_probs,
            });
            state = sf.new_state;
        }
        Ok((loss, Trace { enc, ctx, steps }))
    }

    fn label_scores(&self, ctx: &ScoringContext, head: usize, g1y: &Array1<f64>) -> Array1<f64> {
        let mut scores = ctx.enc_label[head].clone();
        scores += &ctx.wl_g2[head].dot(g1y);
        scores += &self.params.label_u.dot(g1y);
        scores
    }

    fn step_forward(
        &self,
        ctx: &ScoringContext,
        state: &DecoderState,
        focus: usize,
        last_head: Option<usize>,
        decoder_mask: Option<&Array1<f64>>,
    ) -> StepForward {
        let mut r = ctx.states[focus].clone();
        if let Some(h) = last_head {
            r += &ctx.states[h];
        }

        let mut dec_caches = Vec::with_capacity(self.config.decoder_layers);
        let mut new_state = DecoderState {
            h: Vec::with_capacity(self.config.decoder_layers),
            c: Vec::with_capacity(self.config.decoder_layers),
        };
        let mut x = r;
        for (li, lp) in self.params.decoder.iter().enumerate() {
            let cache = lstm_step(lp, &x, &state.h[li], &state.c[li]);
            x = cache.h.clone();
            new_state.h.push(cache.h.clone());
            new_state.c.push(cache.c.clone());
            dec_caches.push(cache);
        }
        let s = match decoder_mask {
            Some(mask) => &x * mask,
            None => x,
        };

        let f1 = mlp_forward(&self.params.arc_mlp_dec, &s);
        let u_f1 = self.params.arc_u.dot(&f1.y);
        let positions = ctx.states.len();
        let mut scores = Array1::zeros(positions);
        for j in 0..positions {
            scores[j] = f1.y.dot(&ctx.w_f2[j]) + u_f1 + ctx.enc_score[j];
        }

        StepForward {
            dec_caches,
            s,
            f1,
            scores,
            new_state,
        }
    }

    fn context_from_states(&self, states: &[Array1<f64>]) -> ScoringContext {
        let labels = self.vocab.num_labels();
        let mut f2 = Vec::with_capacity(states.len());
        let mut g2 = Vec::with_capacity(states.len());
        let mut w_f2 = Vec::with_capacity(states.len());
        let mut enc_score = Vec::with_capacity(states.len());
        let mut wl_g2 = Vec::with_capacity(states.len());
        let mut enc_label = Vec::with_capacity(states.len());
        for state in states {
            let fc = mlp_forward(&self.params.arc_mlp_enc, state);
            let gc = mlp_forward(&self.params.label_mlp_enc, state);
            w_f2.push(self.params.arc_w.dot(&fc.y));
            enc_score.push(self.params.arc_v.dot(&fc.y) + self.params.arc_b[0]);
            let mut m = ndarray::Array2::zeros((labels, self.config.label_mlp_size));
            for l in 0..labels {
                m.row_mut(l)
                    .assign(&self.params.label_w.index_axis(Axis(0), l).dot(&gc.y));
            }
            wl_g2.push(m);
            enc_label.push(self.params.label_v.dot(&gc.y) + &self.params.label_b);
            f2.push(fc);
            g2.push(gc);
        }
        ScoringContext {
            states: states.to_vec(),
            f2,
            g2,
            w_f2,
            enc_score,
            wl_g2,
            enc_label,
        }
    }

    fn encode_internal(
        &self,
        sentence: &Sentence,
        external: Option<&[Vec<f64>]>,
        noise: Option<&PassNoise>,
    ) -> Result<EncodeTrace, ScorerError> {
        let n = sentence.len();
        let cfg = &self.config;

        let ext = if cfg.external_dim > 0 {
            let ext = external.ok_or_else(|| {
                ScorerError::External("model expects external embeddings but none were given".into())
            })?;
            if ext.len() != n {
                return Err(ScorerError::External(format!(
                    "{} external vectors for {n} tokens",
                    ext.len()
                )));
            }
            for v in ext {
                if v.len() != cfg.external_dim {
                    return Err(ScorerError::External(format!(
                        "external vector of width {} where config expects {}",
                        v.len(),
                        cfg.external_dim
                    )));
                }
            }
            Some(ext)
        } else {
            if external.is_some() {
                return Err(ScorerError::External(
                    "model was built without external embeddings".into(),
                ));
            }
            None
        };

        let mut word_ids = Vec::with_capacity(n);
        let mut lemma_ids = Vec::with_capacity(n);
        let mut pos_ids = Vec::with_capacity(n);
        let mut char_caches = Vec::with_capacity(n);
        let mut inputs = Vec::with_capacity(n);
        for (t, token) in sentence.tokens().iter().enumerate() {
            let mut wid = self.vocab.word_id(token.form());
            let mut lid = self.vocab.lemma_id(token.lemma());
            if let Some(z) = noise {
                if z.word_unk[t] {
                    wid = crate::vocab::UNK;
                }
                if z.lemma_unk[t] {
                    lid = crate::vocab::UNK;
                }
            }
            let pid = self.vocab.pos_id(token.pos());
            let chars: Vec<usize> = token.characters().map(|c| self.vocab.char_id(c)).collect();
            let cc = char_cnn_forward(
                &self.params.char_emb,
                &self.params.char_conv_w,
                &self.params.char_conv_b,
                &chars,
                cfg.cnn_window,
            );

            let mut x = Array1::zeros(cfg.input_dim());
            let mut off = 0;
            x.slice_mut(ndarray::s![off..off + cfg.cnn_filters])
                .assign(&cc.out);
            off += cfg.cnn_filters;
            x.slice_mut(ndarray::s![off..off + cfg.word_dim])
                .assign(&self.params.word_emb.row(wid));
            off += cfg.word_dim;
            x.slice_mut(ndarray::s![off..off + cfg.lemma_dim])
                .assign(&self.params.lemma_emb.row(lid));
            off += cfg.lemma_dim;
            x.slice_mut(ndarray::s![off..off + cfg.pos_dim])
                .assign(&self.params.pos_emb.row(pid));
            off += cfg.pos_dim;
            if let Some(ext) = ext {
                x.slice_mut(ndarray::s![off..off + cfg.external_dim])
                    .assign(&ndarray::ArrayView1::from(&ext[t][..]));
            }
            if let Some(z) = noise {
                x *= &z.input_masks[t];
            }

            word_ids.push(wid);
            lemma_ids.push(lid);
            pos_ids.push(pid);
            char_caches.push(cc);
            inputs.push(x);
        }

        let hidden = cfg.encoder_size;
        let mut seq = inputs;
        let mut layers = Vec::with_capacity(cfg.encoder_layers);
        for (li, lp) in self.params.encoder.iter().enumerate() {
            let mut fwd = Vec::with_capacity(n);
            let mut h = Array1::zeros(hidden);
            let mut c = Array1::zeros(hidden);
            for x in seq.iter() {
                let cache = lstm_step(&lp.fwd, x, &h, &c);
                h = cache.h.clone();
                c = cache.c.clone();
                fwd.push(cache);
            }
            let mut bwd_rev = Vec::with_capacity(n);
            h = Array1::zeros(hidden);
            c = Array1::zeros(hidden);
            for x in seq.iter().rev() {
                let cache = lstm_step(&lp.bwd, x, &h, &c);
                h = cache.h.clone();
                c = cache.c.clone();
                bwd_rev.push(cache);
            }
            bwd_rev.reverse();
            let bwd = bwd_rev;

            let mut outputs = Vec::with_capacity(n);
            for t in 0..n {
                let mut out = Array1::zeros(2 * hidden);
                out.slice_mut(ndarray::s![0..hidden]).assign(&fwd[t].h);
                out.slice_mut(ndarray::s![hidden..]).assign(&bwd[t].h);
                if let Some(z) = noise {
                    out *= &z.encoder_masks[li][t];
                }
                outputs.push(out);
            }
            layers.push(EncLayerTrace { fwd, bwd });
            seq = outputs;
        }

        let mut states = Vec::with_capacity(n + 1);
        states.push(self.params.root_state.clone());
        states.extend(seq);

        Ok(EncodeTrace {
            word_ids,
            lemma_ids,
            pos_ids,
            char_caches,
            layers,
            states,
        })
    }

    fn backward(&self, trace: &Trace, noise: Option<&PassNoise>, grads: &mut Parameters) {
        let cfg = &self.config;
        let positions = trace.ctx.states.len();
        let n = positions - 1;
        let arc_dim = cfg.arc_mlp_size;
        let lab_dim = cfg.label_mlp_size;
        let labels = self.vocab.num_labels();

        let mut d_states: Vec<Array1<f64>> = (0..positions)
            .map(|_| Array1::zeros(cfg.state_dim()))
            .collect();
        let mut d_f2: Vec<Array1<f64>> = (0..positions).map(|_| Array1::zeros(arc_dim)).collect();
        let mut d_g2: Vec<Array1<f64>> = (0..positions).map(|_| Array1::zeros(lab_dim)).collect();

        let mut carry_h: Vec<Array1<f64>> = (0..cfg.decoder_layers)
            .map(|_| Array1::zeros(cfg.decoder_size))
            .collect();
        let mut carry_c = carry_h.clone();

        for st in trace.steps.iter().rev() {
            // Pointer cross-entropy: d score = softmax - onehot(target).
            let mut d_v = st.probs.clone();
            d_v[st.target] -= 1.0;

            let f1y = &st.f1.y;
            let mut wbar = Array1::zeros(arc_dim);
            let mut total = 0.0;
            let wt_f1 = self.params.arc_w.t().dot(f1y);
            for j in 0..positions {
                let dv = d_v[j];
                if dv == 0.0 {
                    continue;
                }
                wbar.scaled_add(dv, &trace.ctx.f2[j].y);
                total += dv;
                d_f2[j].scaled_add(dv, &wt_f1);
                d_f2[j].scaled_add(dv, &self.params.arc_v);
            }
            add_outer(grads.arc_w.view_mut(), f1y, &wbar, 1.0);
            grads.arc_u.scaled_add(total, f1y);
            grads.arc_v += &wbar;
            grads.arc_b[0] += total;
            let mut d_f1y = self.params.arc_w.dot(&wbar);
            d_f1y.scaled_add(total, &self.params.arc_u);
            let mut d_s = mlp_backward(
                &self.params.arc_mlp_dec,
                &mut grads.arc_mlp_dec,
                &st.f1,
                &d_f1y,
            );

            if let (Some(g1), Some(l_probs), Some(gold)) = (&st.g1, &st.label_probs, st.label) {
                let head = st.target;
                let mut d_ls = l_probs.clone();
                d_ls[gold] -= 1.0;
                let g1y = &g1.y;
                let g2y = &trace.ctx.g2[head].y;
                let mut d_g1y = Array1::zeros(lab_dim);
                let mut d_g2h = Array1::zeros(lab_dim);
                for l in 0..labels {
                    let d = d_ls[l];
                    if d == 0.0 {
                        continue;
                    }
                    d_g1y.scaled_add(d, &trace.ctx.wl_g2[head].row(l));
                    d_g1y.scaled_add(d, &self.params.label_u.row(l));
                    let wt_g1 = self.params.label_w.index_axis(Axis(0), l).t().dot(g1y);
                    d_g2h.scaled_add(d, &wt_g1);
                    d_g2h.scaled_add(d, &self.params.label_v.row(l));
                    add_outer(grads.label_w.index_axis_mut(Axis(0), l), g1y, g2y, d);
                    grads.label_u.row_mut(l).scaled_add(d, g1y);
                    grads.label_v.row_mut(l).scaled_add(d, g2y);
                    grads.label_b[l] += d;
                }
                d_g2[head] += &d_g2h;
                d_s += &mlp_backward(
                    &self.params.label_mlp_dec,
                    &mut grads.label_mlp_dec,
                    g1,
                    &d_g1y,
                );
            }

            if let Some(z) = noise {
                d_s *= &z.decoder_mask;
            }

            let mut d_from_above = d_s;
            for li in (0..cfg.decoder_layers).rev() {
                let d_h = &d_from_above + &carry_h[li];
                let (d_x, d_h_prev, d_c_prev) = lstm_step_backward(
                    &self.params.decoder[li],
                    &mut grads.decoder[li],
                    &st.dec_caches[li],
                    &d_h,
                    &carry_c[li],
                );
                carry_h[li] = d_h_prev;
                carry_c[li] = d_c_prev;
                d_from_above = d_x;
            }

            d_states[st.focus] += &d_from_above;
            if let Some(h) = st.last_head {
                d_states[h] += &d_from_above;
            }
        }

        // Encoder-side halves of both biaffines.
        for j in 0..positions {
            d_states[j] += &mlp_backward(
                &self.params.arc_mlp_enc,
                &mut grads.arc_mlp_enc,
                &trace.ctx.f2[j],
                &d_f2[j],
            );
            d_states[j] += &mlp_backward(
                &self.params.label_mlp_enc,
                &mut grads.label_mlp_enc,
                &trace.ctx.g2[j],
                &d_g2[j],
            );
        }

        grads.root_state += &d_states[0];
        let mut d_seq: Vec<Array1<f64>> = d_states[1..].to_vec();

        let hidden = cfg.encoder_size;
        for (li, layer) in trace.enc.layers.iter().enumerate().rev() {
            if let Some(z) = noise {
                for t in 0..n {
                    d_seq[t] *= &z.encoder_masks[li][t];
                }
            }
            let mut d_lower: Vec<Array1<f64>> = (0..n)
                .map(|t| Array1::zeros(layer.fwd[t].x.len()))
                .collect();

            let p = &self.params.encoder[li];
            let g = &mut grads.encoder[li];
            let mut ch = Array1::zeros(hidden);
            let mut cc = Array1::zeros(hidden);
            for t in (0..n).rev() {
                let mut d_h = ch.clone();
                d_h += &d_seq[t].slice(ndarray::s![0..hidden]);
                let (d_x, d_h_prev, d_c_prev) =
                    lstm_step_backward(&p.fwd, &mut g.fwd, &layer.fwd[t], &d_h, &cc);
                d_lower[t] += &d_x;
                ch = d_h_prev;
                cc = d_c_prev;
            }
            ch = Array1::zeros(hidden);
            cc = Array1::zeros(hidden);
            for t in 0..n {
                let mut d_h = ch.clone();
                d_h += &d_seq[t].slice(ndarray::s![hidden..]);
                let (d_x, d_h_prev, d_c_prev) =
                    lstm_step_backward(&p.bwd, &mut g.bwd, &layer.bwd[t], &d_h, &cc);
                d_lower[t] += &d_x;
                ch = d_h_prev;
                cc = d_c_prev;
            }
            d_seq = d_lower;
        }

        for t in 0..n {
            if let Some(z) = noise {
                d_seq[t] *= &z.input_masks[t];
            }
            let d = &d_seq[t];
            let mut off = 0;
            let d_cnn = d.slice(ndarray::s![off..off + cfg.cnn_filters]).to_owned();
            char_cnn_backward(
                &self.params.char_conv_w,
                &mut grads.char_emb,
                &mut grads.char_conv_w,
                &mut grads.char_conv_b,
                &trace.enc.char_caches[t],
                &d_cnn,
                cfg.cnn_window,
                cfg.char_dim,
            );
            off += cfg.cnn_filters;
            grads
                .word_emb
                .row_mut(trace.enc.word_ids[t])
                .scaled_add(1.0, &d.slice(ndarray::s![off..off + cfg.word_dim]));
            off += cfg.word_dim;
            grads
                .lemma_emb
                .row_mut(trace.enc.lemma_ids[t])
                .scaled_add(1.0, &d.slice(ndarray::s![off..off + cfg.lemma_dim]));
            off += cfg.lemma_dim;
            grads
                .pos_emb
                .row_mut(trace.enc.pos_ids[t])
                .scaled_add(1.0, &d.slice(ndarray::s![off..off + cfg.pos_dim]));
        }
    }
}
