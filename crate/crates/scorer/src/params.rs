//! Every trainable array of the model, plus flatten/visit plumbing shared by
//! the optimizer, gradient clipping, checkpoints, and finite-difference
//! checks. The gradient of the whole model is simply another `Parameters`
//! value with identical shapes.

use ndarray::{Array1, Array2, Array3, ArrayViewD, ArrayViewMutD};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::ModelConfig;
use crate::layers::{BiLstmParams, LstmParams, MlpParams};
use crate::vocab::Vocab;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub(crate) word_emb: Array2<f64>,
    pub(crate) lemma_emb: Array2<f64>,
    pub(crate) pos_emb: Array2<f64>,
    pub(crate) char_emb: Array2<f64>,
    /// (filters, window * char_dim)
    pub(crate) char_conv_w: Array2<f64>,
    pub(crate) char_conv_b: Array1<f64>,
    /// Learned ROOT state h_0, width 2 * encoder_size.
    pub(crate) root_state: Array1<f64>,
    pub(crate) encoder: Vec<BiLstmParams>,
    pub(crate) decoder: Vec<LstmParams>,
    pub(crate) arc_mlp_dec: MlpParams,
    pub(crate) arc_mlp_enc: MlpParams,
    /// (arc_mlp, arc_mlp) bilinear arc weight.
    pub(crate) arc_w: Array2<f64>,
    pub(crate) arc_u: Array1<f64>,
    pub(crate) arc_v: Array1<f64>,
    /// Scalar arc bias, kept as a length-1 array for uniform visiting.
    pub(crate) arc_b: Array1<f64>,
    pub(crate) label_mlp_dec: MlpParams,
    pub(crate) label_mlp_enc: MlpParams,
    /// (labels, label_mlp, label_mlp)
    pub(crate) label_w: Array3<f64>,
    /// (labels, label_mlp)
    pub(crate) label_u: Array2<f64>,
    pub(crate) label_v: Array2<f64>,
    pub(crate) label_b: Array1<f64>,
}

fn uniform(rng: &mut impl Rng, bound: f64) -> f64 {
    rng.random_range(-bound..bound)
}

fn glorot2(rng: &mut impl Rng, rows: usize, cols: usize) -> Array2<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || uniform(rng, bound))
}

fn embedding(rng: &mut impl Rng, rows: usize, dim: usize) -> Array2<f64> {
    let bound = (3.0 / dim as f64).sqrt();
    Array2::from_shape_simple_fn((rows, dim), || uniform(rng, bound))
}

fn lstm(rng: &mut impl Rng, input: usize, hidden: usize) -> LstmParams {
    let mut bias = Array1::zeros(4 * hidden);
    // Forget-gate bias starts at 1 so memory is initially retained.
    bias.slice_mut(ndarray::s![hidden..2 * hidden]).fill(1.0);
    LstmParams {
        w_ih: glorot2(rng, 4 * hidden, input),
        w_hh: glorot2(rng, 4 * hidden, hidden),
        bias,
    }
}

fn mlp(rng: &mut impl Rng, input: usize, output: usize) -> MlpParams {
    MlpParams {
        w: glorot2(rng, output, input),
        b: Array1::zeros(output),
    }
}

impl Parameters {
    pub(crate) fn init(config: &ModelConfig, vocab: &Vocab, rng: &mut impl Rng) -> Parameters {
        let state = config.state_dim();
        let labels = vocab.num_labels();
        let arc = config.arc_mlp_size;
        let lab = config.label_mlp_size;

        let mut encoder = Vec::with_capacity(config.encoder_layers);
        for layer in 0..config.encoder_layers {
            let input = if layer == 0 { config.input_dim() } else { state };
            encoder.push(BiLstmParams {
                fwd: lstm(rng, input, config.encoder_size),
                bwd: lstm(rng, input, config.encoder_size),
            });
        }
        let mut decoder = Vec::with_capacity(config.decoder_layers);
        for layer in 0..config.decoder_layers {
            let input = if layer == 0 { state } else { config.decoder_size };
            decoder.push(lstm(rng, input, config.decoder_size));
        }

        Parameters {
            word_emb: embedding(rng, vocab.num_words(), config.word_dim),
            lemma_emb: embedding(rng, vocab.num_lemmas(), config.lemma_dim),
            pos_emb: embedding(rng, vocab.num_pos(), config.pos_dim),
            char_emb: embedding(rng, vocab.num_chars(), config.char_dim),
            char_conv_w: glorot2(rng, config.cnn_filters, config.cnn_window * config.char_dim),
            char_conv_b: Array1::zeros(config.cnn_filters),
            root_state: Array1::from_shape_simple_fn(state, || uniform(rng, 0.5)),
            encoder,
            decoder,
            arc_mlp_dec: mlp(rng, config.decoder_size, arc),
            arc_mlp_enc: mlp(rng, state, arc),
            arc_w: glorot2(rng, arc, arc),
            arc_u: Array1::from_shape_simple_fn(arc, || uniform(rng, 0.01)),
            arc_v: Array1::from_shape_simple_fn(arc, || uniform(rng, 0.01)),
            arc_b: Array1::zeros(1),
            label_mlp_dec: mlp(rng, config.decoder_size, lab),
            label_mlp_enc: mlp(rng, state, lab),
            label_w: {
                let mut w = Array3::zeros((labels, lab, lab));
                for mut slice in w.outer_iter_mut() {
                    slice.assign(&glorot2(rng, lab, lab));
                }
                w
            },
            label_u: Array2::from_shape_simple_fn((labels, lab), || uniform(rng, 0.01)),
            label_v: Array2::from_shape_simple_fn((labels, lab), || uniform(rng, 0.01)),
            label_b: Array1::zeros(labels),
        }
    }

    /// Same shapes, all zeros; the accumulator for gradients.
    pub(crate) fn zeros_like(&self) -> Parameters {
        let mut grads = self.clone();
        grads.visit_mut(&mut |mut a: ArrayViewMutD<f64>| a.fill(0.0));
        grads
    }

    pub(crate) fn visit(&self, f: &mut impl FnMut(ArrayViewD<'_, f64>)) {
        f(self.word_emb.view().into_dyn());
        f(self.lemma_emb.view().into_dyn());
        f(self.pos_emb.view().into_dyn());
        f(self.char_emb.view().into_dyn());
        f(self.char_conv_w.view().into_dyn());
        f(self.char_conv_b.view().into_dyn());
        f(self.root_state.view().into_dyn());
        for layer in &self.encoder {
            for dir in [&layer.fwd, &layer.bwd] {
                f(dir.w_ih.view().into_dyn());
                f(dir.w_hh.view().into_dyn());
                f(dir.bias.view().into_dyn());
            }
        }
        for layer in &self.decoder {
            f(layer.w_ih.view().into_dyn());
            f(layer.w_hh.view().into_dyn());
            f(layer.bias.view().into_dyn());
        }
        for m in [&self.arc_mlp_dec, &self.arc_mlp_enc] {
            f(m.w.view().into_dyn());
            f(m.b.view().into_dyn());
        }
        f(self.arc_w.view().into_dyn());
        f(self.arc_u.view().into_dyn());
        f(self.arc_v.view().into_dyn());
        f(self.arc_b.view().into_dyn());
        for m in [&self.label_mlp_dec, &self.label_mlp_enc] {
            f(m.w.view().into_dyn());
            f(m.b.view().into_dyn());
        }
        f(self.label_w.view().into_dyn());
        f(self.label_u.view().into_dyn());
        f(self.label_v.view().into_dyn());
        f(self.label_b.view().into_dyn());
    }

    pub(crate) fn visit_mut(&mut self, f: &mut impl FnMut(ArrayViewMutD<'_, f64>)) {
        f(self.word_emb.view_mut().into_dyn());
        f(self.lemma_emb.view_mut().into_dyn());
        f(self.pos_emb.view_mut().into_dyn());
        f(self.char_emb.view_mut().into_dyn());
        f(self.char_conv_w.view_mut().into_dyn());
        f(self.char_conv_b.view_mut().into_dyn());
        f(self.root_state.view_mut().into_dyn());
        for layer in &mut self.encoder {
            for dir in [&mut layer.fwd, &mut layer.bwd] {
                f(dir.w_ih.view_mut().into_dyn());
                f(dir.w_hh.view_mut().into_dyn());
                f(dir.bias.view_mut().into_dyn());
            }
        }
        for layer in &mut self.decoder {
            f(layer.w_ih.view_mut().into_dyn());
            f(layer.w_hh.view_mut().into_dyn());
            f(layer.bias.view_mut().into_dyn());
        }
        for m in [&mut self.arc_mlp_dec, &mut self.arc_mlp_enc] {
            f(m.w.view_mut().into_dyn());
            f(m.b.view_mut().into_dyn());
        }
        f(self.arc_w.view_mut().into_dyn());
        f(self.arc_u.view_mut().into_dyn());
        f(self.arc_v.view_mut().into_dyn());
        f(self.arc_b.view_mut().into_dyn());
        for m in [&mut self.label_mlp_dec, &mut self.label_mlp_enc] {
            f(m.w.view_mut().into_dyn());
            f(m.b.view_mut().into_dyn());
        }
        f(self.label_w.view_mut().into_dyn());
        f(self.label_u.view_mut().into_dyn());
        f(self.label_v.view_mut().into_dyn());
        f(self.label_b.view_mut().into_dyn());
    }

    pub(crate) fn count(&self) -> usize {
        let mut total = 0;
        self.visit(&mut |a| total += a.len());
        total
    }

    /// All weights in a fixed order (the visiting order above, row-major
    /// within each array).
    pub(crate) fn flatten(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.count());
        self.visit(&mut |a| flat.extend(a.iter().copied()));
        flat
    }

    /// Inverse of [`Parameters::flatten`]. Panics on length mismatch.
    pub(crate) fn assign_from_flat(&mut self, flat: &[f64]) {
        let mut offset = 0;
        self.visit_mut(&mut |mut a: ArrayViewMutD<f64>| {
            for v in a.iter_mut() {
                *v = flat[offset];
                offset += 1;
            }
        });
        assert_eq!(offset, flat.len(), "flat vector length mismatch");
    }

    pub(crate) fn scale(&mut self, factor: f64) {
        self.visit_mut(&mut |mut a: ArrayViewMutD<f64>| a.mapv_inplace(|v| v * factor));
    }

    pub(crate) fn global_norm(&self) -> f64 {
        let mut sum = 0.0;
        self.visit(&mut |a| sum += a.iter().map(|v| v * v).sum::<f64>());
        sum.sqrt()
    }

    /// Shape fingerprint for checkpoint validation.
    pub(crate) fn shape_signature(&self) -> Vec<Vec<usize>> {
        let mut shapes = Vec::new();
        self.visit(&mut |a| shapes.push(a.shape().to_vec()));
        shapes
    }
}
