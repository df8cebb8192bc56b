//! Numeric building blocks with explicit forward caches and hand-written
//! backward passes. Everything is f64; gate order in LSTM weights is
//! input, forget, cell, output.

use ndarray::{s, Array1, Array2, ArrayViewMut2};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct LstmParams {
    /// (4H, D) input weights.
    pub w_ih: Array2<f64>,
    /// (4H, H) recurrent weights.
    pub w_hh: Array2<f64>,
    /// (4H,) bias.
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct BiLstmParams {
    pub fwd: LstmParams,
    pub bwd: LstmParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct MlpParams {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub(crate) fn elu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        z.exp() - 1.0
    }
}

/// target += scale * (col ⊗ row)
pub(crate) fn add_outer(
    mut target: ArrayViewMut2<f64>,
    col: &Array1<f64>,
    row: &Array1<f64>,
    scale: f64,
) {
    for (mut t, &c) in target.outer_iter_mut().zip(col.iter()) {
        if c != 0.0 {
            t.scaled_add(scale * c, row);
        }
    }
}

pub(crate) struct LstmStepCache {
    pub x: Array1<f64>,
    pub h_prev: Array1<f64>,
    pub c_prev: Array1<f64>,
    pub i: Array1<f64>,
    pub f: Array1<f64>,
    pub g: Array1<f64>,
    pub o: Array1<f64>,
    pub c: Array1<f64>,
    pub h: Array1<f64>,
}

pub(crate) fn lstm_step(
    p: &LstmParams,
    x: &Array1<f64>,
    h_prev: &Array1<f64>,
    c_prev: &Array1<f64>,
) -> LstmStepCache {
    let h_size = h_prev.len();
    let z = p.w_ih.dot(x) + p.w_hh.dot(h_prev) + &p.bias;
    let i = z.slice(s![0..h_size]).mapv(sigmoid);
    let f = z.slice(s![h_size..2 * h_size]).mapv(sigmoid);
    let g = z.slice(s![2 * h_size..3 * h_size]).mapv(f64::tanh);
    let o = z.slice(s![3 * h_size..4 * h_size]).mapv(sigmoid);
    let c = &f * c_prev + &i * &g;
    let h = &o * &c.mapv(f64::tanh);
    LstmStepCache {
        x: x.clone(),
        h_prev: h_prev.clone(),
        c_prev: c_prev.clone(),
        i,
        f,
        g,
        o,
        c,
        h,
    }
}

/// Backward through one step. `d_h`/`d_c` are the gradients flowing into this
/// step's outputs (from above and from the following step). Returns
/// (d_x, d_h_prev, d_c_prev) and accumulates parameter gradients.
pub(crate) fn lstm_step_backward(
    p: &LstmParams,
    grads: &mut LstmParams,
    cache: &LstmStepCache,
    d_h: &Array1<f64>,
    d_c_carry: &Array1<f64>,
) -> (Array1<f64>, Array1<f64>, Array1<f64>) {
    let h_size = cache.h_prev.len();
    let tc = cache.c.mapv(f64::tanh);
    let d_o = d_h * &tc;
    let d_c = d_c_carry + &(d_h * &cache.o * &tc.mapv(|t| 1.0 - t * t));
    let d_i = &d_c * &cache.g;
    let d_g = &d_c * &cache.i;
    let d_f = &d_c * &cache.c_prev;
    let d_c_prev = &d_c * &cache.f;

    // sigmoid'(z) = s(1 - s), tanh'(z) = 1 - t^2.
    let d_zi = &d_i * &cache.i.mapv(|v| v * (1.0 - v));
    let d_zf = &d_f * &cache.f.mapv(|v| v * (1.0 - v));
    let d_zg = &d_g * &cache.g.mapv(|v| 1.0 - v * v);
    let d_zo = &d_o * &cache.o.mapv(|v| v * (1.0 - v));

    let mut d_z = Array1::zeros(4 * h_size);
    d_z.slice_mut(s![0..h_size]).assign(&d_zi);
    d_z.slice_mut(s![h_size..2 * h_size]).assign(&d_zf);
    d_z.slice_mut(s![2 * h_size..3 * h_size]).assign(&d_zg);
    d_z.slice_mut(s![3 * h_size..4 * h_size]).assign(&d_zo);

    add_outer(grads.w_ih.view_mut(), &d_z, &cache.x, 1.0);
    add_outer(grads.w_hh.view_mut(), &d_z, &cache.h_prev, 1.0);
    grads.bias += &d_z;

    let d_x = p.w_ih.t().dot(&d_z);
    let d_h_prev = p.w_hh.t().dot(&d_z);
    (d_x, d_h_prev, d_c_prev)
}

pub(crate) struct MlpCache {
    pub x: Array1<f64>,
    pub z: Array1<f64>,
    pub y: Array1<f64>,
}

/// y = elu(Wx + b)
pub(crate) fn mlp_forward(p: &MlpParams, x: &Array1<f64>) -> MlpCache {
    let z = p.w.dot(x) + &p.b;
    let y = z.mapv(elu);
    MlpCache { x: x.clone(), z, y }
}

pub(crate) fn mlp_backward(
    p: &MlpParams,
    grads: &mut MlpParams,
    cache: &MlpCache,
    d_y: &Array1<f64>,
) -> Array1<f64> {
    // elu'(z) = 1 for z > 0, exp(z) otherwise.
    let d_z = d_y * &cache.z.mapv(|z| if z > 0.0 { 1.0 } else { z.exp() });
    add_outer(grads.w.view_mut(), &d_z, &cache.x, 1.0);
    grads.b += &d_z;
    p.w.t().dot(&d_z)
}

pub(crate) struct CharCnnCache {
    pub ids: Vec<usize>,
    /// Per character position: the concatenated window of embeddings.
    pub windows: Vec<Array1<f64>>,
    /// (positions, filters) tanh activations.
    pub acts: Array2<f64>,
    /// Winning position per filter.
    pub argmax: Vec<usize>,
    pub out: Array1<f64>,
}

/// Convolution over the character sequence (zero-padded at both ends) with
/// tanh activation and max pooling over positions.
pub(crate) fn char_cnn_forward(
    emb: &Array2<f64>,
    w: &Array2<f64>,
    b: &Array1<f64>,
    ids: &[usize],
    window: usize,
) -> CharCnnCache {
    debug_assert!(window % 2 == 1 && !ids.is_empty());
    let len = ids.len();
    let filters = w.nrows();
    let char_dim = emb.ncols();
    let half = window / 2;

    let mut windows = Vec::with_capacity(len);
    let mut acts = Array2::zeros((len, filters));
    for pos in 0..len {
        let mut vec = Array1::zeros(window * char_dim);
        for k in 0..window {
            let src = pos as isize + k as isize - half as isize;
            if src >= 0 && (src as usize) < len {
                vec.slice_mut(s![k * char_dim..(k + 1) * char_dim])
                    .assign(&emb.row(ids[src as usize]));
            }
        }
        let act = (w.dot(&vec) + b).mapv(f64::tanh);
        acts.row_mut(pos).assign(&act);
        windows.push(vec);
    }

    let mut argmax = vec![0usize; filters];
    let mut out = Array1::zeros(filters);
    for f in 0..filters {
        let mut best = f64::NEG_INFINITY;
        for pos in 0..len {
            let v = acts[(pos, f)];
            if v > best {
                best = v;
                argmax[f] = pos;
            }
        }
        out[f] = best;
    }

    CharCnnCache {
        ids: ids.to_vec(),
        windows,
        acts,
        argmax,
        out,
    }
}

pub(crate) fn char_cnn_backward(
    w: &Array2<f64>,
    emb_grads: &mut Array2<f64>,
    w_grads: &mut Array2<f64>,
    b_grads: &mut Array1<f64>,
    cache: &CharCnnCache,
    d_out: &Array1<f64>,
    window: usize,
    char_dim: usize,
) {
    let len = cache.ids.len();
    let half = window / 2;
    for f in 0..w.nrows() {
        if d_out[f] == 0.0 {
            continue;
        }
        let pos = cache.argmax[f];
        let act = cache.acts[(pos, f)];
        let d_pre = d_out[f] * (1.0 - act * act);
        w_grads.row_mut(f).scaled_add(d_pre, &cache.windows[pos]);
        b_grads[f] += d_pre;
        for k in 0..window {
            let src = pos as isize + k as isize - half as isize;
            if src >= 0 && (src as usize) < len {
                let slice = w.row(f);
                let piece = slice.slice(s![k * char_dim..(k + 1) * char_dim]);
                emb_grads
                    .row_mut(cache.ids[src as usize])
                    .scaled_add(d_pre, &piece);
            }
        }
    }
}

/// Numerically stable log-softmax; returns (log probabilities, probabilities).
pub(crate) fn log_softmax(v: &Array1<f64>) -> (Array1<f64>, Array1<f64>) {
    let max = v.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let shifted = v.mapv(|x| x - max);
    let lse = shifted.mapv(f64::exp).sum().ln();
    let logp = shifted.mapv(|x| x - lse);
    let p = logp.mapv(f64::exp);
    (logp, p)
}
