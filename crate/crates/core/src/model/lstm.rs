//! A single LSTM cell step with gate order `(input, forget, cell, output)`.

use alloc::vec;
use alloc::vec::Vec;

use super::layout::LstmSpans;
use crate::linalg::{gemv_acc, gemv_t_acc, outer_acc, sigmoid};
use crate::real::Real;

/// Everything the backward pass needs from one forward step.
#[derive(Debug, Clone)]
pub(crate) struct LstmStep<F> {
    pub x: Vec<F>,
    pub h_prev: Vec<F>,
    pub c_prev: Vec<F>,
    /// Activated gates, `4 * hidden`.
    pub gates: Vec<F>,
    pub c: Vec<F>,
    pub tanh_c: Vec<F>,
    pub h: Vec<F>,
}

pub(crate) fn forward<F: Real>(p: &[F], s: &LstmSpans, x: &[F], h_prev: &[F], c_prev: &[F]) -> LstmStep<F> {
    let hidden = h_prev.len();
    let mut z = p[s.b.range()].to_vec();
    gemv_acc(&p[s.wx.range()], s.wx.rows, s.wx.cols, x, &mut z);
    gemv_acc(&p[s.wh.range()], s.wh.rows, s.wh.cols, h_prev, &mut z);
    for (k, v) in z.iter_mut().enumerate() {
        *v = if k / hidden == 2 { v.tanh() } else { sigmoid(*v) };
    }
    let mut c = vec![F::zero(); hidden];
    let mut tanh_c = vec![F::zero(); hidden];
    let mut h = vec![F::zero(); hidden];
    for k in 0..hidden {
        let (i, f, g, o) = (z[k], z[hidden + k], z[2 * hidden + k], z[3 * hidden + k]);
        c[k] = f * c_prev[k] + i * g;
        tanh_c[k] = c[k].tanh();
        h[k] = o * tanh_c[k];
    }
    LstmStep { x: x.to_vec(), h_prev: h_prev.to_vec(), c_prev: c_prev.to_vec(), gates: z, c, tanh_c, h }
}

/// Backpropagates `dh`, `dc` through one step. Accumulates parameter
/// gradients into `g` and the input gradient into `dx`; returns
/// `(dh_prev, dc_prev)`.
pub(crate) fn backward<F: Real>(
    p: &[F],
    g: &mut [F],
    s: &LstmSpans,
    step: &LstmStep<F>,
    dh: &[F],
    dc: &[F],
    dx: &mut [F],
) -> (Vec<F>, Vec<F>) {
    let hidden = dh.len();
    let one = F::one();
    let z = &step.gates;
    let mut dz = vec![F::zero(); 4 * hidden];
    let mut dc_prev = vec![F::zero(); hidden];
    for k in 0..hidden {
        let (i, f, gg, o) = (z[k], z[hidden + k], z[2 * hidden + k], z[3 * hidden + k]);
        let tc = step.tanh_c[k];
        let d_o = dh[k] * tc;
        let dct = dc[k] + dh[k] * o * (one - tc * tc);
        let d_i = dct * gg;
        let d_g = dct * i;
        let d_f = dct * step.c_prev[k];
        dc_prev[k] = dct * f;
        dz[k] = d_i * i * (one - i);
        dz[hidden + k] = d_f * f * (one - f);
        dz[2 * hidden + k] = d_g * (one - gg * gg);
        dz[3 * hidden + k] = d_o * o * (one - o);
    }
    outer_acc(&mut g[s.wx.range()], &dz, &step.x);
    outer_acc(&mut g[s.wh.range()], &dz, &step.h_prev);
    for (gb, &d) in g[s.b.range()].iter_mut().zip(&dz) {
        *gb += d;
    }
    gemv_t_acc(&p[s.wx.range()], s.wx.rows, s.wx.cols, &dz, dx);
    let mut dh_prev = vec![F::zero(); hidden];
    gemv_t_acc(&p[s.wh.range()], s.wh.rows, s.wh.cols, &dz, &mut dh_prev);
    (dh_prev, dc_prev)
}
