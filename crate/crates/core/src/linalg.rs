//! Dense row-major kernels on slices.

use crate::real::Real;

/// `out += W x` for `W` of shape `rows x cols`.
#[inline]
pub fn gemv_acc<F: Real>(w: &[F], rows: usize, cols: usize, x: &[F], out: &mut [F]) {
    debug_assert_eq!(w.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    debug_assert_eq!(out.len(), rows);
    for (r, o) in out.iter_mut().enumerate() {
        *o += dot(&w[r * cols..(r + 1) * cols], x);
    }
}

/// `out += W^T y` for `W` of shape `rows x cols`.
#[inline]
pub fn gemv_t_acc<F: Real>(w: &[F], rows: usize, cols: usize, y: &[F], out: &mut [F]) {
    debug_assert_eq!(y.len(), rows);
    debug_assert_eq!(out.len(), cols);
    for (r, &yr) in y.iter().enumerate() {
        if yr == F::zero() {
            continue;
        }
        axpy(yr, &w[r * cols..(r + 1) * cols], out);
    }
}

/// `dW += y x^T`.
#[inline]
pub fn outer_acc<F: Real>(dw: &mut [F], y: &[F], x: &[F]) {
    let cols = x.len();
    debug_assert_eq!(dw.len(), y.len() * cols);
    for (r, &yr) in y.iter().enumerate() {
        if yr == F::zero() {
            continue;
        }
        axpy(yr, x, &mut dw[r * cols..(r + 1) * cols]);
    }
}

#[inline]
pub fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y)
}

/// `y += a x`.
#[inline]
pub fn axpy<F: Real>(a: F, x: &[F], y: &mut [F]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
pub fn add_assign<F: Real>(y: &mut [F], x: &[F]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += xi;
    }
}

#[inline]
pub fn sigmoid<F: Real>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

/// Softmax in place; returns log of the normalizer (log-sum-exp).
pub fn softmax_in_place<F: Real>(v: &mut [F]) -> F {
    let max = v.iter().copied().fold(F::neg_infinity(), F::max);
    let mut sum = F::zero();
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
    max + sum.ln()
}

pub fn argmax<F: Real>(v: &[F]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub fn norm_sq<F: Real>(v: &[F]) -> F {
    dot(v, v)
}
