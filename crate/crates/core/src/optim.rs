//! Adam, global-norm gradient clipping and the step-annealed learning rate.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::real::Real;

/// `lr_init * anneal_factor ^ floor(step / anneal_every)`.
///
/// Both inputs are read as their shortest decimal forms and the product is
/// formed exactly, then rounded once, so 0.0005 and 0.9 give 0.00045 rather
/// than 0.00045000000000000004. Falls back to binary arithmetic when the
/// decimal mantissa would overflow.
pub fn annealed_lr(lr_init: f64, anneal_factor: f64, anneal_every: u64, step: u64) -> f64 {
    let k = step / anneal_every.max(1);
    decimal_power_product(lr_init, anneal_factor, k)
        .unwrap_or_else(|| lr_init * num_traits::Float::powi(anneal_factor, k.min(i32::MAX as u64) as i32))
}

/// `(mantissa, exponent)` with `x == mantissa * 10^exponent` for the shortest
/// round-tripping decimal form of a finite non-negative `x`.
fn decimal_parts(x: f64) -> Option<(u128, i64)> {
    if !x.is_finite() || x < 0.0 {
        return None;
    }
    let text = format!("{x:e}");
    let (mant, exp) = text.split_once('e')?;
    let mut exp: i64 = exp.parse().ok()?;
    let digits: alloc::string::String = match mant.split_once('.') {
        Some((int, frac)) => {
            exp -= frac.len() as i64;
            [int, frac].concat()
        }
        None => mant.into(),
    };
    Some((digits.parse().ok()?, exp))
}

fn decimal_power_product(a: f64, b: f64, k: u64) -> Option<f64> {
    let (mut m, mut e) = decimal_parts(a)?;
    let (bm, be) = decimal_parts(b)?;
    if (bm, be) == (1, 0) {
        return Some(a);
    }
    if k > 64 {
        return None;
    }
    for _ in 0..k {
        m = m.checked_mul(bm)?;
        e = e.checked_add(be)?;
    }
    format!("{m}e{e}").parse().ok()
}

/// Rescales `grad` so its L2 norm is at most `max_norm`. Returns the norm before clipping.
pub fn clip_global_norm<F: Real>(grad: &mut [F], max_norm: f64) -> f64 {
    let norm = global_norm(grad);
    if norm > max_norm {
        let scale = F::lit(max_norm / norm);
        grad.iter_mut().for_each(|g| *g *= scale);
    }
    norm
}

pub fn global_norm<F: Real>(grad: &[F]) -> f64 {
    let sq: f64 = grad
        .iter()
        .map(|g| {
            let x = g.as_f64();
            x * x
        })
        .sum();
    num_traits::Float::sqrt(sq)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Adam moment accumulators for a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam<F> {
    pub config: AdamConfig,
    /// Number of updates applied so far.
    pub t: u64,
    pub m: Vec<F>,
    pub v: Vec<F>,
}

impl<F: Real> Adam<F> {
    pub fn new(n: usize, config: AdamConfig) -> Self {
        Adam { config, t: 0, m: vec![F::zero(); n], v: vec![F::zero(); n] }
    }

    pub fn step(&mut self, params: &mut [F], grad: &[F], lr: f64) {
        self.t += 1;
        let c = self.config;
        let b1 = F::lit(c.beta1);
        let b2 = F::lit(c.beta2);
        let one = F::one();
        let bc1 = 1.0 - num_traits::Float::powi(c.beta1, self.t.min(i32::MAX as u64) as i32);
        let bc2 = 1.0 - num_traits::Float::powi(c.beta2, self.t.min(i32::MAX as u64) as i32);
        let step_size = F::lit(lr / bc1);
        let bc2_sqrt = F::lit(num_traits::Float::sqrt(bc2));
        let eps = F::lit(c.epsilon);
        for (((p, &g), m), v) in params.iter_mut().zip(grad).zip(self.m.iter_mut()).zip(self.v.iter_mut()) {
            *m = b1 * *m + (one - b1) * g;
            *v = b2 * *v + (one - b2) * g * g;
            *p -= step_size * *m / (v.sqrt() / bc2_sqrt + eps);
        }
    }
}
