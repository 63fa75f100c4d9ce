//! Central finite-difference check of [`ModelParams::loss_and_grad`].
//!
//! The analytic gradient is always computed in `f64`. The two loss
//! evaluations of each central difference can run in `f64` or in
//! [`DoubleDouble`]; in `f64` the difference quotient cannot resolve
//! gradients much below `ulp(loss) / (2 * eps)`.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use rand::seq::index;

use super::ModelParams;
use crate::noising::NoisedExample;
use crate::real::{DoubleDouble, Real};
use crate::rng;
use crate::Result;

/// Arithmetic used for the finite-difference loss evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OracleArithmetic {
    Double,
    #[default]
    DoubleDouble,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckOptions {
    pub eps: f64,
    /// Check a seeded random subset of this many coordinates instead of all.
    pub sample: Option<usize>,
    pub seed: u64,
    pub oracle: OracleArithmetic,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions { eps: 1e-5, sample: None, seed: 0, oracle: OracleArithmetic::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// `max |g_analytic - g_fd| / max(|g_fd|, 1e-8)` over checked coordinates.
    pub max_relative_error: f64,
    pub worst_index: usize,
    pub worst_tensor: String,
    pub checked: usize,
    /// Full analytic gradient in parameter layout.
    pub analytic: Vec<f64>,
}

pub fn check_gradients(
    params: &ModelParams<f64>,
    example: &NoisedExample,
    sent_emb: Option<&[f64]>,
    opts: GradCheckOptions,
) -> Result<GradCheckReport> {
    let mut analytic = vec![0.0; params.len()];
    params.loss_and_grad(example, sent_emb, &mut analytic, 1.0)?;

    let coords: Vec<usize> = match opts.sample {
        Some(k) if k < params.len() => {
            let mut r = rng::stream(opts.seed, &[0x6763]);
            let mut v = index::sample(&mut r, params.len(), k).into_vec();
            v.sort_unstable();
            v
        }
        _ => (0..params.len()).collect(),
    };

    let numeric = match opts.oracle {
        OracleArithmetic::Double => central_differences(params.clone(), example, sent_emb, &coords, opts.eps)?,
        OracleArithmetic::DoubleDouble => {
            let s: Option<Vec<DoubleDouble>> = sent_emb.map(|v| v.iter().map(|&x| DoubleDouble::lit(x)).collect());
            central_differences(params.cast::<DoubleDouble>(), example, s.as_deref(), &coords, opts.eps)?
        }
    };

    let mut worst = (0.0f64, 0usize);
    for (&i, &fd) in coords.iter().zip(&numeric) {
        let rel = (analytic[i] - fd).abs() / fd.abs().max(1e-8);
        if rel > worst.0 {
            worst = (rel, i);
        }
    }
    Ok(GradCheckReport {
        max_relative_error: worst.0,
        worst_index: worst.1,
        worst_tensor: params.layout().tensor_of(worst.1).unwrap_or("").to_string(),
        checked: coords.len(),
        analytic,
    })
}

/// `(f(theta + eps e_i) - f(theta - eps e_i)) / (2 eps)` for each `i` in `coords`.
pub fn central_differences<O: Real>(
    mut probe: ModelParams<O>,
    example: &NoisedExample,
    sent_emb: Option<&[O]>,
    coords: &[usize],
    eps: f64,
) -> Result<Vec<f64>> {
    let step = O::lit(eps);
    let mut out = vec![0.0; coords.len()];
    for (slot, &i) in out.iter_mut().zip(coords) {
        let orig = probe.values()[i];
        probe.values_mut()[i] = orig + step;
        let (up, _) = probe.forward_nll(example, sent_emb)?;
        probe.values_mut()[i] = orig - step;
        let (down, _) = probe.forward_nll(example, sent_emb)?;
        probe.values_mut()[i] = orig;
        *slot = ((up - down) / (step + step)).as_f64();
    }
    Ok(out)
}
