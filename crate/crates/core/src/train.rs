//! Minibatch training for the denoising and supervised modes.
//!
//! All randomness is derived from the configured seed, the epoch and the
//! sentence index, so a [`TrainState`] plus the parameters is enough to resume
//! a run exactly.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::Error;
use crate::model::{ModelParams, SentenceEmbedder};
use crate::noising::{make_training_example, NoiseConfig, NoisedExample};
use crate::optim::{annealed_lr, clip_global_norm, global_norm, Adam, AdamConfig};
use crate::real::Real;
use crate::rng;
use crate::vocab::{TokenSeq, Vocabulary};
use crate::Result;

const PERMUTATION_STREAM: u64 = 0x7065726d;
const EXAMPLE_STREAM: u64 = 0x6e6f6973;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMode {
    Denoise,
    Supervised,
}

impl TrainMode {
    pub fn name(self) -> &'static str {
        match self {
            TrainMode::Denoise => "denoise",
            TrainMode::Supervised => "supervised",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "denoise" => Some(TrainMode::Denoise),
            "supervised" => Some(TrainMode::Supervised),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lr_init: f64,
    pub anneal_factor: f64,
    pub anneal_every: u64,
    pub clip_norm: f64,
    pub epochs: usize,
    pub mode: TrainMode,
    pub seed: u64,
    pub checkpoint_every: u64,
    /// Stop after this many minibatches even if epochs remain.
    pub max_steps: Option<u64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 128,
            lr_init: 0.0005,
            anneal_factor: 0.9,
            anneal_every: 10_000,
            clip_norm: 2.0,
            epochs: 4,
            mode: TrainMode::Denoise,
            seed: 0,
            checkpoint_every: 10_000,
            max_steps: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.batch_size == 0 || self.epochs == 0 || self.anneal_every == 0 || self.checkpoint_every == 0 {
            return bad("batch_size, epochs, anneal_every and checkpoint_every must be positive");
        }
        if self.lr_init.is_nan() || self.lr_init <= 0.0 || self.clip_norm.is_nan() || self.clip_norm <= 0.0 {
            return bad("lr_init and clip_norm must be positive");
        }
        if !(self.anneal_factor > 0.0 && self.anneal_factor <= 1.0) {
            return bad("anneal_factor must lie in (0, 1]");
        }
        Ok(())
    }

    pub fn lr_at(&self, step: u64) -> f64 {
        annealed_lr(self.lr_init, self.anneal_factor, self.anneal_every, step)
    }
}

/// Everything besides the parameters needed to continue a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState<F> {
    /// Number of minibatches already applied.
    pub step: u64,
    pub lr: f64,
    pub adam: Adam<F>,
    pub seed: u64,
}

impl<F: Real> TrainState<F> {
    pub fn new(num_params: usize, cfg: &TrainConfig) -> Self {
        TrainState { step: 0, lr: cfg.lr_at(0), adam: Adam::new(num_params, AdamConfig::default()), seed: cfg.seed }
    }
}

/// Training sentences.
#[derive(Debug, Clone)]
pub enum TrainData {
    Monolingual(Vec<TokenSeq>),
    /// `(reference, summary)` pairs.
    Paired(Vec<(TokenSeq, TokenSeq)>),
}

impl TrainData {
    pub fn len(&self) -> usize {
        match self {
            TrainData::Monolingual(v) => v.len(),
            TrainData::Paired(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn reference(&self, i: usize) -> &[String] {
        match self {
            TrainData::Monolingual(v) => &v[i],
            TrainData::Paired(v) => &v[i].0,
        }
    }
}

/// One example ready for the model, with its conditioning vector if any.
#[derive(Debug, Clone)]
pub struct Prepared<F> {
    pub index: usize,
    pub example: NoisedExample,
    pub sent_emb: Option<Vec<F>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Step number of the applied minibatch (0-based).
    pub step: u64,
    pub lr: f64,
    pub loss: f64,
    /// Global gradient norm before clipping.
    pub grad_norm: f64,
    /// Global norm of the gradient actually applied.
    pub applied_norm: f64,
    pub clipped: bool,
}

/// Drives optimisation of a [`ModelParams`].
pub struct Trainer<F> {
    pub cfg: TrainConfig,
    pub noise: NoiseConfig,
    pub params: ModelParams<F>,
    pub state: TrainState<F>,
    vocab: Arc<Vocabulary>,
    data: Arc<TrainData>,
    embedder: Option<Arc<dyn SentenceEmbedder<F>>>,
}

impl<F> core::fmt::Debug for Trainer<F> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Trainer")
            .field("cfg", &self.cfg)
            .field("step", &self.state.step)
            .field("examples", &self.data.len())
            .finish_non_exhaustive()
    }
}

impl<F: Real> Trainer<F> {
    /// Starts a fresh run.
    pub fn new(
        cfg: TrainConfig,
        noise: NoiseConfig,
        params: ModelParams<F>,
        vocab: Arc<Vocabulary>,
        data: Arc<TrainData>,
        embedder: Option<Arc<dyn SentenceEmbedder<F>>>,
    ) -> Result<Self> {
        let state = TrainState::new(params.len(), &cfg);
        Self::resume(cfg, noise, params, state, vocab, data, embedder)
    }

    /// Continues a run from a saved state.
    pub fn resume(
        cfg: TrainConfig,
        noise: NoiseConfig,
        params: ModelParams<F>,
        state: TrainState<F>,
        vocab: Arc<Vocabulary>,
        data: Arc<TrainData>,
        embedder: Option<Arc<dyn SentenceEmbedder<F>>>,
    ) -> Result<Self> {
        cfg.validate()?;
        noise.validate()?;
        if data.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        match (cfg.mode, &*data) {
            (TrainMode::Denoise, TrainData::Monolingual(_)) | (TrainMode::Supervised, TrainData::Paired(_)) => {}
            _ => return Err(Error::InvalidConfig("training mode does not match the corpus kind".into())),
        }
        if state.adam.m.len() != params.len() || state.adam.v.len() != params.len() {
            return Err(Error::ParamCount { expected: params.len(), found: state.adam.m.len() });
        }
        let mcfg = params.config();
        if mcfg.use_conditioning {
            let found = embedder.as_ref().map(|e| e.dim());
            if found != Some(mcfg.sent_emb_dim) {
                return Err(Error::SentenceEmbedding { expected: mcfg.sent_emb_dim, found });
            }
        }
        Ok(Trainer { cfg, noise, params, state, vocab, data, embedder })
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn data(&self) -> &Arc<TrainData> {
        &self.data
    }

    pub fn steps_per_epoch(&self) -> u64 {
        self.data.len().div_ceil(self.cfg.batch_size) as u64
    }

    pub fn total_steps(&self) -> u64 {
        let full = self.steps_per_epoch() * self.cfg.epochs as u64;
        self.cfg.max_steps.map_or(full, |m| m.min(full))
    }

    pub fn is_finished(&self) -> bool {
        self.state.step >= self.total_steps()
    }

    /// Sentence indices of minibatch `step`. Each epoch visits every sentence
    /// once in a seeded order; the last batch of an epoch may be short.
    pub fn batch_indices(&self, step: u64) -> Vec<usize> {
        let spe = self.steps_per_epoch();
        let epoch = step / spe;
        let b = (step % spe) as usize;
        let perm = self.permutation(epoch);
        let start = b * self.cfg.batch_size;
        let end = (start + self.cfg.batch_size).min(perm.len());
        perm[start..end].to_vec()
    }

    fn permutation(&self, epoch: u64) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..self.data.len()).collect();
        let mut r = rng::stream(self.cfg.seed, &[PERMUTATION_STREAM, epoch]);
        perm.shuffle(&mut r);
        perm
    }

    /// Builds the training example for sentence `index` in the epoch of `step`.
    pub fn prepare(&self, step: u64, index: usize) -> Result<Prepared<F>> {
        let epoch = step / self.steps_per_epoch();
        let example = match &*self.data {
            TrainData::Monolingual(sents) => {
                let mut r = rng::stream(self.cfg.seed, &[EXAMPLE_STREAM, epoch, index as u64]);
                make_training_example(&sents[index], sents, Some(index), &self.vocab, &self.noise, &mut r)?
            }
            TrainData::Paired(pairs) => {
                let (reference, summary) = &pairs[index];
                NoisedExample::paired(reference, summary, &self.vocab, self.noise.max_oov)?
            }
        };
        let sent_emb = match &self.embedder {
            Some(e) if self.params.config().use_conditioning => Some(e.embed(self.data.reference(index))),
            _ => None,
        };
        Ok(Prepared { index, example, sent_emb })
    }

    pub fn prepare_batch(&self, step: u64) -> Result<Vec<Prepared<F>>> {
        self.batch_indices(step).into_iter().map(|i| self.prepare(step, i)).collect()
    }

    /// Runs the next minibatch single-threaded.
    pub fn step(&mut self) -> Result<StepReport> {
        let batch = self.prepare_batch(self.state.step)?;
        let mut grad = vec![F::zero(); self.params.len()];
        let loss = accumulate_gradients(&self.params, &batch, &mut grad)?;
        Ok(self.apply(grad, loss))
    }

    /// Clips `grad`, takes an Adam step at the annealed rate and advances the counter.
    ///
    /// `grad` must already be the gradient of the minibatch mean loss `loss`.
    pub fn apply(&mut self, mut grad: Vec<F>, loss: f64) -> StepReport {
        let step = self.state.step;
        let lr = self.cfg.lr_at(step);
        let grad_norm = clip_global_norm(&mut grad, self.cfg.clip_norm);
        let applied_norm = global_norm(&grad);
        self.state.adam.step(self.params.values_mut(), &grad, lr);
        self.state.step += 1;
        self.state.lr = self.cfg.lr_at(self.state.step);
        StepReport { step, lr, loss, grad_norm, applied_norm, clipped: grad_norm > self.cfg.clip_norm }
    }
}

/// Adds the gradient of the batch mean loss into `grad`, visiting examples in
/// order. Returns the mean loss.
pub fn accumulate_gradients<F: Real>(params: &ModelParams<F>, batch: &[Prepared<F>], grad: &mut [F]) -> Result<f64> {
    accumulate_scaled(params, batch, grad, batch.len())
}

/// Like [`accumulate_gradients`] for a slice of a batch of `batch_len`
/// examples. Returns the sum of per-example losses divided by `batch_len`.
pub fn accumulate_scaled<F: Real>(
    params: &ModelParams<F>,
    examples: &[Prepared<F>],
    grad: &mut [F],
    batch_len: usize,
) -> Result<f64> {
    let scale = F::one() / F::lit(batch_len.max(1) as f64);
    let mut loss = 0.0;
    for p in examples {
        let l = params.loss_and_grad(&p.example, p.sent_emb.as_deref(), grad, scale)?;
        loss += l.as_f64();
    }
    Ok(loss / batch_len.max(1) as f64)
}

/// Fraction of target tokens whose teacher-forced argmax equals the gold token.
pub fn token_accuracy<F: Real>(params: &ModelParams<F>, examples: &[Prepared<F>]) -> Result<f64> {
    let mut hit = 0usize;
    let mut total = 0usize;
    for p in examples {
        let (_, logits) = params.forward_nll(&p.example, p.sent_emb.as_deref())?;
        for (row, &gold) in logits.iter().zip(&p.example.target_ids) {
            hit += usize::from(crate::linalg::argmax(row) == gold as usize);
            total += 1;
        }
    }
    Ok(if total == 0 { 0.0 } else { hit as f64 / total as f64 })
}
