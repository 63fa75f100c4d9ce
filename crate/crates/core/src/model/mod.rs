//! Attentional encoder-decoder with a length-countdown decoder input.
//!
//! The encoder is a stack of bidirectional LSTMs over the (noised) input. The
//! decoder is a unidirectional LSTM stack whose first-layer input at step `t`
//! is the previous token's embedding concatenated with the raw scalar
//! `T_dec - t`. Additive attention over the top encoder outputs produces a
//! context vector that joins the decoder's top state in the output projection.
//!
//! Decoder initial states come either from a per-layer linear bridge over the
//! concatenated forward/backward encoder finals, or, when conditioning is on,
//! from one shared affine map per state kind over `finals || sentence_vector`.

mod embedder;
mod gradcheck;
mod layout;
mod lstm;
mod network;

use alloc::sync::Arc;
use alloc::vec::Vec;
use rand::Rng as _;

pub use embedder::{MeanWordEmbedder, SentenceEmbedder};
pub use gradcheck::{central_differences, check_gradients, GradCheckOptions, GradCheckReport, OracleArithmetic};
pub use layout::{AttentionSpans, Layout, LstmSpans, Span, StateMapSpans};
pub use network::{DecoderState, Encoded, StepOutput};

use crate::embedding::EmbeddingMatrix;
use crate::real::Real;
use crate::rng;
use crate::vocab::{TokenId, DEFAULT_NUM_OOV};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelConfig {
    pub emb_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    /// Total id-space size, specials included.
    pub vocab_size: usize,
    pub num_oov: usize,
    pub use_attention: bool,
    pub use_conditioning: bool,
    pub sent_emb_dim: usize,
}

impl ModelConfig {
    /// Defaults matching the full-scale setup: 3 layers of 512 units, 10 OOV slots.
    pub fn full_scale(emb_dim: usize, vocab_size: usize) -> Self {
        ModelConfig {
            emb_dim,
            hidden: 512,
            layers: 3,
            vocab_size,
            num_oov: DEFAULT_NUM_OOV,
            use_attention: true,
            use_conditioning: false,
            sent_emb_dim: emb_dim,
        }
    }

    pub fn num_specials(&self) -> usize {
        self.num_oov + 4
    }

    pub fn attn_dim(&self) -> usize {
        self.hidden
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [self.emb_dim, self.hidden, self.layers, self.vocab_size, self.sent_emb_dim];
        if counts.contains(&0) {
            return Err(Error::InvalidConfig("model dimensions must be at least 1".into()));
        }
        if self.vocab_size < self.num_specials() {
            return Err(Error::InvalidConfig("vocab_size smaller than the special-token block".into()));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        Layout::new(self).total
    }
}

/// Trainable parameters in one flat vector plus the frozen word embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<F> {
    cfg: ModelConfig,
    layout: Layout,
    values: Vec<F>,
    embeddings: Arc<EmbeddingMatrix<F>>,
}

impl<F: Real> ModelParams<F> {
    /// Uniform initialisation in `[-1/sqrt(hidden), 1/sqrt(hidden)]`.
    pub fn init(cfg: ModelConfig, embeddings: Arc<EmbeddingMatrix<F>>, seed: u64) -> Result<Self> {
        let layout = Self::check(&cfg, &embeddings)?;
        let bound = 1.0 / (cfg.hidden as f64).sqrt();
        let mut r = rng::stream(seed, &[0x696e_6974]);
        let values = (0..layout.total).map(|_| F::lit(r.gen_range(-bound..=bound))).collect();
        Ok(ModelParams { cfg, layout, values, embeddings })
    }

    pub fn from_values(cfg: ModelConfig, embeddings: Arc<EmbeddingMatrix<F>>, values: Vec<F>) -> Result<Self> {
        let layout = Self::check(&cfg, &embeddings)?;
        if values.len() != layout.total {
            return Err(Error::ParamCount { expected: layout.total, found: values.len() });
        }
        Ok(ModelParams { cfg, layout, values, embeddings })
    }

    fn check(cfg: &ModelConfig, embeddings: &EmbeddingMatrix<F>) -> Result<Layout> {
        cfg.validate()?;
        if embeddings.dim() != cfg.emb_dim {
            return Err(Error::InvalidConfig(alloc::format!(
                "embedding dimension {} does not match emb_dim {}",
                embeddings.dim(),
                cfg.emb_dim
            )));
        }
        if embeddings.num_specials() != cfg.num_specials() || embeddings.rows() + cfg.num_specials() != cfg.vocab_size {
            return Err(Error::InvalidConfig("embedding rows do not cover the vocabulary".into()));
        }
        Ok(Layout::new(cfg))
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [F] {
        &mut self.values
    }

    pub fn embeddings(&self) -> &Arc<EmbeddingMatrix<F>> {
        &self.embeddings
    }

    /// Number of trainable scalars.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Input vector for `id`: trainable for specials, frozen for content words.
    pub fn embedding_row(&self, id: TokenId) -> &[F] {
        let s = self.cfg.num_specials();
        let e = self.cfg.emb_dim;
        let idx = id as usize;
        if idx < s {
            &self.values[self.layout.special_emb.offset + idx * e..][..e]
        } else {
            self.embeddings.row(id).expect("token id outside the vocabulary")
        }
    }

    /// Same parameters at a different precision.
    pub fn cast<G: Real>(&self) -> ModelParams<G> {
        ModelParams {
            cfg: self.cfg,
            layout: self.layout.clone(),
            values: self.values.iter().map(|v| G::lit(v.as_f64())).collect(),
            embeddings: Arc::new(self.embeddings.cast()),
        }
    }
}
