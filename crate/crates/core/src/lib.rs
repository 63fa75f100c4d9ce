//! Unsupervised sentence compression with a denoising sequence-to-sequence model.
//!
//! The crate is `no_std` and needs only `alloc`. It contains everything that
//! is pure computation:
//!
//! - [`vocab`]: vocabulary construction and numbered out-of-vocabulary encoding
//! - [`embedding`]: frozen word vectors and the textual vector format parser
//! - [`noising`]: additive noising and unigram/bigram shuffling of training inputs
//! - [`model`]: bidirectional LSTM encoder, attentional decoder with a
//!   length-countdown input, hand-written backpropagation and a gradient checker
//! - [`optim`]: Adam, global-norm clipping and the step-annealed learning rate
//! - [`train`]: the minibatch training loop for denoising and supervised modes
//! - [`inference`]: greedy length-controlled decoding and the first-8-words baseline
//! - [`rouge`] and [`eval`]: ROUGE-N/L, corpus reports, length bins and ablations
//!
//! File IO, checkpoints and the command line live in the `compresso` crate.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod embedding;
pub mod error;
pub mod eval;
pub mod inference;
pub mod linalg;
pub mod model;
pub mod noising;
pub mod optim;
pub mod real;
pub mod rng;
pub mod rouge;
pub mod train;
pub mod vocab;

pub use embedding::EmbeddingMatrix;
pub use error::Error;
pub use model::{ModelConfig, ModelParams};
pub use noising::{NoiseConfig, NoisedExample, ShuffleMode};
pub use real::Real;
pub use rouge::RougeScore;
pub use train::{TrainConfig, TrainMode, TrainState, Trainer};
pub use vocab::{OovTable, TokenSeq, Vocabulary};

pub type Result<T, E = Error> = core::result::Result<T, E>;
