#![allow(dead_code)]

use std::sync::Arc;

use compresso_core::model::{MeanWordEmbedder, SentenceEmbedder};
use compresso_core::noising::{make_training_example, NoiseConfig};
use compresso_core::rng::rng_from_seed;
use compresso_core::{EmbeddingMatrix, ModelConfig, ModelParams, NoisedExample, TokenSeq, Vocabulary};

/// Vocabulary with `content` words `w0..`, plus the 14 specials.
pub fn word_vocab(content: usize) -> Vocabulary {
    Vocabulary::from_content((0..content).map(|i| format!("w{i}")), 10).unwrap()
}

pub fn tiny_config(vocab: &Vocabulary, hidden: usize, attention: bool, conditioning: bool) -> ModelConfig {
    ModelConfig {
        emb_dim: 6,
        hidden,
        layers: 1,
        vocab_size: vocab.len(),
        num_oov: vocab.num_oov(),
        use_attention: attention,
        use_conditioning: conditioning,
        sent_emb_dim: 6,
    }
}

pub fn tiny_model(cfg: ModelConfig, vocab: &Vocabulary, seed: u64) -> ModelParams<f64> {
    let emb = Arc::new(EmbeddingMatrix::<f64>::random(vocab, cfg.emb_dim, seed ^ 0xabc, 0.5));
    ModelParams::init(cfg, emb, seed).unwrap()
}

pub fn sentence(words: &[usize]) -> TokenSeq {
    TokenSeq::new(words.iter().map(|i| format!("w{i}")).collect()).unwrap()
}

/// A noised example whose reference contains an OOV word.
pub fn tiny_example(vocab: &Vocabulary, seed: u64) -> (TokenSeq, NoisedExample) {
    let pool = vec![sentence(&[3, 4, 5, 6]), sentence(&[7, 8, 1]), sentence(&[2, 9, 10, 11, 12])];
    let mut tokens: Vec<String> = sentence(&[1, 2, 3, 4, 5]).into_inner();
    tokens.insert(2, "zebra".to_string());
    let reference = TokenSeq::new(tokens).unwrap();
    let mut rng = rng_from_seed(seed);
    let ex = make_training_example(&reference, &pool, None, vocab, &NoiseConfig::default(), &mut rng).unwrap();
    (reference, ex)
}

pub fn sent_emb(model: &ModelParams<f64>, vocab: &Vocabulary, sentence: &TokenSeq) -> Vec<f64> {
    MeanWordEmbedder::new(Arc::new(vocab.clone()), model.embeddings().clone()).embed(sentence)
}
