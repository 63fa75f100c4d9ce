use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::embedding::EmbeddingMatrix;
use crate::real::Real;
use crate::vocab::Vocabulary;

/// Fixed (non-trainable) sentence vector used for decoder conditioning.
pub trait SentenceEmbedder<F>: Send + Sync {
    fn dim(&self) -> usize;

    fn embed(&self, sentence: &[alloc::string::String]) -> Vec<F>;
}

/// L2-normalised mean of the frozen word vectors of in-vocabulary words.
///
/// A sentence with no in-vocabulary word maps to the zero vector.
#[derive(Debug, Clone)]
pub struct MeanWordEmbedder<F> {
    vocab: Arc<Vocabulary>,
    embeddings: Arc<EmbeddingMatrix<F>>,
}

impl<F: Real> MeanWordEmbedder<F> {
    pub fn new(vocab: Arc<Vocabulary>, embeddings: Arc<EmbeddingMatrix<F>>) -> Self {
        MeanWordEmbedder { vocab, embeddings }
    }
}

impl<F: Real> SentenceEmbedder<F> for MeanWordEmbedder<F> {
    fn dim(&self) -> usize {
        self.embeddings.dim()
    }

    fn embed(&self, sentence: &[alloc::string::String]) -> Vec<F> {
        let mut acc = vec![0f64; self.dim()];
        let mut n = 0usize;
        for tok in sentence {
            if let Some(row) = self.vocab.content_id(tok).and_then(|id| self.embeddings.row(id)) {
                for (a, v) in acc.iter_mut().zip(row) {
                    *a += v.as_f64();
                }
                n += 1;
            }
        }
        if n > 0 {
            let norm = num_traits::Float::sqrt(acc.iter().map(|v| v * v).sum::<f64>());
            if norm > 0.0 {
                acc.iter_mut().for_each(|v| *v /= norm);
            }
        }
        acc.into_iter().map(F::lit).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn unit_norm_and_deterministic() {
        let vocab = Arc::new(Vocabulary::from_content(["a".to_string(), "b".to_string()], 10).unwrap());
        let emb = Arc::new(EmbeddingMatrix::<f64>::random(&vocab, 6, 3, 1.0));
        let e = MeanWordEmbedder::new(vocab, emb);
        let s = ["a".to_string(), "zz".to_string(), "b".to_string()];
        let v = e.embed(&s);
        let norm: f64 = v.iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        assert_eq!(v, e.embed(&s));
        assert!(e.embed(&["zz".to_string()]).iter().all(|&x| x == 0.0));
    }
}
