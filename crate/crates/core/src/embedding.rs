//! Frozen word vectors for content ids.
//!
//! Rows exist only for content words; special and numbered-OOV embeddings are
//! trainable and live in the model parameters.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng as _;

use crate::real::Real;
use crate::rng;
use crate::vocab::{TokenId, Vocabulary};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix<F> {
    dim: usize,
    num_specials: usize,
    data: Vec<F>,
}

/// Uniform draw in `[-sqrt(3)*std, sqrt(3)*std]`, which has standard deviation `std`.
fn draw<F: Real>(r: &mut rng::Rng, std: f64) -> F {
    let half = 3f64.sqrt() * std;
    F::lit(r.gen_range(-half..=half))
}

impl<F: Real> EmbeddingMatrix<F> {
    /// Seeded random rows with per-dimension standard deviation `std`.
    pub fn random(vocab: &Vocabulary, dim: usize, seed: u64, std: f64) -> Self {
        let stds = vec![std; dim];
        let mut data = Vec::with_capacity(vocab.size_content() * dim);
        for i in 0..vocab.size_content() {
            data.extend(Self::seeded_row(seed, i, &stds));
        }
        EmbeddingMatrix { dim, num_specials: vocab.num_specials(), data }
    }

    fn seeded_row(seed: u64, content_index: usize, stds: &[f64]) -> Vec<F> {
        let mut r = rng::stream(seed, &[0x0065_6d62, content_index as u64]);
        stds.iter().map(|&s| draw(&mut r, s)).collect()
    }

    /// Parses `word v1 .. vD` lines. Content words missing from the text get
    /// seeded random rows scaled to the per-dimension standard deviation of
    /// the file's vectors.
    pub fn from_text(text: &str, vocab: &Vocabulary, seed: u64) -> Result<Self> {
        let n_content = vocab.size_content();
        let mut dim: Option<usize> = None;
        let mut found: Vec<Option<Vec<f64>>> = vec![None; n_content];
        let mut sum: Vec<f64> = Vec::new();
        let mut sum_sq: Vec<f64> = Vec::new();
        let mut count = 0usize;

        for (lineno, line) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let mut parts = line.split_whitespace();
            let Some(word) = parts.next() else { continue };
            let values = parts
                .map(|p| p.parse::<f64>())
                .collect::<core::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::Parse { line: lineno, message: alloc::format!("{e}") })?;
            match dim {
                None => {
                    if values.is_empty() {
                        return Err(Error::Parse { line: lineno, message: "no vector components".into() });
                    }
                    dim = Some(values.len());
                    sum = vec![0.0; values.len()];
                    sum_sq = vec![0.0; values.len()];
                }
                Some(d) if d != values.len() => {
                    return Err(Error::DimensionMismatch { expected: d, found: values.len(), line: lineno });
                }
                Some(_) => {}
            }
            for (k, v) in values.iter().enumerate() {
                sum[k] += v;
                sum_sq[k] += v * v;
            }
            count += 1;
            if let Some(id) = vocab.content_id(word) {
                let slot = id as usize - vocab.num_specials();
                if found[slot].is_none() {
                    found[slot] = Some(values);
                }
            }
        }

        let dim = dim.ok_or(Error::Parse { line: 0, message: "no vectors in embedding file".into() })?;
        let fallback = 1.0 / (dim as f64).sqrt();
        let stds: Vec<f64> = (0..dim)
            .map(|k| {
                if count < 2 {
                    return fallback;
                }
                let mean = sum[k] / count as f64;
                let var = (sum_sq[k] / count as f64 - mean * mean).max(0.0);
                let s = var.sqrt();
                if s > 0.0 {
                    s
                } else {
                    fallback
                }
            })
            .collect();

        let mut data = Vec::with_capacity(n_content * dim);
        for (i, row) in found.into_iter().enumerate() {
            match row {
                Some(v) => data.extend(v.into_iter().map(F::lit)),
                None => data.extend(Self::seeded_row(seed, i, &stds)),
            }
        }
        Ok(EmbeddingMatrix { dim, num_specials: vocab.num_specials(), data })
    }

    /// Reassembles a matrix from raw row-major content rows.
    pub fn from_raw(dim: usize, num_specials: usize, data: Vec<F>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidConfig("embedding data is not a whole number of rows".into()));
        }
        Ok(EmbeddingMatrix { dim, num_specials, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_specials(&self) -> usize {
        self.num_specials
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.dim
    }

    /// Row for a content id, `None` for specials.
    pub fn row(&self, id: TokenId) -> Option<&[F]> {
        let i = (id as usize).checked_sub(self.num_specials)?;
        self.data.get(i * self.dim..(i + 1) * self.dim)
    }

    pub fn raw(&self) -> &[F] {
        &self.data
    }

    /// Same rows at a different precision.
    pub fn cast<G: Real>(&self) -> EmbeddingMatrix<G> {
        EmbeddingMatrix {
            dim: self.dim,
            num_specials: self.num_specials,
            data: self.data.iter().map(|v| G::lit(v.as_f64())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::{String, ToString};

    fn vocab(words: &str) -> Vocabulary {
        Vocabulary::from_content(words.split(' ').map(ToString::to_string), 10).unwrap()
    }

    #[test]
    fn all_rows_from_file() {
        let v = vocab("a b");
        let m = EmbeddingMatrix::<f64>::from_text("b 3 4\na 1 2\nzz 0 0\n", &v, 1).unwrap();
        assert_eq!(m.dim(), 2);
        assert_eq!(m.row(v.content_id("a").unwrap()), Some(&[1.0, 2.0][..]));
        assert_eq!(m.row(v.content_id("b").unwrap()), Some(&[3.0, 4.0][..]));
        assert_eq!(m.row(0), None);
    }

    #[test]
    fn missing_rows_are_seeded() {
        let v = vocab("a w");
        let text = "a 1 2\nq 3 -2\nr -1 0\n";
        let m1 = EmbeddingMatrix::<f64>::from_text(text, &v, 9).unwrap();
        let m2 = EmbeddingMatrix::<f64>::from_text(text, &v, 9).unwrap();
        let m3 = EmbeddingMatrix::<f64>::from_text(text, &v, 10).unwrap();
        let w = v.content_id("w").unwrap();
        assert_eq!(m1.row(w), m2.row(w));
        assert_ne!(m1.row(w), m3.row(w));
        assert!(m1.row(w).unwrap().iter().all(|x| x.is_finite()));
    }

    #[test]
    fn dimension_mismatch() {
        let v = vocab("a");
        let mut text = String::new();
        text.push('a');
        for i in 0..50 {
            text.push_str(&alloc::format!(" {i}"));
        }
        text.push_str("\nb");
        for i in 0..51 {
            text.push_str(&alloc::format!(" {i}"));
        }
        let err = EmbeddingMatrix::<f32>::from_text(&text, &v, 0).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 50, found: 51, line: 2 });
    }

    #[test]
    fn malformed_number() {
        let v = vocab("a");
        assert!(matches!(EmbeddingMatrix::<f32>::from_text("a 1 x\n", &v, 0), Err(Error::Parse { line: 1, .. })));
    }
}
