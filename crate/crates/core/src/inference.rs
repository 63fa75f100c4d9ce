//! Greedy length-controlled decoding.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::Error;
use crate::linalg::argmax;
use crate::model::{ModelParams, SentenceEmbedder};
use crate::real::Real;
use crate::vocab::{decode_with_oov, encode_with_oov, TokenId, TokenSeq, Vocabulary, EOS, PAD, SOS};
use crate::Result;

/// Extra decoding steps allowed past the requested length.
pub const MAX_STEPS_SLACK: usize = 5;

/// Number of words taken by the first-words baseline.
pub const F8W_WORDS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetLength {
    Tokens(usize),
    /// Fraction of the input length, floored, at least 1.
    Ratio(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeSpec {
    pub target: TargetLength,
    /// Hard cap on emitted tokens; `None` means target length plus five.
    pub max_steps: Option<usize>,
}

impl Default for DecodeSpec {
    fn default() -> Self {
        DecodeSpec::ratio(0.5)
    }
}

impl DecodeSpec {
    pub fn ratio(r: f64) -> Self {
        DecodeSpec { target: TargetLength::Ratio(r), max_steps: None }
    }

    pub fn tokens(n: usize) -> Self {
        DecodeSpec { target: TargetLength::Tokens(n), max_steps: None }
    }

    pub fn validate(&self) -> Result<()> {
        match self.target {
            TargetLength::Tokens(0) => Err(Error::InvalidConfig("target length must be at least 1".into())),
            TargetLength::Ratio(r) if !(r > 0.0 && r.is_finite()) => {
                Err(Error::InvalidConfig("length ratio must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    /// Target length for an input of `input_len` tokens.
    pub fn target_len(&self, input_len: usize) -> usize {
        match self.target {
            TargetLength::Tokens(n) => n.max(1),
            TargetLength::Ratio(r) => {
                let t = num_traits::Float::floor(input_len as f64 * r + 1e-9);
                (t as usize).max(1)
            }
        }
    }

    pub fn max_steps(&self, input_len: usize) -> usize {
        let t = self.target_len(input_len);
        self.max_steps.map_or(t + MAX_STEPS_SLACK, |m| m.max(t))
    }
}

/// Greedy argmax decoding driven by `step(prev, countdown) -> logits`.
///
/// The countdown starts at `countdown_len - 1` and drops by one per step. PAD
/// and SOS are never chosen. Stops after EOS (not included) or `max_steps`
/// emitted tokens.
pub fn greedy_decode<F, S>(countdown_len: usize, max_steps: usize, mut step: S) -> Vec<TokenId>
where
    F: Real,
    S: FnMut(TokenId, i64) -> Vec<F>,
{
    let mut out = Vec::new();
    let mut prev = SOS;
    for t in 0..max_steps {
        let countdown = countdown_len as i64 - (t as i64 + 1);
        let mut logits = step(prev, countdown);
        for special in [PAD, SOS] {
            if let Some(l) = logits.get_mut(special as usize) {
                *l = F::neg_infinity();
            }
        }
        let next = argmax(&logits) as TokenId;
        if next == EOS {
            break;
        }
        out.push(next);
        prev = next;
    }
    out
}

/// Compresses `sentence` to the length requested by `spec`.
///
/// Numbered OOV ids are restored through the sentence's own table; ids
/// without a surface form and special tokens are dropped.
pub fn compress<F: Real>(
    sentence: &[String],
    spec: &DecodeSpec,
    model: &ModelParams<F>,
    vocab: &Vocabulary,
    embedder: Option<&dyn SentenceEmbedder<F>>,
) -> Result<TokenSeq> {
    if sentence.is_empty() {
        return Err(Error::EmptyInput);
    }
    spec.validate()?;
    let (ids, table) = encode_with_oov(sentence, vocab, model.config().num_oov);
    let enc = model.encode(&ids)?;
    let sent_emb = match embedder {
        Some(e) if model.config().use_conditioning => Some(e.embed(sentence)),
        _ => None,
    };
    let mut state = model.init_decoder(&enc, sent_emb.as_deref())?;
    let target_len = spec.target_len(sentence.len());
    let raw = greedy_decode(target_len + 1, spec.max_steps(sentence.len()), |prev, countdown| {
        let out = model.decode_step(&state, prev, countdown, &enc);
        state = out.state;
        out.logits
    });
    let kept: Vec<TokenId> = raw
        .into_iter()
        .filter(|&id| match vocab.oov_slot(id) {
            Some(k) => table.get(k).is_some(),
            None => !vocab.is_special(id),
        })
        .collect();
    Ok(TokenSeq::from_trusted(decode_with_oov(&kept, vocab, &table)))
}

/// One [`compress`] call per requested length.
pub fn compress_sweep<F: Real>(
    sentence: &[String],
    lengths: &[usize],
    model: &ModelParams<F>,
    vocab: &Vocabulary,
    embedder: Option<&dyn SentenceEmbedder<F>>,
) -> Result<Vec<(usize, TokenSeq)>> {
    lengths
        .iter()
        .map(|&n| compress(sentence, &DecodeSpec::tokens(n), model, vocab, embedder).map(|s| (n, s)))
        .collect()
}

/// The first eight tokens of `sentence`.
pub fn baseline_f8w(sentence: &[String]) -> Vec<String> {
    sentence[..sentence.len().min(F8W_WORDS)].to_vec()
}
