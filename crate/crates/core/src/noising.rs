//! Additive noising: extend a reference with words sub-sampled from other
//! sentences, then shuffle, producing `(noised input, reference)` pairs.

use alloc::vec::Vec;
use rand::seq::{index, SliceRandom};
use rand::Rng as _;

use crate::rng::Rng;
use crate::vocab::{encode_extending, encode_with_oov, OovTable, TokenId, TokenSeq, Vocabulary, DEFAULT_NUM_OOV, EOS};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShuffleMode {
    Unigram,
    Bigram,
}

impl ShuffleMode {
    pub fn name(self) -> &'static str {
        match self {
            ShuffleMode::Unigram => "unigram",
            ShuffleMode::Bigram => "bigram",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "unigram" | "1g" | "1-g" => Some(ShuffleMode::Unigram),
            "bigram" | "2g" | "2-g" => Some(ShuffleMode::Bigram),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub extension_min: f64,
    pub extension_max: f64,
    pub donors: usize,
    pub shuffle_mode: ShuffleMode,
    pub max_oov: usize,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            extension_min: 0.40,
            extension_max: 0.60,
            donors: 2,
            shuffle_mode: ShuffleMode::Bigram,
            max_oov: DEFAULT_NUM_OOV,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.extension_min > 0.0 && self.extension_min <= self.extension_max) {
            return Err(Error::InvalidConfig("need 0 < extension_min <= extension_max".into()));
        }
        if self.donors == 0 {
            return Err(Error::InvalidConfig("donors must be at least 1".into()));
        }
        Ok(())
    }

    /// Inclusive range of extra-word counts for a reference of length `len`.
    pub fn extra_range(&self, len: usize) -> (usize, usize) {
        const SLACK: f64 = 1e-9;
        let l = len as f64;
        let lo = libm_ceil(self.extension_min * l - SLACK).max(1);
        let hi = libm_floor(self.extension_max * l + SLACK).max(lo);
        (lo, hi)
    }
}

fn libm_ceil(x: f64) -> usize {
    num_traits::Float::ceil(x).max(0.0) as usize
}

fn libm_floor(x: f64) -> usize {
    num_traits::Float::floor(x).max(0.0) as usize
}

/// Read access to a corpus of sentences.
pub trait SentencePool {
    fn sentence_count(&self) -> usize;
    fn sentence(&self, index: usize) -> &[alloc::string::String];
}

impl SentencePool for [TokenSeq] {
    fn sentence_count(&self) -> usize {
        self.len()
    }

    fn sentence(&self, index: usize) -> &[alloc::string::String] {
        &self[index]
    }
}

impl SentencePool for Vec<TokenSeq> {
    fn sentence_count(&self) -> usize {
        self.len()
    }

    fn sentence(&self, index: usize) -> &[alloc::string::String] {
        &self[index]
    }
}

/// Splits `k` across `donors` as evenly as possible, earlier donors taking the remainder.
pub fn donor_quotas(k: usize, donors: usize) -> Vec<usize> {
    let base = k / donors;
    let rem = k % donors;
    (0..donors).map(|i| base + usize::from(i < rem)).collect()
}

/// Draws `count` distinct sentence indices uniformly, never `exclude`.
fn pick_donors<P: SentencePool + ?Sized>(pool: &P, exclude: Option<usize>, count: usize, rng: &mut Rng) -> Vec<usize> {
    let n = pool.sentence_count();
    let candidates = match exclude {
        Some(e) if e < n => n - 1,
        _ => n,
    };
    let take = count.min(candidates);
    index::sample(rng, candidates, take)
        .into_iter()
        .map(|i| match exclude {
            Some(e) if i >= e => i + 1,
            _ => i,
        })
        .collect()
}

/// Sub-samples extra words for a reference of length `reference_len`.
///
/// `exclude` is the reference's own index in `pool`, if it is there.
pub fn sample_noise_words<P: SentencePool + ?Sized>(
    reference_len: usize,
    pool: &P,
    exclude: Option<usize>,
    cfg: &NoiseConfig,
    rng: &mut Rng,
) -> Vec<alloc::string::String> {
    let (lo, hi) = cfg.extra_range(reference_len.max(1));
    let k = rng.gen_range(lo..=hi);
    let quotas = donor_quotas(k, cfg.donors);
    let donors = pick_donors(pool, exclude, cfg.donors, rng);

    let mut out = Vec::with_capacity(k);
    let mut carry = 0usize;
    for (donor, quota) in donors.iter().zip(quotas) {
        let words = pool.sentence(*donor);
        let need = quota + carry;
        let take = need.min(words.len());
        carry = need - take;
        let mut picked = index::sample(rng, words.len(), take).into_vec();
        picked.sort_unstable();
        out.extend(picked.into_iter().map(|i| words[i].clone()));
    }
    out
}

/// Uniform random permutation.
pub fn shuffle_unigram<T: Clone>(seq: &[T], rng: &mut Rng) -> Vec<T> {
    let mut out = seq.to_vec();
    out.shuffle(rng);
    out
}

/// Permutes adjacent pairs `(seq[2i], seq[2i+1])` as units; an odd tail stays a singleton unit.
pub fn shuffle_bigram<T: Clone>(seq: &[T], rng: &mut Rng) -> Vec<T> {
    let mut units: Vec<&[T]> = seq.chunks(2).collect();
    units.shuffle(rng);
    units.into_iter().flat_map(|u| u.iter().cloned()).collect()
}

pub fn shuffle<T: Clone>(seq: &[T], mode: ShuffleMode, rng: &mut Rng) -> Vec<T> {
    match mode {
        ShuffleMode::Unigram => shuffle_unigram(seq, rng),
        ShuffleMode::Bigram => shuffle_bigram(seq, rng),
    }
}

/// One training triple: encoder input, decoder target (ending in EOS) and the
/// countdown length the decoder is told to produce.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoisedExample {
    pub input_ids: Vec<TokenId>,
    pub target_ids: Vec<TokenId>,
    pub countdown_len: usize,
    pub oov_table: OovTable,
}

impl NoisedExample {
    /// Pairs `input` with `target`, sharing one OOV numbering (input first).
    pub fn paired(
        input: &[alloc::string::String],
        target: &[alloc::string::String],
        vocab: &Vocabulary,
        max_oov: usize,
    ) -> Result<Self> {
        if input.is_empty() || target.is_empty() {
            return Err(Error::EmptyInput);
        }
        let (input_ids, mut table) = encode_with_oov(input, vocab, max_oov);
        let mut target_ids = encode_extending(target, vocab, &mut table, max_oov);
        target_ids.push(EOS);
        Ok(NoisedExample { input_ids, countdown_len: target_ids.len(), target_ids, oov_table: table })
    }
}

/// Builds a denoising example from `reference`.
///
/// Reference OOV words are numbered first; noise OOV words extend the same
/// table afterwards, so the reference always holds the lower slots.
pub fn make_training_example<P: SentencePool + ?Sized>(
    reference: &[alloc::string::String],
    pool: &P,
    exclude: Option<usize>,
    vocab: &Vocabulary,
    cfg: &NoiseConfig,
    rng: &mut Rng,
) -> Result<NoisedExample> {
    if reference.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (ref_ids, mut table) = encode_with_oov(reference, vocab, cfg.max_oov);
    let noise = sample_noise_words(reference.len(), pool, exclude, cfg, rng);
    let noise_ids = encode_extending(&noise, vocab, &mut table, cfg.max_oov);

    let mut combined = ref_ids.clone();
    combined.extend_from_slice(&noise_ids);
    let input_ids = shuffle(&combined, cfg.shuffle_mode, rng);

    let mut target_ids = ref_ids;
    target_ids.push(EOS);
    Ok(NoisedExample { input_ids, countdown_len: target_ids.len(), target_ids, oov_table: table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use alloc::string::{String, ToString};
    use alloc::vec;

    fn seq(s: &str) -> TokenSeq {
        TokenSeq::parse(s).unwrap()
    }

    #[test]
    fn extra_range_band() {
        let cfg = NoiseConfig::default();
        assert_eq!(cfg.extra_range(10), (4, 6));
        assert_eq!(cfg.extra_range(1), (1, 1));
        assert_eq!(cfg.extra_range(15), (6, 9));
        assert_eq!(cfg.extra_range(5), (2, 3));
    }

    #[test]
    fn quota_split() {
        assert_eq!(donor_quotas(5, 2), vec![3, 2]);
        assert_eq!(donor_quotas(4, 2), vec![2, 2]);
        assert_eq!(donor_quotas(1, 2), vec![1, 0]);
        assert_eq!(donor_quotas(7, 3), vec![3, 2, 2]);
        for k in 0..40 {
            for d in 1..6 {
                assert_eq!(donor_quotas(k, d).iter().sum::<usize>(), k);
            }
        }
    }

    #[test]
    fn donor_shortfall_moves_to_next_donor() {
        // Force k = 4 with a reference of length 10 and a band of exactly 0.4.
        let cfg = NoiseConfig { extension_min: 0.4, extension_max: 0.4, ..NoiseConfig::default() };
        let pool = vec![seq("lonely"), seq("p q r s t u v")];
        for s in 0..50 {
            let mut rng = rng_from_seed(s);
            let words = sample_noise_words(10, &pool, None, &cfg, &mut rng);
            assert_eq!(words.iter().filter(|w| *w == "lonely").count(), 1);
            if words[0] == "lonely" {
                // quotas (2, 2): the second donor absorbs the missing word
                assert_eq!(words.len(), 4);
            } else {
                // last donor short: nothing left to reassign to
                assert_eq!(words.len(), 3);
                assert_eq!(words[2], "lonely");
            }
        }
    }

    #[test]
    fn exhausted_donors_return_fewer_words() {
        let cfg = NoiseConfig { extension_min: 0.6, extension_max: 0.6, ..NoiseConfig::default() };
        let pool = vec![seq("a"), seq("b c")];
        let mut rng = rng_from_seed(3);
        let words = sample_noise_words(20, &pool, None, &cfg, &mut rng);
        assert_eq!(words.len(), 3);
    }

    #[test]
    fn reference_is_never_a_donor() {
        let pool = vec![seq("ref ref ref"), seq("x"), seq("y")];
        let cfg = NoiseConfig::default();
        for s in 0..100 {
            let mut rng = rng_from_seed(s);
            let words = sample_noise_words(3, &pool, Some(0), &cfg, &mut rng);
            assert!(words.iter().all(|w| w != "ref"));
        }
    }

    #[test]
    fn shuffles_of_small_inputs() {
        let mut rng = rng_from_seed(0);
        assert!(shuffle_unigram::<u32>(&[], &mut rng).is_empty());
        assert_eq!(shuffle_unigram(&[5u32], &mut rng), vec![5]);
        assert!(shuffle_bigram::<u32>(&[], &mut rng).is_empty());
        let mut seen = alloc::collections::BTreeSet::new();
        for _ in 0..200 {
            seen.insert(shuffle_bigram(&['a', 'b', 'c', 'd'], &mut rng));
        }
        assert_eq!(seen.into_iter().collect::<Vec<_>>(), vec![vec!['a', 'b', 'c', 'd'], vec!['c', 'd', 'a', 'b']]);
        let mut seen = alloc::collections::BTreeSet::new();
        for _ in 0..200 {
            seen.insert(shuffle_bigram(&['a', 'b', 'c'], &mut rng));
        }
        assert_eq!(seen.into_iter().collect::<Vec<_>>(), vec![vec!['a', 'b', 'c'], vec!['c', 'a', 'b']]);
    }

    fn toy() -> (Vec<TokenSeq>, Vocabulary) {
        let pool = vec![
            seq("the company reported a loss on tuesday in the city"),
            seq("stocks rose sharply on nasdaq today amid hopes"),
            seq("officials said talks would resume next week"),
        ];
        let vocab = Vocabulary::build(&pool, 12).unwrap();
        (pool, vocab)
    }

    #[test]
    fn example_lengths_and_eos() {
        let (pool, vocab) = toy();
        let reference: Vec<String> = "a b c d e f g h i j".split(' ').map(ToString::to_string).collect();
        for s in 0..100 {
            let mut rng = rng_from_seed(s);
            let ex = make_training_example(&reference, &pool, None, &vocab, &NoiseConfig::default(), &mut rng).unwrap();
            assert!((14..=16).contains(&ex.input_ids.len()), "{}", ex.input_ids.len());
            assert_eq!(ex.target_ids.len(), 11);
            assert_eq!(ex.countdown_len, 11);
            assert_eq!(*ex.target_ids.last().unwrap(), EOS);
        }
    }

    #[test]
    fn two_pass_numbering() {
        let pool = vec![seq("nasdaq")];
        let vocab = Vocabulary::from_content(["bought".to_string()], 10).unwrap();
        let reference: Vec<String> = vec!["volvo".into(), "bought".into()];
        for s in 0..20 {
            let mut rng = rng_from_seed(s);
            let ex = make_training_example(&reference, &pool, None, &vocab, &NoiseConfig::default(), &mut rng).unwrap();
            assert_eq!(ex.oov_table.get(1), Some("volvo"));
            assert_eq!(ex.oov_table.get(2), Some("nasdaq"));
        }
    }

    #[test]
    fn one_word_reference() {
        let (pool, vocab) = toy();
        let mut rng = rng_from_seed(1);
        let ex =
            make_training_example(&["x".to_string()], &pool, None, &vocab, &NoiseConfig::default(), &mut rng).unwrap();
        assert_eq!(ex.input_ids.len(), 2);
        assert_eq!(ex.target_ids.len(), 2);
    }

    #[test]
    fn same_seed_same_example() {
        let (pool, vocab) = toy();
        let reference = pool[0].clone();
        let a =
            make_training_example(&reference, &pool, Some(0), &vocab, &NoiseConfig::default(), &mut rng_from_seed(42))
                .unwrap();
        let b =
            make_training_example(&reference, &pool, Some(0), &vocab, &NoiseConfig::default(), &mut rng_from_seed(42))
                .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        assert!(NoiseConfig::default().validate().is_ok());
        assert!(NoiseConfig { extension_min: 0.7, ..NoiseConfig::default() }.validate().is_err());
        assert!(NoiseConfig { extension_min: 0.0, ..NoiseConfig::default() }.validate().is_err());
        assert!(NoiseConfig { donors: 0, ..NoiseConfig::default() }.validate().is_err());
    }
}
