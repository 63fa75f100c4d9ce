//! Token sequences, the frozen id space and numbered out-of-vocabulary slots.
//!
//! Id layout: `PAD=0, SOS=1, EOS=2, OOV_1..OOV_M = 3..=2+M, UNK = 3+M`,
//! followed by content words in descending corpus frequency.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::Deref;

use crate::{Error, Result};

pub type TokenId = u32;

pub const PAD: TokenId = 0;
pub const SOS: TokenId = 1;
pub const EOS: TokenId = 2;

pub const PAD_TOKEN: &str = "<pad>";
pub const SOS_TOKEN: &str = "<s>";
pub const EOS_TOKEN: &str = "</s>";
pub const UNK_TOKEN: &str = "<unk>";

pub const DEFAULT_NUM_OOV: usize = 10;
pub const DEFAULT_VOCAB_SIZE: usize = 20_000;

/// Literal used for numbered OOV slot `k` (1-based).
pub fn oov_literal(k: usize) -> String {
    format!("<oov{k}>")
}

/// True for any literal the id space reserves for special tokens.
pub fn is_reserved(token: &str) -> bool {
    if matches!(token, PAD_TOKEN | SOS_TOKEN | EOS_TOKEN | UNK_TOKEN) {
        return true;
    }
    token
        .strip_prefix("<oov")
        .and_then(|rest| rest.strip_suffix('>'))
        .is_some_and(|digits| !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()))
}

/// A whitespace-tokenized sentence. Tokens are nonempty and never a reserved literal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        for t in &tokens {
            if t.is_empty() || t.chars().any(char::is_whitespace) || is_reserved(t) {
                return Err(Error::InvalidToken(t.clone()));
            }
        }
        Ok(TokenSeq(tokens))
    }

    /// Wraps tokens already known to be valid (vocabulary words or input words).
    pub(crate) fn from_trusted(tokens: Vec<String>) -> Self {
        TokenSeq(tokens)
    }

    /// Splits a line on whitespace.
    pub fn parse(line: &str) -> Result<Self> {
        Self::new(line.split_whitespace().map(ToString::to_string).collect())
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    /// Tokens joined by single spaces.
    pub fn join(&self) -> String {
        self.0.join(" ")
    }

    /// First `n` tokens (all of them when shorter).
    pub fn prefix(&self, n: usize) -> TokenSeq {
        TokenSeq(self.0[..n.min(self.0.len())].to_vec())
    }
}

impl Deref for TokenSeq {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

/// Frozen mapping between tokens and ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: BTreeMap<String, TokenId>,
    num_oov: usize,
}

impl Vocabulary {
    /// Keeps the `size` most frequent tokens of `corpus`. Ties go to the token seen first.
    pub fn build<'a, I>(corpus: I, size: usize) -> Result<Self>
    where
        I: IntoIterator<Item = &'a TokenSeq>,
    {
        Self::build_with_oov(corpus, size, DEFAULT_NUM_OOV)
    }

    pub fn build_with_oov<'a, I>(corpus: I, size: usize, num_oov: usize) -> Result<Self>
    where
        I: IntoIterator<Item = &'a TokenSeq>,
    {
        if size == 0 {
            return Err(Error::InvalidConfig("vocabulary size must be at least 1".into()));
        }
        // token -> (count, first occurrence)
        let mut counts: BTreeMap<&'a str, (u64, usize)> = BTreeMap::new();
        let mut position = 0usize;
        let mut sentences = 0usize;
        for sentence in corpus {
            sentences += 1;
            for tok in sentence.iter() {
                counts.entry(tok.as_str()).or_insert((0, position)).0 += 1;
                position += 1;
            }
        }
        if sentences == 0 || counts.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut ranked: Vec<(&str, u64, usize)> = counts.into_iter().map(|(t, (c, first))| (t, c, first)).collect();
        ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
        ranked.truncate(size);
        Self::from_content(ranked.into_iter().map(|(t, _, _)| t.to_string()), num_oov)
    }

    /// Builds a vocabulary from content words already in id order.
    pub fn from_content<I>(content: I, num_oov: usize) -> Result<Self>
    where
        I: IntoIterator<Item = String>,
    {
        let mut tokens = Self::special_literals(num_oov);
        let mut ids = BTreeMap::new();
        for (i, t) in tokens.iter().enumerate() {
            ids.insert(t.clone(), i as TokenId);
        }
        for t in content {
            if t.is_empty() || is_reserved(&t) {
                return Err(Error::InvalidToken(t));
            }
            if ids.contains_key(&t) {
                return Err(Error::InvalidToken(t));
            }
            ids.insert(t.clone(), tokens.len() as TokenId);
            tokens.push(t);
        }
        Ok(Vocabulary { tokens, ids, num_oov })
    }

    /// Inverse of [`Vocabulary::all_tokens`]: checks the special prefix and rebuilds.
    pub fn from_all_tokens(all: Vec<String>, num_oov: usize) -> Result<Self> {
        let specials = Self::special_literals(num_oov);
        if all.len() < specials.len() || all[..specials.len()] != specials[..] {
            return Err(Error::InvalidConfig("vocabulary does not start with the expected special tokens".into()));
        }
        let n = specials.len();
        Self::from_content(all.into_iter().skip(n), num_oov)
    }

    fn special_literals(num_oov: usize) -> Vec<String> {
        let mut v = Vec::with_capacity(num_oov + 4);
        v.push(PAD_TOKEN.to_string());
        v.push(SOS_TOKEN.to_string());
        v.push(EOS_TOKEN.to_string());
        v.extend((1..=num_oov).map(oov_literal));
        v.push(UNK_TOKEN.to_string());
        v
    }

    pub fn num_oov(&self) -> usize {
        self.num_oov
    }

    pub fn num_specials(&self) -> usize {
        self.num_oov + 4
    }

    /// Id of numbered OOV slot `k` (1-based).
    pub fn oov_id(&self, k: usize) -> TokenId {
        debug_assert!(k >= 1 && k <= self.num_oov);
        (2 + k) as TokenId
    }

    /// Slot number of `id` if it is a numbered OOV id.
    pub fn oov_slot(&self, id: TokenId) -> Option<usize> {
        let id = id as usize;
        (id >= 3 && id < 3 + self.num_oov).then(|| id - 2)
    }

    pub fn unk(&self) -> TokenId {
        (3 + self.num_oov) as TokenId
    }

    pub fn is_special(&self, id: TokenId) -> bool {
        (id as usize) < self.num_specials()
    }

    /// Number of content words.
    pub fn size_content(&self) -> usize {
        self.tokens.len() - self.num_specials()
    }

    /// Total id-space size, specials included.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.size_content() == 0
    }

    pub fn id_of(&self, token: &str) -> Option<TokenId> {
        self.ids.get(token).copied()
    }

    /// Content-word id of `token`; specials are never returned.
    pub fn content_id(&self, token: &str) -> Option<TokenId> {
        self.id_of(token).filter(|&id| !self.is_special(id))
    }

    pub fn token_of(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    /// Content words in id order.
    pub fn content(&self) -> &[String] {
        &self.tokens[self.num_specials()..]
    }

    /// Every token in id order, specials first.
    pub fn all_tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Per-sentence map from numbered OOV slots to surface words.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OovTable {
    slots: Vec<String>,
}

impl OovTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Surface word in slot `k` (1-based).
    pub fn get(&self, k: usize) -> Option<&str> {
        k.checked_sub(1).and_then(|i| self.slots.get(i)).map(String::as_str)
    }

    /// Slot (1-based) holding `word`.
    pub fn slot_of(&self, word: &str) -> Option<usize> {
        self.slots.iter().position(|w| w == word).map(|i| i + 1)
    }

    /// Slots in index order as `(k, word)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &str)> {
        self.slots.iter().enumerate().map(|(i, w)| (i + 1, w.as_str()))
    }

    fn assign(&mut self, word: &str, max_oov: usize) -> Option<usize> {
        if let Some(k) = self.slot_of(word) {
            return Some(k);
        }
        if self.slots.len() >= max_oov {
            return None;
        }
        self.slots.push(word.to_string());
        Some(self.slots.len())
    }
}

/// Encodes `sentence`, numbering OOV words in order of first appearance.
pub fn encode_with_oov(sentence: &[String], vocab: &Vocabulary, max_oov: usize) -> (Vec<TokenId>, OovTable) {
    let mut table = OovTable::new();
    let ids = encode_extending(sentence, vocab, &mut table, max_oov);
    (ids, table)
}

/// Encodes `tokens`, reusing the slots already in `table` and appending new ones.
///
/// Distinct OOV words past `max_oov` slots (capped at the vocabulary's pool) become UNK.
pub fn encode_extending(tokens: &[String], vocab: &Vocabulary, table: &mut OovTable, max_oov: usize) -> Vec<TokenId> {
    let max_oov = max_oov.min(vocab.num_oov());
    tokens
        .iter()
        .map(|tok| match vocab.content_id(tok) {
            Some(id) => id,
            None => match table.assign(tok, max_oov) {
                Some(k) => vocab.oov_id(k),
                None => vocab.unk(),
            },
        })
        .collect()
}

/// Maps ids back to surface tokens. OOV ids without a slot in `table` become `<unk>`.
pub fn decode_with_oov(ids: &[TokenId], vocab: &Vocabulary, table: &OovTable) -> Vec<String> {
    ids.iter()
        .map(|&id| {
            if let Some(k) = vocab.oov_slot(id) {
                table.get(k).unwrap_or(UNK_TOKEN).to_string()
            } else {
                vocab.token_of(id).unwrap_or(UNK_TOKEN).to_string()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn seq(s: &str) -> TokenSeq {
        TokenSeq::parse(s).unwrap()
    }

    fn strings(s: &str) -> Vec<String> {
        s.split(' ').map(ToString::to_string).collect()
    }

    #[test]
    fn frequency_then_first_occurrence() {
        let corpus = vec![seq("a b a"), seq("b c")];
        let v = Vocabulary::build(&corpus, 2).unwrap();
        assert_eq!(v.content(), &["a".to_string(), "b".to_string()]);
        assert_eq!(v.content_id("c"), None);
        assert_eq!(v.size_content(), 2);
    }

    #[test]
    fn fewer_tokens_than_size() {
        let corpus = vec![seq("x")];
        let v = Vocabulary::build(&corpus, 20_000).unwrap();
        assert_eq!(v.content(), &["x".to_string()]);
        assert_eq!(v.len(), 1 + v.num_specials());
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let corpus: Vec<TokenSeq> = vec![];
        assert_eq!(Vocabulary::build(&corpus, 5), Err(Error::EmptyCorpus));
        assert_eq!(Vocabulary::build(&[TokenSeq::default()], 5), Err(Error::EmptyCorpus));
    }

    #[test]
    fn special_ids_form_a_prefix() {
        let v = Vocabulary::build(&[seq("w")], 1).unwrap();
        assert_eq!(v.token_of(PAD), Some(PAD_TOKEN));
        assert_eq!(v.token_of(SOS), Some(SOS_TOKEN));
        assert_eq!(v.token_of(EOS), Some(EOS_TOKEN));
        assert_eq!(v.token_of(3), Some("<oov1>"));
        assert_eq!(v.token_of(12), Some("<oov10>"));
        assert_eq!(v.unk(), 13);
        assert_eq!(v.token_of(13), Some(UNK_TOKEN));
        assert_eq!(v.content_id("w"), Some(14));
        for id in 0..v.len() as TokenId {
            assert_eq!(v.id_of(v.token_of(id).unwrap()), Some(id));
        }
    }

    #[test]
    fn reserved_literals_rejected() {
        assert!(TokenSeq::parse("a <unk> b").is_err());
        assert!(TokenSeq::parse("<oov3>").is_err());
        assert!(TokenSeq::parse("<oov>").is_ok());
        assert!(TokenSeq::new(vec![String::new()]).is_err());
    }

    #[test]
    fn numbered_oov_encoding() {
        let v = Vocabulary::from_content(strings("bought from"), 10).unwrap();
        let s = strings("volvo bought gigaword from volvo");
        let (ids, table) = encode_with_oov(&s, &v, 10);
        let bought = v.content_id("bought").unwrap();
        let from = v.content_id("from").unwrap();
        assert_eq!(ids, vec![v.oov_id(1), bought, v.oov_id(2), from, v.oov_id(1)]);
        assert_eq!(table.get(1), Some("volvo"));
        assert_eq!(table.get(2), Some("gigaword"));
        assert_eq!(table.len(), 2);
        assert_eq!(decode_with_oov(&ids, &v, &table), s);
    }

    #[test]
    fn in_vocab_only_gives_empty_table() {
        let v = Vocabulary::from_content(strings("a b c"), 10).unwrap();
        let s = strings("c a b");
        let (ids, table) = encode_with_oov(&s, &v, 10);
        assert!(table.is_empty());
        assert_eq!(decode_with_oov(&ids, &v, &table), s);
    }

    #[test]
    fn overflow_maps_to_unk() {
        let v = Vocabulary::from_content(strings("a"), 10).unwrap();
        let s: Vec<String> = (0..11).map(|i| format!("w{i}")).collect();
        let (ids, table) = encode_with_oov(&s, &v, 10);
        assert_eq!(table.len(), 10);
        assert_eq!(ids[9], v.oov_id(10));
        assert_eq!(ids[10], v.unk());
    }

    #[test]
    fn missing_slot_decodes_to_unk() {
        let v = Vocabulary::from_content(strings("a"), 10).unwrap();
        let mut table = OovTable::new();
        let _ = encode_extending(&strings("x y"), &v, &mut table, 10);
        let ids = [v.oov_id(1), v.oov_id(3), v.content_id("a").unwrap()];
        assert_eq!(decode_with_oov(&ids, &v, &table), strings("x <unk> a"));
    }

    #[test]
    fn second_pass_extends_table() {
        let v = Vocabulary::from_content(strings("a"), 10).unwrap();
        let (_, mut table) = encode_with_oov(&strings("volvo a"), &v, 10);
        let ids = encode_extending(&strings("nasdaq volvo"), &v, &mut table, 10);
        assert_eq!(ids, vec![v.oov_id(2), v.oov_id(1)]);
        assert_eq!(table.get(2), Some("nasdaq"));
    }

    #[test]
    fn round_trip_through_all_tokens() {
        let v = Vocabulary::build(&[seq("a b c a")], 10).unwrap();
        let w = Vocabulary::from_all_tokens(v.all_tokens().to_vec(), 10).unwrap();
        assert_eq!(v, w);
        assert!(Vocabulary::from_all_tokens(strings("a b"), 10).is_err());
    }
}
