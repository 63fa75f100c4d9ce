//! Text formats: corpora, paired files, vocabularies and word vectors.

use std::fmt::Write as _;
use std::path::Path;

use compresso_core::eval::SkippedLine;
use compresso_core::vocab::is_reserved;
use compresso_core::{EmbeddingMatrix, TokenSeq, Vocabulary};

use crate::error::{Error, Result};
use crate::fsutil::read_to_string;

/// Reference/summary pairs in file order.
pub type Pairs = Vec<(TokenSeq, TokenSeq)>;

pub const VOCAB_HEADER: &str = "compresso-vocab v1";

/// One sentence per non-blank line.
pub fn parse_corpus(text: &str, path: &Path) -> Result<Vec<TokenSeq>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let seq = TokenSeq::parse(line).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(seq);
    }
    if out.is_empty() {
        return Err(compresso_core::Error::EmptyCorpus.into());
    }
    Ok(out)
}

pub fn read_corpus(path: &Path) -> Result<Vec<TokenSeq>> {
    parse_corpus(&read_to_string(path)?, path)
}

fn parse_pair(line: &str) -> std::result::Result<(TokenSeq, TokenSeq), String> {
    let mut parts = line.split('\t');
    let (Some(reference), Some(summary), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err("expected exactly one tab between reference and summary".into());
    };
    let reference = TokenSeq::parse(reference).map_err(|e| e.to_string())?;
    let summary = TokenSeq::parse(summary).map_err(|e| e.to_string())?;
    if reference.is_empty() || summary.is_empty() {
        return Err("empty reference or summary".into());
    }
    Ok((reference, summary))
}

/// `reference<TAB>summary` lines. Malformed lines are returned separately.
pub fn parse_paired(text: &str) -> (Pairs, Vec<SkippedLine>) {
    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_pair(line) {
            Ok(p) => pairs.push(p),
            Err(message) => skipped.push(SkippedLine { line: i + 1, message }),
        }
    }
    (pairs, skipped)
}

pub fn read_paired(path: &Path) -> Result<(Pairs, Vec<SkippedLine>)> {
    Ok(parse_paired(&read_to_string(path)?))
}

/// Like [`read_paired`], but any malformed line is an error.
pub fn read_paired_strict(path: &Path) -> Result<Pairs> {
    let (pairs, skipped) = read_paired(path)?;
    if let Some(s) = skipped.into_iter().next() {
        return Err(Error::Format { path: path.to_path_buf(), line: s.line, message: s.message });
    }
    if pairs.is_empty() {
        return Err(compresso_core::Error::EmptyCorpus.into());
    }
    Ok(pairs)
}

/// Header line, then every token in id order, specials first.
pub fn vocab_to_string(vocab: &Vocabulary) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{VOCAB_HEADER} {}", vocab.len());
    for t in vocab.all_tokens() {
        s.push_str(t);
        s.push('\n');
    }
    s
}

pub fn parse_vocab(text: &str, path: &Path) -> Result<Vocabulary> {
    let bad = |line: usize, message: String| Error::Format { path: path.to_path_buf(), line, message };
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let size: usize = header
        .strip_prefix(VOCAB_HEADER)
        .and_then(|rest| rest.trim().parse().ok())
        .ok_or_else(|| bad(1, format!("expected header \"{VOCAB_HEADER} <size>\"")))?;
    let tokens: Vec<String> = lines.map(str::to_owned).collect();
    if tokens.len() != size {
        return Err(bad(1, format!("header promises {size} tokens, found {}", tokens.len())));
    }
    let num_oov = tokens.iter().skip(3).take_while(|t| t.starts_with("<oov") && is_reserved(t)).count();
    Ok(Vocabulary::from_all_tokens(tokens, num_oov)?)
}

pub fn read_vocab(path: &Path) -> Result<Vocabulary> {
    parse_vocab(&read_to_string(path)?, path)
}

/// Word vectors in the `word v1 ... vD` text format.
pub fn read_embeddings(path: &Path, vocab: &Vocabulary, seed: u64) -> Result<EmbeddingMatrix<f32>> {
    let text = read_to_string(path)?;
    EmbeddingMatrix::from_text(&text, vocab, seed).map_err(|e| match e {
        compresso_core::Error::DimensionMismatch { line, .. } | compresso_core::Error::Parse { line, .. } => {
            Error::Format { path: path.to_path_buf(), line, message: e.to_string() }
        }
        other => other.into(),
    })
}
