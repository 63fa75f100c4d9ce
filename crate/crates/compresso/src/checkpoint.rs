//! Versioned binary checkpoints.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! "compresso-ckpt v1\n"
//! u8        float width in bytes: 4 (f32) or 8 (f64, grad-check mode)
//! u64 x 6   emb_dim, hidden, layers, vocab_size, num_oov, sent_emb_dim
//! u8 x 2    use_attention, use_conditioning
//! u64       token count, then per token: u32 byte length + UTF-8 (id order)
//! u64       settings text length, then UTF-8 `key = value` lines
//! u64       parameter count, then the trainable parameters in layout order
//! u64 x 2   word-vector rows and width, then the rows (content words only)
//! u8        1 if optimiser state follows, else 0
//!   u64 step, f64 lr, u64 seed
//!   u64 adam_t, f64 beta1, f64 beta2, f64 epsilon
//!   parameter-count first moments, then as many second moments
//! ```

use std::path::Path;
use std::sync::Arc;

use compresso_core::optim::{Adam, AdamConfig};
use compresso_core::{EmbeddingMatrix, ModelConfig, ModelParams, Real, TrainState, Vocabulary};

use crate::error::{Error, Result};
use crate::fsutil::{read_bytes, write_atomic};

pub const HEADER: &[u8] = b"compresso-ckpt v1\n";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<F> {
    pub params: ModelParams<F>,
    pub vocab: Vocabulary,
    /// Settings the model was trained with, as `key = value` text.
    pub settings: String,
    pub state: Option<TrainState<F>>,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn bytes(&mut self, b: &[u8]) {
        self.usize(b.len());
        self.0.extend_from_slice(b);
    }
    fn floats<F: Real>(&mut self, v: &[F]) {
        for &x in v {
            x.write_le(&mut self.0);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or(Error::Truncated)?;
        let s = self.buf.get(self.pos..end).ok_or(Error::Truncated)?;
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Config("checkpoint count does not fit in memory".into()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn bool(&mut self) -> Result<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(Error::Config(format!("corrupt checkpoint flag {b}"))),
        }
    }
    fn string(&mut self, len: usize) -> Result<String> {
        String::from_utf8(self.take(len)?.to_vec()).map_err(|_| Error::Config("checkpoint text is not UTF-8".into()))
    }
    fn floats<F: Real>(&mut self, n: usize) -> Result<Vec<F>> {
        let bytes = self.take(n.checked_mul(F::BYTES).ok_or(Error::Truncated)?)?;
        Ok(bytes.chunks_exact(F::BYTES).map(F::read_le).collect())
    }
}

pub fn encode<F: Real>(ckpt: &Checkpoint<F>) -> Vec<u8> {
    let mut w = Writer(HEADER.to_vec());
    w.u8(F::BYTES as u8);
    let c = ckpt.params.config();
    for v in [c.emb_dim, c.hidden, c.layers, c.vocab_size, c.num_oov, c.sent_emb_dim] {
        w.usize(v);
    }
    w.u8(c.use_attention.into());
    w.u8(c.use_conditioning.into());

    let tokens = ckpt.vocab.all_tokens();
    w.usize(tokens.len());
    for t in tokens {
        w.u32(t.len() as u32);
        w.0.extend_from_slice(t.as_bytes());
    }
    w.bytes(ckpt.settings.as_bytes());

    w.usize(ckpt.params.len());
    w.floats(ckpt.params.values());
    let emb = ckpt.params.embeddings();
    w.usize(emb.rows());
    w.usize(emb.dim());
    w.floats(emb.raw());

    match &ckpt.state {
        None => w.u8(0),
        Some(s) => {
            w.u8(1);
            w.u64(s.step);
            w.f64(s.lr);
            w.u64(s.seed);
            w.u64(s.adam.t);
            w.f64(s.adam.config.beta1);
            w.f64(s.adam.config.beta2);
            w.f64(s.adam.config.epsilon);
            w.floats(&s.adam.m);
            w.floats(&s.adam.v);
        }
    }
    w.0
}

/// Float width recorded in `bytes`, after checking the header.
pub fn precision(bytes: &[u8]) -> Result<usize> {
    let mut r = Reader { buf: bytes, pos: 0 };
    check_header(&mut r)?;
    Ok(r.u8()? as usize)
}

fn check_header(r: &mut Reader<'_>) -> Result<()> {
    let line_end = r.buf.iter().position(|&b| b == b'\n').map_or(r.buf.len(), |i| i + 1);
    let first = &r.buf[..line_end.min(64)];
    if first != HEADER {
        if first.len() < HEADER.len() && HEADER.starts_with(first) {
            return Err(Error::Truncated);
        }
        return Err(Error::Version(String::from_utf8_lossy(first).trim_end().to_string()));
    }
    r.pos = HEADER.len();
    Ok(())
}

pub fn decode<F: Real>(bytes: &[u8]) -> Result<Checkpoint<F>> {
    let mut r = Reader { buf: bytes, pos: 0 };
    check_header(&mut r)?;
    let width = r.u8()? as usize;
    if width != F::BYTES {
        return Err(Error::Precision { expected: F::BYTES, found: width });
    }
    let mut dims = [0usize; 6];
    for d in &mut dims {
        *d = r.usize()?;
    }
    let [emb_dim, hidden, layers, vocab_size, num_oov, sent_emb_dim] = dims;
    let cfg = ModelConfig {
        emb_dim,
        hidden,
        layers,
        vocab_size,
        num_oov,
        use_attention: r.bool()?,
        use_conditioning: r.bool()?,
        sent_emb_dim,
    };

    let n_tokens = r.usize()?;
    let mut tokens = Vec::with_capacity(n_tokens.min(1 << 20));
    for _ in 0..n_tokens {
        let len = r.u32()? as usize;
        tokens.push(r.string(len)?);
    }
    let vocab = Vocabulary::from_all_tokens(tokens, num_oov)?;
    let settings_len = r.usize()?;
    let settings = r.string(settings_len)?;

    let n_params = r.usize()?;
    let values = r.floats::<F>(n_params)?;
    let rows = r.usize()?;
    let dim = r.usize()?;
    let data = r.floats::<F>(rows.checked_mul(dim).ok_or(Error::Truncated)?)?;
    let emb = EmbeddingMatrix::from_raw(dim, cfg.num_specials(), data)?;
    let params = ModelParams::from_values(cfg, Arc::new(emb), values)?;

    let state = if r.bool()? {
        let step = r.u64()?;
        let lr = r.f64()?;
        let seed = r.u64()?;
        let t = r.u64()?;
        let config = AdamConfig { beta1: r.f64()?, beta2: r.f64()?, epsilon: r.f64()? };
        let m = r.floats::<F>(n_params)?;
        let v = r.floats::<F>(n_params)?;
        Some(TrainState { step, lr, adam: Adam { config, t, m, v }, seed })
    } else {
        None
    };
    if r.pos != bytes.len() {
        return Err(Error::Config(format!("{} unexpected bytes after the checkpoint", bytes.len() - r.pos)));
    }
    Ok(Checkpoint { params, vocab, settings, state })
}

pub fn save<F: Real>(path: &Path, ckpt: &Checkpoint<F>) -> Result<()> {
    write_atomic(path, &encode(ckpt))
}

pub fn load<F: Real>(path: &Path) -> Result<Checkpoint<F>> {
    decode(&read_bytes(path)?)
}
