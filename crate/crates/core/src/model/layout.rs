//! Offsets of every trainable tensor inside the flat parameter vector.
//!
//! Order: special/OOV embeddings; encoder layers (forward then backward
//! direction, each `wx, wh, b`); the encoder-to-decoder bridge per layer, or
//! the shared conditioning maps; decoder layers; attention; output projection.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use super::ModelConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Span {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmSpans {
    pub wx: Span,
    pub wh: Span,
    pub b: Span,
}

/// Affine maps producing the decoder's initial hidden and cell states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateMapSpans {
    pub h_w: Span,
    pub h_b: Span,
    pub c_w: Span,
    pub c_b: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttentionSpans {
    /// Query projection, `attn x hidden`.
    pub wq: Span,
    /// Key projection, `attn x 2*hidden`.
    pub wk: Span,
    pub b: Span,
    pub v: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub special_emb: Span,
    pub encoder: Vec<[LstmSpans; 2]>,
    /// One per layer when conditioning is off.
    pub bridge: Vec<StateMapSpans>,
    /// Shared across layers when conditioning is on.
    pub conditioning: Option<StateMapSpans>,
    pub decoder: Vec<LstmSpans>,
    pub attention: Option<AttentionSpans>,
    pub out_w: Span,
    pub out_b: Span,
    pub total: usize,
    names: Vec<(String, Span)>,
}

struct Alloc {
    next: usize,
    names: Vec<(String, Span)>,
}

impl Alloc {
    fn take(&mut self, name: String, rows: usize, cols: usize) -> Span {
        let span = Span { offset: self.next, rows, cols };
        self.next += span.len();
        self.names.push((name, span));
        span
    }

    fn lstm(&mut self, prefix: &str, input: usize, hidden: usize) -> LstmSpans {
        LstmSpans {
            wx: self.take(format!("{prefix}.wx"), 4 * hidden, input),
            wh: self.take(format!("{prefix}.wh"), 4 * hidden, hidden),
            b: self.take(format!("{prefix}.b"), 4 * hidden, 1),
        }
    }

    fn state_map(&mut self, prefix: &str, input: usize, hidden: usize) -> StateMapSpans {
        StateMapSpans {
            h_w: self.take(format!("{prefix}.h_w"), hidden, input),
            h_b: self.take(format!("{prefix}.h_b"), hidden, 1),
            c_w: self.take(format!("{prefix}.c_w"), hidden, input),
            c_b: self.take(format!("{prefix}.c_b"), hidden, 1),
        }
    }
}

impl Layout {
    pub fn new(cfg: &ModelConfig) -> Self {
        let h = cfg.hidden;
        let mut a = Alloc { next: 0, names: Vec::new() };
        let special_emb = a.take("special_emb".into(), cfg.num_specials(), cfg.emb_dim);
        let encoder = (0..cfg.layers)
            .map(|l| {
                let input = if l == 0 { cfg.emb_dim } else { 2 * h };
                [a.lstm(&format!("enc{l}.fwd"), input, h), a.lstm(&format!("enc{l}.bwd"), input, h)]
            })
            .collect();
        let (bridge, conditioning) = if cfg.use_conditioning {
            (Vec::new(), Some(a.state_map("cond", 2 * h + cfg.sent_emb_dim, h)))
        } else {
            ((0..cfg.layers).map(|l| a.state_map(&format!("bridge{l}"), 2 * h, h)).collect(), None)
        };
        let decoder = (0..cfg.layers)
            .map(|l| {
                let input = if l == 0 { cfg.emb_dim + 1 } else { h };
                a.lstm(&format!("dec{l}"), input, h)
            })
            .collect();
        let attention = cfg.use_attention.then(|| AttentionSpans {
            wq: a.take("attn.wq".into(), cfg.attn_dim(), h),
            wk: a.take("attn.wk".into(), cfg.attn_dim(), 2 * h),
            b: a.take("attn.b".into(), cfg.attn_dim(), 1),
            v: a.take("attn.v".into(), cfg.attn_dim(), 1),
        });
        let out_in = if cfg.use_attention { 3 * h } else { h };
        let out_w = a.take("out.w".into(), cfg.vocab_size, out_in);
        let out_b = a.take("out.b".into(), cfg.vocab_size, 1);
        Layout {
            special_emb,
            encoder,
            bridge,
            conditioning,
            decoder,
            attention,
            out_w,
            out_b,
            total: a.next,
            names: a.names,
        }
    }

    /// Named tensors in storage order.
    pub fn tensors(&self) -> &[(String, Span)] {
        &self.names
    }

    /// Name of the tensor holding flat index `i`.
    pub fn tensor_of(&self, i: usize) -> Option<&str> {
        self.names.iter().find(|(_, s)| s.range().contains(&i)).map(|(n, _)| n.as_str())
    }
}
