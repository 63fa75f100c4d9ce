//! Forward computation and hand-written backpropagation through time.

use alloc::vec;
use alloc::vec::Vec;

use super::layout::StateMapSpans;
use super::lstm::{self, LstmStep};
use super::ModelParams;
use crate::linalg::{add_assign, axpy, dot, gemv_acc, gemv_t_acc, outer_acc, softmax_in_place};
use crate::noising::NoisedExample;
use crate::real::Real;
use crate::vocab::{TokenId, SOS};
use crate::{Error, Result};

/// Encoder result consumed by the decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded<F> {
    /// Top-layer `forward || backward` state per input position, width `2*hidden`.
    pub outputs: Vec<Vec<F>>,
    /// Per layer, `forward final || backward final` hidden state.
    pub final_h: Vec<Vec<F>>,
    /// Per layer, `forward final || backward final` cell state.
    pub final_c: Vec<Vec<F>>,
    /// Attention keys `Wk * output + b` per position; empty without attention.
    keys: Vec<Vec<F>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderState<F> {
    pub h: Vec<Vec<F>>,
    pub c: Vec<Vec<F>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput<F> {
    pub logits: Vec<F>,
    pub state: DecoderState<F>,
    /// Softmax over encoder positions; empty without attention.
    pub attn_weights: Vec<F>,
}

struct EncoderCache<F> {
    ids: Vec<TokenId>,
    /// `steps[layer][direction][position]`
    steps: Vec<[Vec<LstmStep<F>>; 2]>,
}

struct BridgeCache<F> {
    /// Per layer, the input vector of the hidden and cell maps.
    inputs_h: Vec<Vec<F>>,
    inputs_c: Vec<Vec<F>>,
}

struct StepCache<F> {
    prev: TokenId,
    layers: Vec<LstmStep<F>>,
    /// `tanh(q + key_j)` per encoder position.
    attn_act: Vec<Vec<F>>,
    alpha: Vec<F>,
    out_in: Vec<F>,
    probs: Vec<F>,
    log_z: F,
}

impl<F: Real> ModelParams<F> {
    fn check_ids(&self, ids: &[TokenId]) -> Result<()> {
        if ids.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(&bad) = ids.iter().find(|&&id| id as usize >= self.cfg.vocab_size) {
            return Err(Error::InvalidConfig(alloc::format!("token id {bad} outside the vocabulary")));
        }
        Ok(())
    }

    /// Runs the bidirectional encoder over `ids`.
    pub fn encode(&self, ids: &[TokenId]) -> Result<Encoded<F>> {
        self.check_ids(ids)?;
        Ok(self.encode_cached(ids).0)
    }

    fn encode_cached(&self, ids: &[TokenId]) -> (Encoded<F>, EncoderCache<F>) {
        let h = self.cfg.hidden;
        let n = ids.len();
        let p = &self.values;
        let zero = vec![F::zero(); h];
        let mut layer_in: Vec<Vec<F>> = ids.iter().map(|&id| self.embedding_row(id).to_vec()).collect();
        let mut steps = Vec::with_capacity(self.cfg.layers);
        let mut final_h = Vec::with_capacity(self.cfg.layers);
        let mut final_c = Vec::with_capacity(self.cfg.layers);

        for spans in &self.layout.encoder {
            let mut fwd: Vec<LstmStep<F>> = Vec::with_capacity(n);
            for x in &layer_in {
                let (hp, cp) = fwd.last().map_or((&zero, &zero), |s| (&s.h, &s.c));
                let step = lstm::forward(p, &spans[0], x, hp, cp);
                fwd.push(step);
            }
            let mut bwd: Vec<LstmStep<F>> = Vec::with_capacity(n);
            for t in (0..n).rev() {
                let (hp, cp) = bwd.last().map_or((&zero, &zero), |s| (&s.h, &s.c));
                let step = lstm::forward(p, &spans[1], &layer_in[t], hp, cp);
                bwd.push(step);
            }
            bwd.reverse();

            layer_in = (0..n).map(|t| [fwd[t].h.as_slice(), bwd[t].h.as_slice()].concat()).collect();
            final_h.push([fwd[n - 1].h.as_slice(), bwd[0].h.as_slice()].concat());
            final_c.push([fwd[n - 1].c.as_slice(), bwd[0].c.as_slice()].concat());
            steps.push([fwd, bwd]);
        }

        let keys = match &self.layout.attention {
            Some(a) => layer_in
                .iter()
                .map(|out| {
                    let mut k = p[a.b.range()].to_vec();
                    gemv_acc(&p[a.wk.range()], a.wk.rows, a.wk.cols, out, &mut k);
                    k
                })
                .collect(),
            None => Vec::new(),
        };
        let enc = Encoded { outputs: layer_in, final_h, final_c, keys };
        (enc, EncoderCache { ids: ids.to_vec(), steps })
    }

    /// Decoder initial state from the encoder finals and, when conditioning
    /// is enabled, the sentence vector.
    pub fn init_decoder(&self, enc: &Encoded<F>, sent_emb: Option<&[F]>) -> Result<DecoderState<F>> {
        self.check_sent_emb(sent_emb)?;
        Ok(self.init_decoder_cached(enc, sent_emb).0)
    }

    fn check_sent_emb(&self, sent_emb: Option<&[F]>) -> Result<()> {
        match (self.cfg.use_conditioning, sent_emb) {
            (true, Some(s)) if s.len() == self.cfg.sent_emb_dim => Ok(()),
            (true, s) => Err(Error::SentenceEmbedding { expected: self.cfg.sent_emb_dim, found: s.map(<[F]>::len) }),
            (false, None) => Ok(()),
            (false, Some(s)) => Err(Error::SentenceEmbedding { expected: 0, found: Some(s.len()) }),
        }
    }

    fn apply_map(&self, w: super::layout::Span, b: super::layout::Span, input: &[F]) -> Vec<F> {
        let mut out = self.values[b.range()].to_vec();
        gemv_acc(&self.values[w.range()], w.rows, w.cols, input, &mut out);
        out
    }

    fn state_maps(&self, layer: usize) -> StateMapSpans {
        match &self.layout.conditioning {
            Some(m) => *m,
            None => self.layout.bridge[layer],
        }
    }

    fn init_decoder_cached(&self, enc: &Encoded<F>, sent_emb: Option<&[F]>) -> (DecoderState<F>, BridgeCache<F>) {
        let mut cache = BridgeCache { inputs_h: Vec::new(), inputs_c: Vec::new() };
        let mut state = DecoderState { h: Vec::new(), c: Vec::new() };
        for l in 0..self.cfg.layers {
            let m = self.state_maps(l);
            let (in_h, in_c) = match (self.cfg.use_conditioning, sent_emb) {
                (true, Some(s)) => ([enc.final_h[l].as_slice(), s].concat(), [enc.final_c[l].as_slice(), s].concat()),
                _ => (enc.final_h[l].clone(), enc.final_c[l].clone()),
            };
            state.h.push(self.apply_map(m.h_w, m.h_b, &in_h));
            state.c.push(self.apply_map(m.c_w, m.c_b, &in_c));
            cache.inputs_h.push(in_h);
            cache.inputs_c.push(in_c);
        }
        (state, cache)
    }

    /// One decoder step fed with `prev` and the countdown scalar.
    pub fn decode_step(
        &self,
        state: &DecoderState<F>,
        prev: TokenId,
        countdown: i64,
        enc: &Encoded<F>,
    ) -> StepOutput<F> {
        let (out, _) = self.decode_step_cached(state, prev, countdown, enc, false);
        out
    }

    fn decode_step_cached(
        &self,
        state: &DecoderState<F>,
        prev: TokenId,
        countdown: i64,
        enc: &Encoded<F>,
        want_probs: bool,
    ) -> (StepOutput<F>, StepCache<F>) {
        let p = &self.values;
        let mut x: Vec<F> = self.embedding_row(prev).to_vec();
        x.push(F::lit(countdown as f64));

        let mut layers = Vec::with_capacity(self.cfg.layers);
        let mut new_state = DecoderState { h: Vec::new(), c: Vec::new() };
        for (l, spans) in self.layout.decoder.iter().enumerate() {
            let step = lstm::forward(p, spans, &x, &state.h[l], &state.c[l]);
            x = step.h.clone();
            new_state.h.push(step.h.clone());
            new_state.c.push(step.c.clone());
            layers.push(step);
        }
        let top = x;

        let mut attn_act = Vec::new();
        let mut alpha = Vec::new();
        let out_in = match &self.layout.attention {
            Some(a) => {
                let mut q = vec![F::zero(); a.wq.rows];
                gemv_acc(&p[a.wq.range()], a.wq.rows, a.wq.cols, &top, &mut q);
                let v = &p[a.v.range()];
                let mut scores = Vec::with_capacity(enc.keys.len());
                for key in &enc.keys {
                    let act: Vec<F> = key.iter().zip(&q).map(|(&k, &qq)| (k + qq).tanh()).collect();
                    scores.push(dot(v, &act));
                    attn_act.push(act);
                }
                softmax_in_place(&mut scores);
                alpha = scores;
                let mut ctx = vec![F::zero(); 2 * self.cfg.hidden];
                for (w, out) in alpha.iter().zip(&enc.outputs) {
                    axpy(*w, out, &mut ctx);
                }
                [top.as_slice(), ctx.as_slice()].concat()
            }
            None => top,
        };

        let ow = self.layout.out_w;
        let mut logits = p[self.layout.out_b.range()].to_vec();
        gemv_acc(&p[ow.range()], ow.rows, ow.cols, &out_in, &mut logits);

        let (probs, log_z) = if want_probs {
            let mut pr = logits.clone();
            let lz = softmax_in_place(&mut pr);
            (pr, lz)
        } else {
            (Vec::new(), F::zero())
        };
        let cache = StepCache { prev, layers, attn_act, alpha: alpha.clone(), out_in, probs, log_z };
        (StepOutput { logits, state: new_state, attn_weights: alpha }, cache)
    }

    /// Teacher-forced negative log-likelihood, averaged over target positions.
    ///
    /// Step `t` (from 1) consumes the gold token `t-1` (SOS first) and the
    /// countdown `countdown_len - t`. Returns the loss and per-step logits.
    pub fn forward_nll(&self, ex: &NoisedExample, sent_emb: Option<&[F]>) -> Result<(F, Vec<Vec<F>>)> {
        self.check_example(ex, sent_emb)?;
        let (enc, _) = self.encode_cached(&ex.input_ids);
        let (mut state, _) = self.init_decoder_cached(&enc, sent_emb);
        let mut loss = F::zero();
        let mut all_logits = Vec::with_capacity(ex.target_ids.len());
        for (t, &gold) in ex.target_ids.iter().enumerate() {
            let prev = if t == 0 { SOS } else { ex.target_ids[t - 1] };
            let countdown = ex.countdown_len as i64 - (t as i64 + 1);
            let out = self.decode_step(&state, prev, countdown, &enc);
            let mut pr = out.logits.clone();
            let lse = softmax_in_place(&mut pr);
            loss += lse - out.logits[gold as usize];
            all_logits.push(out.logits);
            state = out.state;
        }
        Ok((loss / F::lit(ex.target_ids.len() as f64), all_logits))
    }

    fn check_example(&self, ex: &NoisedExample, sent_emb: Option<&[F]>) -> Result<()> {
        self.check_ids(&ex.input_ids)?;
        self.check_ids(&ex.target_ids)?;
        self.check_sent_emb(sent_emb)
    }

    /// Loss of `ex`, accumulating `scale * d(loss)/d(params)` into `grad`.
    ///
    /// `grad` has the layout of [`ModelParams::values`]. Frozen word rows have
    /// no entry and receive nothing.
    pub fn loss_and_grad(&self, ex: &NoisedExample, sent_emb: Option<&[F]>, grad: &mut [F], scale: F) -> Result<F> {
        self.check_example(ex, sent_emb)?;
        if grad.len() != self.values.len() {
            return Err(Error::ParamCount { expected: self.values.len(), found: grad.len() });
        }
        let cfg = &self.cfg;
        let h = cfg.hidden;
        let p = &self.values;
        let (enc, enc_cache) = self.encode_cached(&ex.input_ids);
        let (init, bridge_cache) = self.init_decoder_cached(&enc, sent_emb);

        let steps_n = ex.target_ids.len();
        let mut state = init;
        let mut caches = Vec::with_capacity(steps_n);
        let mut loss = F::zero();
        for (t, &gold) in ex.target_ids.iter().enumerate() {
            let prev = if t == 0 { SOS } else { ex.target_ids[t - 1] };
            let countdown = ex.countdown_len as i64 - (t as i64 + 1);
            let (out, cache) = self.decode_step_cached(&state, prev, countdown, &enc, true);
            loss += cache.log_z - out.logits[gold as usize];
            state = out.state;
            caches.push(cache);
        }
        let inv_t = F::one() / F::lit(steps_n as f64);
        let g_scale = scale * inv_t;

        let n = ex.input_ids.len();
        let mut d_enc_out = vec![vec![F::zero(); 2 * h]; n];
        let mut d_keys = vec![vec![F::zero(); cfg.attn_dim()]; if cfg.use_attention { n } else { 0 }];
        let mut carry_h = vec![vec![F::zero(); h]; cfg.layers];
        let mut carry_c = vec![vec![F::zero(); h]; cfg.layers];
        let ow = self.layout.out_w;

        for (cache, &gold) in caches.iter().zip(&ex.target_ids).rev() {
            let mut dlogits: Vec<F> = cache.probs.iter().map(|&q| q * g_scale).collect();
            dlogits[gold as usize] -= g_scale;
            outer_acc(&mut grad[ow.range()], &dlogits, &cache.out_in);
            add_assign(&mut grad[self.layout.out_b.range()], &dlogits);
            let mut d_out_in = vec![F::zero(); ow.cols];
            gemv_t_acc(&p[ow.range()], ow.rows, ow.cols, &dlogits, &mut d_out_in);

            let mut d_top = d_out_in[..h].to_vec();
            if let Some(a) = &self.layout.attention {
                let d_ctx = &d_out_in[h..];
                let d_alpha: Vec<F> = enc.outputs.iter().map(|o| dot(d_ctx, o)).collect();
                for (j, &aj) in cache.alpha.iter().enumerate() {
                    axpy(aj, d_ctx, &mut d_enc_out[j]);
                }
                let mean = dot(&cache.alpha, &d_alpha);
                let v = &p[a.v.range()];
                let mut dq = vec![F::zero(); a.wq.rows];
                for j in 0..n {
                    let d_score = cache.alpha[j] * (d_alpha[j] - mean);
                    let act = &cache.attn_act[j];
                    axpy(d_score, act, &mut grad[a.v.range()]);
                    for k in 0..act.len() {
                        let d_pre = d_score * v[k] * (F::one() - act[k] * act[k]);
                        dq[k] += d_pre;
                        d_keys[j][k] += d_pre;
                    }
                }
                let top = &cache.layers[cfg.layers - 1].h;
                outer_acc(&mut grad[a.wq.range()], &dq, top);
                gemv_t_acc(&p[a.wq.range()], a.wq.rows, a.wq.cols, &dq, &mut d_top);
            }

            let mut d_from_above = d_top;
            for l in (0..cfg.layers).rev() {
                let spans = &self.layout.decoder[l];
                let step = &cache.layers[l];
                let mut dh = carry_h[l].clone();
                add_assign(&mut dh, &d_from_above);
                let mut dx = vec![F::zero(); spans.wx.cols];
                let (dh_prev, dc_prev) = lstm::backward(p, grad, spans, step, &dh, &carry_c[l], &mut dx);
                carry_h[l] = dh_prev;
                carry_c[l] = dc_prev;
                if l == 0 {
                    self.acc_special_emb(grad, cache.prev, &dx[..cfg.emb_dim]);
                } else {
                    d_from_above = dx;
                }
            }
        }

        if let Some(a) = &self.layout.attention {
            for j in 0..n {
                outer_acc(&mut grad[a.wk.range()], &d_keys[j], &enc.outputs[j]);
                add_assign(&mut grad[a.b.range()], &d_keys[j]);
                gemv_t_acc(&p[a.wk.range()], a.wk.rows, a.wk.cols, &d_keys[j], &mut d_enc_out[j]);
            }
        }

        // Decoder initial state back into the encoder finals.
        let mut d_final_h = vec![vec![F::zero(); 2 * h]; cfg.layers];
        let mut d_final_c = vec![vec![F::zero(); 2 * h]; cfg.layers];
        for l in 0..cfg.layers {
            let m = self.state_maps(l);
            for (w, b, d_state, input, d_final) in [
                (m.h_w, m.h_b, &carry_h[l], &bridge_cache.inputs_h[l], &mut d_final_h[l]),
                (m.c_w, m.c_b, &carry_c[l], &bridge_cache.inputs_c[l], &mut d_final_c[l]),
            ] {
                outer_acc(&mut grad[w.range()], d_state, input);
                add_assign(&mut grad[b.range()], d_state);
                let mut d_in = vec![F::zero(); w.cols];
                gemv_t_acc(&p[w.range()], w.rows, w.cols, d_state, &mut d_in);
                add_assign(d_final, &d_in[..2 * h]);
            }
        }

        self.encoder_backward(grad, &enc_cache, d_enc_out, &d_final_h, &d_final_c);
        Ok(loss * inv_t)
    }

    fn acc_special_emb(&self, grad: &mut [F], id: TokenId, d: &[F]) {
        let idx = id as usize;
        if idx < self.cfg.num_specials() {
            let e = self.cfg.emb_dim;
            let off = self.layout.special_emb.offset + idx * e;
            add_assign(&mut grad[off..off + e], d);
        }
    }

    fn encoder_backward(
        &self,
        grad: &mut [F],
        cache: &EncoderCache<F>,
        d_top: Vec<Vec<F>>,
        d_final_h: &[Vec<F>],
        d_final_c: &[Vec<F>],
    ) {
        let h = self.cfg.hidden;
        let p = &self.values;
        let n = cache.ids.len();
        let mut d_out = d_top;
        for l in (0..self.cfg.layers).rev() {
            let spans = &self.layout.encoder[l];
            let in_dim = spans[0].wx.cols;
            let mut d_in = vec![vec![F::zero(); in_dim]; n];

            // Forward direction ran t = 0..n, so walk back from n-1.
            let mut dh = d_final_h[l][..h].to_vec();
            let mut dc = d_final_c[l][..h].to_vec();
            for t in (0..n).rev() {
                add_assign(&mut dh, &d_out[t][..h]);
                let (a, b) = lstm::backward(p, grad, &spans[0], &cache.steps[l][0][t], &dh, &dc, &mut d_in[t]);
                dh = a;
                dc = b;
            }
            // Backward direction ran t = n-1..0, so walk back from 0.
            let mut dh = d_final_h[l][h..].to_vec();
            let mut dc = d_final_c[l][h..].to_vec();
            for t in 0..n {
                add_assign(&mut dh, &d_out[t][h..]);
                let (a, b) = lstm::backward(p, grad, &spans[1], &cache.steps[l][1][t], &dh, &dc, &mut d_in[t]);
                dh = a;
                dc = b;
            }
            d_out = d_in;
        }
        for (t, &id) in cache.ids.iter().enumerate() {
            self.acc_special_emb(grad, id, &d_out[t]);
        }
    }
}
