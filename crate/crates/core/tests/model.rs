mod common;

use std::sync::Arc;

use common::*;
use compresso_core::model::{ModelConfig, ModelParams};
use compresso_core::optim::{Adam, AdamConfig};
use compresso_core::vocab::{encode_with_oov, EOS};
use compresso_core::{EmbeddingMatrix, Error, NoisedExample, Vocabulary};

fn ids(vocab: &Vocabulary, words: &[usize]) -> Vec<u32> {
    encode_with_oov(&sentence(words), vocab, 10).0
}

#[test]
fn encoder_output_shape() {
    let vocab = word_vocab(20);
    let model = tiny_model(tiny_config(&vocab, 5, true, false), &vocab, 1);
    let enc = model.encode(&ids(&vocab, &[1, 2, 3, 4, 5])).unwrap();
    assert_eq!(enc.outputs.len(), 5);
    assert!(enc.outputs.iter().all(|o| o.len() == 10));
    assert_eq!(enc.final_h.len(), 1);
    assert_eq!(enc.final_h[0].len(), 10);
    assert!(matches!(model.encode(&[]), Err(Error::EmptyInput)));
}

#[test]
fn zero_weights_give_the_zero_fixed_point() {
    let vocab = word_vocab(20);
    let cfg = tiny_config(&vocab, 4, true, false);
    let emb = Arc::new(EmbeddingMatrix::<f64>::random(&vocab, cfg.emb_dim, 3, 1.0));
    let model = ModelParams::from_values(cfg, emb, vec![0.0; cfg.param_count()]).unwrap();
    let enc = model.encode(&ids(&vocab, &[1, 2, 3])).unwrap();
    // i = f = o = 1/2, g = 0, so c and h stay at zero
    assert!(enc.outputs.iter().flatten().all(|&v| v == 0.0));
}

#[test]
fn encoder_is_invariant_to_vocabulary_relabelling() {
    let words: Vec<String> = (0..12).map(|i| format!("w{i}")).collect();
    let forward = Vocabulary::from_content(words.iter().cloned(), 10).unwrap();
    let reversed = Vocabulary::from_content(words.iter().rev().cloned(), 10).unwrap();
    let cfg = tiny_config(&forward, 5, true, false);
    let base = EmbeddingMatrix::<f64>::random(&forward, cfg.emb_dim, 9, 1.0);
    let mut permuted = Vec::new();
    for w in reversed.content() {
        permuted.extend_from_slice(base.row(forward.id_of(w).unwrap()).unwrap());
    }
    let permuted = EmbeddingMatrix::from_raw(cfg.emb_dim, reversed.num_specials(), permuted).unwrap();
    let a = ModelParams::init(cfg, Arc::new(base), 4).unwrap();
    let b = ModelParams::from_values(cfg, Arc::new(permuted), a.values().to_vec()).unwrap();

    let s = sentence(&[3, 7, 1, 11, 3]);
    let ea = a.encode(&encode_with_oov(&s, &forward, 10).0).unwrap();
    let eb = b.encode(&encode_with_oov(&s, &reversed, 10).0).unwrap();
    assert_ne!(encode_with_oov(&s, &forward, 10).0, encode_with_oov(&s, &reversed, 10).0);
    assert_eq!(ea.outputs, eb.outputs);
}

#[test]
fn attention_is_a_distribution() {
    let vocab = word_vocab(20);
    let model = tiny_model(tiny_config(&vocab, 6, true, false), &vocab, 2);
    let enc = model.encode(&ids(&vocab, &[4, 5, 6, 7, 8, 9, 10])).unwrap();
    let state = model.init_decoder(&enc, None).unwrap();
    let out = model.decode_step(&state, 1, 4, &enc);
    assert_eq!(out.attn_weights.len(), 7);
    assert!(out.attn_weights.iter().all(|&w| w >= 0.0));
    assert!((out.attn_weights.iter().sum::<f64>() - 1.0).abs() < 1e-6);

    let single = model.encode(&ids(&vocab, &[4])).unwrap();
    let state = model.init_decoder(&single, None).unwrap();
    assert_eq!(model.decode_step(&state, 1, 1, &single).attn_weights, vec![1.0]);
}

#[test]
fn no_attention_means_no_weights() {
    let vocab = word_vocab(20);
    let model = tiny_model(tiny_config(&vocab, 6, false, false), &vocab, 2);
    let enc = model.encode(&ids(&vocab, &[4, 5])).unwrap();
    let state = model.init_decoder(&enc, None).unwrap();
    let out = model.decode_step(&state, 1, 1, &enc);
    assert!(out.attn_weights.is_empty());
    assert_eq!(out.logits.len(), vocab.len());
}

#[test]
fn countdown_changes_logits() {
    let vocab = word_vocab(20);
    for attention in [false, true] {
        let model = tiny_model(tiny_config(&vocab, 6, attention, false), &vocab, 5);
        let enc = model.encode(&ids(&vocab, &[4, 5, 6])).unwrap();
        let state = model.init_decoder(&enc, None).unwrap();
        let up = model.decode_step(&state, 7, 3, &enc).logits;
        let down = model.decode_step(&state, 7, -3, &enc).logits;
        assert_ne!(up, down);
    }
}

#[test]
fn zero_conditioning_weights_leave_the_biases() {
    let vocab = word_vocab(20);
    let cfg = tiny_config(&vocab, 4, true, true);
    let mut model = tiny_model(cfg, &vocab, 6);
    let maps = model.layout().conditioning.unwrap();
    for span in [maps.h_w, maps.c_w] {
        model.values_mut()[span.range()].iter_mut().for_each(|v| *v = 0.0);
    }
    let enc = model.encode(&ids(&vocab, &[1, 2, 3])).unwrap();
    let s = vec![0.3; cfg.sent_emb_dim];
    let state = model.init_decoder(&enc, Some(&s)).unwrap();
    assert_eq!(state.h[0], model.values()[maps.h_b.range()]);
    assert_eq!(state.c[0], model.values()[maps.c_b.range()]);
}

#[test]
fn sentence_vector_moves_the_initial_state() {
    let vocab = word_vocab(20);
    let cfg = tiny_config(&vocab, 4, true, true);
    let model = tiny_model(cfg, &vocab, 6);
    let enc = model.encode(&ids(&vocab, &[1, 2, 3])).unwrap();
    let s: Vec<f64> = (0..cfg.sent_emb_dim).map(|i| 0.1 * i as f64).collect();
    let base = model.init_decoder(&enc, Some(&s)).unwrap();
    let eps = 1e-6;
    for i in 0..s.len() {
        let mut moved = s.clone();
        moved[i] += eps;
        let st = model.init_decoder(&enc, Some(&moved)).unwrap();
        let sensitivity: f64 = st.h[0].iter().zip(&base.h[0]).map(|(a, b)| ((a - b) / eps).abs()).sum();
        assert!(sensitivity > 0.0, "component {i}");
    }
}

#[test]
fn conditioning_requires_a_matching_vector() {
    let vocab = word_vocab(20);
    let with = tiny_model(tiny_config(&vocab, 4, true, true), &vocab, 6);
    let enc = with.encode(&ids(&vocab, &[1, 2])).unwrap();
    assert!(matches!(with.init_decoder(&enc, None), Err(Error::SentenceEmbedding { found: None, .. })));
    assert!(with.init_decoder(&enc, Some(&[0.0; 5])).is_err());
    let without = tiny_model(tiny_config(&vocab, 4, true, false), &vocab, 6);
    assert!(without.init_decoder(&enc, Some(&[0.0; 6])).is_err());
}

#[test]
fn uniform_logits_cost_ln_v() {
    let vocab = word_vocab(30);
    let mut model = tiny_model(tiny_config(&vocab, 4, true, false), &vocab, 8);
    let (ow, ob) = (model.layout().out_w, model.layout().out_b);
    model.values_mut()[ow.range()].iter_mut().for_each(|v| *v = 0.0);
    model.values_mut()[ob.range()].iter_mut().for_each(|v| *v = 0.0);
    let (_, ex) = tiny_example(&vocab, 1);
    let (loss, _) = model.forward_nll(&ex, None).unwrap();
    assert!((loss - (vocab.len() as f64).ln()).abs() < 1e-12);
}

#[test]
fn certain_predictions_cost_nothing() {
    let vocab = word_vocab(30);
    let mut model = tiny_model(tiny_config(&vocab, 4, true, false), &vocab, 8);
    let (ow, ob) = (model.layout().out_w, model.layout().out_b);
    model.values_mut()[ow.range()].iter_mut().for_each(|v| *v = 0.0);
    model.values_mut()[ob.range()].iter_mut().for_each(|v| *v = -800.0);
    model.values_mut()[ob.offset + EOS as usize] = 800.0;
    let ex = NoisedExample {
        input_ids: ids(&vocab, &[1, 2]),
        target_ids: vec![EOS, EOS, EOS],
        countdown_len: 3,
        oov_table: Default::default(),
    };
    assert_eq!(model.forward_nll(&ex, None).unwrap().0, 0.0);
}

#[test]
fn teacher_forcing_feeds_the_countdown() {
    let vocab = word_vocab(30);
    let model = tiny_model(tiny_config(&vocab, 5, true, false), &vocab, 12);
    let (_, ex) = tiny_example(&vocab, 3);
    let (_, logits) = model.forward_nll(&ex, None).unwrap();
    let enc = model.encode(&ex.input_ids).unwrap();
    let mut state = model.init_decoder(&enc, None).unwrap();
    let mut prev = 1;
    for (t, gold) in ex.target_ids.iter().enumerate() {
        let countdown = ex.countdown_len as i64 - (t as i64 + 1);
        let out = model.decode_step(&state, prev, countdown, &enc);
        assert_eq!(out.logits, logits[t]);
        state = out.state;
        prev = *gold;
    }
    // the final (EOS) position is fed zero
    assert_eq!(ex.countdown_len, ex.target_ids.len());
}

#[test]
fn forward_is_reproducible() {
    let vocab = word_vocab(30);
    let model = tiny_model(tiny_config(&vocab, 5, true, true), &vocab, 13);
    let (r, ex) = tiny_example(&vocab, 4);
    let s = sent_emb(&model, &vocab, &r);
    let a = model.forward_nll(&ex, Some(&s)).unwrap();
    let b = model.forward_nll(&ex, Some(&s)).unwrap();
    assert_eq!(a.0.to_bits(), b.0.to_bits());
    assert_eq!(a.1, b.1);
}

#[test]
fn conditioning_maps_receive_gradient() {
    let vocab = word_vocab(30);
    let model = tiny_model(tiny_config(&vocab, 5, true, true), &vocab, 14);
    let (r, ex) = tiny_example(&vocab, 4);
    let s = sent_emb(&model, &vocab, &r);
    let mut grad = vec![0.0; model.len()];
    model.loss_and_grad(&ex, Some(&s), &mut grad, 1.0).unwrap();
    let maps = model.layout().conditioning.unwrap();
    for span in [maps.h_w, maps.h_b, maps.c_w, maps.c_b] {
        assert!(grad[span.range()].iter().any(|&g| g != 0.0));
    }
    // the sentence-vector columns of f_h
    let h = 5;
    let cols = maps.h_w.cols;
    assert!((0..h).any(|r| grad[maps.h_w.offset + r * cols + cols - 1] != 0.0));
}

#[test]
fn gradient_buffer_has_no_frozen_rows() {
    let vocab = word_vocab(30);
    let cfg = tiny_config(&vocab, 5, true, false);
    let model = tiny_model(cfg, &vocab, 15);
    assert_eq!(model.len(), cfg.param_count());
    assert_eq!(model.layout().special_emb.len(), vocab.num_specials() * cfg.emb_dim);
    let (_, ex) = tiny_example(&vocab, 4);
    let mut short = vec![0.0; model.len() - 1];
    assert!(matches!(model.loss_and_grad(&ex, None, &mut short, 1.0), Err(Error::ParamCount { .. })));
}

#[test]
fn loss_falls_on_a_repeated_example() {
    let vocab = word_vocab(30);
    let model = tiny_model(tiny_config(&vocab, 8, true, false), &vocab, 16);
    let mut params = model.clone();
    let (_, ex) = tiny_example(&vocab, 6);
    let mut adam = Adam::new(params.len(), AdamConfig::default());
    let mut last = f64::INFINITY;
    for _ in 0..50 {
        let mut grad = vec![0.0; params.len()];
        let loss = params.loss_and_grad(&ex, None, &mut grad, 1.0).unwrap();
        assert!(loss < last, "{loss} >= {last}");
        last = loss;
        adam.step(params.values_mut(), &grad, 0.01);
    }
    assert!(params.embeddings().raw() == model.embeddings().raw());
}

#[test]
fn parameter_count_depends_on_config_only() {
    let vocab = word_vocab(30);
    let mut cfg: ModelConfig = tiny_config(&vocab, 5, true, true);
    let a = tiny_model(cfg, &vocab, 1).len();
    let b = tiny_model(cfg, &vocab, 2).len();
    assert_eq!(a, b);
    cfg.layers = 2;
    assert_eq!(tiny_model(cfg, &vocab, 1).len(), cfg.param_count());
    assert!(cfg.param_count() > a);
}
