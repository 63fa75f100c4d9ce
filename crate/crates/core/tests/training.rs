mod common;

use std::sync::Arc;

use common::*;
use compresso_core::model::{MeanWordEmbedder, SentenceEmbedder};
use compresso_core::train::{token_accuracy, TrainData, TrainState};
use compresso_core::{EmbeddingMatrix, Error, ModelParams, NoiseConfig, TrainConfig, TrainMode, Trainer, Vocabulary};

fn corpus() -> Vec<compresso_core::TokenSeq> {
    (0..24).map(|i| sentence(&[(i % 7) + 1, (i * 3) % 11 + 2, i % 5 + 3, (i * 5) % 13 + 1, 9])).collect()
}

fn setup(conditioning: bool, seed: u64) -> Trainer<f32> {
    let vocab = Arc::new(word_vocab(20));
    let cfg = tiny_config(&vocab, 6, true, conditioning);
    let emb = Arc::new(EmbeddingMatrix::<f32>::random(&vocab, cfg.emb_dim, 5, 0.5));
    let params = ModelParams::init(cfg, emb.clone(), seed).unwrap();
    let embedder: Option<Arc<dyn SentenceEmbedder<f32>>> =
        conditioning.then(|| Arc::new(MeanWordEmbedder::new(vocab.clone(), emb)) as Arc<dyn SentenceEmbedder<f32>>);
    let tcfg = TrainConfig { batch_size: 5, lr_init: 0.01, seed, epochs: 50, ..TrainConfig::default() };
    let data = Arc::new(TrainData::Monolingual(corpus()));
    Trainer::new(tcfg, NoiseConfig::default(), params, vocab, data, embedder).unwrap()
}

#[test]
fn schedule_hits_the_decimal_values() {
    let cfg = TrainConfig::default();
    assert_eq!(cfg.lr_at(0), 0.0005);
    assert_eq!(cfg.lr_at(9_999), 0.0005);
    assert_eq!(cfg.lr_at(10_000), 0.00045);
    assert_eq!(cfg.lr_at(19_999), 0.00045);
    assert_eq!(cfg.lr_at(20_000), 0.000405);
}

#[test]
fn each_epoch_visits_every_sentence_once() {
    let t = setup(false, 1);
    assert_eq!(t.steps_per_epoch(), 5);
    for epoch in 0..3 {
        let mut seen: Vec<usize> = (0..5).flat_map(|b| t.batch_indices(epoch * 5 + b)).collect();
        assert_eq!(t.batch_indices(epoch * 5 + 4).len(), 4);
        seen.sort_unstable();
        assert_eq!(seen, (0..24).collect::<Vec<_>>());
    }
    assert_ne!(t.batch_indices(0), t.batch_indices(5));
}

#[test]
fn noise_is_redrawn_each_epoch() {
    let t = setup(false, 1);
    let a = t.prepare(0, 3).unwrap();
    let b = t.prepare(5, 3).unwrap();
    assert_eq!(a.example.target_ids, b.example.target_ids);
    assert_ne!(a.example.input_ids, b.example.input_ids);
    assert_eq!(t.prepare(0, 3).unwrap().example, a.example);
}

#[test]
fn word_rows_stay_frozen_and_clipping_holds() {
    let mut t = setup(true, 2);
    t.cfg.clip_norm = 0.05;
    let before = t.params.embeddings().raw().to_vec();
    let specials_before = t.params.values()[t.params.layout().special_emb.range()].to_vec();
    let mut clipped = 0;
    for _ in 0..100 {
        let r = t.step().unwrap();
        if r.clipped {
            clipped += 1;
            assert!(r.applied_norm <= t.cfg.clip_norm + 1e-6);
        }
    }
    assert!(clipped > 0);
    let after = t.params.embeddings().raw();
    assert!(before.iter().zip(after).all(|(a, b)| a.to_bits() == b.to_bits()));
    assert_ne!(specials_before, t.params.values()[t.params.layout().special_emb.range()].to_vec());
}

#[test]
fn identical_seeds_give_identical_parameters() {
    let mut a = setup(true, 3);
    let mut b = setup(true, 3);
    for _ in 0..30 {
        let (ra, rb) = (a.step().unwrap(), b.step().unwrap());
        assert_eq!(ra.loss.to_bits(), rb.loss.to_bits());
    }
    assert_eq!(a.params.values(), b.params.values());
    assert_eq!(a.state, b.state);
}

#[test]
fn resuming_matches_an_uninterrupted_run() {
    let mut straight = setup(false, 4);
    for _ in 0..20 {
        straight.step().unwrap();
    }
    let mut first = setup(false, 4);
    for _ in 0..10 {
        first.step().unwrap();
    }
    let state: TrainState<f32> = first.state.clone();
    let params = first.params.clone();
    let mut second = Trainer::resume(
        first.cfg.clone(),
        first.noise,
        params,
        state,
        first.vocab().clone(),
        first.data().clone(),
        None,
    )
    .unwrap();
    for _ in 0..10 {
        second.step().unwrap();
    }
    assert_eq!(second.params.values(), straight.params.values());
    assert_eq!(second.state, straight.state);
}

#[test]
fn training_reduces_the_loss() {
    let mut t = setup(false, 5);
    let eval: Vec<_> = (0..24).map(|i| t.prepare(0, i).unwrap()).collect();
    let acc0 = token_accuracy(&t.params, &eval).unwrap();
    let first = t.step().unwrap().loss;
    let mut last = first;
    for _ in 0..150 {
        last = t.step().unwrap().loss;
    }
    assert!(last < first * 0.7, "{first} -> {last}");
    assert!(token_accuracy(&t.params, &eval).unwrap() > acc0);
}

#[test]
fn supervised_mode_uses_the_summary() {
    let vocab = Arc::new(word_vocab(20));
    let cfg = tiny_config(&vocab, 4, true, false);
    let emb = Arc::new(EmbeddingMatrix::<f32>::random(&vocab, cfg.emb_dim, 5, 0.5));
    let params = ModelParams::init(cfg, emb, 1).unwrap();
    let pairs = vec![(sentence(&[1, 2, 3, 4, 5, 6]), sentence(&[2, 5])), (sentence(&[7, 8, 9]), sentence(&[9]))];
    let tcfg = TrainConfig { batch_size: 2, mode: TrainMode::Supervised, ..TrainConfig::default() };
    let mut t =
        Trainer::new(tcfg, NoiseConfig::default(), params, vocab, Arc::new(TrainData::Paired(pairs)), None).unwrap();
    let p = t.prepare(0, 0).unwrap();
    assert_eq!(p.example.input_ids.len(), 6);
    assert_eq!(p.example.countdown_len, 3);
    assert!(t.step().unwrap().loss.is_finite());
}

#[test]
fn rejects_bad_setups() {
    let vocab = Arc::new(word_vocab(20));
    let cfg = tiny_config(&vocab, 4, true, true);
    let emb = Arc::new(EmbeddingMatrix::<f32>::random(&vocab, cfg.emb_dim, 5, 0.5));
    let params = ModelParams::init(cfg, emb, 1).unwrap();
    let mono = Arc::new(TrainData::Monolingual(corpus()));
    let empty = Arc::new(TrainData::Monolingual(Vec::new()));
    let v: Arc<Vocabulary> = vocab.clone();
    let new = |tcfg: TrainConfig, data: &Arc<TrainData>| {
        Trainer::new(tcfg, NoiseConfig::default(), params.clone(), v.clone(), data.clone(), None)
    };
    assert!(matches!(new(TrainConfig::default(), &empty), Err(Error::EmptyCorpus)));
    let sup = TrainConfig { mode: TrainMode::Supervised, ..TrainConfig::default() };
    assert!(matches!(new(sup, &mono), Err(Error::InvalidConfig(_))));
    assert!(matches!(new(TrainConfig::default(), &mono), Err(Error::SentenceEmbedding { found: None, .. })));
    let bad = TrainConfig { anneal_factor: 1.5, ..TrainConfig::default() };
    assert!(new(bad, &mono).is_err());
}
