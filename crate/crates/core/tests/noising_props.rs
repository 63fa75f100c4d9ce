use compresso_core::noising::{
    donor_quotas, make_training_example, sample_noise_words, shuffle_bigram, shuffle_unigram, NoiseConfig, ShuffleMode,
};
use compresso_core::rng::rng_from_seed;
use compresso_core::vocab::{decode_with_oov, EOS};
use compresso_core::{TokenSeq, Vocabulary};
use proptest::prelude::*;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn toy_corpus(n: usize, seed: u64) -> Vec<TokenSeq> {
    let mut r = rng_from_seed(seed);
    (0..n)
        .map(|_| {
            let len = r.gen_range(1..=24);
            TokenSeq::new((0..len).map(|_| format!("v{}", r.gen_range(0..60))).collect()).unwrap()
        })
        .collect()
}

fn multiset_contains(big: &[u32], small: &[u32]) -> bool {
    let mut pool = big.to_vec();
    small.iter().all(|x| match pool.iter().position(|y| y == x) {
        Some(i) => {
            pool.swap_remove(i);
            true
        }
        None => false,
    })
}

#[test]
fn noised_lengths_stay_in_band() {
    let corpus = toy_corpus(300, 1);
    let vocab = Vocabulary::build(corpus.iter(), 40).unwrap();
    for mode in [ShuffleMode::Unigram, ShuffleMode::Bigram] {
        let cfg = NoiseConfig { shuffle_mode: mode, ..NoiseConfig::default() };
        for i in 0..2000 {
            let idx = i % corpus.len();
            let reference = &corpus[idx];
            let mut rng = rng_from_seed(1000 + i as u64);
            let ex = make_training_example(reference, &corpus, Some(idx), &vocab, &cfg, &mut rng).unwrap();
            let l = reference.len();
            let (_, hi) = cfg.extra_range(l);
            // short donors may leave fewer words; see long_donors_always_fill_the_quota
            let extra = ex.input_ids.len() - l;
            assert!(extra <= hi, "L={l} extra={extra}");
            assert_eq!(ex.target_ids.last(), Some(&EOS));
            assert_eq!(ex.countdown_len, l + 1);
            assert!(multiset_contains(&ex.input_ids, &ex.target_ids[..l]));
        }
    }
}

#[test]
fn long_donors_always_fill_the_quota() {
    let corpus: Vec<TokenSeq> =
        (0..50).map(|i| TokenSeq::new((0..30).map(|j| format!("s{i}w{j}")).collect()).unwrap()).collect();
    let cfg = NoiseConfig::default();
    for l in 1..=30 {
        let (lo, hi) = cfg.extra_range(l);
        for s in 0..40 {
            let words = sample_noise_words(l, &corpus, Some(0), &cfg, &mut rng_from_seed(s));
            assert!((lo..=hi).contains(&words.len()));
            assert!(words.iter().all(|w| !w.starts_with("s0w")));
        }
    }
}

#[test]
fn band_edges() {
    let cfg = NoiseConfig::default();
    assert_eq!(cfg.extra_range(10), (4, 6));
    assert_eq!(cfg.extra_range(2), (1, 1));
    assert_eq!(donor_quotas(5, 2), vec![3, 2]);
}

#[test]
fn every_band_value_is_drawn() {
    let corpus = toy_corpus(40, 2);
    let long: Vec<TokenSeq> = corpus.iter().filter(|s| s.len() >= 12).cloned().collect();
    let cfg = NoiseConfig::default();
    let mut seen = [false; 7];
    for s in 0..500 {
        let k = sample_noise_words(10, &long, None, &cfg, &mut rng_from_seed(s)).len();
        seen[k] = true;
    }
    assert_eq!(seen, [false, false, false, false, true, true, true]);
}

#[test]
fn unigram_shuffle_is_uniform_on_three_tokens() {
    let perms: [[u8; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut counts = [0f64; 6];
    let mut rng = rng_from_seed(77);
    let n = 12_000;
    for _ in 0..n {
        let out = shuffle_unigram(&[0u8, 1, 2], &mut rng);
        counts[perms.iter().position(|p| p[..] == out[..]).unwrap()] += 1.0;
    }
    let expected = n as f64 / 6.0;
    let stat: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new(5.0).unwrap().cdf(stat);
    assert!(p > 0.001, "chi2 {stat}, p {p}");
}

proptest! {
    #[test]
    fn bigram_pairs_stay_together(len in 0usize..40, seed in any::<u64>()) {
        let seq: Vec<usize> = (0..len).collect();
        let out = shuffle_bigram(&seq, &mut rng_from_seed(seed));
        let mut sorted = out.clone();
        sorted.sort_unstable();
        prop_assert_eq!(&sorted, &seq);
        for i in (0..len.saturating_sub(1)).step_by(2) {
            let p = out.iter().position(|&x| x == i).unwrap();
            prop_assert_eq!(out.get(p + 1), Some(&(i + 1)));
        }
    }

    #[test]
    fn reference_oovs_take_the_low_slots(seed in any::<u64>()) {
        let mut r = rng_from_seed(seed);
        let vocab = Vocabulary::from_content((0..20).map(|i| format!("k{i}")), 10).unwrap();
        let mk = |r: &mut compresso_core::rng::Rng, prefix: &str| {
            let len = r.gen_range(2..10);
            TokenSeq::new((0..len).map(|_| if r.gen_bool(0.4) { format!("{prefix}{}", r.gen_range(0..4)) } else { format!("k{}", r.gen_range(0..20)) }).collect()).unwrap()
        };
        let reference = mk(&mut r, "refoov");
        let pool: Vec<TokenSeq> = (0..6).map(|_| mk(&mut r, "noiseoov")).collect();
        let cfg = NoiseConfig { shuffle_mode: ShuffleMode::Unigram, ..NoiseConfig::default() };
        let ex = make_training_example(&reference, &pool, None, &vocab, &cfg, &mut r).unwrap();
        let ref_max = ex.target_ids.iter().filter_map(|&id| vocab.oov_slot(id)).max().unwrap_or(0);
        for &id in &ex.input_ids {
            if let Some(k) = vocab.oov_slot(id) {
                let word = ex.oov_table.get(k).unwrap();
                if word.starts_with("noiseoov") {
                    prop_assert!(k > ref_max);
                }
            }
        }
        let mut decoded = decode_with_oov(&ex.target_ids[..reference.len()], &vocab, &ex.oov_table);
        decoded.truncate(reference.len());
        prop_assert_eq!(decoded, reference.tokens().to_vec());
    }
}
