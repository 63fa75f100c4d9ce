mod common;

use common::*;
use compresso_core::model::{check_gradients, GradCheckOptions, OracleArithmetic};

fn run(attention: bool, conditioning: bool, opts: GradCheckOptions) -> f64 {
    let vocab = word_vocab(36);
    let cfg = tiny_config(&vocab, 8, attention, conditioning);
    let model = tiny_model(cfg, &vocab, 11);
    let (reference, ex) = tiny_example(&vocab, 5);
    let s = conditioning.then(|| sent_emb(&model, &vocab, &reference));
    let report = check_gradients(&model, &ex, s.as_deref(), opts).unwrap();
    println!(
        "attn={attention} cond={conditioning}: max rel err {:.3e} at {} ({} coords)",
        report.max_relative_error, report.worst_tensor, report.checked
    );
    report.max_relative_error
}

#[test]
fn finite_difference_agreement_all_configurations() {
    let handles: Vec<_> = [(false, false), (false, true), (true, false), (true, true)]
        .into_iter()
        .map(|(a, c)| std::thread::spawn(move || (a, c, run(a, c, GradCheckOptions::default()))))
        .collect();
    for h in handles {
        let (a, c, err) = h.join().unwrap();
        assert!(err < 1e-4, "attn={a} cond={c}: {err}");
    }
}

#[test]
fn subsampled_check_is_reproducible() {
    let opts = GradCheckOptions { sample: Some(200), seed: 3, ..Default::default() };
    let a = run(true, true, opts);
    let b = run(true, true, opts);
    assert_eq!(a.to_bits(), b.to_bits());
    assert!(a < 1e-4);
}

#[test]
fn double_precision_oracle_agrees_to_roundoff() {
    // Plain f64 differences are limited by cancellation; agreement is only loose.
    let opts = GradCheckOptions { sample: Some(200), oracle: OracleArithmetic::Double, ..Default::default() };
    assert!(run(true, false, opts) < 1e-1);
}
