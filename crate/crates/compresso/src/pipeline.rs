//! Training runs that write checkpoints and loss logs to a directory.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use compresso_core::model::{MeanWordEmbedder, SentenceEmbedder};
use compresso_core::train::{accumulate_scaled, StepReport, TrainData};
use compresso_core::{EmbeddingMatrix, ModelParams, Trainer, Vocabulary};
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::checkpoint::{self, Checkpoint};
use crate::config::Settings;
use crate::error::Result;
use crate::fsutil::write_atomic;
use crate::report::LossLog;

pub const FINAL_CHECKPOINT: &str = "final.ckpt";
pub const LOSS_LOG: &str = "loss.csv";

pub fn checkpoint_name(step: u64) -> String {
    format!("step-{step:08}.ckpt")
}

pub fn mean_embedder(vocab: &Arc<Vocabulary>, emb: &Arc<EmbeddingMatrix<f32>>) -> Arc<dyn SentenceEmbedder<f32>> {
    Arc::new(MeanWordEmbedder::new(vocab.clone(), emb.clone()))
}

/// Builds a fresh trainer from settings, data and word vectors.
pub fn new_trainer(
    settings: &Settings,
    vocab: Arc<Vocabulary>,
    embeddings: Arc<EmbeddingMatrix<f32>>,
    data: Arc<TrainData>,
) -> Result<Trainer<f32>> {
    settings.validate()?;
    let cfg = settings.model.to_config(embeddings.dim(), vocab.len());
    let params = ModelParams::init(cfg, embeddings.clone(), settings.train.seed)?;
    let embedder = cfg.use_conditioning.then(|| mean_embedder(&vocab, &embeddings));
    Ok(Trainer::new(settings.train.clone(), settings.noise, params, vocab, data, embedder)?)
}

/// One minibatch. With a pool of `n > 1` threads the batch is split into `n`
/// contiguous chunks whose gradients are summed in chunk order.
pub fn step(trainer: &mut Trainer<f32>, pool: Option<&ThreadPool>) -> Result<StepReport> {
    match pool {
        Some(p) if p.current_num_threads() > 1 => {
            let jobs = p.current_num_threads();
            let (grad, loss) = p.install(|| chunked_gradient(trainer, jobs))?;
            Ok(trainer.apply(grad, loss))
        }
        _ => Ok(trainer.step()?),
    }
}

fn chunked_gradient(trainer: &Trainer<f32>, jobs: usize) -> Result<(Vec<f32>, f64)> {
    let s = trainer.state.step;
    let indices = trainer.batch_indices(s);
    let batch = indices.par_iter().map(|&i| trainer.prepare(s, i)).collect::<Result<Vec<_>, _>>()?;
    let n = batch.len();
    let chunk = n.div_ceil(jobs).max(1);
    let params = &trainer.params;
    let parts = batch
        .par_chunks(chunk)
        .map(|c| {
            let mut g = vec![0f32; params.len()];
            accumulate_scaled(params, c, &mut g, n).map(|loss| (loss, g))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut grad = vec![0f32; params.len()];
    let mut loss = 0.0;
    for (l, g) in parts {
        loss += l;
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
    }
    Ok((grad, loss))
}

pub fn snapshot(trainer: &Trainer<f32>, settings_text: &str) -> Checkpoint<f32> {
    Checkpoint {
        params: trainer.params.clone(),
        vocab: (**trainer.vocab()).clone(),
        settings: settings_text.to_string(),
        state: Some(trainer.state.clone()),
    }
}

/// Trains until the configured number of steps, saving periodic and final
/// checkpoints plus `loss.csv` into `out_dir`. Returns the final checkpoint path.
pub fn train_to_dir(
    trainer: &mut Trainer<f32>,
    settings_text: &str,
    out_dir: &Path,
    pool: Option<&ThreadPool>,
    mut log: LossLog,
    mut progress: impl FnMut(&StepReport),
) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir).map_err(crate::Error::io(out_dir))?;
    let every = trainer.cfg.checkpoint_every;
    while !trainer.is_finished() {
        let r = step(trainer, pool)?;
        log.push(&r);
        progress(&r);
        if trainer.state.step.is_multiple_of(every) {
            checkpoint::save(&out_dir.join(checkpoint_name(trainer.state.step)), &snapshot(trainer, settings_text))?;
            write_atomic(&out_dir.join(LOSS_LOG), log.as_str().as_bytes())?;
        }
    }
    let path = out_dir.join(FINAL_CHECKPOINT);
    checkpoint::save(&path, &snapshot(trainer, settings_text))?;
    write_atomic(&out_dir.join(LOSS_LOG), log.as_str().as_bytes())?;
    Ok(path)
}
