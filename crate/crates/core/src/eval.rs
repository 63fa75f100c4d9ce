//! Corpus-level ROUGE reports, length bins and the ablation grid.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::embedding::EmbeddingMatrix;
use crate::inference::{baseline_f8w, compress, DecodeSpec};
use crate::model::{MeanWordEmbedder, ModelConfig, ModelParams, SentenceEmbedder};
use crate::noising::{NoiseConfig, ShuffleMode};
use crate::rouge::{rouge_l, rouge_n, RougeScore};
use crate::train::{TrainConfig, TrainData, TrainMode, Trainer};
use crate::vocab::{TokenSeq, Vocabulary};
use crate::Result;

/// Inclusive reference-length ranges reported separately.
pub const LENGTH_BINS: [(usize, usize); 2] = [(16, 30), (31, 45)];

/// The system whose outputs are scored.
pub enum System<'a> {
    /// The reference itself.
    AllText,
    /// The first eight reference words.
    F8W,
    Model {
        model: &'a ModelParams<f32>,
        vocab: &'a Vocabulary,
        embedder: Option<&'a dyn SentenceEmbedder<f32>>,
    },
}

impl core::fmt::Debug for System<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

impl System<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            System::AllText => "all-text",
            System::F8W => "f8w",
            System::Model { .. } => "model",
        }
    }

    pub fn output(&self, reference: &TokenSeq, spec: &DecodeSpec) -> Result<Vec<String>> {
        match self {
            System::AllText => Ok(reference.tokens().to_vec()),
            System::F8W => Ok(baseline_f8w(reference)),
            System::Model { model, vocab, embedder } => {
                compress(reference, spec, model, vocab, *embedder).map(TokenSeq::into_inner)
            }
        }
    }
}

/// A paired line that could not be used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedLine {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairScore {
    pub r1: RougeScore,
    pub r2: RougeScore,
    pub rl: RougeScore,
    pub reference_len: usize,
    pub output_len: usize,
}

/// Mean F1 scores and output length over a set of pairs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Summary {
    pub count: usize,
    pub r1: f64,
    pub r2: f64,
    pub rl: f64,
    pub avg_len: f64,
}

impl Summary {
    pub fn of<'a, I: IntoIterator<Item = &'a PairScore>>(scores: I) -> Self {
        let mut s = Summary::default();
        for p in scores {
            s.count += 1;
            s.r1 += p.r1.f1;
            s.r2 += p.r2.f1;
            s.rl += p.rl.f1;
            s.avg_len += p.output_len as f64;
        }
        if s.count > 0 {
            let n = s.count as f64;
            s.r1 /= n;
            s.r2 /= n;
            s.rl /= n;
            s.avg_len /= n;
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RougeReport {
    pub system: String,
    pub pairs: Vec<PairScore>,
    pub overall: Summary,
    /// One entry per [`LENGTH_BINS`] range.
    pub bins: Vec<((usize, usize), Summary)>,
    pub skipped: Vec<SkippedLine>,
}

impl RougeReport {
    pub fn from_pairs(system: String, pairs: Vec<PairScore>, skipped: Vec<SkippedLine>) -> Self {
        let overall = Summary::of(&pairs);
        let bins = LENGTH_BINS
            .iter()
            .map(|&(lo, hi)| ((lo, hi), Summary::of(pairs.iter().filter(|p| (lo..=hi).contains(&p.reference_len)))))
            .collect();
        RougeReport { system, pairs, overall, bins, skipped }
    }
}

pub fn score_pair(output: &[String], summary: &[String], reference_len: usize) -> PairScore {
    PairScore {
        r1: rouge_n(output, summary, 1),
        r2: rouge_n(output, summary, 2),
        rl: rouge_l(output, summary),
        reference_len,
        output_len: output.len(),
    }
}

/// Scores `system` on `(reference, summary)` pairs.
pub fn evaluate(system: &System<'_>, pairs: &[(TokenSeq, TokenSeq)], spec: &DecodeSpec) -> Result<RougeReport> {
    let scores = pairs
        .iter()
        .map(|(reference, summary)| {
            let out = system.output(reference, spec)?;
            Ok(score_pair(&out, summary, reference.len()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RougeReport::from_pairs(system.name().to_string(), scores, Vec::new()))
}

/// One model variant of the ablation grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AblationCell {
    pub shuffle: ShuffleMode,
    pub attention: bool,
    pub conditioning: bool,
}

impl AblationCell {
    pub fn name(&self) -> String {
        let shuf = match self.shuffle {
            ShuffleMode::Unigram => "1-g shuf",
            ShuffleMode::Bigram => "2-g shuf",
        };
        let mut s = shuf.to_string();
        if !self.attention {
            s.push_str(" (w/o attn)");
        }
        if self.conditioning {
            s.push_str(" + sent emb");
        }
        s
    }

    /// Six rows: no attention, attention, and attention with sentence
    /// embeddings, each under both shuffles.
    pub fn standard_grid() -> Vec<AblationCell> {
        let mut cells = Vec::new();
        for (attention, conditioning) in [(false, false), (true, false), (true, true)] {
            for shuffle in [ShuffleMode::Unigram, ShuffleMode::Bigram] {
                cells.push(AblationCell { shuffle, attention, conditioning });
            }
        }
        cells
    }

    /// Every combination of shuffle mode, attention and conditioning.
    pub fn full_grid() -> Vec<AblationCell> {
        let mut cells = Vec::new();
        for attention in [false, true] {
            for conditioning in [false, true] {
                for shuffle in [ShuffleMode::Unigram, ShuffleMode::Bigram] {
                    cells.push(AblationCell { shuffle, attention, conditioning });
                }
            }
        }
        cells
    }
}

/// Settings shared by every cell of an ablation run.
#[derive(Debug, Clone)]
pub struct AblationSetup {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub noise: NoiseConfig,
    pub spec: DecodeSpec,
    pub vocab: Arc<Vocabulary>,
    pub embeddings: Arc<EmbeddingMatrix<f32>>,
    pub corpus: Arc<TrainData>,
    pub eval_pairs: Arc<Vec<(TokenSeq, TokenSeq)>>,
}

#[derive(Debug, Clone)]
pub struct AblationRow {
    pub cell: AblationCell,
    pub result: core::result::Result<RougeReport, String>,
}

/// Trains one variant with the shared settings and evaluates it.
pub fn run_cell(cell: AblationCell, setup: &AblationSetup) -> AblationRow {
    let result = train_and_evaluate(cell, setup).map_err(|e| format!("{e}"));
    AblationRow { cell, result }
}

/// Runs `f` for every cell in order; a failing cell becomes an error row.
pub fn run_grid<G>(grid: &[AblationCell], mut f: G) -> Vec<AblationRow>
where
    G: FnMut(AblationCell) -> Result<RougeReport>,
{
    grid.iter().map(|&cell| AblationRow { cell, result: f(cell).map_err(|e| format!("{e}")) }).collect()
}

pub fn train_and_evaluate(cell: AblationCell, setup: &AblationSetup) -> Result<RougeReport> {
    let mut mcfg = setup.model;
    mcfg.use_attention = cell.attention;
    mcfg.use_conditioning = cell.conditioning;
    mcfg.sent_emb_dim = setup.embeddings.dim();
    let mut noise = setup.noise;
    noise.shuffle_mode = cell.shuffle;
    let mut tcfg = setup.train.clone();
    tcfg.mode = TrainMode::Denoise;

    let params = ModelParams::init(mcfg, setup.embeddings.clone(), tcfg.seed)?;
    let embedder: Arc<MeanWordEmbedder<f32>> =
        Arc::new(MeanWordEmbedder::new(setup.vocab.clone(), setup.embeddings.clone()));
    let dyn_embedder: Option<Arc<dyn SentenceEmbedder<f32>>> =
        if cell.conditioning { Some(embedder.clone()) } else { None };
    let mut trainer = Trainer::new(tcfg, noise, params, setup.vocab.clone(), setup.corpus.clone(), dyn_embedder)?;
    while !trainer.is_finished() {
        trainer.step()?;
    }
    let system = System::Model {
        model: &trainer.params,
        vocab: &setup.vocab,
        embedder: if cell.conditioning { Some(&*embedder) } else { None },
    };
    let mut report = evaluate(&system, &setup.eval_pairs, &setup.spec)?;
    report.system = cell.name();
    Ok(report)
}

/// Runs every cell in order. A failing cell yields an error row.
pub fn run_ablation(grid: &[AblationCell], setup: &AblationSetup) -> Vec<AblationRow> {
    run_grid(grid, |cell| train_and_evaluate(cell, setup))
}
