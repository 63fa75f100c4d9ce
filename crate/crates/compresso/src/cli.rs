//! Command-line interface.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime errors.

use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use compresso_core::eval::{self, AblationCell, AblationSetup, RougeReport, System};
use compresso_core::inference::{compress, DecodeSpec};
use compresso_core::model::{check_gradients, GradCheckOptions, SentenceEmbedder};
use compresso_core::noising::make_training_example;
use compresso_core::rng;
use compresso_core::train::TrainData;
use compresso_core::vocab::decode_with_oov;
use compresso_core::{
    EmbeddingMatrix, ModelConfig, ModelParams, ShuffleMode, TokenSeq, TrainMode, Trainer, Vocabulary,
};
use rayon::prelude::*;

use crate::checkpoint::{self, Checkpoint};
use crate::config::Settings;
use crate::corpus;
use crate::error::{Error, Result};
use crate::fsutil::{read_to_string, write_atomic};
use crate::pipeline;
use crate::report::{self, LossLog};

pub const SEED_ENV: &str = "COMPRESSO_SEED";

/// Unsupervised sentence compression with a denoising auto-encoder.
#[derive(Debug, Parser)]
#[command(name = "compresso", version)]
pub struct Cli {
    /// Random seed; defaults to the config file, then $COMPRESSO_SEED, then 0
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run single-threaded so every output is bit-reproducible
    #[arg(long, global = true)]
    deterministic: bool,
    /// Worker threads for noising, gradients and decoding
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: u16,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct SettingsArgs {
    /// File of `key = value` settings
    #[arg(long)]
    config: Option<PathBuf>,
    /// Apply a preset before the config file and overrides
    #[arg(long, value_parser = ["tiny", "full"])]
    preset: Option<String>,
    /// Override one setting (repeatable), e.g. --set hidden=32
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Args)]
struct LengthArgs {
    /// Target length as a fraction of the input length
    #[arg(long, conflicts_with = "length")]
    ratio: Option<f64>,
    /// Target length in tokens
    #[arg(long)]
    length: Option<usize>,
}

impl LengthArgs {
    fn spec(&self) -> DecodeSpec {
        match (self.length, self.ratio) {
            (Some(n), _) => DecodeSpec::tokens(n),
            (None, Some(r)) => DecodeSpec::ratio(r),
            (None, None) => DecodeSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SystemKind {
    AllText,
    F8w,
    Model,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Grid {
    /// Six variants: without attention, with attention, and with attention
    /// plus sentence embeddings, each under both shuffles
    Standard,
    /// All eight combinations
    Full,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a vocabulary file from a corpus
    BuildVocab {
        #[arg(long)]
        corpus: PathBuf,
        /// Number of content words to keep
        #[arg(long, default_value_t = compresso_core::vocab::DEFAULT_VOCAB_SIZE)]
        size: usize,
        #[arg(long, default_value_t = compresso_core::vocab::DEFAULT_NUM_OOV)]
        num_oov: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model, writing checkpoints and loss.csv into --out-dir
    Train {
        /// One sentence per line (denoise) or reference<TAB>summary (supervised)
        #[arg(long)]
        corpus: PathBuf,
        /// Vocabulary file; built from the corpus when omitted
        #[arg(long)]
        vocab: Option<PathBuf>,
        /// Word vectors (`word v1 ... vD`); random vectors of emb_dim when omitted
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Continue from a checkpoint (its stored settings are the base)
        #[arg(long)]
        resume: Option<PathBuf>,
        #[command(flatten)]
        settings: SettingsArgs,
    },
    /// Compress sentences read from stdin, one per line
    Compress {
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        length: LengthArgs,
        /// Comma-separated target lengths; prints one tab-separated line per length
        #[arg(long)]
        sweep: Option<String>,
    },
    /// Compress every stdin sentence at several target lengths
    Sweep {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Comma-separated target lengths, e.g. 7,9,11
        #[arg(long)]
        lengths: String,
    },
    /// Score a system against reference<TAB>summary pairs
    Evaluate {
        #[arg(long, value_enum)]
        system: SystemKind,
        #[arg(long)]
        data: PathBuf,
        /// Required for --system model
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[command(flatten)]
        length: LengthArgs,
        /// Write the CSV here and print the table to stdout; otherwise the CSV goes to stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train and score one model per ablation variant
    Ablate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Grid::Standard)]
        grid: Grid,
        #[command(flatten)]
        length: LengthArgs,
        #[command(flatten)]
        settings: SettingsArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print noised training inputs for a few corpus sentences
    NoisePreview {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        count: usize,
        #[command(flatten)]
        settings: SettingsArgs,
    },
    /// Compare analytic and finite-difference gradients on a random tiny model
    GradCheck {
        #[arg(long, default_value_t = 8)]
        hidden: usize,
        #[arg(long, default_value_t = 1)]
        layers: usize,
        /// Total id-space size, specials included
        #[arg(long, default_value_t = 50)]
        vocab_size: usize,
        #[arg(long, default_value_t = 6)]
        emb_dim: usize,
        #[arg(long, default_value_t = 1e-5)]
        eps: f64,
        /// Number of randomly chosen coordinates per configuration
        #[arg(long, default_value_t = 200, conflicts_with = "full")]
        sample: usize,
        /// Check every parameter
        #[arg(long)]
        full: bool,
        /// Save the checked (attention + conditioning) model as a 64-bit checkpoint
        #[arg(long)]
        save: Option<PathBuf>,
    },
}

struct Io<'a> {
    stdin: &'a mut dyn BufRead,
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
    pool: rayon::ThreadPool,
}

/// Parses `args` and runs the command. Returns the process exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn BufRead, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { write!(stderr, "{rendered}") } else { write!(stdout, "{rendered}") };
            return code;
        }
    };
    let jobs = if cli.deterministic { 1 } else { cli.jobs as usize };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return 2;
        }
    };
    let mut io = Io { stdin, stdout, stderr, pool };
    let result = dispatch(&cli, &mut io);
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(io.stderr, "error: {e}");
            2
        }
    }
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| Error::Config(format!("{SEED_ENV}={v:?} is not a seed"))),
        Err(_) => Ok(None),
    }
}

/// Defaults, then preset, then config file, then `--set`, then the seed.
fn load_settings(args: &SettingsArgs, base: Option<Settings>, seed: Option<u64>) -> Result<Settings> {
    let mut s = base.unwrap_or_default();
    let mut seed_from_file = false;
    if let Some(p) = &args.preset {
        s.apply_preset(p)?;
    }
    if let Some(path) = &args.config {
        let text = read_to_string(path)?;
        seed_from_file = text.lines().any(|l| l.split_once('=').is_some_and(|(k, _)| k.trim() == "seed"));
        s.apply_text(&text, path)?;
    }
    for o in &args.overrides {
        let (k, v) = o.split_once('=').ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {o:?}")))?;
        if k.trim() == "seed" {
            seed_from_file = true;
        }
        s.set(k.trim(), v.trim())?;
    }
    match seed {
        Some(v) => s.train.seed = v,
        None if !seed_from_file => {
            if let Some(v) = env_seed()? {
                s.train.seed = v;
            }
        }
        None => {}
    }
    s.validate()?;
    Ok(s)
}

fn load_model(path: &Path) -> Result<Checkpoint<f32>> {
    let bytes = crate::fsutil::read_bytes(path)?;
    match checkpoint::precision(&bytes)? {
        8 => {
            let c = checkpoint::decode::<f64>(&bytes)?;
            Ok(Checkpoint { params: c.params.cast(), vocab: c.vocab, settings: c.settings, state: None })
        }
        _ => checkpoint::decode::<f32>(&bytes),
    }
}

fn embedder_for(ckpt: &Checkpoint<f32>) -> Option<Arc<dyn SentenceEmbedder<f32>>> {
    ckpt.params
        .config()
        .use_conditioning
        .then(|| pipeline::mean_embedder(&Arc::new(ckpt.vocab.clone()), ckpt.params.embeddings()))
}

fn parse_lengths(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| match p.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Error::Config(format!("invalid length {p:?} in {s:?}"))),
        })
        .collect()
}

fn read_lines(stdin: &mut dyn BufRead) -> Result<Vec<String>> {
    let mut lines = Vec::new();
    for line in stdin.lines() {
        lines.push(line.map_err(Error::io("<stdin>"))?);
    }
    Ok(lines)
}

fn vocab_and_embeddings(
    vocab: Option<&Path>,
    embeddings: Option<&Path>,
    sentences: &[TokenSeq],
    settings: &Settings,
) -> Result<(Arc<Vocabulary>, Arc<EmbeddingMatrix<f32>>)> {
    let vocab = match vocab {
        Some(p) => corpus::read_vocab(p)?,
        None => Vocabulary::build_with_oov(
            sentences.iter(),
            compresso_core::vocab::DEFAULT_VOCAB_SIZE,
            settings.model.num_oov,
        )?,
    };
    if vocab.num_oov() != settings.model.num_oov {
        return Err(Error::Config(format!(
            "vocabulary has {} OOV slots but num_oov = {}",
            vocab.num_oov(),
            settings.model.num_oov
        )));
    }
    let emb_seed = rng::derive_seed(settings.train.seed, &[0x7665_6373]);
    let emb = match embeddings {
        Some(p) => corpus::read_embeddings(p, &vocab, emb_seed)?,
        None => EmbeddingMatrix::random(&vocab, settings.model.emb_dim, emb_seed, RANDOM_VECTOR_STD),
    };
    Ok((Arc::new(vocab), Arc::new(emb)))
}

/// Per-component spread of random word vectors when no file is given.
pub const RANDOM_VECTOR_STD: f64 = 0.5;

fn dispatch(cli: &Cli, io: &mut Io<'_>) -> Result<i32> {
    match &cli.command {
        Command::BuildVocab { corpus: path, size, num_oov, out } => {
            let sents = corpus::read_corpus(path)?;
            let vocab = Vocabulary::build_with_oov(sents.iter(), *size, *num_oov)?;
            write_atomic(out, corpus::vocab_to_string(&vocab).as_bytes())?;
            writeln!(io.stderr, "wrote {} tokens to {}", vocab.len(), out.display()).ok();
            Ok(0)
        }
        Command::Train { corpus: path, vocab, embeddings, out_dir, resume, settings } => {
            train(cli, io, path, vocab.as_deref(), embeddings.as_deref(), out_dir, resume.as_deref(), settings)
        }
        Command::Compress { checkpoint, length, sweep } => {
            let ckpt = load_model(checkpoint)?;
            let lengths = sweep.as_deref().map(parse_lengths).transpose()?;
            let spec = length.spec();
            spec.validate()?;
            compress_lines(io, &ckpt, |sent, model, vocab, emb| match &lengths {
                Some(ls) => {
                    let outs = compresso_core::inference::compress_sweep(sent, ls, model, vocab, emb)?;
                    Ok(outs.into_iter().map(|(_, s)| s.join()).collect::<Vec<_>>().join("\t"))
                }
                None => Ok(compress(sent, &spec, model, vocab, emb)?.join()),
            })
        }
        Command::Sweep { checkpoint, lengths } => {
            let ckpt = load_model(checkpoint)?;
            let ls = parse_lengths(lengths)?;
            compress_lines(io, &ckpt, |sent, model, vocab, emb| {
                let outs = compresso_core::inference::compress_sweep(sent, &ls, model, vocab, emb)?;
                Ok(outs.into_iter().map(|(n, s)| format!("{n}\t{}", s.join())).collect::<Vec<_>>().join("\n"))
            })
        }
        Command::Evaluate { system, data, checkpoint, length, out } => {
            let (pairs, skipped) = corpus::read_paired(data)?;
            for s in &skipped {
                writeln!(io.stderr, "{}:{}: skipped: {}", data.display(), s.line, s.message).ok();
            }
            let spec = length.spec();
            spec.validate()?;
            let ckpt = match (system, checkpoint) {
                (SystemKind::Model, Some(p)) => Some(load_model(p)?),
                (SystemKind::Model, None) => {
                    writeln!(io.stderr, "error: --system model needs --checkpoint").ok();
                    return Ok(1);
                }
                _ => None,
            };
            let embedder = ckpt.as_ref().and_then(embedder_for);
            let sys = match (system, &ckpt) {
                (SystemKind::AllText, _) => System::AllText,
                (SystemKind::F8w, _) => System::F8W,
                (SystemKind::Model, Some(c)) => {
                    System::Model { model: &c.params, vocab: &c.vocab, embedder: embedder.as_deref() }
                }
                (SystemKind::Model, None) => unreachable!(),
            };
            let mut report = io.pool.install(|| evaluate_parallel(&sys, &pairs, &spec))?;
            report.skipped = skipped;
            emit_reports(io, &[report], out.as_deref())?;
            Ok(0)
        }
        Command::Ablate { corpus: path, data, vocab, embeddings, grid, length, settings, out } => {
            let settings = load_settings(settings, None, cli.seed)?;
            let sents = corpus::read_corpus(path)?;
            let (eval_pairs, skipped) = corpus::read_paired(data)?;
            for s in &skipped {
                writeln!(io.stderr, "{}:{}: skipped: {}", data.display(), s.line, s.message).ok();
            }
            let (vocab, emb) = vocab_and_embeddings(vocab.as_deref(), embeddings.as_deref(), &sents, &settings)?;
            let spec = length.spec();
            spec.validate()?;
            let setup = AblationSetup {
                model: settings.model.to_config(emb.dim(), vocab.len()),
                train: settings.train.clone(),
                noise: settings.noise,
                spec,
                vocab,
                embeddings: emb,
                corpus: Arc::new(TrainData::Monolingual(sents)),
                eval_pairs: Arc::new(eval_pairs),
            };
            let cells = match grid {
                Grid::Standard => AblationCell::standard_grid(),
                Grid::Full => AblationCell::full_grid(),
            };
            // cells are independent; results keep grid order
            let rows: Vec<_> = io.pool.install(|| cells.par_iter().map(|&c| eval::run_cell(c, &setup)).collect());
            for row in &rows {
                if let Err(e) = &row.result {
                    writeln!(io.stderr, "{}: {e}", row.cell.name()).ok();
                }
            }
            let csv = report::ablation_csv(&rows);
            match out {
                Some(p) => {
                    write_atomic(p, csv.as_bytes())?;
                    write!(io.stdout, "{}", report::ablation_table(&rows)).ok();
                }
                None => {
                    write!(io.stdout, "{csv}").ok();
                    write!(io.stderr, "{}", report::ablation_table(&rows)).ok();
                }
            }
            Ok(0)
        }
        Command::NoisePreview { corpus: path, vocab, count, settings } => {
            let settings = load_settings(settings, None, cli.seed)?;
            let sents = corpus::read_corpus(path)?;
            let vocab = match vocab {
                Some(p) => corpus::read_vocab(p)?,
                None => Vocabulary::build_with_oov(
                    sents.iter(),
                    compresso_core::vocab::DEFAULT_VOCAB_SIZE,
                    settings.model.num_oov,
                )?,
            };
            for i in 0..(*count).min(sents.len()) {
                let mut r = rng::stream(settings.train.seed, &[0x7072_6576, i as u64]);
                let ex = make_training_example(&sents[i], &sents, Some(i), &vocab, &settings.noise, &mut r)?;
                let input = decode_with_oov(&ex.input_ids, &vocab, &ex.oov_table).join(" ");
                writeln!(io.stdout, "reference: {}", sents[i].join()).ok();
                writeln!(io.stdout, "noised:    {input}").ok();
            }
            Ok(0)
        }
        Command::GradCheck { hidden, layers, vocab_size, emb_dim, eps, sample, full, save } => {
            let seed = match cli.seed {
                Some(s) => s,
                None => env_seed()?.unwrap_or(0),
            };
            grad_check(
                io,
                seed,
                *hidden,
                *layers,
                *vocab_size,
                *emb_dim,
                *eps,
                (!full).then_some(*sample),
                save.as_deref(),
            )
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn train(
    cli: &Cli,
    io: &mut Io<'_>,
    path: &Path,
    vocab: Option<&Path>,
    embeddings: Option<&Path>,
    out_dir: &Path,
    resume: Option<&Path>,
    settings_args: &SettingsArgs,
) -> Result<i32> {
    let resumed = resume.map(checkpoint::load::<f32>).transpose()?;
    let base = resumed.as_ref().map(|c| Settings::parse(&c.settings)).transpose()?;
    let settings = load_settings(settings_args, base, cli.seed)?;
    let text = read_to_string(path)?;
    let data = match settings.train.mode {
        TrainMode::Denoise => TrainData::Monolingual(corpus::parse_corpus(&text, path)?),
        TrainMode::Supervised => {
            let (pairs, skipped) = corpus::parse_paired(&text);
            if let Some(s) = skipped.first() {
                return Err(Error::Format { path: path.to_path_buf(), line: s.line, message: s.message.clone() });
            }
            TrainData::Paired(pairs)
        }
    };
    let references: Vec<TokenSeq> = match &data {
        TrainData::Monolingual(v) => v.clone(),
        TrainData::Paired(v) => v.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect(),
    };
    let data = Arc::new(data);
    let settings_text = settings.to_text();

    let (mut trainer, log) = match resumed {
        Some(ckpt) => {
            let state = ckpt.state.ok_or_else(|| Error::Config("checkpoint has no optimiser state".into()))?;
            let vocab = Arc::new(ckpt.vocab);
            let emb = ckpt.params.embeddings().clone();
            let embedder = ckpt.params.config().use_conditioning.then(|| pipeline::mean_embedder(&vocab, &emb));
            let existing = std::fs::read_to_string(out_dir.join(pipeline::LOSS_LOG)).unwrap_or_default();
            let log = LossLog::resume(&existing, state.step);
            let t = Trainer::resume(settings.train.clone(), settings.noise, ckpt.params, state, vocab, data, embedder)?;
            (t, log)
        }
        None => {
            let (vocab, emb) = vocab_and_embeddings(vocab, embeddings, &references, &settings)?;
            (pipeline::new_trainer(&settings, vocab, emb, data)?, LossLog::new())
        }
    };
    let total = trainer.total_steps();
    let stderr = &mut *io.stderr;
    let final_path = pipeline::train_to_dir(&mut trainer, &settings_text, out_dir, Some(&io.pool), log, |r| {
        if (r.step + 1) % 100 == 0 || r.step + 1 == total {
            let _ = writeln!(stderr, "step {}/{total} lr {} loss {:.4}", r.step + 1, r.lr, r.loss);
        }
    })?;
    writeln!(io.stdout, "{}", final_path.display()).ok();
    Ok(0)
}

fn compress_lines<G>(io: &mut Io<'_>, ckpt: &Checkpoint<f32>, f: G) -> Result<i32>
where
    G: Fn(
            &TokenSeq,
            &ModelParams<f32>,
            &Vocabulary,
            Option<&dyn SentenceEmbedder<f32>>,
        ) -> compresso_core::Result<String>
        + Sync,
{
    let embedder = embedder_for(ckpt);
    let lines = read_lines(io.stdin)?;
    let outputs: Vec<Result<String>> = io.pool.install(|| {
        lines
            .par_iter()
            .enumerate()
            .map(|(i, line)| {
                let sent = TokenSeq::parse(line).map_err(|e| Error::Format {
                    path: "<stdin>".into(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
                if sent.is_empty() {
                    return Ok(String::new());
                }
                Ok(f(&sent, &ckpt.params, &ckpt.vocab, embedder.as_deref())?)
            })
            .collect()
    });
    for out in outputs {
        writeln!(io.stdout, "{}", out?).map_err(Error::io("<stdout>"))?;
    }
    Ok(0)
}

fn evaluate_parallel(system: &System<'_>, pairs: &[(TokenSeq, TokenSeq)], spec: &DecodeSpec) -> Result<RougeReport> {
    let scores = pairs
        .par_iter()
        .map(|(reference, summary)| {
            let out = system.output(reference, spec)?;
            Ok(eval::score_pair(&out, summary, reference.len()))
        })
        .collect::<compresso_core::Result<Vec<_>>>()?;
    Ok(RougeReport::from_pairs(system.name().to_string(), scores, Vec::new()))
}

fn emit_reports(io: &mut Io<'_>, reports: &[RougeReport], out: Option<&Path>) -> Result<()> {
    let csv = report::reports_csv(reports);
    match out {
        Some(p) => {
            write_atomic(p, csv.as_bytes())?;
            write!(io.stdout, "{}", report::report_table(reports)).ok();
        }
        None => {
            write!(io.stdout, "{csv}").ok();
            write!(io.stderr, "{}", report::report_table(reports)).ok();
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn grad_check(
    io: &mut Io<'_>,
    seed: u64,
    hidden: usize,
    layers: usize,
    vocab_size: usize,
    emb_dim: usize,
    eps: f64,
    sample: Option<usize>,
    save: Option<&Path>,
) -> Result<i32> {
    let num_oov = compresso_core::vocab::DEFAULT_NUM_OOV;
    let content = vocab_size
        .checked_sub(num_oov + 4)
        .filter(|&c| c >= 8)
        .ok_or_else(|| Error::Config(format!("--vocab-size must be at least {}", num_oov + 12)))?;
    let vocab = Vocabulary::from_content((0..content).map(|i| format!("w{i}")), num_oov)?;
    let emb = Arc::new(EmbeddingMatrix::<f64>::random(&vocab, emb_dim, rng::derive_seed(seed, &[1]), 0.5));
    let embedder = compresso_core::model::MeanWordEmbedder::new(Arc::new(vocab.clone()), emb.clone());

    // a reference with one OOV word, noised from a small pool
    let mut r = rng::stream(seed, &[2]);
    let word = |i: u64| format!("w{}", rng::derive_seed(seed, &[3, i]) % content as u64);
    let mut reference: Vec<String> = (0..5).map(word).collect();
    reference.insert(2, "unseen".into());
    let reference = TokenSeq::new(reference)?;
    let pool: Vec<TokenSeq> = (0..3)
        .map(|d| TokenSeq::new((0..5).map(|j| word(10 + 5 * d + j)).collect()))
        .collect::<compresso_core::Result<_>>()?;
    let noise = compresso_core::NoiseConfig { shuffle_mode: ShuffleMode::Bigram, ..Default::default() };
    let ex = make_training_example(&reference, &pool, None, &vocab, &noise, &mut r)?;

    let mut worst = 0.0f64;
    let mut last_model = None;
    for (attention, conditioning) in [(false, false), (false, true), (true, false), (true, true)] {
        let cfg = ModelConfig {
            emb_dim,
            hidden,
            layers,
            vocab_size: vocab.len(),
            num_oov,
            use_attention: attention,
            use_conditioning: conditioning,
            sent_emb_dim: emb_dim,
        };
        let model = ModelParams::init(cfg, emb.clone(), seed)?;
        let s = conditioning.then(|| embedder.embed(&reference));
        let opts = GradCheckOptions { eps, sample, seed, ..Default::default() };
        let rep = check_gradients(&model, &ex, s.as_deref(), opts)?;
        writeln!(
            io.stdout,
            "attention={attention} conditioning={conditioning} checked={} max_relative_error={:.3e} worst={}",
            rep.checked, rep.max_relative_error, rep.worst_tensor
        )
        .ok();
        worst = worst.max(rep.max_relative_error);
        last_model = Some(model);
    }
    writeln!(io.stdout, "max_relative_error={worst:.3e}").ok();
    if let (Some(path), Some(model)) = (save, last_model) {
        let ckpt = Checkpoint { params: model, vocab, settings: String::new(), state: None };
        checkpoint::save(path, &ckpt)?;
    }
    Ok(if worst < 1e-4 { 0 } else { 2 })
}
