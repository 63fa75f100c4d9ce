//! Flat `key = value` run configuration.
//!
//! Keys are the field names of the training, model and noise settings. Blank
//! lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use compresso_core::{ModelConfig, NoiseConfig, ShuffleMode, TrainConfig, TrainMode};

use crate::error::{Error, Result};

/// Model settings that do not depend on the vocabulary or word vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSettings {
    /// Width of random word vectors when no embedding file is given.
    pub emb_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    pub num_oov: usize,
    pub use_attention: bool,
    pub use_conditioning: bool,
}

impl Default for ModelSettings {
    fn default() -> Self {
        ModelSettings {
            emb_dim: 100,
            hidden: 512,
            layers: 3,
            num_oov: 10,
            use_attention: true,
            use_conditioning: false,
        }
    }
}

impl ModelSettings {
    pub fn to_config(&self, emb_dim: usize, vocab_size: usize) -> ModelConfig {
        ModelConfig {
            emb_dim,
            hidden: self.hidden,
            layers: self.layers,
            vocab_size,
            num_oov: self.num_oov,
            use_attention: self.use_attention,
            use_conditioning: self.use_conditioning,
            sent_emb_dim: emb_dim,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub train: TrainConfig,
    pub model: ModelSettings,
    pub noise: NoiseConfig,
}

pub const KEYS: &[&str] = &[
    "batch_size",
    "lr_init",
    "anneal_factor",
    "anneal_every",
    "clip_norm",
    "epochs",
    "mode",
    "seed",
    "checkpoint_every",
    "max_steps",
    "emb_dim",
    "hidden",
    "layers",
    "num_oov",
    "use_attention",
    "use_conditioning",
    "extension_min",
    "extension_max",
    "donors",
    "shuffle_mode",
    "max_oov",
];

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "on" | "yes" | "1" => Some(true),
        "false" | "off" | "no" | "0" => Some(false),
        _ => None,
    }
}

impl Settings {
    /// Desk-scale preset: one layer of 16 units, batches of 16.
    pub fn tiny() -> Self {
        let mut s = Settings::default();
        s.apply_preset("tiny").expect("known preset");
        s
    }

    pub fn apply_preset(&mut self, name: &str) -> Result<()> {
        match name {
            "tiny" => {
                self.model.hidden = 16;
                self.model.layers = 1;
                self.train.batch_size = 16;
                Ok(())
            }
            "full" => {
                let seed = self.train.seed;
                *self = Settings::default();
                self.train.seed = seed;
                Ok(())
            }
            other => Err(Error::Config(format!("unknown preset {other:?}"))),
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = || Error::Config(format!("invalid value {value:?} for {key}"));
        macro_rules! num {
            () => {
                value.parse().map_err(|_| bad())?
            };
        }
        let t = &mut self.train;
        let m = &mut self.model;
        let n = &mut self.noise;
        match key {
            "batch_size" => t.batch_size = num!(),
            "lr_init" => t.lr_init = num!(),
            "anneal_factor" => t.anneal_factor = num!(),
            "anneal_every" => t.anneal_every = num!(),
            "clip_norm" => t.clip_norm = num!(),
            "epochs" => t.epochs = num!(),
            "mode" => t.mode = TrainMode::parse(value).ok_or_else(bad)?,
            "seed" => t.seed = num!(),
            "checkpoint_every" => t.checkpoint_every = num!(),
            "max_steps" => t.max_steps = if value == "none" { None } else { Some(num!()) },
            "emb_dim" => m.emb_dim = num!(),
            "hidden" => m.hidden = num!(),
            "layers" => m.layers = num!(),
            "num_oov" => m.num_oov = num!(),
            "use_attention" => m.use_attention = parse_bool(value).ok_or_else(bad)?,
            "use_conditioning" => m.use_conditioning = parse_bool(value).ok_or_else(bad)?,
            "extension_min" => n.extension_min = num!(),
            "extension_max" => n.extension_max = num!(),
            "donors" => n.donors = num!(),
            "shuffle_mode" => n.shuffle_mode = ShuffleMode::parse(value).ok_or_else(bad)?,
            "max_oov" => n.max_oov = num!(),
            _ => return Err(Error::Config(format!("unknown setting {key:?}"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`.
    pub fn apply_text(&mut self, text: &str, path: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fail = |message: String| Error::Format { path: path.to_path_buf(), line: i + 1, message };
            let (k, v) = line.split_once('=').ok_or_else(|| fail("expected key = value".into()))?;
            self.set(k.trim(), v.trim()).map_err(|e| fail(e.to_string()))?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Settings::default();
        s.apply_text(text, Path::new("<config>"))?;
        Ok(s)
    }

    /// Every key in [`KEYS`] order.
    pub fn to_text(&self) -> String {
        let (t, m, n) = (&self.train, &self.model, &self.noise);
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("batch_size", t.batch_size.to_string());
        kv("lr_init", t.lr_init.to_string());
        kv("anneal_factor", t.anneal_factor.to_string());
        kv("anneal_every", t.anneal_every.to_string());
        kv("clip_norm", t.clip_norm.to_string());
        kv("epochs", t.epochs.to_string());
        kv("mode", t.mode.name().into());
        kv("seed", t.seed.to_string());
        kv("checkpoint_every", t.checkpoint_every.to_string());
        kv("max_steps", t.max_steps.map_or("none".into(), |v| v.to_string()));
        kv("emb_dim", m.emb_dim.to_string());
        kv("hidden", m.hidden.to_string());
        kv("layers", m.layers.to_string());
        kv("num_oov", m.num_oov.to_string());
        kv("use_attention", m.use_attention.to_string());
        kv("use_conditioning", m.use_conditioning.to_string());
        kv("extension_min", n.extension_min.to_string());
        kv("extension_max", n.extension_max.to_string());
        kv("donors", n.donors.to_string());
        kv("shuffle_mode", n.shuffle_mode.name().into());
        kv("max_oov", n.max_oov.to_string());
        s
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.noise.validate()?;
        Ok(())
    }
}
