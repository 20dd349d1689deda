//! Run configuration: flat `key = value` text with full-line `#` comments.
//!
//! Every key has the full-scale experiment's value as its default, so an
//! empty (or absent) config file reproduces that setup: 39 inputs, 128
//! blocks per direction, 40 outputs, learning rate 1e-4, momentum 0.9,
//! input noise 0.6, prefix-search decoding at blank threshold 0.9999, and
//! the standard MFCC front end.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use phonerec_core::features::FrontEndConfig;
use phonerec_core::network::ModelConfig;
use phonerec_core::training::TrainingConfig;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which decoder `decode` runs by default.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecoderKind {
    BestPath,
    PrefixSearch,
}

impl DecoderKind {
    pub fn parse(s: &str) -> Result<Self, String> {
        match s {
            "best-path" => Ok(DecoderKind::BestPath),
            "prefix" => Ok(DecoderKind::PrefixSearch),
            other => Err(format!(
                "unknown decoder {other:?} (expected `best-path` or `prefix`)"
            )),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            DecoderKind::BestPath => "best-path",
            DecoderKind::PrefixSearch => "prefix",
        }
    }
}

/// Effective configuration for every subcommand.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub training: TrainingConfig,
    pub front_end: FrontEndConfig,
    /// Normalize features to zero mean / unit variance over the training set.
    pub normalize: bool,
    pub decoder: DecoderKind,
    pub blank_threshold: f64,
    /// Custom folding table; the embedded TIMIT 61→39 table when absent.
    pub phoneset_table: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelConfig::new(39, 128, 1, 40),
            training: TrainingConfig::default(),
            front_end: FrontEndConfig::default(),
            normalize: true,
            decoder: DecoderKind::PrefixSearch,
            blank_threshold: 0.9999,
            phoneset_table: None,
        }
    }
}

impl RunConfig {
    /// Defaults, overlaid with the file's keys when a path is given.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)?;
            cfg.apply_text(&text)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.model
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.training
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(self.blank_threshold > 0.0 && self.blank_threshold <= 1.0) {
            return Err(ConfigError::Invalid(format!(
                "blank_threshold {} outside (0, 1]",
                self.blank_threshold
            )));
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Parse {
                line: idx + 1,
                message: "expected `key = value`".to_string(),
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|message| ConfigError::Parse {
                    line: idx + 1,
                    message,
                })?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("bad value {value:?} for {key}"))
        }
        fn flag(key: &str, value: &str) -> Result<bool, String> {
            match value {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(format!("bad value {value:?} for {key} (true/false)")),
            }
        }
        match key {
            "input_dim" => self.model.input_dim = num(key, value)?,
            "blocks_per_direction" => self.model.blocks_per_direction = num(key, value)?,
            "cells_per_block" => self.model.cells_per_block = num(key, value)?,
            "output_dim" => self.model.output_dim = num(key, value)?,
            "learning_rate" => self.training.learning_rate = num(key, value)?,
            "momentum" => self.training.momentum = num(key, value)?,
            "noise_std" => self.training.noise_std = num(key, value)?,
            "max_epochs" => self.training.max_epochs = num(key, value)?,
            "patience" => self.training.patience = num(key, value)?,
            "seed" => self.training.seed = num(key, value)?,
            "shuffle" => self.training.shuffle = flag(key, value)?,
            "normalize" => self.normalize = flag(key, value)?,
            "pre_emphasis" => self.front_end.pre_emphasis = num(key, value)?,
            "window_seconds" => self.front_end.window_seconds = num(key, value)?,
            "step_seconds" => self.front_end.step_seconds = num(key, value)?,
            "mel_channels" => self.front_end.mel_channels = num(key, value)?,
            "mel_low_hz" => self.front_end.mel_low_hz = num(key, value)?,
            "mel_high_hz" => self.front_end.mel_high_hz = num(key, value)?,
            "num_cepstra" => self.front_end.num_cepstra = num(key, value)?,
            "include_c0" => self.front_end.include_c0 = flag(key, value)?,
            "decoder" => self.decoder = DecoderKind::parse(value)?,
            "blank_threshold" => self.blank_threshold = num(key, value)?,
            "phoneset_table" => {
                self.phoneset_table = if value.is_empty() {
                    None
                } else {
                    Some(PathBuf::from(value))
                }
            }
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    /// The effective configuration as config-file text; reloading it
    /// reproduces this configuration exactly.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        out.push_str("# phonerec effective configuration\n");
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("input_dim", self.model.input_dim.to_string());
        kv(
            "blocks_per_direction",
            self.model.blocks_per_direction.to_string(),
        );
        kv("cells_per_block", self.model.cells_per_block.to_string());
        kv("output_dim", self.model.output_dim.to_string());
        kv("learning_rate", self.training.learning_rate.to_string());
        kv("momentum", self.training.momentum.to_string());
        kv("noise_std", self.training.noise_std.to_string());
        kv("max_epochs", self.training.max_epochs.to_string());
        kv("patience", self.training.patience.to_string());
        kv("seed", self.training.seed.to_string());
        kv("shuffle", self.training.shuffle.to_string());
        kv("normalize", self.normalize.to_string());
        kv("pre_emphasis", self.front_end.pre_emphasis.to_string());
        kv("window_seconds", self.front_end.window_seconds.to_string());
        kv("step_seconds", self.front_end.step_seconds.to_string());
        kv("mel_channels", self.front_end.mel_channels.to_string());
        kv("mel_low_hz", self.front_end.mel_low_hz.to_string());
        kv("mel_high_hz", self.front_end.mel_high_hz.to_string());
        kv("num_cepstra", self.front_end.num_cepstra.to_string());
        kv("include_c0", self.front_end.include_c0.to_string());
        kv("decoder", self.decoder.as_str().to_string());
        kv("blank_threshold", self.blank_threshold.to_string());
        kv(
            "phoneset_table",
            self.phoneset_table
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_full_scale_values() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.model.input_dim, 39);
        assert_eq!(cfg.model.blocks_per_direction, 128);
        assert_eq!(cfg.model.output_dim, 40);
        assert_eq!(cfg.training.learning_rate, 1e-4);
        assert_eq!(cfg.training.momentum, 0.9);
        assert_eq!(cfg.training.noise_std, 0.6);
        assert_eq!(cfg.blank_threshold, 0.9999);
        assert_eq!(cfg.decoder, DecoderKind::PrefixSearch);
        assert_eq!(cfg.front_end.mel_channels, 40);
    }

    #[test]
    fn parse_overrides_and_comments() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("# comment\nblocks_per_direction = 16\n\nnoise_std = 0.1\nshuffle = false\n")
            .unwrap();
        assert_eq!(cfg.model.blocks_per_direction, 16);
        assert_eq!(cfg.training.noise_std, 0.1);
        assert!(!cfg.training.shuffle);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let mut cfg = RunConfig::default();
        let err = cfg.apply_text("seed = 1\nbogus_key = 2\n").unwrap_err();
        match err {
            ConfigError::Parse { line: 2, message } => assert!(message.contains("bogus_key")),
            other => panic!("unexpected: {other:?}"),
        }
        let err = cfg.apply_text("momentum : 0.5\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 1, .. }));
    }

    #[test]
    fn dump_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("blocks_per_direction = 16\nlearning_rate = 0.001\ndecoder = best-path\n")
            .unwrap();
        let dumped = cfg.dump();
        let mut reloaded = RunConfig::default();
        reloaded.apply_text(&dumped).unwrap();
        assert_eq!(reloaded, cfg);
    }
}
