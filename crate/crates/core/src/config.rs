//! Experiment configuration: a flat TOML file whose keys map one-to-one to
//! pipeline knobs. Unknown keys are rejected so typos fail loudly.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baseline::{LinearConfig, DEFAULT_BASELINE_EPOCHS, DEFAULT_BASELINE_REG};
use crate::error::{Error, Result};
use crate::features::DenominatorMode;
use crate::lexicon::{LexiconParams, DEFAULT_EPSILON, DEFAULT_K, DEFAULT_MIN_DF};
use crate::model::{
    RnnDims, TrainConfig, DEFAULT_HIDDEN_FUSION, DEFAULT_HIDDEN_NEWS, DEFAULT_HIDDEN_PRICE,
};

pub const DEFAULT_SPLIT_FRACTION: f64 = 0.8;
pub const DEFAULT_HISTOGRAM_BINS: usize = 8;

/// Every knob of an end-to-end run. `Default` gives a runnable configuration
/// once the three input paths are set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Price CSV path.
    pub prices: String,
    /// News JSONL path.
    pub news: String,
    /// Seed-token file path; empty means the built-in seed list.
    pub seeds: String,
    /// Output directory for reports, predictions, and checkpoints.
    pub out_dir: String,
    /// Stocks to run; empty means every stock in the price file.
    pub stocks: Vec<String>,
    /// Fraction of feature days used for training, strictly inside (0,1).
    pub split_fraction: f64,
    /// Global seed; per-stock seeds are derived from it.
    pub seed: u64,

    pub lexicon_k: usize,
    pub lexicon_min_df: u32,
    pub lexicon_epsilon: f64,
    /// Keep seed tokens out of the standard sets.
    pub exclude_seeds: bool,

    pub histogram_bins: usize,
    pub histogram_denominator: DenominatorMode,

    pub hidden_price: usize,
    pub hidden_news: usize,
    pub hidden_fusion: usize,
    pub learning_rate: f64,
    pub lr_decay: f64,
    pub l2_lambda: f64,
    pub l2_include_biases: bool,
    pub epochs: usize,
    /// Global gradient-norm cap; 0 disables clipping.
    pub grad_clip: f64,
    /// Steps per truncated-backpropagation window; 0 trains full sequences.
    pub bptt_truncation: usize,

    pub baseline_reg: f64,
    pub baseline_epochs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        ExperimentConfig {
            prices: String::new(),
            news: String::new(),
            seeds: String::new(),
            out_dir: "out".to_string(),
            stocks: Vec::new(),
            split_fraction: DEFAULT_SPLIT_FRACTION,
            seed: 0,
            lexicon_k: DEFAULT_K,
            lexicon_min_df: DEFAULT_MIN_DF,
            lexicon_epsilon: DEFAULT_EPSILON,
            exclude_seeds: false,
            histogram_bins: DEFAULT_HISTOGRAM_BINS,
            histogram_denominator: DenominatorMode::InVocab,
            hidden_price: DEFAULT_HIDDEN_PRICE,
            hidden_news: DEFAULT_HIDDEN_NEWS,
            hidden_fusion: DEFAULT_HIDDEN_FUSION,
            learning_rate: train.learning_rate,
            lr_decay: train.lr_decay,
            l2_lambda: train.l2_lambda,
            l2_include_biases: train.l2_include_biases,
            epochs: train.epochs,
            grad_clip: train.grad_clip.unwrap_or(0.0),
            bptt_truncation: train.bptt_truncation.unwrap_or(0),
            baseline_reg: DEFAULT_BASELINE_REG,
            baseline_epochs: DEFAULT_BASELINE_EPOCHS,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let config: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::config(msg));
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return fail(format!(
                "split_fraction must lie strictly between 0 and 1, got {}",
                self.split_fraction
            ));
        }
        if self.lexicon_k == 0 {
            return fail("lexicon_k must be at least 1".to_string());
        }
        if self.lexicon_min_df == 0 {
            return fail("lexicon_min_df must be at least 1".to_string());
        }
        if self.lexicon_epsilon.is_nan() || self.lexicon_epsilon <= 0.0 {
            return fail(format!(
                "lexicon_epsilon must be positive, got {}",
                self.lexicon_epsilon
            ));
        }
        if self.histogram_bins == 0 {
            return fail("histogram_bins must be at least 1".to_string());
        }
        if self.hidden_price == 0 || self.hidden_news == 0 || self.hidden_fusion == 0 {
            return fail("hidden layer widths must be at least 1".to_string());
        }
        if self.learning_rate.is_nan()
            || self.learning_rate < 0.0
            || self.lr_decay.is_nan()
            || self.lr_decay <= 0.0
        {
            return fail(format!(
                "learning_rate must be >= 0 and lr_decay > 0, got {} and {}",
                self.learning_rate, self.lr_decay
            ));
        }
        if self.l2_lambda.is_nan() || self.l2_lambda < 0.0 {
            return fail(format!("l2_lambda must be >= 0, got {}", self.l2_lambda));
        }
        if self.epochs == 0 {
            return fail("epochs must be at least 1".to_string());
        }
        if self.grad_clip.is_nan() || self.grad_clip < 0.0 {
            return fail(format!("grad_clip must be >= 0, got {}", self.grad_clip));
        }
        if self.baseline_reg.is_nan() || self.baseline_reg <= 0.0 {
            return fail(format!(
                "baseline_reg must be positive, got {}",
                self.baseline_reg
            ));
        }
        if self.baseline_epochs == 0 {
            return fail("baseline_epochs must be at least 1".to_string());
        }
        Ok(())
    }

    pub fn lexicon_params(&self) -> LexiconParams {
        LexiconParams {
            k: self.lexicon_k,
            min_df: self.lexicon_min_df,
            epsilon: self.lexicon_epsilon,
            exclude_seeds: self.exclude_seeds,
        }
    }

    pub fn rnn_dims(&self) -> RnnDims {
        RnnDims {
            news_width: self.histogram_bins,
            hidden_price: self.hidden_price,
            hidden_news: self.hidden_news,
            hidden_fusion: self.hidden_fusion,
        }
    }

    /// Training knobs with a concrete seed (callers derive per-stock seeds).
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            lr_decay: self.lr_decay,
            l2_lambda: self.l2_lambda,
            l2_include_biases: self.l2_include_biases,
            epochs: self.epochs,
            seed,
            grad_clip: (self.grad_clip > 0.0).then_some(self.grad_clip),
            bptt_truncation: (self.bptt_truncation > 0).then_some(self.bptt_truncation),
        }
    }

    pub fn linear_config(&self, seed: u64) -> LinearConfig {
        LinearConfig {
            reg: self.baseline_reg,
            epochs: self.baseline_epochs,
            seed,
        }
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        Path::new(&self.out_dir).join(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip_through_toml() {
        let config = ExperimentConfig::default();
        config.validate().unwrap();
        let parsed: ExperimentConfig = toml::from_str(&config.to_toml()).unwrap();
        assert_eq!(parsed, config);
    }

    #[test]
    fn minimal_file_fills_in_defaults() {
        let config: ExperimentConfig =
            toml::from_str("prices = \"p.csv\"\nnews = \"n.jsonl\"\n").unwrap();
        assert_eq!(config.prices, "p.csv");
        assert_eq!(config.split_fraction, 0.8);
        assert_eq!(config.lexicon_k, 100);
        assert_eq!(config.lexicon_min_df, 5);
        assert_eq!(config.lexicon_epsilon, 0.5);
        assert_eq!(config.histogram_bins, 8);
        assert_eq!(config.histogram_denominator, DenominatorMode::InVocab);
        assert_eq!(
            (config.hidden_price, config.hidden_news, config.hidden_fusion),
            (8, 16, 16)
        );
        assert_eq!(config.epochs, 50);
        assert!(config.stocks.is_empty());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<ExperimentConfig>("learning_rte = 0.1\n").unwrap_err();
        assert!(err.to_string().contains("learning_rte"));
    }

    #[test]
    fn denominator_mode_parses_snake_case_names() {
        let config: ExperimentConfig =
            toml::from_str("histogram_denominator = \"all_tokens\"\n").unwrap();
        assert_eq!(config.histogram_denominator, DenominatorMode::AllTokens);
        assert!(toml::from_str::<ExperimentConfig>("histogram_denominator = \"sometimes\"\n")
            .is_err());
    }

    #[test]
    fn invalid_values_fail_validation() {
        let cases = [
            ("split_fraction = 1.0", "split_fraction"),
            ("split_fraction = 0.0", "split_fraction"),
            ("lexicon_k = 0", "lexicon_k"),
            ("lexicon_epsilon = 0.0", "lexicon_epsilon"),
            ("histogram_bins = 0", "histogram_bins"),
            ("hidden_news = 0", "hidden"),
            ("lr_decay = 0.0", "lr_decay"),
            ("epochs = 0", "epochs"),
            ("grad_clip = -1.0", "grad_clip"),
            ("baseline_reg = 0.0", "baseline_reg"),
            ("baseline_epochs = 0", "baseline_epochs"),
        ];
        for (line, needle) in cases {
            let config: ExperimentConfig = toml::from_str(line).unwrap();
            let err = config.validate().unwrap_err();
            assert!(err.is_config(), "{line}");
            assert!(err.to_string().contains(needle), "{line}: {err}");
        }
    }

    #[test]
    fn zero_disables_clipping_and_truncation() {
        let mut config = ExperimentConfig {
            grad_clip: 0.0,
            bptt_truncation: 0,
            ..ExperimentConfig::default()
        };
        let train = config.train_config(7);
        assert_eq!(train.grad_clip, None);
        assert_eq!(train.bptt_truncation, None);
        assert_eq!(train.seed, 7);

        config.grad_clip = 2.5;
        config.bptt_truncation = 16;
        let train = config.train_config(7);
        assert_eq!(train.grad_clip, Some(2.5));
        assert_eq!(train.bptt_truncation, Some(16));
    }

    #[test]
    fn load_reports_the_offending_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(&path, "prices = 5\n").unwrap();
        let err = ExperimentConfig::load(&path).unwrap_err();
        assert!(err.is_config());
        assert!(err.to_string().contains("exp.toml"));

        std::fs::write(&path, "split_fraction = 0.75\n").unwrap();
        let config = ExperimentConfig::load(&path).unwrap();
        assert_eq!(config.split_fraction, 0.75);
    }

    #[test]
    fn save_then_load_preserves_every_field() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        let config = ExperimentConfig {
            prices: "data/p.csv".to_string(),
            news: "data/n.jsonl".to_string(),
            stocks: vec!["s3".to_string(), "s1".to_string()],
            histogram_denominator: DenominatorMode::AllTokens,
            l2_include_biases: true,
            seed: 42,
            ..ExperimentConfig::default()
        };
        config.save(&path).unwrap();
        assert_eq!(ExperimentConfig::load(&path).unwrap(), config);
    }
}
