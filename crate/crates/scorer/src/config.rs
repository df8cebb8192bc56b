use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ScorerError;

/// Model architecture and optimization settings.
///
/// The default is the desk-scale setup, small enough to train on a laptop in
/// seconds while exercising every component. [`ModelConfig::full_scale`] is
/// the published full-size configuration. All sizes are plain unit counts;
/// `encoder_size` and `decoder_size` are per direction and per layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub word_dim: usize,
    pub lemma_dim: usize,
    pub pos_dim: usize,
    pub char_dim: usize,
    /// Dimension of precomputed per-token context vectors; 0 disables the
    /// external channel entirely.
    pub external_dim: usize,
    /// Character convolution window (odd).
    pub cnn_window: usize,
    pub cnn_filters: usize,
    pub encoder_layers: usize,
    /// Encoder hidden size per direction; states are twice this wide.
    pub encoder_size: usize,
    pub decoder_layers: usize,
    pub decoder_size: usize,
    pub arc_mlp_size: usize,
    pub label_mlp_size: usize,
    pub embedding_dropout: f64,
    pub lstm_dropout: f64,
    /// Probability of replacing a singleton word/lemma with UNK during
    /// training.
    pub unk_replace_prob: f64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub batch_size: usize,
    /// Learning-rate multiplier applied after `decay_patience` consecutive
    /// epochs without a dev-score improvement.
    pub decay_rate: f64,
    pub decay_patience: usize,
    pub gradient_clip: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            word_dim: 16,
            lemma_dim: 16,
            pos_dim: 16,
            char_dim: 8,
            external_dim: 0,
            cnn_window: 3,
            cnn_filters: 8,
            encoder_layers: 1,
            encoder_size: 32,
            decoder_layers: 1,
            decoder_size: 32,
            arc_mlp_size: 32,
            label_mlp_size: 16,
            embedding_dropout: 0.0,
            lstm_dropout: 0.0,
            unk_replace_prob: 0.0,
            learning_rate: 0.002,
            beta1: 0.9,
            beta2: 0.9,
            batch_size: 8,
            decay_rate: 0.75,
            decay_patience: 10,
            gradient_clip: 5.0,
            epochs: 200,
            seed: 1,
        }
    }
}

impl ModelConfig {
    /// Full-size configuration. Training it needs real corpora and a GPU-day
    /// of patience; it is shipped for completeness, not for the test suite.
    pub fn full_scale() -> Self {
        ModelConfig {
            word_dim: 100,
            lemma_dim: 100,
            pos_dim: 100,
            char_dim: 100,
            external_dim: 0,
            cnn_window: 3,
            cnn_filters: 50,
            encoder_layers: 3,
            encoder_size: 512,
            decoder_layers: 1,
            decoder_size: 512,
            arc_mlp_size: 512,
            label_mlp_size: 128,
            embedding_dropout: 0.33,
            lstm_dropout: 0.33,
            unk_replace_prob: 0.5,
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.9,
            batch_size: 32,
            decay_rate: 0.75,
            decay_patience: 10,
            gradient_clip: 5.0,
            epochs: 500,
            seed: 1,
        }
    }

    pub fn validate(&self) -> Result<(), ScorerError> {
        let dims = [
            ("word_dim", self.word_dim),
            ("lemma_dim", self.lemma_dim),
            ("pos_dim", self.pos_dim),
            ("char_dim", self.char_dim),
            ("cnn_filters", self.cnn_filters),
            ("encoder_layers", self.encoder_layers),
            ("encoder_size", self.encoder_size),
            ("decoder_layers", self.decoder_layers),
            ("decoder_size", self.decoder_size),
            ("arc_mlp_size", self.arc_mlp_size),
            ("label_mlp_size", self.label_mlp_size),
            ("batch_size", self.batch_size),
        ];
        for (name, value) in dims {
            if value == 0 {
                return Err(ScorerError::Config(format!("{name} must be at least 1")));
            }
        }
        if self.cnn_window == 0 || self.cnn_window % 2 == 0 {
            return Err(ScorerError::Config(format!(
                "cnn_window must be odd, got {}",
                self.cnn_window
            )));
        }
        let probs = [
            ("embedding_dropout", self.embedding_dropout),
            ("lstm_dropout", self.lstm_dropout),
            ("unk_replace_prob", self.unk_replace_prob),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
        ];
        for (name, value) in probs {
            if !(0.0..=1.0).contains(&value) {
                return Err(ScorerError::Config(format!(
                    "{name} must lie in [0, 1], got {value}"
                )));
            }
        }
        if self.embedding_dropout >= 1.0 || self.lstm_dropout >= 1.0 {
            return Err(ScorerError::Config("dropout must be below 1".to_string()));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(ScorerError::Config(format!(
                "learning_rate must be a finite non-negative number, got {}",
                self.learning_rate
            )));
        }
        if !(self.decay_rate > 0.0 && self.decay_rate <= 1.0) {
            return Err(ScorerError::Config(format!(
                "decay_rate must lie in (0, 1], got {}",
                self.decay_rate
            )));
        }
        if !(self.gradient_clip > 0.0) {
            return Err(ScorerError::Config(format!(
                "gradient_clip must be positive, got {}",
                self.gradient_clip
            )));
        }
        Ok(())
    }

    /// Width of the token input vector x_i (char-conv output, then word,
    /// lemma, and pos embeddings, then the optional external vector).
    pub fn input_dim(&self) -> usize {
        self.cnn_filters + self.word_dim + self.lemma_dim + self.pos_dim + self.external_dim
    }

    /// Width of each encoder state (both directions concatenated).
    pub fn state_dim(&self) -> usize {
        2 * self.encoder_size
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ScorerError> {
        let config: ModelConfig =
            toml::from_str(text).map_err(|e| ScorerError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScorerError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ModelConfig::default().validate().unwrap();
        ModelConfig::full_scale().validate().unwrap();
    }

    #[test]
    fn toml_round_trip_and_partial_files() {
        let config = ModelConfig::full_scale();
        let text = config.to_toml_string();
        assert_eq!(ModelConfig::from_toml_str(&text).unwrap(), config);
        // Partial files fall back to desk defaults for missing keys.
        let partial = ModelConfig::from_toml_str("encoder_size = 64\nseed = 9\n").unwrap();
        assert_eq!(partial.encoder_size, 64);
        assert_eq!(partial.seed, 9);
        assert_eq!(partial.word_dim, ModelConfig::default().word_dim);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ModelConfig::from_toml_str("encoder_sized = 64\n").is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(ModelConfig::from_toml_str("cnn_window = 2\n").is_err());
        assert!(ModelConfig::from_toml_str("embedding_dropout = 1.5\n").is_err());
        assert!(ModelConfig::from_toml_str("encoder_size = 0\n").is_err());
        assert!(ModelConfig::from_toml_str("decay_rate = 0.0\n").is_err());
    }

    #[test]
    fn input_dim_tracks_external_channel() {
        let mut config = ModelConfig::default();
        let base = config.input_dim();
        config.external_dim = 7;
        assert_eq!(config.input_dim(), base + 7);
    }
}
