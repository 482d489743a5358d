//! Experiment configuration: TOML schema, defaults, and fail-fast
//! validation. CLI flags override file values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fedprotocol::{FederationConfig, Method};
use crate::hashopt::LossWeights;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_bits")]
    pub bits: Vec<usize>,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default = "default_n_clients")]
    pub n_clients: usize,
    #[serde(default = "default_local_epochs")]
    pub local_epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub partition: PartitionConfig,
    #[serde(default)]
    pub loss: LossWeights,
    #[serde(default)]
    pub training: TrainingConfig,
}

fn default_method() -> String {
    "plfedcmh".to_string()
}
fn default_seeds() -> Vec<u64> {
    vec![1]
}
fn default_bits() -> Vec<usize> {
    vec![16, 32, 64]
}
fn default_rounds() -> usize {
    20
}
fn default_n_clients() -> usize {
    4
}
fn default_local_epochs() -> usize {
    2
}
fn default_batch_size() -> usize {
    32
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            method: default_method(),
            seeds: default_seeds(),
            bits: default_bits(),
            rounds: default_rounds(),
            n_clients: default_n_clients(),
            local_epochs: default_local_epochs(),
            batch_size: default_batch_size(),
            dataset: DatasetConfig::default(),
            partition: PartitionConfig::default(),
            loss: LossWeights::default(),
            training: TrainingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    #[serde(default)]
    pub synthetic: Option<SyntheticConfig>,
    #[serde(default)]
    pub files: Option<FilesConfig>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            synthetic: Some(SyntheticConfig::default()),
            files: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    #[serde(default = "default_class_count")]
    pub class_count: usize,
    #[serde(default = "default_samples_per_class")]
    pub samples_per_class: usize,
    #[serde(default = "default_feature_dim")]
    pub image_dim: usize,
    #[serde(default = "default_feature_dim")]
    pub text_dim: usize,
    #[serde(default = "default_cluster_spread")]
    pub cluster_spread: f64,
}

fn default_class_count() -> usize {
    8
}
fn default_samples_per_class() -> usize {
    100
}
fn default_feature_dim() -> usize {
    64
}
fn default_cluster_spread() -> f64 {
    0.15
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            class_count: default_class_count(),
            samples_per_class: default_samples_per_class(),
            image_dim: default_feature_dim(),
            text_dim: default_feature_dim(),
            cluster_spread: default_cluster_spread(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilesConfig {
    pub images: PathBuf,
    pub texts: PathBuf,
    pub labels: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionConfig {
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default = "default_concentration")]
    pub concentration: f64,
    #[serde(default = "default_classes_per_client")]
    pub classes_per_client: usize,
    #[serde(default = "default_shard_samples_per_class")]
    pub samples_per_class: usize,
}

fn default_scheme() -> String {
    "noniid-unequal".to_string()
}
fn default_concentration() -> f64 {
    0.5
}
fn default_classes_per_client() -> usize {
    2
}
fn default_shard_samples_per_class() -> usize {
    25
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig {
            scheme: default_scheme(),
            concentration: default_concentration(),
            classes_per_client: default_classes_per_client(),
            samples_per_class: default_shard_samples_per_class(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    #[serde(default = "default_net_lr")]
    pub net_learning_rate: f64,
    #[serde(default = "default_hn_lr")]
    pub hn_learning_rate: f64,
    #[serde(default = "default_hidden_dims")]
    pub hidden_dims: Vec<usize>,
    #[serde(default = "default_hn_embedding_dim")]
    pub hn_embedding_dim: usize,
    #[serde(default = "default_hn_hidden_dim")]
    pub hn_hidden_dim: usize,
    #[serde(default = "default_dcc_sweeps")]
    pub dcc_sweeps: usize,
    #[serde(default)]
    pub prototypes_per_batch: bool,
}

fn default_net_lr() -> f64 {
    1e-4
}
fn default_hn_lr() -> f64 {
    1e-3
}
fn default_hidden_dims() -> Vec<usize> {
    vec![128, 128]
}
fn default_hn_embedding_dim() -> usize {
    32
}
fn default_hn_hidden_dim() -> usize {
    64
}
fn default_dcc_sweeps() -> usize {
    5
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            net_learning_rate: default_net_lr(),
            hn_learning_rate: default_hn_lr(),
            hidden_dims: default_hidden_dims(),
            hn_embedding_dim: default_hn_embedding_dim(),
            hn_hidden_dim: default_hn_hidden_dim(),
            dcc_sweeps: default_dcc_sweeps(),
            prototypes_per_batch: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        Ok(config)
    }

    pub fn method(&self) -> Result<Method> {
        Method::parse(&self.method)
    }

    /// Fail-fast validation with field-level messages.
    pub fn validate(&self) -> Result<()> {
        self.method()?;
        if self.seeds.is_empty() {
            return Err(Error::config("seeds: must be non-empty".to_string()));
        }
        if self.bits.is_empty() || self.bits.iter().any(|&b| b == 0) {
            return Err(Error::config("bits: every entry must be >= 1".to_string()));
        }
        if self.n_clients == 0 {
            return Err(Error::config("n_clients: must be >= 1".to_string()));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size: must be >= 1".to_string()));
        }
        match self.partition.scheme.as_str() {
            "iid" | "noniid-equal" | "noniid-unequal" => {}
            other => {
                return Err(Error::config(format!(
                    "partition.scheme: unknown scheme '{other}'"
                )))
            }
        }
        if !(self.partition.concentration > 0.0) {
            return Err(Error::config("partition.concentration: must be > 0".to_string()));
        }
        self.loss.validate()?;
        if self.dataset.synthetic.is_none() && self.dataset.files.is_none() {
            return Err(Error::config(
                "dataset: either [dataset.synthetic] or [dataset.files] is required".to_string(),
            ));
        }
        if let Some(s) = &self.dataset.synthetic {
            if s.class_count == 0 || s.samples_per_class == 0 || s.image_dim == 0 || s.text_dim == 0
            {
                return Err(Error::config("dataset.synthetic: counts must be >= 1".to_string()));
            }
            if !(s.cluster_spread > 0.0) {
                return Err(Error::config(
                    "dataset.synthetic.cluster_spread: must be > 0".to_string(),
                ));
            }
        }
        if !(self.training.net_learning_rate > 0.0) || !(self.training.hn_learning_rate > 0.0) {
            return Err(Error::config("training: learning rates must be > 0".to_string()));
        }
        Ok(())
    }

    /// The per-run federation knobs for a given bit length.
    pub fn federation_config(&self, bits: usize) -> FederationConfig {
        FederationConfig {
            hash_bits: bits,
            hidden_dims: self.training.hidden_dims.clone(),
            local_epochs: self.local_epochs,
            batch_size: self.batch_size,
            net_learning_rate: self.training.net_learning_rate,
            hn_learning_rate: self.training.hn_learning_rate,
            hn_embedding_dim: self.training.hn_embedding_dim,
            hn_hidden_dim: self.training.hn_hidden_dim,
            dcc_sweeps: self.training.dcc_sweeps,
            weights: self.loss,
            prototypes_per_batch: self.training.prototypes_per_batch,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let config = ExperimentConfig::default();
        config.validate().unwrap();
        assert_eq!(config.bits, vec![16, 32, 64]);
        assert_eq!(config.loss.mu, 10.0);
        assert_eq!(config.training.net_learning_rate, 1e-4);
        assert_eq!(config.training.hn_learning_rate, 1e-3);
    }

    #[test]
    fn toml_round_trip_and_overrides() {
        let text = r#"
            method = "fedavg"
            seeds = [3, 4]
            rounds = 5

            [dataset.synthetic]
            class_count = 4

            [partition]
            scheme = "iid"
        "#;
        let config: ExperimentConfig = toml::from_str(text).unwrap();
        config.validate().unwrap();
        assert_eq!(config.method().unwrap(), Method::Fedavg);
        assert_eq!(config.seeds, vec![3, 4]);
        assert_eq!(config.rounds, 5);
        assert_eq!(config.dataset.synthetic.unwrap().class_count, 4);
        assert_eq!(config.partition.scheme, "iid");
    }

    #[test]
    fn invalid_configs_fail_fast() {
        let mut config = ExperimentConfig::default();
        config.seeds.clear();
        assert!(matches!(config.validate(), Err(Error::Config(_))));

        let mut config = ExperimentConfig::default();
        config.method = "nope".to_string();
        assert!(matches!(config.validate(), Err(Error::Config(_))));

        let mut config = ExperimentConfig::default();
        config.partition.scheme = "zipf".to_string();
        assert!(matches!(config.validate(), Err(Error::Config(_))));

        let unknown = toml::from_str::<ExperimentConfig>("frobnicate = 1");
        assert!(unknown.is_err());
    }
}
