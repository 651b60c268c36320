use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::omega::LassoBounds;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("alpha + beta must be 1 (got {alpha} + {beta})")]
    WeightSum { alpha: f64, beta: f64 },
    #[error("{name} must be in {range} (got {value})")]
    OutOfRange {
        name: &'static str,
        range: &'static str,
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedderChoice {
    Hash,
    Remote(String),
}

/// How `|AP_t|` is counted in the reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AtomMetric {
    /// Total atom occurrences over the set.
    #[default]
    Occurrences,
    /// Distinct atom names over the set.
    Distinct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub exploration: f64,
    pub patience: usize,
    pub max_depth: usize,
    pub rollout_depth: usize,
    pub iterations: usize,
    pub seed: u64,
    pub atom_metric: AtomMetric,
    /// Lassos per certification check of a rule application.
    pub certify_samples: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            exploration: std::f64::consts::SQRT_2,
            patience: 3,
            max_depth: 12,
            rollout_depth: 6,
            iterations: 200,
            seed: 0,
            atom_metric: AtomMetric::Occurrences,
            certify_samples: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub alpha: f64,
    pub beta: f64,
    /// Similarity threshold for coarse edges; DBSCAN uses `eps = 1 - threshold`.
    pub threshold: f64,
    pub min_pts: usize,
    pub lasso_samples: usize,
    pub lasso_bounds: LassoBounds,
    pub seed: u64,
    pub workers: usize,
    pub coarse_partition: bool,
    /// Truth-table Jaccard for small propositional pairs.
    pub fast_path: bool,
    pub embedder: EmbedderChoice,
    pub embed_dim: usize,
    pub search: SearchConfig,
    /// Lassos for the end-to-end equivalence certificate per cluster.
    pub final_certify_samples: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            alpha: 0.4,
            beta: 0.6,
            threshold: 0.85,
            min_pts: 2,
            lasso_samples: 500,
            lasso_bounds: LassoBounds::default(),
            seed: 0,
            workers: 64,
            coarse_partition: true,
            fast_path: true,
            embedder: EmbedderChoice::Hash,
            embed_dim: 256,
            search: SearchConfig::default(),
            final_certify_samples: 500,
        }
    }
}

impl Config {
    pub fn eps(&self) -> f64 {
        1.0 - self.threshold
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if (self.alpha + self.beta - 1.0).abs() > 1e-9 {
            return Err(ConfigError::WeightSum {
                alpha: self.alpha,
                beta: self.beta,
            });
        }
        let unit = |name, value: f64| {
            if (0.0..=1.0).contains(&value) {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange {
                    name,
                    range: "[0, 1]",
                    value,
                })
            }
        };
        unit("alpha", self.alpha)?;
        unit("beta", self.beta)?;
        if !(self.threshold >= 0.0 && self.threshold < 1.0) {
            return Err(ConfigError::OutOfRange {
                name: "threshold",
                range: "[0, 1)",
                value: self.threshold,
            });
        }
        let positive = |name, value: usize| {
            if value >= 1 {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange {
                    name,
                    range: ">= 1",
                    value: value as f64,
                })
            }
        };
        positive("min_pts", self.min_pts)?;
        positive("lasso_samples", self.lasso_samples)?;
        positive("workers", self.workers)?;
        positive("embed_dim", self.embed_dim)?;
        positive("patience", self.search.patience)?;
        positive("iterations", self.search.iterations)?;
        positive("max_depth", self.search.max_depth)?;
        positive("rollout_depth", self.search.rollout_depth)?;
        if self.search.exploration.is_nan() || self.search.exploration <= 0.0 {
            return Err(ConfigError::OutOfRange {
                name: "exploration",
                range: "> 0",
                value: self.search.exploration,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = Config::default();
        c.validate().unwrap();
        assert!((c.eps() - 0.15).abs() < 1e-12);
    }

    #[test]
    fn weight_sum_checked() {
        let c = Config {
            alpha: 0.5,
            ..Config::default()
        };
        assert!(matches!(c.validate(), Err(ConfigError::WeightSum { .. })));
        let c = Config {
            alpha: 1.0,
            beta: 0.0,
            ..Config::default()
        };
        c.validate().unwrap();
    }
}
