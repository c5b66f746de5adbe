//! Sweep configuration, read from a flat TOML file.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauSource {
    Constant,
    #[default]
    DualEstimated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BulkSource {
    #[default]
    Measured,
    Provided,
}

fn default_k() -> f64 {
    3.0
}
fn default_kappa() -> f64 {
    0.3
}
fn default_epsilon() -> f64 {
    0.1
}
fn default_chains() -> usize {
    8
}
fn default_sweeps() -> usize {
    2000
}
fn default_thermalization() -> usize {
    1000
}
fn default_stride() -> usize {
    10
}
fn default_seed() -> u64 {
    1
}
fn default_n_directions() -> usize {
    1024
}
fn default_rho() -> f64 {
    0.25
}
fn default_bulk_sweeps() -> usize {
    20_000
}
fn default_bulk_thermalization() -> usize {
    2000
}
fn default_bulk_chains() -> usize {
    4
}
fn default_tau_widths() -> Vec<usize> {
    vec![10, 12]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub beta: f64,
    #[serde(rename = "L")]
    pub side: usize,
    pub delta_values: Vec<f64>,
    /// Scale prefactor: `s = K ln L`.
    #[serde(rename = "K", default = "default_k")]
    pub k: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub tau_source: TauSource,
    /// Value for the constant tension model.
    #[serde(default)]
    pub tau0: Option<f64>,
    #[serde(default = "default_tau_widths")]
    pub tau_widths: Vec<usize>,
    #[serde(default)]
    pub bulk_source: BulkSource,
    #[serde(default)]
    pub m_star: Option<f64>,
    #[serde(default)]
    pub chi: Option<f64>,
    #[serde(default = "default_chains")]
    pub chains: usize,
    #[serde(default = "default_sweeps")]
    pub sweeps: usize,
    #[serde(default = "default_thermalization")]
    pub thermalization: usize,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_n_directions")]
    pub n_directions: usize,
    /// Largest admissible deficit volume as a fraction of `L²`.
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_bulk_sweeps")]
    pub bulk_sweeps: usize,
    #[serde(default = "default_bulk_thermalization")]
    pub bulk_thermalization: usize,
    #[serde(default = "default_bulk_chains")]
    pub bulk_chains: usize,
    /// Write every retained grid as a snapshot under the output directory.
    #[serde(default)]
    pub spill_snapshots: bool,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    /// Contour scale `s = K ln L`.
    pub fn scale(&self) -> f64 {
        self.k * (self.side as f64).ln()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(config_err(format!("{name} must be positive and finite")))
            }
        };
        positive("beta", self.beta)?;
        positive("K", self.k)?;
        positive("epsilon", self.epsilon)?;
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(config_err("kappa must lie in (0, 1)"));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(config_err("rho must lie in (0, 1)"));
        }
        if self.side < 2 {
            return Err(config_err("L must be at least 2"));
        }
        if self.delta_values.is_empty() {
            return Err(config_err("delta_values is empty"));
        }
        for &d in &self.delta_values {
            positive("every delta value", d)?;
        }
        if self.chains == 0 || self.stride == 0 || self.sweeps < self.stride {
            return Err(config_err("chains and stride must be positive and sweeps at least one stride"));
        }
        if self.n_directions < 8 || self.n_directions % 4 != 0 {
            return Err(config_err("n_directions must be a multiple of 4 and at least 8"));
        }
        match self.tau_source {
            TauSource::Constant => positive("tau0", self.tau0.ok_or_else(|| config_err("tau_source = constant needs tau0"))?)?,
            TauSource::DualEstimated => {
                if self.tau_widths.is_empty() {
                    return Err(config_err("tau_widths is empty"));
                }
            }
        }
        if self.bulk_source == BulkSource::Provided {
            let m = self.m_star.ok_or_else(|| config_err("bulk_source = provided needs m_star"))?;
            let chi = self.chi.ok_or_else(|| config_err("bulk_source = provided needs chi"))?;
            if !(m > 0.0 && m <= 1.0) {
                return Err(config_err("m_star must lie in (0, 1]"));
            }
            positive("chi", chi)?;
        } else if self.bulk_chains == 0 || self.bulk_sweeps == 0 {
            return Err(config_err("measured bulk needs bulk_chains and bulk_sweeps"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "beta = 0.7\nL = 32\ndelta_values = [0.5, 1.5]\n";

    #[test]
    fn defaults_fill_in() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.k, 3.0);
        assert_eq!(cfg.kappa, 0.3);
        assert_eq!(cfg.epsilon, 0.1);
        assert_eq!(cfg.tau_source, TauSource::DualEstimated);
        assert_eq!(cfg.bulk_source, BulkSource::Measured);
        assert!((cfg.scale() - 3.0 * 32f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn round_trip() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn rejects_bad_configs() {
        for bad in [
            "beta = 0.7\nL = 32\ndelta_values = []\n",
            "beta = 0.7\nL = 32\ndelta_values = [1.0]\nkappa = 1.5\n",
            "beta = 0.7\nL = 32\ndelta_values = [1.0]\nepsilon = 0.0\n",
            "beta = 0.7\nL = 32\ndelta_values = [1.0]\ntau_source = \"constant\"\n",
            "beta = 0.7\nL = 32\ndelta_values = [1.0]\nbulk_source = \"provided\"\nm_star = 0.9\n",
            "beta = 0.7\nL = 32\ndelta_values = [1.0]\nunknown_key = 3\n",
            "beta = 0.7\ndelta_values = [1.0]\n",
            "beta = -1\nL = 32\ndelta_values = [1.0]\n",
        ] {
            assert!(matches!(ExperimentConfig::from_toml_str(bad), Err(Error::Config(_))), "{bad}");
        }
    }
}
