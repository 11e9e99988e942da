//! Experiment configuration files.

use std::path::Path;

use anyhow::{bail, Context, Result};
use polyfix::config::{MapRecord, NormRecord};
use polyfix::dynamics::{default_p_max, DEFAULT_P_CAP};
use polyfix::{MapSpec, NormKind, PolyhedralNorm, SelfMap, Vector};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub fp_tol: f64,
    pub orbit_tol: f64,
    pub face_tol: f64,
    pub check_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            fp_tol: 1e-10,
            orbit_tol: 1e-8,
            face_tol: 1e-9,
            check_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Caps {
    pub max_iter: usize,
    /// Largest period searched for; defaults to `min(2^n max_k C(n,k), 1000)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_max: Option<usize>,
    pub retry_budget: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            p_max: None,
            retry_budget: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    /// Half-width of the box of random starts and audit samples.
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    /// Random pairs for a sampled Lipschitz certificate.
    pub certify_trials: usize,
    /// Pairs for the isometry audit.
    pub audit_samples: usize,
}

impl Default for Sampling {
    fn default() -> Self {
        Self {
            radius: 2.0,
            center: None,
            certify_trials: 2_000,
            audit_samples: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Certify,
    Fix,
    Orbit,
    Structure,
}

fn default_commands() -> Vec<Command> {
    vec![Command::Certify, Command::Orbit, Command::Structure]
}

fn default_starts() -> usize {
    32
}

fn default_power() -> usize {
    1
}

fn default_fd_step() -> f64 {
    1e-5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub norm: NormRecord,
    pub map: MapRecord,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub caps: Caps,
    #[serde(default)]
    pub sampling: Sampling,
    /// The structure run studies `Fix(f^power)`.
    #[serde(default = "default_power")]
    pub power: usize,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    /// Commands run for this config by `suite`.
    #[serde(default = "default_commands")]
    pub commands: Vec<Command>,
}

/// A validated configuration with its norm and map built.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub norm: PolyhedralNorm,
    pub map: MapSpec,
}

impl Experiment {
    pub fn from_config(config: ExperimentConfig) -> Result<Self> {
        if config.schema_version != SCHEMA_VERSION {
            bail!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                config.schema_version
            );
        }
        let t = &config.tolerances;
        for (name, v) in [
            ("fp_tol", t.fp_tol),
            ("orbit_tol", t.orbit_tol),
            ("face_tol", t.face_tol),
            ("check_tol", t.check_tol),
            ("sampling.radius", config.sampling.radius),
            ("fd_step", config.fd_step),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                bail!("{name} must be positive and finite, got {v}");
            }
        }
        let c = &config.caps;
        if config.starts == 0 || c.max_iter == 0 || c.retry_budget == 0 || c.p_max == Some(0) {
            bail!("starts and caps must be at least 1");
        }
        if config.power == 0 || config.sampling.certify_trials == 0 {
            bail!("power and sampling.certify_trials must be at least 1");
        }
        let norm = PolyhedralNorm::try_from(&config.norm).context("building norm")?;
        let map = MapSpec::try_from(&config.map).context("building map")?;
        if map.dim() != norm.dim() {
            bail!(
                "map dimension {} does not match norm dimension {}",
                map.dim(),
                norm.dim()
            );
        }
        if let Some(center) = &config.sampling.center {
            if center.len() != norm.dim() {
                bail!(
                    "sampling.center has length {}, expected {}",
                    center.len(),
                    norm.dim()
                );
            }
        }
        Ok(Self { config, norm, map })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let config: ExperimentConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        Self::from_config(config).with_context(|| format!("validating {}", path.display()))
    }

    pub fn dim(&self) -> usize {
        self.norm.dim()
    }

    pub fn center(&self) -> Vector {
        match &self.config.sampling.center {
            Some(c) => Vector::from_column_slice(c),
            None => Vector::zeros(self.dim()),
        }
    }

    /// Period search range. For custom norms no bound in terms of `n` is
    /// known, so the configured cap (or the default cap) is used as is.
    pub fn p_max(&self) -> usize {
        let cap = self.config.caps.p_max.unwrap_or(DEFAULT_P_CAP);
        match self.norm.kind() {
            NormKind::Custom => cap,
            _ => default_p_max(self.dim(), cap),
        }
    }

    pub fn with_overrides(mut self, seed: Option<u64>, starts: Option<usize>) -> Result<Self> {
        if let Some(s) = seed {
            self.config.seed = s;
        }
        if let Some(k) = starts {
            if k == 0 {
                bail!("--starts must be at least 1");
            }
            self.config.starts = k;
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema_version": 1,
        "name": "rotation",
        "norm": {"kind": "linf", "n": 2},
        "map": {"type": "affine", "matrix": [[0, -1], [1, 0]]}
    }"#;

    #[test]
    fn defaults_fill_in() {
        let c: ExperimentConfig = serde_json::from_str(MINIMAL).unwrap();
        let e = Experiment::from_config(c).unwrap();
        assert_eq!(e.config.starts, 32);
        assert_eq!(e.config.tolerances, Tolerances::default());
        assert_eq!(e.p_max(), 8);
        assert_eq!(e.config.commands.len(), 3);
    }

    #[test]
    fn rejects_invalid_values() {
        let mut c: ExperimentConfig = serde_json::from_str(MINIMAL).unwrap();
        c.tolerances.fp_tol = 0.0;
        assert!(Experiment::from_config(c).is_err());
        let mut c: ExperimentConfig = serde_json::from_str(MINIMAL).unwrap();
        c.schema_version = 2;
        assert!(Experiment::from_config(c).is_err());
        let mut c: ExperimentConfig = serde_json::from_str(MINIMAL).unwrap();
        c.norm.n = Some(3);
        assert!(Experiment::from_config(c).is_err());
        let typo = MINIMAL.replace("\"name\"", "\"seed\": 1, \"strats\": 3, \"name\"");
        assert!(serde_json::from_str::<ExperimentConfig>(&typo).is_err());
    }
}
