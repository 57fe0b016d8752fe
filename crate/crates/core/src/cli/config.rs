use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::certifier::{CertConfig, ClassKappaInf};
use crate::dynamics::{DisturbanceKind, StateBox, DEFAULT_DT};
use crate::models::{by_name, LinearModelDef, ModelBundle};
use crate::validation::DisturbanceMode;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TRIALS: usize = 1000;
pub const DEFAULT_HISTOGRAM_BIN: f64 = 0.005;

/// Experiment description read from TOML and overridden by command-line flags.
///
/// After overrides are applied the whole structure is written next to every output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Bundled model name; ignored when `linear_model` is present.
    pub model: String,
    pub linear_model: Option<LinearModelDef>,
    /// Replaces the model's specification.
    pub spec: Option<String>,
    pub dt: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub certifier: CertifierSettings,
    pub validation: ValidationSettings,
    pub simulation: SimulationSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: "single-integrator".into(),
            linear_model: None,
            spec: None,
            dt: DEFAULT_DT,
            seed: DEFAULT_SEED,
            output_dir: PathBuf::from("out"),
            certifier: CertifierSettings::default(),
            validation: ValidationSettings::default(),
            simulation: SimulationSettings::default(),
        }
    }
}

/// Overrides on top of the model's own certifier settings.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifierSettings {
    pub alpha: BTreeMap<String, ClassKappaInf>,
    pub lipschitz_f: Option<f64>,
    pub lipschitz_rho: Option<f64>,
    pub state_grid: Option<Vec<usize>>,
    pub state_box: Option<StateBox>,
    pub init_grid: Option<Vec<usize>>,
    pub init_region: Option<StateBox>,
    pub refine: Option<bool>,
    pub lipschitz_pairs: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialMode {
    #[default]
    Fixed,
    Region,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationSettings {
    pub trials: usize,
    /// Disturbance bound; read from `certificate.json` when absent.
    pub delta: Option<f64>,
    pub distribution: DisturbanceKind,
    pub mode: DisturbanceMode,
    pub initial: InitialMode,
    pub histogram_bin: f64,
}

impl Default for ValidationSettings {
    fn default() -> Self {
        Self {
            trials: DEFAULT_TRIALS,
            delta: None,
            distribution: DisturbanceKind::UniformBall,
            mode: DisturbanceMode::PerStep,
            initial: InitialMode::Fixed,
            histogram_bin: DEFAULT_HISTOGRAM_BIN,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSettings {
    pub delta: f64,
    /// Push against the gradient of the lowest predicate instead of sampling.
    pub adversarial: bool,
    pub distribution: Option<DisturbanceKind>,
    /// Integration horizon; the spec horizon when absent.
    pub horizon: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config is always representable in TOML")
    }

    pub fn bundle(&self) -> Result<ModelBundle, CliError> {
        let mut bundle = match &self.linear_model {
            Some(def) => def.build()?,
            None => by_name(&self.model)?,
        };
        if let Some(spec) = &self.spec {
            bundle.spec_text = spec.clone();
        }
        if let Some(region) = &self.certifier.init_region {
            bundle.init_region = region.clone();
        }
        bundle.config = self.cert_config(&bundle)?;
        Ok(bundle)
    }

    fn cert_config(&self, bundle: &ModelBundle) -> Result<CertConfig, CliError> {
        let c = &self.certifier;
        let mut cfg = bundle.config.clone();
        for (key, alpha) in &c.alpha {
            let name = key.strip_prefix('!').unwrap_or(key);
            if bundle.registry.get(name).is_none() {
                return Err(CliError::Config(format!(
                    "alpha map names unknown predicate `{key}`"
                )));
            }
            cfg.alpha.insert(key.clone(), *alpha);
        }
        cfg.lipschitz_f = c.lipschitz_f.or(cfg.lipschitz_f);
        cfg.lipschitz_rho = c.lipschitz_rho.unwrap_or(cfg.lipschitz_rho);
        if let Some(g) = &c.state_grid {
            cfg.state_grid = g.clone();
        }
        if let Some(b) = &c.state_box {
            cfg.state_box = Some(b.clone());
        }
        if let Some(g) = &c.init_grid {
            cfg.init_grid = g.clone();
        }
        cfg.refine = c.refine.unwrap_or(cfg.refine);
        cfg.lipschitz_pairs = c.lipschitz_pairs.unwrap_or(cfg.lipschitz_pairs);
        cfg.dt = self.dt;
        cfg.seed = self.seed;
        Ok(cfg)
    }
}

/// `name=family:gain`, e.g. `mu2=linear:1.0`.
pub fn parse_alpha_override(text: &str) -> Result<(String, ClassKappaInf), CliError> {
    let (name, alpha) = text
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("expected NAME=FAMILY:GAIN, got `{text}`")))?;
    let alpha = alpha
        .parse::<ClassKappaInf>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok((name.trim().to_string(), alpha))
}
