//! Scenario configuration files.
//!
//! The format is TOML: a few top-level keys followed by one table per
//! parameter group. Every key is optional and falls back to its default;
//! unknown keys are rejected. `ceco --dump-default-config` prints a complete
//! file.
//!
//! ```toml
//! seed = 42                   # plant perturbation seed (CECO_SEED overrides)
//! cycle = "cycles/my.csv"     # omit for the bundled 600 s cycle
//! output_dir = "ceco-out"     # relative paths resolve against this file
//!
//! [ac]        # cabin/evaporator model and power estimates
//! [plant]     # surrogate plant gains and perturbation size
//! [occupant]  # PMV parameters
//! [bounds]    # comfort zone
//! [mpc]       # horizon, weights, actuator ranges, baseline PI gains
//! [solver]    # NLP tolerances
//! [initial]   # initial temperatures, K
//! ```

use std::path::{Path, PathBuf};

use ceco_core::comfort::{ComfortBoundsSpec, OccupantParams};
use ceco_core::model::{AcParams, AcState, ExogenousSample, PlantParams};
use ceco_core::mpc::MpcConfig;
use ceco_core::nlp::SolverOptions;
use ceco_core::sim::{DriveCycle, Scenario};
use ceco_core::ValidationErrors;
use serde::{Deserialize, Serialize};

use crate::cycle::{self, CycleError};

/// Environment variable that overrides the configured perturbation seed.
pub const SEED_ENV: &str = "CECO_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantSection {
    pub int_gain_cab: f64,
    pub int_gain_rad: f64,
    pub shell_gain_amb: f64,
    pub shell_gain_speed: f64,
    pub perturbation_fraction: f64,
}

impl Default for PlantSection {
    fn default() -> Self {
        let p = PlantParams::default();
        Self {
            int_gain_cab: p.int_gain_cab,
            int_gain_rad: p.int_gain_rad,
            shell_gain_amb: p.shell_gain_amb,
            shell_gain_speed: p.shell_gain_speed,
            perturbation_fraction: p.perturbation_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    pub t_cab: f64,
    pub t_evap: f64,
    pub t_int: f64,
    pub t_shell: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        let s = AcState::HOT_SOAK;
        Self {
            t_cab: s.t_cab,
            t_evap: s.t_evap,
            t_int: s.t_int,
            t_shell: s.t_shell,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycle: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub ac: AcParams,
    pub plant: PlantSection,
    pub occupant: OccupantParams,
    pub bounds: ComfortBoundsSpec,
    pub mpc: MpcConfig,
    pub solver: SolverOptions,
    pub initial: InitialSection,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: PlantParams::default().perturbation_seed,
            cycle: None,
            output_dir: PathBuf::from("ceco-out"),
            ac: AcParams::default(),
            plant: PlantSection::default(),
            occupant: OccupantParams::default(),
            bounds: ComfortBoundsSpec::default(),
            mpc: MpcConfig::default(),
            solver: SolverOptions::default(),
            initial: InitialSection::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Syntax { path: PathBuf, message: String },
    #[error("invalid configuration, {0}")]
    Invalid(ValidationErrors),
    #[error("{name} must be an unsigned integer, got {value:?}")]
    BadSeed { name: &'static str, value: String },
    #[error(transparent)]
    Cycle(#[from] CycleError),
}

impl ScenarioConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Syntax {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<LoadedConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let config = Self::from_toml(&text, path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(LoadedConfig { config, base })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration always serializes")
    }

    /// The seed after applying the environment override.
    pub fn effective_seed(&self, env: Option<&str>) -> Result<u64, ConfigError> {
        match env {
            Some(v) => v.trim().parse().map_err(|_| ConfigError::BadSeed {
                name: SEED_ENV,
                value: v.to_string(),
            }),
            None => Ok(self.seed),
        }
    }

    /// Builds the core scenario around an already loaded cycle.
    pub fn scenario(&self, cycle: DriveCycle, seed: u64) -> Scenario {
        let p = &self.plant;
        let i = &self.initial;
        Scenario {
            cycle,
            plant: PlantParams {
                ac: self.ac.clone(),
                int_gain_cab: p.int_gain_cab,
                int_gain_rad: p.int_gain_rad,
                shell_gain_amb: p.shell_gain_amb,
                shell_gain_speed: p.shell_gain_speed,
                perturbation_seed: seed,
                perturbation_fraction: p.perturbation_fraction,
            },
            mpc: self.mpc.clone(),
            occupant: self.occupant.clone(),
            bounds: self.bounds.clone(),
            solver: self.solver.clone(),
            initial: AcState {
                t_cab: i.t_cab,
                t_evap: i.t_evap,
                t_int: i.t_int,
                t_shell: i.t_shell,
            },
        }
    }
}

/// A parsed config together with the directory its relative paths refer to.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    pub base: PathBuf,
}

impl LoadedConfig {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.config.output_dir)
    }

    /// Loads the cycle, applies the seed override and validates every
    /// section, reporting all offending fields together.
    pub fn build_scenario(&self, seed_env: Option<&str>) -> Result<Scenario, ConfigError> {
        let seed = self.config.effective_seed(seed_env)?;
        let dt = self.config.mpc.ts;
        // Check the parameter sections before touching the cycle file, so a
        // bad sample time does not hide the other problems.
        let probe = DriveCycle {
            name: String::new(),
            dt,
            samples: vec![ExogenousSample {
                v_veh: 0.0,
                w_rad: 0.0,
                t_amb: 300.0,
            }],
        };
        if let Err(mut e) = self.config.scenario(probe, seed).validate() {
            e.errors.retain(|f| !f.field.starts_with("cycle"));
            if !e.is_empty() {
                return Err(ConfigError::Invalid(e));
            }
        }
        let cycle = match &self.config.cycle {
            Some(p) => cycle::load_cycle(&self.resolve(p), dt)?,
            None => cycle::bundled_cycle(dt)?,
        };
        let scenario = self.config.scenario(cycle, seed);
        scenario.validate().map_err(ConfigError::Invalid)?;
        Ok(scenario)
    }
}
