//! Shared run configuration.
//!
//! A TOML file groups every tunable the subcommands share: map resolution,
//! potential weights, sensor and motion models, dataset mask parameters and
//! the default seeds. Unknown keys are rejected so typos surface as usage
//! errors, and values are validated by the library modules that own them,
//! which keeps the field names in the error messages. Explicit command-line
//! flags are merged on top of the file (flags win).

use std::fs;
use std::path::Path;

use fieldnav::dataset::MaskParams;
use fieldnav::potentials::PotentialParams;
use fieldnav::sim::{MotionParams, SensorParams};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Default seeds per subcommand; each is overridden by that subcommand's
/// `--seed` flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Seeds {
    pub scene: u64,
    pub dataset: u64,
    pub eval: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds {
            scene: 0,
            dataset: 0,
            eval: 0,
        }
    }
}

/// Everything a run needs beyond per-subcommand flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Cell size in meters for generated scenes.
    pub resolution_m: f64,
    pub potential: PotentialParams,
    pub sensor: SensorParams,
    pub motion: MotionParams,
    pub mask: MaskParams,
    pub seeds: Seeds,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            resolution_m: 0.1,
            potential: PotentialParams::default(),
            sensor: SensorParams::default(),
            motion: MotionParams::default(),
            mask: MaskParams::default(),
            seeds: Seeds::default(),
        }
    }
}

impl RunConfig {
    /// Loads a TOML config file. Unknown keys and malformed values are
    /// usage errors naming the offending key.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read config {}: {e}", path.display()))
        })?;
        toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    /// Validates every field through its owning module; error messages name
    /// the field (`potential.alpha`, `sensor.rays`, ...).
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.resolution_m > 0.0 && self.resolution_m.is_finite()) {
            return Err(CliError::Usage(format!(
                "resolution_m must be positive and finite, got {}",
                self.resolution_m
            )));
        }
        let check = |r: fieldnav::Result<()>| -> Result<(), CliError> {
            r.map_err(|e| CliError::Usage(e.to_string()))
        };
        check(self.potential.validate())?;
        check(self.sensor.validate())?;
        check(self.motion.validate())?;
        check(self.mask.validate())?;
        Ok(())
    }

    /// Serializes the effective config; `load`ing the dump yields an equal
    /// config (round-trip invariant).
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config types serialize")
    }
}
