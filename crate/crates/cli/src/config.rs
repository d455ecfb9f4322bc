use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dnpu_core::device::{generate_device, validate_device_with, ValidationRules};
use dnpu_core::sampling::{Preset, VoltageRanges};
use dnpu_core::{DeviceConfig, DeviceGeometry, GridSpec, KmcConfig};

use crate::error::CliError;
use crate::output::hash_of;

/// Everything a run depends on. Loaded from TOML, then overridden by
/// command-line flags.
///
/// ```toml
/// seed = 7
/// samples = 1000
/// preset = "standard"
/// a_nm = 5.0
/// t_kelvin = 77.0
///
/// [device]
/// n_dopants = 200
///
/// [kmc]
/// measurement_steps = 1000000
///
/// [grid]
/// cells = 256
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub samples: u64,
    pub preset: Preset,
    /// Explicit ranges; take precedence over `preset`.
    pub ranges: Option<VoltageRanges>,
    /// Existing device file; if absent a device is generated from `device`.
    pub device_file: Option<PathBuf>,
    pub device: DeviceConfig,
    /// Override of the hopping distance, nm.
    pub a_nm: Option<f64>,
    /// Override of the temperature, K.
    pub t_kelvin: Option<f64>,
    pub kmc: KmcConfig,
    pub grid: GridSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            samples: 1000,
            preset: Preset::Standard,
            ranges: None,
            device_file: None,
            device: DeviceConfig::default(),
            a_nm: None,
            t_kelvin: None,
            kmc: KmcConfig::default(),
            grid: GridSpec::default(),
        }
    }
}

/// What the config hash covers: the resolved device, ranges and KMC/grid
/// settings plus the seed. Output paths, thread counts and the sample count
/// are left out, so a run can be resumed and extended.
#[derive(Serialize)]
struct HashedRun<'a> {
    device_hash: &'a str,
    ranges: &'a VoltageRanges,
    kmc: &'a KmcConfig,
    grid: &'a GridSpec,
    seed: u64,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn ranges(&self) -> VoltageRanges {
        self.ranges.clone().unwrap_or_else(|| VoltageRanges::preset(self.preset))
    }

    /// The device file if one is configured, otherwise a freshly generated
    /// device; physics overrides applied, then validated.
    pub fn device(&self) -> Result<DeviceGeometry, CliError> {
        let mut g = match &self.device_file {
            Some(p) => DeviceGeometry::read_file(p)?,
            None => generate_device(self.seed, &self.device)?,
        };
        if let Some(a) = self.a_nm {
            g.material.hopping_distance_nm = a;
        }
        if let Some(t) = self.t_kelvin {
            g.material.temperature_k = t;
        }
        let rules = match self.device_file {
            Some(_) => ValidationRules::default(),
            None => ValidationRules::for_config(&self.device),
        };
        let report = validate_device_with(&g, &rules);
        if !report.is_valid() {
            return Err(CliError::Validation(format!("device: {report}")));
        }
        Ok(g)
    }

    pub fn run_hash(&self, device: &DeviceGeometry) -> String {
        let ranges = self.ranges();
        hash_of(&HashedRun {
            device_hash: &device.content_hash(),
            ranges: &ranges,
            kmc: &self.kmc,
            grid: &self.grid,
            seed: self.seed,
        })
    }
}
