//! Run configuration: one TOML file names the input tables, the calendar,
//! the sampler settings and the seed. Relative input paths resolve against
//! the directory holding the config file, but the raw strings are what the
//! manifest records, so manifests stay machine-independent.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constants::ModelConstants;
use crate::error::{Error, Result};
use crate::geo::PeriodCalendar;
use crate::mcmc::SamplerConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Base seed; every random stream in a run derives from it.
    pub seed: u64,
    /// Directory all outputs land in.
    pub output_dir: PathBuf,
    pub inputs: InputPaths,
    pub calendar: CalendarConfig,
    #[serde(default)]
    pub sampler: SamplerSettings,
    #[serde(default)]
    pub model: ModelSettings,
    /// Directory of the config file; resolves relative paths.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    pub hierarchy: PathBuf,
    pub group_sizes: PathBuf,
    pub births: PathBuf,
    pub intention: PathBuf,
    pub abortion: PathBuf,
    pub married_share: PathBuf,
}

impl InputPaths {
    /// Stable (key, path) listing for digests and manifests.
    pub fn entries(&self) -> [(&'static str, &Path); 6] {
        [
            ("hierarchy", &self.hierarchy),
            ("group_sizes", &self.group_sizes),
            ("births", &self.births),
            ("intention", &self.intention),
            ("abortion", &self.abortion),
            ("married_share", &self.married_share),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalendarConfig {
    pub first_year: i32,
    pub last_year: i32,
    pub period_length: u32,
    pub reference_start_year: i32,
}

impl CalendarConfig {
    pub fn build(&self) -> Result<PeriodCalendar> {
        PeriodCalendar::new(
            self.first_year,
            self.last_year,
            self.period_length,
            self.reference_start_year,
        )
    }
}

/// Sampler block; every field defaults to the engine's default so a config
/// may override only what it needs. The run seed is injected separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSettings {
    pub chains: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub adapt_window: usize,
    pub target_accept: f64,
    pub init_step: f64,
    pub max_init_attempts: usize,
    pub random_scan: bool,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        let d = SamplerConfig::default();
        SamplerSettings {
            chains: d.chains,
            iterations: d.iterations,
            burn_in: d.burn_in,
            thin: d.thin,
            adapt_window: d.adapt_window,
            target_accept: d.target_accept,
            init_step: d.init_step,
            max_init_attempts: d.max_init_attempts,
            random_scan: d.random_scan,
        }
    }
}

impl SamplerSettings {
    pub fn to_config(&self, seed: u64) -> SamplerConfig {
        SamplerConfig {
            chains: self.chains,
            iterations: self.iterations,
            burn_in: self.burn_in,
            thin: self.thin,
            adapt_window: self.adapt_window,
            target_accept: self.target_accept,
            init_step: self.init_step,
            seed,
            max_init_attempts: self.max_init_attempts,
            random_scan: self.random_scan,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSettings {
    /// External id of the super region whose member regions carry their
    /// own official-count error scale.
    pub high_income_super_region: Option<u32>,
    pub constants: ModelConstants,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        cfg.check_truth_sealing()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("cannot serialize config: {e}")))?;
        std::fs::write(path, text).map_err(Error::from)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn resolved_output_dir(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    /// Synthetic worlds keep their generating parameters in a `truth`
    /// directory beside the inputs. A fit must never read it.
    fn check_truth_sealing(&self) -> Result<()> {
        for (key, path) in self.inputs.entries() {
            if path
                .components()
                .any(|c| c.as_os_str().eq_ignore_ascii_case("truth"))
            {
                return Err(Error::Config(format!(
                    "input {key} points inside a truth directory: {}",
                    path.display()
                )));
            }
        }
        Ok(())
    }
}
