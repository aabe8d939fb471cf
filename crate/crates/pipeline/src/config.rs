//! TOML run configuration.
//!
//! ```toml
//! manifest = "manifest.csv"
//! output_dir = "out"
//! cache_dir = "cache"
//! workers = 4
//! strict_semantics = false
//! covariates = "all"            # or ["p_annual", "s_annual", ...]
//!
//! [grid]
//! west = 10.0
//! east = 10.8333333333
//! south = 46.1666666667
//! north = 47.0
//! cell_size = 30.0              # arc-seconds
//! fine_factor = 4               # solar grid is this many times finer
//!
//! [solar]
//! azimuth_step = 5.0
//! horizon_search_radius = 20000.0
//! time_step = 0.5
//! solar_constant = 1367.0
//! central_days = [15, 46, 74, 105, 135, 166, 196, 227, 258, 288, 319, 349]
//!
//! [lapse]
//! lapse_rate = 0.0065
//! counting_mode = "fractional"  # or "mean_only"
//! ```
//!
//! Relative paths resolve against the config file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use bioclim_core::climate::LapseConfig;
use bioclim_core::solar::SolarConfig;
use bioclim_core::{Covariate, GridSpec};
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};

pub const DEFAULT_FINE_FACTOR: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub west: f64,
    pub east: f64,
    pub south: f64,
    pub north: f64,
    pub cell_size: f64,
    #[serde(default = "default_fine_factor")]
    pub fine_factor: usize,
}

fn default_fine_factor() -> usize {
    DEFAULT_FINE_FACTOR
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Selection {
    Keyword(String),
    List(Vec<Covariate>),
}

impl Default for Selection {
    fn default() -> Self {
        Selection::Keyword("all".into())
    }
}

/// On-disk shape of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub manifest: PathBuf,
    pub output_dir: PathBuf,
    pub cache_dir: PathBuf,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub strict_semantics: bool,
    #[serde(default)]
    pub covariates: Selection,
    pub grid: GridSection,
    #[serde(default)]
    pub solar: SolarConfig,
    #[serde(default)]
    pub lapse: LapseConfig,
}

/// A validated configuration with absolute paths.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub manifest_path: PathBuf,
    pub output_dir: PathBuf,
    pub cache_dir: PathBuf,
    pub grid: GridSpec,
    pub fine_factor: usize,
    pub solar: SolarConfig,
    pub lapse: LapseConfig,
    /// Selected layers in canonical order.
    pub covariates: Vec<Covariate>,
    pub worker_count: usize,
    pub strict_semantics: bool,
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.is_file() {
            return Err(bioclim_core::Error::MissingFile(path.to_path_buf()).into());
        }
        let text = fs::read_to_string(path)?;
        let file: ConfigFile = toml::from_str(&text).map_err(|e| PipelineError::Config {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_file(file, base).map_err(|e| match e {
            PipelineError::Config { msg, .. } => PipelineError::Config { path: path.to_path_buf(), msg },
            other => other,
        })
    }

    pub fn from_file(file: ConfigFile, base: &Path) -> Result<Self> {
        let bad = |msg: String| PipelineError::Config { path: base.to_path_buf(), msg };
        let covariates = match file.covariates {
            Selection::Keyword(k) if k == "all" => Covariate::ALL.to_vec(),
            Selection::Keyword(k) => return Err(bad(format!("covariates must be \"all\" or a list, got \"{k}\""))),
            Selection::List(list) => canonical(&list),
        };
        if covariates.is_empty() {
            return Err(bad("no covariates selected".into()));
        }
        if file.workers == 0 {
            return Err(bad("workers must be at least 1".into()));
        }
        if file.grid.fine_factor == 0 {
            return Err(bad("fine_factor must be at least 1".into()));
        }
        let g = &file.grid;
        let grid = GridSpec::from_extent(g.west, g.east, g.south, g.north, g.cell_size)?;
        grid.refine(g.fine_factor)?;
        file.solar.validate()?;
        file.lapse.validate()?;
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        Ok(PipelineConfig {
            manifest_path: resolve(&file.manifest),
            output_dir: resolve(&file.output_dir),
            cache_dir: resolve(&file.cache_dir),
            grid,
            fine_factor: file.grid.fine_factor,
            solar: file.solar,
            lapse: file.lapse,
            covariates,
            worker_count: file.workers,
            strict_semantics: file.strict_semantics,
        })
    }

    pub fn fine_grid(&self) -> GridSpec {
        self.grid.refine(self.fine_factor).expect("checked at load")
    }

    pub fn needs_solar(&self) -> bool {
        self.covariates.iter().any(|c| c.needs_solar())
    }

    /// Restricts the selection to `only`, keeping canonical order.
    pub fn select(&mut self, only: &[Covariate]) {
        self.covariates = canonical(only);
    }
}

fn canonical(list: &[Covariate]) -> Vec<Covariate> {
    Covariate::ALL.into_iter().filter(|c| list.contains(c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
manifest = "m.csv"
output_dir = "out"
cache_dir = "/tmp/cache"
[grid]
west = 0.0
east = 1.0
south = 40.0
north = 41.0
cell_size = 30.0
"#;

    fn parse(text: &str) -> Result<PipelineConfig> {
        PipelineConfig::from_file(toml::from_str(text).unwrap(), Path::new("/work"))
    }

    #[test]
    fn defaults_and_path_resolution() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.manifest_path, PathBuf::from("/work/m.csv"));
        assert_eq!(c.cache_dir, PathBuf::from("/tmp/cache"));
        assert_eq!(c.covariates.len(), 20);
        assert_eq!(c.worker_count, 1);
        assert_eq!(c.fine_factor, 4);
        assert_eq!(c.grid.shape(), (120, 120));
        assert_eq!(c.solar, SolarConfig::default());
    }

    #[test]
    fn covariate_list_is_canonicalised() {
        let text = format!("covariates = [\"s_annual\", \"p_annual\"]\n{MINIMAL}");
        let c = parse(&text).unwrap();
        assert_eq!(c.covariates, vec![Covariate::PrecipAnnual, Covariate::SolarAnnual]);
        assert!(c.needs_solar());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(parse(&format!("workers = 0\n{MINIMAL}")).is_err());
        assert!(parse(&format!("covariates = \"some\"\n{MINIMAL}")).is_err());
        assert!(toml::from_str::<ConfigFile>(&format!("colour = 1\n{MINIMAL}")).is_err());
        assert!(toml::from_str::<ConfigFile>(&format!("covariates = [\"bio99\"]\n{MINIMAL}")).is_err());
    }
}
