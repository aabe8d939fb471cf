//! Names and containers for the covariate layers the engine produces.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::raster::Raster;
use crate::scalar::Scalar;

/// Every output layer: eight base covariates and the twelve derived ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Covariate {
    PrecipAnnual,
    PrecipDriest,
    PrecipWettest,
    TempAnnual,
    TempColdest,
    TempWarmest,
    Tundra,
    TempRangeMean,
    ElevationRange3x3,
    SolarAnnual,
    SolarSeasonality3x3,
    SolarTempRange,
    PrecipSeasonalityDry,
    PrecipSeasonalityWet,
    DryMonths,
    TempPerRainOrder,
    TempAnnualShifted,
    TempColdestShifted,
    TundraExp,
    WarmMonths,
}

use Covariate::*;

impl Covariate {
    pub const ALL: [Covariate; 20] = [
        PrecipAnnual,
        PrecipDriest,
        PrecipWettest,
        TempAnnual,
        TempColdest,
        TempWarmest,
        Tundra,
        TempRangeMean,
        ElevationRange3x3,
        SolarAnnual,
        SolarSeasonality3x3,
        SolarTempRange,
        PrecipSeasonalityDry,
        PrecipSeasonalityWet,
        DryMonths,
        TempPerRainOrder,
        TempAnnualShifted,
        TempColdestShifted,
        TundraExp,
        WarmMonths,
    ];

    pub const SOLAR: [Covariate; 3] = [SolarAnnual, SolarSeasonality3x3, SolarTempRange];

    pub fn slug(self) -> &'static str {
        match self {
            PrecipAnnual => "p_annual",
            PrecipDriest => "p_dry",
            PrecipWettest => "p_wet",
            TempAnnual => "t_annual",
            TempColdest => "t_cold",
            TempWarmest => "t_warm",
            Tundra => "t_tundra",
            TempRangeMean => "t_range",
            ElevationRange3x3 => "er_3x3",
            SolarAnnual => "s_annual",
            SolarSeasonality3x3 => "ds_3x3",
            SolarTempRange => "s_t_range",
            PrecipSeasonalityDry => "dp_dry",
            PrecipSeasonalityWet => "dp_wet",
            DryMonths => "n_dry_months",
            TempPerRainOrder => "t100_per_logp",
            TempAnnualShifted => "t_annual_100",
            TempColdestShifted => "t_cold_100",
            TundraExp => "exp_tundra",
            WarmMonths => "n_warm_months",
        }
    }

    /// Position 1..=12 in the derived-covariate list; `None` for base layers.
    pub fn derived_index(self) -> Option<u8> {
        Some(match self {
            ElevationRange3x3 => 1,
            SolarAnnual => 2,
            SolarSeasonality3x3 => 3,
            SolarTempRange => 4,
            PrecipSeasonalityDry => 5,
            PrecipSeasonalityWet => 6,
            DryMonths => 7,
            TempPerRainOrder => 8,
            TempAnnualShifted => 9,
            TempColdestShifted => 10,
            TundraExp => 11,
            WarmMonths => 12,
            _ => return None,
        })
    }

    pub fn units(self) -> &'static str {
        match self {
            PrecipAnnual | PrecipDriest | PrecipWettest => "mm",
            TempAnnual | TempColdest | TempWarmest | Tundra | TempRangeMean => "degC",
            TempAnnualShifted | TempColdestShifted => "degC+100",
            ElevationRange3x3 => "m",
            SolarAnnual => "Wh m-2",
            SolarTempRange => "Wh m-2 degC",
            DryMonths | WarmMonths => "months",
            SolarSeasonality3x3 | PrecipSeasonalityDry | PrecipSeasonalityWet | TempPerRainOrder | TundraExp => "1",
        }
    }

    pub fn needs_solar(self) -> bool {
        Self::SOLAR.contains(&self)
    }
}

impl fmt::Display for Covariate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for Covariate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.slug() == s.trim())
            .ok_or_else(|| Error::InvalidConfig(format!("unknown covariate `{s}`")))
    }
}

impl From<Covariate> for String {
    fn from(c: Covariate) -> String {
        c.slug().to_string()
    }
}

impl TryFrom<String> for Covariate {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Input checksums and parameter values that produced a set of layers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub inputs: BTreeMap<String, String>,
    pub parameters: BTreeMap<String, String>,
}

/// Named covariate rasters on one grid.
#[derive(Debug, Clone)]
pub struct CovariateSet<T> {
    spec: GridSpec,
    layers: BTreeMap<Covariate, Raster<T>>,
    pub provenance: Provenance,
}

impl<T: Scalar> CovariateSet<T> {
    pub fn new(spec: GridSpec) -> Self {
        CovariateSet { spec, layers: BTreeMap::new(), provenance: Provenance::default() }
    }

    pub fn insert(&mut self, name: Covariate, layer: Raster<T>) -> Result<()> {
        if layer.spec() != &self.spec {
            return Err(Error::GridMismatch(format!("layer {name} is not on the set's grid")));
        }
        self.layers.insert(name, layer);
        Ok(())
    }

    pub fn get(&self, name: Covariate) -> Option<&Raster<T>> {
        self.layers.get(&name)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Covariate, &Raster<T>)> {
        self.layers.iter().map(|(k, v)| (*k, v))
    }

    pub fn retain(&mut self, keep: impl Fn(Covariate) -> bool) {
        self.layers.retain(|k, _| keep(*k));
    }
}
