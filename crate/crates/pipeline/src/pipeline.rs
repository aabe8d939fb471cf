//! Stage-at-a-time execution of the covariate workflow.
//!
//! Stages, in dependency order:
//! 1. `climate`: load and audit the climate inputs, compute the
//!    temperature/precipitation/elevation layers.
//! 2. `solar_daily`: central-day irradiation maps on the fine DEM grid.
//! 3. `solar_covariates`: monthly integration, semesters, aggregation to
//!    the climate grid and the solar-derived layers.
//!
//! Each stage is cached under a key over its input checksums and
//! parameters. Outputs are float32 GeoTIFFs named by covariate slug, plus
//! `logs/constraints.csv` and `provenance.json`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::PathBuf;

use bioclim_core::climate::{climate_covariates, ClimateInputs, DemTriple, LapseConfig, PRECIP_FLOOR_MM};
use bioclim_core::covariates::{Covariate, CovariateSet, Provenance};
use bioclim_core::io::{load_layer, load_stack, write_raster, Manifest, Role, DEFAULT_NODATA};
use bioclim_core::semap::{
    check_nonnegative_stack, repair_ordered_stacks, repair_ordered_triple, write_reports_csv, ConstraintReport,
    RepairMode,
};
use bioclim_core::solar::{central_day_irradiation, entransy_proxy, seasonal_solar_variation, Latitude, SolarStack};
use bioclim_core::{MonthlyStack, Raster};
use serde::Serialize;

use crate::cache::{Cache, KeyBuilder};
use crate::config::PipelineConfig;
use crate::error::{PipelineError, Result};

pub const CLIMATE_ROLES: [Role; 7] =
    [Role::TAvg, Role::TMin, Role::TMax, Role::Precip, Role::DemMin, Role::DemMean, Role::DemMax];

/// How solar semesters are formed; recorded in the provenance file.
pub const SEMESTER_DEFINITION: &str = "per-cell ranking: light = six largest monthly totals, dark = six smallest";

const CLIMATE_STAGE: &str = "climate";
const SOLAR_DAILY_STAGE: &str = "solar_daily";
const SOLAR_COV_STAGE: &str = "solar_covariates";
const MASK_LAYER: &str = "mask";
const CONSTRAINTS_FILE: &str = "constraints.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Computed,
    Cached,
}

impl fmt::Display for StageStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StageStatus::Computed => "computed",
            StageStatus::Cached => "cached",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageReport {
    pub stage: &'static str,
    pub status: StageStatus,
    pub key: String,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub stages: Vec<StageReport>,
    pub constraints: Vec<ConstraintReport>,
    pub covariates: CovariateSet<f64>,
    pub outputs: Vec<PathBuf>,
}

impl RunReport {
    pub fn all_cached(&self) -> bool {
        self.stages.iter().all(|s| s.status == StageStatus::Cached)
    }
}

/// Checksums of the manifest entries a run depends on, keyed
/// `role` or `role/month`.
fn input_checksums(manifest: &Manifest, roles: &[Role]) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for &role in roles {
        for entry in manifest.entries(role) {
            manifest.verify(entry)?;
            let name = match entry.month {
                Some(m) => format!("{role}/{m:02}"),
                None => role.to_string(),
            };
            out.insert(name, entry.checksum.trim().to_ascii_lowercase());
        }
    }
    Ok(out)
}

/// Roles the selection needs, checked against the manifest.
pub fn required_roles(cfg: &PipelineConfig, manifest: &Manifest) -> Result<Vec<Role>> {
    let mut roles = CLIMATE_ROLES.to_vec();
    for role in manifest.missing_roles(&CLIMATE_ROLES) {
        return Err(PipelineError::MissingRole { role, needed_by: "the climate covariates and the common mask".into() });
    }
    if cfg.needs_solar() {
        if !manifest.has_role(Role::DemFine) {
            let names: Vec<&str> = cfg.covariates.iter().filter(|c| c.needs_solar()).map(|c| c.slug()).collect();
            return Err(PipelineError::MissingRole { role: Role::DemFine, needed_by: names.join(", ") });
        }
        roles.push(Role::DemFine);
    }
    Ok(roles)
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("config values serialise")
}

fn mode(cfg: &PipelineConfig) -> RepairMode {
    if cfg.strict_semantics {
        RepairMode::Strict
    } else {
        RepairMode::Repair
    }
}

/// Clamps negative precipitation to zero in repair mode.
fn repair_precip(p: &MonthlyStack<f64>, mode: RepairMode) -> Result<(MonthlyStack<f64>, ConstraintReport)> {
    let mut report = check_nonnegative_stack("precip", p);
    if report.violations == 0 {
        return Ok((p.clone(), report));
    }
    if mode == RepairMode::Strict {
        report.into_strict()?;
        unreachable!("strict check fails on violations");
    }
    report.repaired = report.violations;
    Ok((p.map(|v| if v < 0.0 { 0.0 } else { v }), report))
}

/// Loads the climate inputs, applies the common mask, audits and repairs
/// them.
pub fn load_climate_inputs(
    cfg: &PipelineConfig,
    manifest: &Manifest,
) -> Result<(ClimateInputs<f64>, Vec<ConstraintReport>)> {
    let grid = Some(&cfg.grid);
    let inputs = ClimateInputs::new(
        load_stack(manifest, Role::TAvg, grid)?,
        load_stack(manifest, Role::TMin, grid)?,
        load_stack(manifest, Role::TMax, grid)?,
        load_stack(manifest, Role::Precip, grid)?,
        DemTriple::new(
            load_layer(manifest, Role::DemMin, grid)?,
            load_layer(manifest, Role::DemMean, grid)?,
            load_layer(manifest, Role::DemMax, grid)?,
        )?,
    )?
    .masked()?;
    let mode = mode(cfg);
    let ((t_min, t_avg, t_max), t_report) =
        repair_ordered_stacks("temperature", &inputs.t_min, &inputs.t_avg, &inputs.t_max, mode)?;
    let ((e_min, e_mean, e_max), e_report) =
        repair_ordered_triple("elevation", &inputs.dem.e_min, &inputs.dem.e_mean, &inputs.dem.e_max, mode)?;
    let (p, p_report) = repair_precip(&inputs.p, mode)?;
    let repaired = ClimateInputs::new(t_avg, t_min, t_max, p, DemTriple::new(e_min, e_mean, e_max)?)?;
    Ok((repaired, vec![t_report, e_report, p_report]))
}

fn climate_key(checksums: &BTreeMap<String, String>, lapse: &LapseConfig, cfg: &PipelineConfig) -> String {
    let mut k = KeyBuilder::new(CLIMATE_STAGE);
    for (name, sum) in checksums.iter().filter(|(n, _)| !n.starts_with(Role::DemFine.as_str())) {
        k.add(name, sum);
    }
    k.add("grid", json(&cfg.grid)).add("lapse", json(lapse)).finish()
}

fn climate_layers() -> Vec<Covariate> {
    Covariate::ALL.into_iter().filter(|c| !c.needs_solar()).collect()
}

fn mask_raster(mask: &[bool], like: &Raster<f64>) -> Result<Raster<f64>> {
    Ok(Raster::new(like.spec().clone(), mask.iter().map(|&m| if m { f64::NAN } else { 1.0 }).collect())?)
}

fn reports_csv(reports: &[ConstraintReport]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_reports_csv(&mut buf, reports)?;
    Ok(buf)
}

fn read_reports(bytes: &[u8]) -> Result<Vec<ConstraintReport>> {
    let mut r = csv::Reader::from_reader(bytes);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

struct ClimateStage {
    layers: BTreeMap<Covariate, Raster<f64>>,
    mask: Vec<bool>,
    reports: Vec<ConstraintReport>,
}

fn run_climate(cfg: &PipelineConfig, manifest: &Manifest, cache: &Cache, key: &str) -> Result<(ClimateStage, StageStatus)> {
    let names: Vec<Covariate> = climate_layers();
    let mut files: Vec<String> = names.iter().map(|c| c.slug().to_string()).collect();
    files.push(MASK_LAYER.into());
    if let Some(mut layers) = cache.load(CLIMATE_STAGE, key, &files, &cfg.grid)? {
        let mask = layers.pop().expect("mask layer").nan_mask();
        let reports = read_reports(&fs::read(cache.file(CLIMATE_STAGE, key, CONSTRAINTS_FILE))?)?;
        if cfg.strict_semantics {
            for r in &reports {
                r.clone().into_strict()?;
            }
        }
        let layers = names.into_iter().zip(layers).collect();
        return Ok((ClimateStage { layers, mask, reports }, StageStatus::Cached));
    }
    let (inputs, reports) = load_climate_inputs(cfg, manifest)?;
    let mask = inputs.common_mask();
    let layers = climate_covariates(&inputs, &cfg.lapse)?;
    let mask_layer = mask_raster(&mask, &layers[&Covariate::PrecipAnnual])?;
    let mut stored: Vec<(String, &Raster<f64>)> = layers.iter().map(|(c, r)| (c.slug().to_string(), r)).collect();
    stored.push((MASK_LAYER.into(), &mask_layer));
    cache.store(CLIMATE_STAGE, key, &stored, &[(CONSTRAINTS_FILE, &reports_csv(&reports)?)])?;
    Ok((ClimateStage { layers, mask, reports }, StageStatus::Computed))
}

fn day_name(day: u32) -> String {
    format!("day_{day:03}")
}

fn run_solar_daily(cfg: &PipelineConfig, manifest: &Manifest, cache: &Cache, key: &str) -> Result<(Vec<Raster<f64>>, StageStatus)> {
    let fine = cfg.fine_grid();
    let names: Vec<String> = cfg.solar.central_days.iter().map(|&d| day_name(d)).collect();
    if let Some(layers) = cache.load(SOLAR_DAILY_STAGE, key, &names, &fine)? {
        return Ok((layers, StageStatus::Cached));
    }
    let dem = load_layer(manifest, Role::DemFine, Some(&fine))?;
    log::info!("solar: {} central days on a {}x{} DEM", names.len(), fine.n_rows, fine.n_cols);
    let daily = central_day_irradiation(&dem, Latitude::FromGrid, &cfg.solar)?;
    let stored: Vec<(String, &Raster<f64>)> = names.into_iter().zip(daily.iter()).collect();
    cache.store(SOLAR_DAILY_STAGE, key, &stored, &[])?;
    Ok((daily, StageStatus::Computed))
}

fn run_solar_covariates(
    cfg: &PipelineConfig,
    cache: &Cache,
    key: &str,
    daily: Option<&[Raster<f64>]>,
    climate: &ClimateStage,
) -> Result<(BTreeMap<Covariate, Raster<f64>>, StageStatus)> {
    let names: Vec<String> = Covariate::SOLAR.iter().map(|c| c.slug().to_string()).collect();
    if let Some(layers) = cache.load(SOLAR_COV_STAGE, key, &names, &cfg.grid)? {
        return Ok((Covariate::SOLAR.into_iter().zip(layers).collect(), StageStatus::Cached));
    }
    let daily = daily.expect("daily maps are loaded whenever this stage misses the cache");
    let stack = SolarStack::from_daily(daily, &cfg.solar, cfg.fine_factor)?;
    let mut mask = climate.mask.clone();
    for (m, s) in mask.iter_mut().zip(stack.s_annual.values()) {
        *m |= s.is_nan();
    }
    let stack = stack.with_mask(&mask)?;
    let t_range = climate.layers[&Covariate::TempRangeMean].with_mask(&mask)?;
    let mut out = BTreeMap::new();
    out.insert(Covariate::SolarSeasonality3x3, seasonal_solar_variation(&stack.s_light, &stack.s_dark)?);
    out.insert(Covariate::SolarTempRange, entransy_proxy(&stack.s_annual, &t_range)?);
    out.insert(Covariate::SolarAnnual, stack.s_annual);
    let stored: Vec<(String, &Raster<f64>)> = out.iter().map(|(c, r)| (c.slug().to_string(), r)).collect();
    cache.store(SOLAR_COV_STAGE, key, &stored, &[])?;
    Ok((out, StageStatus::Computed))
}

/// Parameter values each layer depends on.
fn layer_parameters(cov: Covariate, cfg: &PipelineConfig) -> BTreeMap<String, String> {
    let mut p = BTreeMap::new();
    p.insert("grid".into(), json(&cfg.grid));
    p.insert("strict_semantics".into(), cfg.strict_semantics.to_string());
    p.insert("nodata".into(), format!("{DEFAULT_NODATA:e}"));
    match cov {
        Covariate::PrecipSeasonalityDry | Covariate::PrecipSeasonalityWet => {
            p.insert("precip_floor_mm".into(), PRECIP_FLOOR_MM.to_string());
        }
        Covariate::TempPerRainOrder | Covariate::TempAnnualShifted | Covariate::TempColdestShifted => {
            p.insert("temperature_shift".into(), bioclim_core::climate::TEMPERATURE_SHIFT.to_string());
        }
        Covariate::WarmMonths => {
            p.insert("warm_month_threshold".into(), bioclim_core::climate::WARM_MONTH_THRESHOLD.to_string());
            p.insert("lapse".into(), json(&cfg.lapse));
        }
        _ => {}
    }
    if cov.needs_solar() {
        p.insert("solar".into(), json(&cfg.solar));
        p.insert("fine_factor".into(), cfg.fine_factor.to_string());
        p.insert("semester_definition".into(), SEMESTER_DEFINITION.into());
    }
    p
}

#[derive(Serialize)]
struct ProvenanceFile<'a> {
    engine_version: &'a str,
    stages: &'a [StageReportRecord],
    layers: BTreeMap<&'static str, &'a Provenance>,
}

#[derive(Serialize)]
struct StageReportRecord {
    stage: &'static str,
    key: String,
}

/// Runs the selected covariates end to end on a pool of
/// `cfg.worker_count` threads.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunReport> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.worker_count).build()?;
    pool.install(|| run_stages(cfg))
}

fn run_stages(cfg: &PipelineConfig) -> Result<RunReport> {
    let manifest = Manifest::load(&cfg.manifest_path)?;
    let roles = required_roles(cfg, &manifest)?;
    let checksums = input_checksums(&manifest, &roles)?;
    let cache = Cache::new(&cfg.cache_dir);
    let mut stages = Vec::new();

    let c_key = climate_key(&checksums, &cfg.lapse, cfg);
    let (climate, status) = run_climate(cfg, &manifest, &cache, &c_key)?;
    log::info!("stage {CLIMATE_STAGE}: {status}");
    stages.push(StageReport { stage: CLIMATE_STAGE, status, key: c_key.clone() });

    let mut layers = climate.layers.clone();
    let mut mask = climate.mask.clone();
    if cfg.needs_solar() {
        let d_key = KeyBuilder::new(SOLAR_DAILY_STAGE)
            .add("dem_fine", &checksums[Role::DemFine.as_str()])
            .add("grid", json(&cfg.fine_grid()))
            .add("solar", json(&cfg.solar))
            .finish();
        let s_key = KeyBuilder::new(SOLAR_COV_STAGE)
            .add("daily", &d_key)
            .add("climate", &c_key)
            .add("fine_factor", cfg.fine_factor.to_string())
            .finish();
        // the daily maps are only needed when the covariates must be rebuilt
        let daily = if cache.contains(SOLAR_COV_STAGE, &s_key) {
            let status = if cache.contains(SOLAR_DAILY_STAGE, &d_key) { StageStatus::Cached } else { StageStatus::Computed };
            let daily = match status {
                StageStatus::Cached => None,
                StageStatus::Computed => Some(run_solar_daily(cfg, &manifest, &cache, &d_key)?.0),
            };
            stages.push(StageReport { stage: SOLAR_DAILY_STAGE, status, key: d_key.clone() });
            daily
        } else {
            let (daily, status) = run_solar_daily(cfg, &manifest, &cache, &d_key)?;
            stages.push(StageReport { stage: SOLAR_DAILY_STAGE, status, key: d_key.clone() });
            Some(daily)
        };
        log::info!("stage {SOLAR_DAILY_STAGE}: {}", stages.last().expect("pushed").status);
        let (solar, status) = run_solar_covariates(cfg, &cache, &s_key, daily.as_deref(), &climate)?;
        log::info!("stage {SOLAR_COV_STAGE}: {status}");
        stages.push(StageReport { stage: SOLAR_COV_STAGE, status, key: s_key });
        for (m, s) in mask.iter_mut().zip(solar[&Covariate::SolarAnnual].values()) {
            *m |= s.is_nan();
        }
        layers.extend(solar);
    }

    let mut set = CovariateSet::new(cfg.grid.clone());
    for cov in &cfg.covariates {
        set.insert(*cov, layers[cov].with_mask(&mask)?)?;
    }
    let outputs = write_outputs(cfg, &set, &climate.reports, &checksums, &stages)?;
    Ok(RunReport { stages, constraints: climate.reports, covariates: set, outputs })
}

fn write_outputs(
    cfg: &PipelineConfig,
    set: &CovariateSet<f64>,
    reports: &[ConstraintReport],
    checksums: &BTreeMap<String, String>,
    stages: &[StageReport],
) -> Result<Vec<PathBuf>> {
    let logs = cfg.output_dir.join("logs");
    fs::create_dir_all(&logs)?;
    let mut outputs = Vec::new();
    let mut provenance = BTreeMap::new();
    for (cov, layer) in set.iter() {
        let path = cfg.output_dir.join(format!("{}.tif", cov.slug()));
        write_raster(layer, &path, DEFAULT_NODATA)?;
        outputs.push(path);
        let inputs = checksums
            .iter()
            .filter(|(name, _)| cov.needs_solar() || !name.starts_with(Role::DemFine.as_str()))
            .map(|(n, s)| (n.clone(), s.clone()))
            .collect();
        provenance.insert(cov, Provenance { inputs, parameters: layer_parameters(cov, cfg) });
    }
    let constraints = logs.join(CONSTRAINTS_FILE);
    fs::write(&constraints, reports_csv(reports)?)?;
    outputs.push(constraints);

    let records: Vec<StageReportRecord> =
        stages.iter().map(|s| StageReportRecord { stage: s.stage, key: s.key.clone() }).collect();
    let file = ProvenanceFile {
        engine_version: env!("CARGO_PKG_VERSION"),
        stages: &records,
        layers: provenance.iter().map(|(c, p)| (c.slug(), p)).collect(),
    };
    let path = cfg.output_dir.join("provenance.json");
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    fs::write(&path, text)?;
    outputs.push(path);
    Ok(outputs)
}

/// Outcome of a `validate` run.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub roles: Vec<Role>,
    pub constraints: Vec<ConstraintReport>,
}

impl ValidationReport {
    pub fn violations(&self) -> u64 {
        self.constraints.iter().map(|r| r.violations).sum()
    }
}

/// Checks the manifest, checksums, grids and input semantics without
/// computing any covariate.
pub fn validate_inputs(cfg: &PipelineConfig) -> Result<ValidationReport> {
    let manifest = Manifest::load(&cfg.manifest_path)?;
    let roles = required_roles(cfg, &manifest)?;
    input_checksums(&manifest, &roles)?;
    let mut audit = cfg.clone();
    audit.strict_semantics = false;
    let (_, constraints) = load_climate_inputs(&audit, &manifest)?;
    if roles.contains(&Role::DemFine) {
        load_layer(&manifest, Role::DemFine, Some(&cfg.fine_grid()))?;
    }
    Ok(ValidationReport { roles, constraints })
}
