use std::fs;

use bioclim_core::io::{read_raster, Manifest, Role};
use bioclim_core::Covariate;
use bioclim_pipeline::synth::{generate, SynthDataset, SynthParams};
use bioclim_pipeline::{run_pipeline, validate_inputs, PipelineConfig, PipelineError, StageStatus};

fn small(dir: &std::path::Path) -> SynthDataset {
    let p = SynthParams { size: 20, seed: 5, water_fraction: 0.2, horizon_search_radius: 3000.0, ..SynthParams::default() };
    generate(dir.join("ds"), &p).unwrap()
}

#[test]
fn second_run_is_fully_cached_and_identical() {
    let dir = tempfile::tempdir().unwrap();
    let ds = small(dir.path());
    let cfg = PipelineConfig::load(&ds.config).unwrap();
    let first = run_pipeline(&cfg).unwrap();
    assert!(first.stages.iter().all(|s| s.status == StageStatus::Computed));
    assert_eq!(first.covariates.len(), 20);
    let bytes = fs::read(cfg.output_dir.join("s_annual.tif")).unwrap();
    let second = run_pipeline(&cfg).unwrap();
    assert!(second.all_cached());
    assert_eq!(fs::read(cfg.output_dir.join("s_annual.tif")).unwrap(), bytes);
}

#[test]
fn parameter_change_invalidates_only_dependent_stages() {
    let dir = tempfile::tempdir().unwrap();
    let ds = small(dir.path());
    let mut cfg = PipelineConfig::load(&ds.config).unwrap();
    run_pipeline(&cfg).unwrap();
    cfg.solar.time_step = 0.25;
    let report = run_pipeline(&cfg).unwrap();
    let status: Vec<_> = report.stages.iter().map(|s| (s.stage, s.status)).collect();
    assert_eq!(
        status,
        vec![
            ("climate", StageStatus::Cached),
            ("solar_daily", StageStatus::Computed),
            ("solar_covariates", StageStatus::Computed)
        ]
    );
}

#[test]
fn climate_only_selection_skips_solar() {
    let dir = tempfile::tempdir().unwrap();
    let ds = small(dir.path());
    let mut cfg = PipelineConfig::load(&ds.config).unwrap();
    cfg.select(&[Covariate::PrecipAnnual, Covariate::DryMonths]);
    let report = run_pipeline(&cfg).unwrap();
    assert_eq!(report.stages.len(), 1);
    assert_eq!(report.covariates.len(), 2);
    assert!(cfg.output_dir.join("n_dry_months.tif").is_file());
    assert!(!cfg.output_dir.join("s_annual.tif").exists());
}

#[test]
fn missing_fine_dem_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let ds = small(dir.path());
    let m = Manifest::load(&ds.manifest).unwrap();
    let kept = m.layers().iter().filter(|l| l.role != Role::DemFine).cloned().collect();
    Manifest::new(&ds.root, kept).unwrap().write(&ds.manifest).unwrap();
    let mut cfg = PipelineConfig::load(&ds.config).unwrap();
    let err = run_pipeline(&cfg).unwrap_err();
    assert!(matches!(err, PipelineError::MissingRole { role: Role::DemFine, .. }));
    assert!(err.to_string().contains("dem_fine"));
    assert_eq!(err.exit_code(), 3);
    cfg.select(&[Covariate::TempAnnual]);
    assert!(run_pipeline(&cfg).is_ok());
}

#[test]
fn strict_mode_rejects_swapped_temperatures() {
    let dir = tempfile::tempdir().unwrap();
    let ds = small(dir.path());
    let mut cfg = PipelineConfig::load(&ds.config).unwrap();
    cfg.select(&[Covariate::TempAnnual]);
    let report = run_pipeline(&cfg).unwrap();
    let temp = report.constraints.iter().find(|r| r.constraint_name == "temperature::ordered").unwrap();
    assert!(temp.repaired > 0);
    cfg.strict_semantics = true;
    let err = run_pipeline(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let log = fs::read_to_string(ds.root.join("out/logs/constraints.csv")).unwrap();
    assert!(log.starts_with("constraint_name,violations,repaired,max_violation_magnitude\n"));
}

#[test]
fn tampered_input_fails_checksum() {
    let dir = tempfile::tempdir().unwrap();
    let ds = small(dir.path());
    let path = ds.root.join("inputs/precip_03.tif");
    let mut bytes = fs::read(&path).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0xff;
    fs::write(&path, bytes).unwrap();
    let cfg = PipelineConfig::load(&ds.config).unwrap();
    let err = run_pipeline(&cfg).unwrap_err();
    assert!(matches!(err, PipelineError::Core(bioclim_core::Error::ChecksumMismatch { .. })));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn provenance_lists_inputs_and_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let ds = small(dir.path());
    let cfg = PipelineConfig::load(&ds.config).unwrap();
    run_pipeline(&cfg).unwrap();
    let text = fs::read_to_string(cfg.output_dir.join("provenance.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let layers = v["layers"].as_object().unwrap();
    assert_eq!(layers.len(), 20);
    let solar = &layers["s_t_range"];
    assert_eq!(solar["inputs"].as_object().unwrap().len(), 4 * 12 + 4);
    assert!(solar["parameters"]["solar"].as_str().unwrap().contains("azimuth_step"));
    assert!(solar["parameters"]["semester_definition"].as_str().unwrap().contains("per-cell"));
    let warm = &layers["n_warm_months"];
    assert_eq!(warm["inputs"].as_object().unwrap().len(), 4 * 12 + 3);
    assert!(warm["parameters"]["lapse"].as_str().unwrap().contains("0.0065"));
}

#[test]
fn validate_reports_without_computing() {
    let dir = tempfile::tempdir().unwrap();
    let ds = small(dir.path());
    let cfg = PipelineConfig::load(&ds.config).unwrap();
    let report = validate_inputs(&cfg).unwrap();
    assert!(report.violations() > 0);
    assert!(report.roles.contains(&Role::DemFine));
    assert!(!cfg.output_dir.exists() && !cfg.cache_dir.exists());
}

#[test]
fn outputs_carry_the_water_mask() {
    let dir = tempfile::tempdir().unwrap();
    let ds = small(dir.path());
    let cfg = PipelineConfig::load(&ds.config).unwrap();
    run_pipeline(&cfg).unwrap();
    for cov in Covariate::ALL {
        let r = read_raster(cfg.output_dir.join(format!("{}.tif", cov.slug())), Some(&cfg.grid)).unwrap();
        assert_eq!(r.nan_mask(), ds.water, "{cov}");
    }
}
