use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use bioclim_core::io::read_raster;
use bioclim_core::Covariate;
use bioclim_pipeline::error::{PipelineError, Result, EXIT_OK, EXIT_VALIDATION};
use bioclim_pipeline::niche::{niche_export, read_presence, write_niche_csv};
use bioclim_pipeline::synth::{generate, SynthParams};
use bioclim_pipeline::{run_pipeline, validate_inputs, PipelineConfig};
use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "bioclim", version, about = "Bioclimatic covariate layers from monthly climate and a DEM")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute covariate layers.
    Compute {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated covariate names; overrides the config selection.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<Covariate>>,
        #[arg(long)]
        workers: Option<usize>,
        /// Fail on semantic violations instead of repairing them.
        #[arg(long)]
        strict: bool,
    },
    /// Export covariate pairs at presence points and background cells.
    Niche {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        /// CSV with `lon,lat` columns.
        #[arg(long)]
        presence: PathBuf,
        #[arg(long, default_value_t = 0)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Audit manifest, checksums, grids and input semantics.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        strict: bool,
    },
    /// Write a synthetic input set with manifest and config.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        size: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 0.1)]
        water_fraction: f64,
        #[arg(long, default_value_t = 20_000.0)]
        horizon_radius: f64,
    },
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Compute { config, only, workers, strict } => {
            let mut cfg = PipelineConfig::load(&config)?;
            if let Some(only) = only {
                if only.is_empty() {
                    return Err(PipelineError::InvalidArgument("--only lists no covariates".into()));
                }
                cfg.select(&only);
            }
            if let Some(w) = workers {
                if w == 0 {
                    return Err(PipelineError::InvalidArgument("--workers must be at least 1".into()));
                }
                cfg.worker_count = w;
            }
            cfg.strict_semantics |= strict;
            let report = run_pipeline(&cfg)?;
            for s in &report.stages {
                println!("stage {:<18} {}", s.stage, s.status);
            }
            for r in report.constraints.iter().filter(|r| r.violations > 0) {
                println!("repaired {} cells violating {}", r.repaired, r.constraint_name);
            }
            println!("wrote {} layers to {}", report.covariates.len(), cfg.output_dir.display());
            Ok(EXIT_OK)
        }
        Command::Niche { x, y, presence, samples, seed, out } => {
            let xr = read_raster(&x, None)?;
            let yr = read_raster(&y, None)?;
            let points = read_presence(File::open(&presence)?)?;
            let export = niche_export(&xr, &yr, &points, samples, seed)?;
            write_niche_csv(BufWriter::new(File::create(&out)?), &export.samples)?;
            if export.dropped_nan + export.dropped_outside > 0 {
                log::warn!(
                    "dropped {} presence points on NaN cells and {} outside the grid",
                    export.dropped_nan,
                    export.dropped_outside
                );
            }
            println!(
                "presence rows {}, background rows {}, dropped (NaN) {}, dropped (outside) {}",
                export.presence_rows, export.background_rows, export.dropped_nan, export.dropped_outside
            );
            Ok(EXIT_OK)
        }
        Command::Validate { config, strict } => {
            let cfg = PipelineConfig::load(&config)?;
            let report = validate_inputs(&cfg)?;
            let roles: Vec<String> = report.roles.iter().map(|r| r.to_string()).collect();
            println!("manifest, checksums and grids ok for roles: {}", roles.join(", "));
            for r in &report.constraints {
                println!(
                    "{}: {} violations, max magnitude {}",
                    r.constraint_name, r.violations, r.max_violation_magnitude
                );
            }
            if report.violations() > 0 && (strict || cfg.strict_semantics) {
                return Ok(EXIT_VALIDATION);
            }
            Ok(EXIT_OK)
        }
        Command::Synth { out, size, seed, water_fraction, horizon_radius } => {
            if !(0.0..1.0).contains(&water_fraction) {
                return Err(PipelineError::InvalidArgument("--water-fraction must be in [0, 1)".into()));
            }
            let params = SynthParams {
                size,
                seed,
                water_fraction,
                horizon_search_radius: horizon_radius,
                ..SynthParams::default()
            };
            let ds = generate(&out, &params)?;
            println!("wrote {}", ds.config.display());
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
