//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Every expected value comes from an oracle written here (closed forms,
//! scalar loops, exact rational arithmetic, re-runs), not from the engine.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use bioclim_core::climate::{climate_covariates, ClimateInputs, CountingMode, DemTriple, LapseConfig};
use bioclim_core::focal::block_mean_aggregate;
use bioclim_core::io::read_raster;
use bioclim_core::semap::{repair_ordered_stacks, repair_ordered_triple, RepairMode};
use bioclim_core::solar::{
    central_day_irradiation, central_day_irradiation_with_metric, daily_potential_irradiation, entransy_proxy,
    monthly_totals_trapezoid, seasonal_solar_variation, CellMetric, Latitude, SolarConfig, SolarStack,
    TerrainDerivatives, MONTH_LENGTHS,
};
use bioclim_core::{Covariate, GridSpec, MonthlyStack, Raster, MONTHS};
use bioclim_pipeline::synth::{generate, SynthDataset, SynthParams};
use bioclim_pipeline::{run_pipeline, PipelineConfig};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

fn rel_err(got: f64, want: f64) -> f64 {
    if got == want {
        0.0
    } else {
        (got - want).abs() / want.abs()
    }
}

// ---------------------------------------------------------------- 1

/// Extraterrestrial daily irradiation on a horizontal plane, Wh/m².
fn h0_closed_form(lat: f64, day: u32, gsc: f64) -> f64 {
    let decl = 23.45f64.to_radians() * (2.0 * PI * (284.0 + day as f64) / 365.0).sin();
    let e0 = 1.0 + 0.033 * (2.0 * PI * day as f64 / 365.0).cos();
    let ws = (-lat.tan() * decl.tan()).clamp(-1.0, 1.0).acos();
    24.0 / PI * gsc * e0 * (lat.cos() * decl.cos() * ws.sin() + ws * lat.sin() * decl.sin())
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let cfg = SolarConfig::default();
    let grid = GridSpec::from_origin(8.0, 45.0, 7.5, 50, 50).unwrap();
    let dem = Raster::filled(grid.clone(), 300.0);
    let terrain = TerrainDerivatives::from_dem(&dem, &CellMetric::from_grid(&grid), &cfg);
    let mut worst = 0.0f64;
    for lat_deg in [0.0f64, 28.0, 45.0, 60.0, 72.0] {
        let lat = lat_deg.to_radians();
        for &day in &cfg.central_days {
            let map = daily_potential_irradiation(&terrain, Latitude::Fixed(lat), day, &cfg).unwrap();
            let want = h0_closed_form(lat, day, cfg.solar_constant);
            for &v in map.values() {
                if want == 0.0 {
                    ensure!(v == 0.0, "polar night at {lat_deg}°, day {day}: got {v}");
                    continue;
                }
                let e = rel_err(v, want);
                ensure!(e <= 0.005, "{lat_deg}° day {day}: {v} vs {want} ({:.3}%)", 100.0 * e);
                worst = worst.max(e);
            }
        }
    }
    let t = start.elapsed();
    ensure!(t < Duration::from_secs(5), "took {t:?}");
    Ok(format!("max relative error {:.2e} over 5 latitudes × 12 days, {:.2} s", worst, t.as_secs_f64()))
}

// ---------------------------------------------------------------- 2

struct Ridge {
    r0: f64,
    c0: f64,
    /// unit direction of the crest line
    dir: (f64, f64),
    half_len: f64,
    width: f64,
    height: f64,
}

impl Ridge {
    /// Tent profile: zero beyond `width` cells from the crest segment.
    fn at(&self, r: usize, c: usize) -> f64 {
        let (dr, dc) = (r as f64 - self.r0, c as f64 - self.c0);
        let along = (dr * self.dir.0 + dc * self.dir.1).clamp(-self.half_len, self.half_len);
        let (pr, pc) = (dr - along * self.dir.0, dc - along * self.dir.1);
        let d = pr.hypot(pc);
        (self.height * (1.0 - d / self.width)).max(0.0)
    }
}

fn ridge_dem(grid: &GridSpec, ridges: &[Ridge], raised: Option<(usize, f64)>) -> Raster<f64> {
    Raster::from_fn(grid.clone(), |r, c| {
        ridges.iter().enumerate().fold(100.0, |acc, (k, ridge)| {
            let scale = match raised {
                Some((j, f)) if j == k => f,
                _ => 1.0,
            };
            acc + scale * ridge.at(r, c)
        })
    })
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 48;
    let grid = GridSpec::from_origin(7.0, 46.5, 7.5, n, n).unwrap();
    let metric = CellMetric::from_grid(&grid);
    let cfg = SolarConfig::default();
    let (mut checked, mut violations, mut shaded) = (0usize, 0usize, 0usize);
    for _ in 0..20 {
        let ridges: Vec<Ridge> = (0..3)
            .map(|_| {
                let a: f64 = rng.gen_range(0.0..PI);
                Ridge {
                    r0: rng.gen_range(8.0..40.0),
                    c0: rng.gen_range(8.0..40.0),
                    dir: (a.cos(), a.sin()),
                    half_len: rng.gen_range(5.0..20.0),
                    width: rng.gen_range(2.0..5.0),
                    height: rng.gen_range(100.0..600.0),
                }
            })
            .collect();
        let base = ridge_dem(&grid, &ridges, None);
        let before = central_day_irradiation_with_metric(&base, &metric, Latitude::FromGrid, &cfg).unwrap();
        for k in 0..ridges.len() {
            let factor = rng.gen_range(1.2..3.0);
            let raised = ridge_dem(&grid, &ridges, Some((k, factor)));
            let after = central_day_irradiation_with_metric(&raised, &metric, Latitude::FromGrid, &cfg).unwrap();
            // cells whose own surface (3×3 Horn window) moved are not shadowing targets
            let moved: Vec<bool> = (0..grid.len())
                .map(|i| {
                    let (r, c) = ((i / n) as isize, (i % n) as isize);
                    (-1..=1).any(|dr| {
                        (-1..=1).any(|dc| {
                            let (rr, cc) = (r + dr, c + dc);
                            rr >= 0
                                && cc >= 0
                                && rr < n as isize
                                && cc < n as isize
                                && ridges[k].at(rr as usize, cc as usize) > 0.0
                        })
                    })
                })
                .collect();
            for d in 0..MONTHS {
                for i in (0..grid.len()).filter(|&i| !moved[i]) {
                    checked += 1;
                    let (b, a) = (before[d].values()[i], after[d].values()[i]);
                    if a > b {
                        violations += 1;
                    }
                    if a < b {
                        shaded += 1;
                    }
                }
            }
        }
    }
    ensure!(violations == 0, "{violations} cell-days gained irradiation after raising a ridge");
    ensure!(shaded > 0, "raising ridges never shaded anything; the check is vacuous");
    Ok(format!("20 DEMs × 3 ridges × 12 days: {checked} cell-days checked, {shaded} darkened, 0 brightened"))
}

// ---------------------------------------------------------------- 3

struct ClimateSample {
    t_avg: Vec<[f64; 12]>,
    t_min: Vec<[f64; 12]>,
    t_max: Vec<[f64; 12]>,
    p: Vec<[f64; 12]>,
    e: Vec<(f64, f64, f64)>,
}

fn climate_sample(n: usize, rng: &mut ChaCha8Rng) -> ClimateSample {
    let cells = n * n;
    let mut s = ClimateSample { t_avg: vec![], t_min: vec![], t_max: vec![], p: vec![], e: vec![] };
    for i in 0..cells {
        let t: [f64; 12] = std::array::from_fn(|_| rng.gen_range(-25.0..32.0));
        s.t_min.push(std::array::from_fn(|m| t[m] - rng.gen_range(0.0..10.0)));
        s.t_max.push(std::array::from_fn(|m| t[m] + rng.gen_range(0.0..10.0)));
        s.t_avg.push(t);
        s.p.push(std::array::from_fn(|_| if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..250.0) }));
        let mean = rng.gen_range(0.0..3000.0);
        s.e.push(if i % 17 == 0 {
            (mean, mean, mean)
        } else {
            (mean - rng.gen_range(0.0..600.0), mean, mean + rng.gen_range(0.0..600.0))
        });
    }
    s
}

fn stack_of(grid: &GridSpec, v: &[[f64; 12]]) -> MonthlyStack<f64> {
    let cols = grid.n_cols;
    MonthlyStack::from_fn(grid.clone(), |m, r, c| v[r * cols + c][m]).unwrap()
}

/// Scalar-loop definitions of every climate layer, by cell.
fn climate_oracle(s: &ClimateSample, n: usize, lapse: f64, mode: CountingMode) -> BTreeMap<Covariate, Vec<f64>> {
    let cells = n * n;
    let mut o: BTreeMap<Covariate, Vec<f64>> = BTreeMap::new();
    let mut push = |c: Covariate, v: f64| o.entry(c).or_default().push(v);
    for i in 0..cells {
        let (p, t) = (&s.p[i], &s.t_avg[i]);
        let mut p_sum = 0.0;
        let mut t_sum = 0.0;
        let (mut p_lo, mut p_hi, mut t_lo, mut t_hi) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        let mut range_sum = 0.0;
        let mut dry = 0.0;
        let mut warm = 0.0;
        let (e_lo, e_mean, e_hi) = s.e[i];
        for m in 0..12 {
            p_sum += p[m];
            t_sum += t[m];
            if p[m] < p_lo {
                p_lo = p[m];
            }
            if p[m] > p_hi {
                p_hi = p[m];
            }
            if t[m] < t_lo {
                t_lo = t[m];
            }
            if t[m] > t_hi {
                t_hi = t[m];
            }
            range_sum += s.t_max[i][m] - s.t_min[i][m];
            if p[m] <= 2.0 * t[m] {
                dry += 1.0;
            }
            warm += match mode {
                CountingMode::MeanOnly => f64::from(u8::from(t[m] >= 10.0)),
                CountingMode::Fractional if e_hi > e_lo => {
                    // elevation where the lapsed temperature crosses 10 °C
                    let crossing = e_mean + (t[m] - 10.0) / lapse;
                    ((crossing - e_lo) / (e_hi - e_lo)).clamp(0.0, 1.0)
                }
                CountingMode::Fractional => f64::from(u8::from(t[m] >= 10.0)),
            };
        }
        let t_mean = t_sum / 12.0;
        let tundra = t_hi + 0.1 * t_lo - 9.0;
        push(Covariate::PrecipAnnual, p_sum);
        push(Covariate::PrecipDriest, p_lo);
        push(Covariate::PrecipWettest, p_hi);
        push(Covariate::TempAnnual, t_mean);
        push(Covariate::TempColdest, t_lo);
        push(Covariate::TempWarmest, t_hi);
        push(Covariate::Tundra, tundra);
        push(Covariate::TundraExp, tundra.exp());
        push(Covariate::TempRangeMean, range_sum / 12.0);
        push(Covariate::PrecipSeasonalityDry, (p_hi - p_lo) / p_lo.max(1.0));
        push(Covariate::PrecipSeasonalityWet, (p_hi - p_lo) / p_hi.max(1.0));
        push(Covariate::DryMonths, dry);
        push(Covariate::WarmMonths, warm);
        push(Covariate::TempAnnualShifted, t_mean + 100.0);
        push(Covariate::TempColdestShifted, t_lo + 100.0);
        push(Covariate::TempPerRainOrder, (t_mean + 100.0) / (p_sum + 1.0).log10().max(2f64.log10()));
    }
    // 3×3 mean of the elevation range over the in-grid part of the window
    let er: Vec<f64> = (0..cells)
        .map(|i| {
            let (r, c) = ((i / n) as isize, (i % n) as isize);
            let mut sum = 0.0;
            let mut k = 0.0;
            for rr in r - 1..=r + 1 {
                for cc in c - 1..=c + 1 {
                    if rr >= 0 && cc >= 0 && rr < n as isize && cc < n as isize {
                        let (lo, _, hi) = s.e[rr as usize * n + cc as usize];
                        sum += hi - lo;
                        k += 1.0;
                    }
                }
            }
            sum / k
        })
        .collect();
    o.insert(Covariate::ElevationRange3x3, er);
    o
}

fn is_exact_kind(c: Covariate) -> bool {
    use Covariate::*;
    matches!(
        c,
        PrecipAnnual | PrecipDriest | PrecipWettest | TempColdest | TempWarmest | DryMonths
    )
}

fn focal_oracle(v: &[f64], n: usize) -> Vec<f64> {
    (0..n * n)
        .map(|i| {
            let (r, c) = ((i / n) as isize, (i % n) as isize);
            let mut sum = 0.0;
            let mut k = 0.0;
            for rr in r - 1..=r + 1 {
                for cc in c - 1..=c + 1 {
                    if rr >= 0 && cc >= 0 && rr < n as isize && cc < n as isize {
                        sum += v[rr as usize * n + cc as usize];
                        k += 1.0;
                    }
                }
            }
            sum / k
        })
        .collect()
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let n = 32;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let grid = GridSpec::from_origin(5.0, 50.0, 30.0, n, n).unwrap();
    let s = climate_sample(n, &mut rng);
    let dem = DemTriple::new(
        Raster::new(grid.clone(), s.e.iter().map(|e| e.0).collect()).unwrap(),
        Raster::new(grid.clone(), s.e.iter().map(|e| e.1).collect()).unwrap(),
        Raster::new(grid.clone(), s.e.iter().map(|e| e.2).collect()).unwrap(),
    )
    .unwrap();
    let inputs = ClimateInputs::new(
        stack_of(&grid, &s.t_avg),
        stack_of(&grid, &s.t_min),
        stack_of(&grid, &s.t_max),
        stack_of(&grid, &s.p),
        dem,
    )
    .unwrap();
    let mut compared = 0usize;
    let mut worst = 0.0f64;
    for mode in [CountingMode::Fractional, CountingMode::MeanOnly] {
        let lapse = LapseConfig { counting_mode: mode, ..LapseConfig::default() };
        let got = climate_covariates(&inputs, &lapse).unwrap();
        let want = climate_oracle(&s, n, lapse.lapse_rate, mode);
        ensure!(got.len() == want.len(), "{} layers computed, oracle has {}", got.len(), want.len());
        for (cov, w) in &want {
            let g = got[cov].values();
            let exact = is_exact_kind(*cov) || (*cov == Covariate::WarmMonths && mode == CountingMode::MeanOnly);
            for (i, (&a, &b)) in g.iter().zip(w).enumerate() {
                compared += 1;
                if exact {
                    ensure!(a == b, "{cov} cell {i}: {a} != {b}");
                } else {
                    let e = rel_err(a, b);
                    ensure!(e <= 1e-12 || (a - b).abs() <= 1e-12, "{cov} cell {i}: {a} vs {b}");
                    worst = worst.max(if b.abs() > 1e-12 { e } else { 0.0 });
                }
            }
        }
    }

    // solar-derived formulas on random semester totals
    let light: Vec<f64> = (0..n * n).map(|_| rng.gen_range(5.0e5..2.0e6)).collect();
    let dark: Vec<f64> = (0..n * n).map(|_| rng.gen_range(1.0e5..5.0e5)).collect();
    let dt: Vec<f64> = (0..n * n).map(|_| rng.gen_range(0.0..20.0)).collect();
    let lr = Raster::new(grid.clone(), light.clone()).unwrap();
    let dr = Raster::new(grid.clone(), dark.clone()).unwrap();
    let annual: Vec<f64> = light.iter().zip(&dark).map(|(l, d)| l + d).collect();
    let ar = Raster::new(grid.clone(), annual.clone()).unwrap();
    let ds = seasonal_solar_variation(&lr, &dr).unwrap();
    let (fl, fd) = (focal_oracle(&light, n), focal_oracle(&dark, n));
    for i in 0..n * n {
        let want = (fl[i] - fd[i]) / fd[i];
        ensure!(rel_err(ds.values()[i], want) <= 1e-12, "ds_3x3 cell {i}");
        compared += 1;
    }
    let st = entransy_proxy(&ar, &Raster::new(grid.clone(), dt.clone()).unwrap()).unwrap();
    for i in 0..n * n {
        ensure!(rel_err(st.values()[i], annual[i] * dt[i]) <= 1e-12, "s_t_range cell {i}");
        compared += 1;
    }
    // annual irradiation closes the semesters exactly
    let daily: Vec<Raster<f64>> = (0..MONTHS)
        .map(|_| Raster::new(grid.clone(), (0..n * n).map(|_| rng.gen_range(500.0..9000.0)).collect()).unwrap())
        .collect();
    let stack = SolarStack::from_daily(&daily, &SolarConfig::default(), 1).unwrap();
    for i in 0..n * n {
        ensure!(
            stack.s_annual.values()[i] == stack.s_light.values()[i] + stack.s_dark.values()[i],
            "s_annual cell {i}"
        );
        ensure!(stack.s_light.values()[i] >= stack.s_dark.values()[i], "s_light < s_dark at cell {i}");
        compared += 1;
    }

    let t = start.elapsed();
    ensure!(t < Duration::from_secs(10), "took {t:?}");
    Ok(format!(
        "{compared} cell values match scalar loops (exact where required, worst relative {:.1e}), {:.2} s",
        worst,
        t.as_secs_f64()
    ))
}

// ---------------------------------------------------------------- shared synthetic run

struct Run {
    out: PathBuf,
    elapsed: Duration,
    all_cached: bool,
}

struct Fixture {
    _dir: tempfile::TempDir,
    ds: SynthDataset,
    runs: BTreeMap<String, Run>,
}

fn run_variant(ds: &SynthDataset, name: &str, workers: usize, cache: &Path) -> Run {
    let mut cfg = PipelineConfig::load(&ds.config).unwrap();
    cfg.worker_count = workers;
    cfg.cache_dir = cache.to_path_buf();
    cfg.output_dir = ds.root.join("runs").join(name);
    let start = Instant::now();
    let report = run_pipeline(&cfg).unwrap();
    Run { out: cfg.output_dir, elapsed: start.elapsed(), all_cached: report.all_cached() }
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let params = SynthParams { water_fraction: 0.3, seed: 2024, ..SynthParams::default() };
    let ds = generate(dir.path().join("synthetic"), &params).unwrap();
    let mut runs = BTreeMap::new();
    for w in [1usize, 4, 8] {
        let cache = ds.root.join(format!("cache_w{w}"));
        runs.insert(format!("cold_w{w}"), run_variant(&ds, &format!("cold_w{w}"), w, &cache));
    }
    let warm_cache = ds.root.join("cache_w1");
    runs.insert("warm_w4".into(), run_variant(&ds, "warm_w4", 4, &warm_cache));
    Fixture { _dir: dir, ds, runs }
}

// ---------------------------------------------------------------- 4

fn criterion_4(f: &Fixture) -> Outcome {
    let run = &f.runs["cold_w1"];
    let water = &f.ds.water;
    let share = water.iter().filter(|w| **w).count() as f64 / water.len() as f64;
    ensure!((0.25..0.35).contains(&share), "water share {share}");
    let mut layers = 0;
    for cov in Covariate::ALL {
        let r = read_raster(run.out.join(format!("{}.tif", cov.slug())), Some(&f.ds.grid))
            .map_err(|e| format!("{cov}: {e}"))?;
        for (i, v) in r.values().iter().enumerate() {
            ensure!(v.is_nan() == water[i], "{cov} cell {i}: value {v}, water {}", water[i]);
        }
        layers += 1;
    }
    Ok(format!(
        "{layers} layers: all {} water cells NaN ({:.1}% of grid), no NaN elsewhere",
        water.iter().filter(|w| **w).count(),
        100.0 * share
    ))
}

// ---------------------------------------------------------------- 5

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let grid = GridSpec::from_origin(0.0, 10.0, 30.0, 64, 64).unwrap();
    let mut cols: [Vec<f64>; 3] = Default::default();
    for _ in 0..grid.len() {
        if rng.gen_bool(0.1) {
            cols.iter_mut().for_each(|c| c.push(f64::NAN));
            continue;
        }
        let mut t = [rng.gen_range(-30.0..30.0), 0.0, 0.0];
        t[1] = t[0] + rng.gen_range(0.0..8.0);
        t[2] = t[1] + rng.gen_range(0.0..8.0);
        if rng.gen_bool(0.3) {
            let (a, b) = (rng.gen_range(0..3), rng.gen_range(0..3));
            t.swap(a, b);
        }
        for k in 0..3 {
            cols[k].push(t[k]);
        }
    }
    let [lo, mid, hi] = cols.map(|v| Raster::new(grid.clone(), v).unwrap());
    let ((a, b, c), first) = repair_ordered_triple("t", &lo, &mid, &hi, RepairMode::Repair).unwrap();
    let mut finite = 0;
    for i in 0..grid.len() {
        let (x, y, z) = (a.values()[i], b.values()[i], c.values()[i]);
        if x.is_nan() {
            ensure!(y.is_nan() && z.is_nan(), "mask changed at {i}");
            continue;
        }
        finite += 1;
        ensure!(x <= y && y <= z, "cell {i} unordered after repair: {x} {y} {z}");
    }
    let (_, second) = repair_ordered_triple("t", &a, &b, &c, RepairMode::Repair).unwrap();
    ensure!(first.repaired > 0, "no violations were generated");
    ensure!(second.repaired == 0 && second.violations == 0, "second pass repaired {}", second.repaired);
    ensure!(
        repair_ordered_triple("t", &lo, &mid, &hi, RepairMode::Strict).is_err(),
        "strict mode accepted violations"
    );

    // the same on monthly stacks
    let sl = MonthlyStack::new(vec![lo.clone(); 12]).unwrap();
    let sm = MonthlyStack::new(vec![mid.clone(); 12]).unwrap();
    let sh = MonthlyStack::new(vec![hi.clone(); 12]).unwrap();
    let ((x, y, z), r1) = repair_ordered_stacks("t", &sl, &sm, &sh, RepairMode::Repair).unwrap();
    let (_, r2) = repair_ordered_stacks("t", &x, &y, &z, RepairMode::Repair).unwrap();
    ensure!(r1.repaired == 12 * first.repaired && r2.repaired == 0, "stack repair counts {} / {}", r1.repaired, r2.repaired);
    Ok(format!("{} of {finite} finite cells repaired, all ordered; second pass 0 repairs", first.repaired))
}

// ---------------------------------------------------------------- 6

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = 256;
    let grid = GridSpec::from_origin(0.0, 40.0, 7.5, n, n).unwrap();
    let fine = Raster::new(grid.clone(), (0..n * n).map(|_| rng.gen_range(-500.0..3500.0)).collect()).unwrap();
    let coarse = block_mean_aggregate(&fine, 4).unwrap();
    ensure!(coarse.spec().shape() == (64, 64), "shape {:?}", coarse.spec().shape());
    for br in 0..64 {
        for bc in 0..64 {
            let mut sum = 0.0;
            for r in 0..4 {
                for c in 0..4 {
                    sum += fine.get(br * 4 + r, bc * 4 + c);
                }
            }
            let want = sum / 16.0;
            ensure!(coarse.get(br, bc) == want, "block ({br},{bc}): {} != {want}", coarse.get(br, bc));
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mf, mc) = (mean(fine.values()), mean(coarse.values()));
    let e = rel_err(mc, mf);
    ensure!(e <= 1e-12, "global mean {mc} vs {mf}");
    Ok(format!("4096 blocks equal brute-force means exactly; global mean relative error {e:.1e}"))
}

// ---------------------------------------------------------------- 7

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn criterion_7(f: &Fixture) -> Outcome {
    let reference = tree(&f.runs["cold_w1"].out);
    ensure!(reference.len() == 22, "{} files in the output tree", reference.len());
    for (name, run) in &f.runs {
        let other = tree(&run.out);
        ensure!(other == reference, "{name} output tree differs from cold_w1");
        ensure!(run.elapsed < Duration::from_secs(60), "{name} took {:?}", run.elapsed);
    }
    ensure!(f.runs["warm_w4"].all_cached, "warm run recomputed a stage");
    ensure!(!f.runs["cold_w8"].all_cached, "cold run reported cached stages");
    let times: Vec<String> =
        f.runs.iter().map(|(n, r)| format!("{n} {:.1} s", r.elapsed.as_secs_f64())).collect();
    Ok(format!("workers 1/4/8 cold and warm trees byte-identical ({})", times.join(", ")))
}

// ---------------------------------------------------------------- 8

type Q = Ratio<i128>;

/// Exact integral of the periodic piecewise-linear interpolant through
/// `(node_k, value_k)` over `[a, b)`.
fn interpolant_integral(nodes: &[Q], values: &[Q], a: Q, b: Q) -> Q {
    let year = Q::from_integer(365);
    let mut total = Q::from_integer(0);
    for k in 0..nodes.len() {
        let k1 = (k + 1) % nodes.len();
        let x0 = nodes[k];
        let x1 = if k1 == 0 { nodes[0] + year } else { nodes[k1] };
        for shift in [-year, Q::from_integer(0)] {
            let (s0, s1) = (x0 + shift, x1 + shift);
            let lo = if a > s0 { a } else { s0 };
            let hi = if b < s1 { b } else { s1 };
            if hi <= lo {
                continue;
            }
            let at = |x: Q| values[k] + (values[k1] - values[k]) * (x - s0) / (s1 - s0);
            total += (hi - lo) * (at(lo) + at(hi)) / Q::from_integer(2);
        }
    }
    total
}

fn to_f64(x: Q) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

fn criterion_8() -> Outcome {
    let cfg = SolarConfig::default();
    let grid = GridSpec::from_origin(0.0, 1.0, 30.0, 4, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);

    // constant maps
    let constants: Vec<f64> = (0..16).map(|_| rng.gen_range(0.0..12000.0)).collect();
    let daily: Vec<Raster<f64>> = (0..MONTHS).map(|_| Raster::new(grid.clone(), constants.clone()).unwrap()).collect();
    let (months, annual) = monthly_totals_trapezoid(&daily, &cfg).unwrap();
    for (i, &v) in constants.iter().enumerate() {
        for m in 0..MONTHS {
            let want = v * MONTH_LENGTHS[m] as f64;
            ensure!(months[m].values()[i] == want, "constant {v}, month {}: {} != {want}", m + 1, months[m].values()[i]);
        }
        let sum = (0..MONTHS).fold(0.0, |acc, m| acc + months[m].values()[i]);
        ensure!(sum == annual.values()[i], "constant {v}: months sum {sum} != annual {}", annual.values()[i]);
    }

    // linear ramps across the year, one slope per cell; coefficients in
    // 64ths so every sample is exact in both f64 and the rationals
    let nodes: Vec<Q> = cfg.central_days.iter().map(|&d| Q::new(2 * d as i128 - 1, 2)).collect();
    let ramps: Vec<(i128, i128)> =
        (0..16).map(|_| (rng.gen_range(64_000..320_000), rng.gen_range(-640..640))).collect();
    let sample = |(a, b): (i128, i128), k: usize| Q::new(a, 64) + Q::new(b, 64) * nodes[k];
    let daily: Vec<Raster<f64>> = (0..MONTHS)
        .map(|k| Raster::new(grid.clone(), ramps.iter().map(|&r| to_f64(sample(r, k))).collect()).unwrap())
        .collect();
    let (months, annual) = monthly_totals_trapezoid(&daily, &cfg).unwrap();
    let mut worst = 0.0f64;
    for i in 0..16 {
        let values: Vec<Q> = (0..MONTHS).map(|k| sample(ramps[i], k)).collect();
        let mut start = Q::from_integer(0);
        let mut year = Q::from_integer(0);
        for m in 0..MONTHS {
            let end = start + Q::from_integer(MONTH_LENGTHS[m] as i128);
            let exact = interpolant_integral(&nodes, &values, start, end);
            year += exact;
            let e = rel_err(months[m].values()[i], to_f64(exact));
            ensure!(e <= 1e-10, "cell {i} month {}: relative error {e:e}", m + 1);
            worst = worst.max(e);
            start = end;
        }
        let e = rel_err(annual.values()[i], to_f64(year));
        ensure!(e <= 1e-10, "cell {i} year: relative error {e:e}");
        let sum = (0..MONTHS).fold(0.0, |acc, m| acc + months[m].values()[i]);
        ensure!(sum == annual.values()[i], "cell {i}: months sum {sum} != annual {}", annual.values()[i]);
    }
    Ok(format!("constants exact; ramps within {worst:.1e} of the exact rational integral; months sum to annual exactly"))
}

// ---------------------------------------------------------------- 9

fn criterion_9(f: &Fixture) -> Outcome {
    let out = &f.runs["cold_w1"].out;
    let grid = &f.ds.grid;
    let cs = grid.cell_size_deg();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut rows = String::from("lon,lat\n");
    let (mut inside, mut on_water, mut outside) = (0usize, 0usize, 0usize);
    for _ in 0..300 {
        let (lon, lat) = (rng.gen_range(grid.west..grid.east), rng.gen_range(grid.south..grid.north));
        let col = ((lon - grid.west) / cs).floor() as usize;
        let row = ((grid.north - lat) / cs).floor() as usize;
        if f.ds.water[row * grid.n_cols + col] {
            on_water += 1;
        } else {
            inside += 1;
        }
        rows.push_str(&format!("{lon},{lat}\n"));
    }
    for k in 0..7 {
        rows.push_str(&format!("{},{}\n", grid.east + 0.1 + k as f64, grid.north - 0.01));
        outside += 1;
    }
    let dir = f.ds.root.join("niche");
    fs::create_dir_all(&dir).unwrap();
    let presence = dir.join("presence.csv");
    fs::write(&presence, rows).unwrap();
    let samples = 2000;
    let run = |name: &str| -> Result<Vec<u8>, String> {
        let target = dir.join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_bioclim"))
            .args(["niche", "--samples", "2000", "--seed", "17"])
            .arg("--x")
            .arg(out.join("p_annual.tif"))
            .arg("--y")
            .arg(out.join("t_range.tif"))
            .arg("--presence")
            .arg(&presence)
            .arg("--out")
            .arg(&target)
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(status.status.success(), "niche exited with {:?}", status.status);
        let log = String::from_utf8_lossy(&status.stdout).to_string();
        let expect = format!("dropped (NaN) {on_water}, dropped (outside) {outside}");
        ensure!(log.contains(&expect), "log `{}` lacks `{expect}`", log.trim());
        Ok(fs::read(&target).unwrap())
    };
    let first = run("a.csv")?;
    let second = run("b.csv")?;
    ensure!(first == second, "seeded reruns differ");
    let text = String::from_utf8(first).unwrap();
    let mut lines = text.lines();
    ensure!(lines.next() == Some("lon,lat,x,y,presence"), "header");
    let (mut pres, mut back) = (0usize, 0usize);
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        ensure!(fields.len() == 5, "row `{line}`");
        let x: f64 = fields[2].parse().unwrap();
        let y: f64 = fields[3].parse().unwrap();
        ensure!(x.is_finite() && y.is_finite(), "non-finite value in `{line}`");
        match fields[4] {
            "1" => pres += 1,
            "0" => back += 1,
            other => return Err(format!("presence flag {other}")),
        }
    }
    ensure!(pres == inside, "{pres} presence rows, expected {inside}");
    ensure!(back == samples, "{back} background rows, expected {samples}");
    Ok(format!(
        "{pres} presence rows = 307 points − {on_water} on water − {outside} outside; {back} background rows; reruns identical"
    ))
}

// ---------------------------------------------------------------- 10

fn criterion_10(f: &Fixture) -> Outcome {
    let cfg = PipelineConfig::load(&f.ds.config).unwrap();
    let fine_grid = cfg.fine_grid();
    let dem = read_raster(f.ds.root.join("inputs/dem_fine.tif"), Some(&fine_grid)).unwrap();

    // fine, then aggregate
    let daily = central_day_irradiation(&dem, Latitude::FromGrid, &cfg.solar).unwrap();
    let fine_path = SolarStack::from_daily(&daily, &cfg.solar, cfg.fine_factor).unwrap().s_annual;
    // aggregate the DEM, then compute coarse
    let coarse_dem = block_mean_aggregate(&dem, cfg.fine_factor).unwrap();
    let coarse_daily = central_day_irradiation(&coarse_dem, Latitude::FromGrid, &cfg.solar).unwrap();
    let coarse_path = SolarStack::from_daily(&coarse_daily, &cfg.solar, 1).unwrap().s_annual;

    let (mut sum, mut n) = (0.0, 0usize);
    for (a, b) in fine_path.values().iter().zip(coarse_path.values()) {
        if a.is_finite() && b.is_finite() {
            sum += (a - b).abs();
            n += 1;
        }
    }
    let mad = sum / n as f64;
    ensure!(mad > 0.0, "fine-then-aggregate equals coarse computation");

    // the published layer is the fine-then-aggregate one
    let published = read_raster(f.runs["cold_w1"].out.join("s_annual.tif"), Some(&cfg.grid)).unwrap();
    for (i, (p, a)) in published.values().iter().zip(fine_path.values()).enumerate() {
        if f.ds.water[i] {
            continue;
        }
        ensure!(*p == (*a as f32) as f64, "s_annual cell {i}: published {p}, fine path {a}");
    }
    let mean = fine_path.finite_mean().unwrap();
    Ok(format!(
        "mean |fine→aggregate − coarse| = {mad:.0} Wh/m² ({:.2}% of mean); published s_annual follows the fine path",
        100.0 * mad / mean
    ))
}

// ---------------------------------------------------------------- harness

fn check(id: usize, title: &str, f: impl FnOnce() -> Outcome) -> bool {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    match outcome {
        Ok(detail) => {
            println!("[PASS] criterion {id:>2}: {title}: {detail}");
            true
        }
        Err(detail) => {
            println!("[FAIL] criterion {id:>2}: {title}: {detail}");
            false
        }
    }
}

fn main() {
    let mut ok = vec![
        check(1, "solar analytic oracle", criterion_1),
        check(2, "shadow monotonicity", criterion_2),
        check(3, "covariate formula oracle", criterion_3),
    ];
    let fixture = catch_unwind(fixture);
    let with_fixture = |id: usize, title: &str, f: fn(&Fixture) -> Outcome| match &fixture {
        Ok(fx) => check(id, title, || f(fx)),
        Err(_) => check(id, title, || Err("synthetic pipeline run failed".into())),
    };
    ok.push(with_fixture(4, "NaN propagation", criterion_4));
    ok.push(check(5, "semantic repair", criterion_5));
    ok.push(check(6, "block aggregation", criterion_6));
    ok.push(with_fixture(7, "determinism", criterion_7));
    ok.push(check(8, "trapezoidal aggregation", criterion_8));
    ok.push(with_fixture(9, "niche export", criterion_9));
    ok.push(with_fixture(10, "fine-then-aggregate", criterion_10));
    let passed = ok.iter().filter(|b| **b).count();
    println!("acceptance: {passed}/{} criteria passed", ok.len());
    if passed != ok.len() {
        std::process::exit(1);
    }
}
