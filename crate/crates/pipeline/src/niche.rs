//! Niche-diagram samples: covariate pairs at presence points and at random
//! background cells.

use std::io::{Read, Write};

use bioclim_core::Raster;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NicheSample {
    pub lon: f64,
    pub lat: f64,
    pub x: f64,
    pub y: f64,
    #[serde(with = "presence_flag")]
    pub presence: bool,
}

mod presence_flag {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        Ok(u8::deserialize(d)? != 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct PresencePoint {
    pub lon: f64,
    pub lat: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NicheExport {
    pub samples: Vec<NicheSample>,
    pub presence_rows: usize,
    pub background_rows: usize,
    /// Presence points on a cell where either covariate is NaN.
    pub dropped_nan: usize,
    /// Presence points outside the grid extent.
    pub dropped_outside: usize,
}

pub fn read_presence<R: Read>(r: R) -> Result<Vec<PresencePoint>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    Ok(reader.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Presence rows at the cells containing each point, followed by
/// `sample_count` background rows at distinct cells where both covariates
/// are finite, drawn uniformly without replacement from a generator seeded
/// with `seed`.
pub fn niche_export(
    x: &Raster<f64>,
    y: &Raster<f64>,
    presence: &[PresencePoint],
    sample_count: usize,
    seed: u64,
) -> Result<NicheExport> {
    x.require_same_grid(y)?;
    let spec = x.spec();
    let mut out = NicheExport::default();
    for p in presence {
        let Some((r, c)) = spec.cell_at(p.lon, p.lat) else {
            out.dropped_outside += 1;
            continue;
        };
        let (xv, yv) = (x.get(r, c), y.get(r, c));
        if xv.is_nan() || yv.is_nan() {
            out.dropped_nan += 1;
            continue;
        }
        out.samples.push(NicheSample { lon: p.lon, lat: p.lat, x: xv, y: yv, presence: true });
    }
    out.presence_rows = out.samples.len();

    let candidates: Vec<usize> = (0..spec.len())
        .filter(|&i| !x.values()[i].is_nan() && !y.values()[i].is_nan())
        .collect();
    let n = sample_count.min(candidates.len());
    if n < sample_count {
        log::warn!("only {} cells available for {} background samples", candidates.len(), sample_count);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in sample(&mut rng, candidates.len(), n) {
        let i = candidates[k];
        let (r, c) = (i / spec.n_cols, i % spec.n_cols);
        out.samples.push(NicheSample {
            lon: spec.col_lon(c),
            lat: spec.row_lat(r),
            x: x.values()[i],
            y: y.values()[i],
            presence: false,
        });
    }
    out.background_rows = n;
    Ok(out)
}

/// Writes `lon,lat,x,y,presence` rows.
pub fn write_niche_csv<W: Write>(w: W, samples: &[NicheSample]) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    writer.write_record(["lon", "lat", "x", "y", "presence"])?;
    for s in samples {
        writer.serialize(s)?;
    }
    writer.flush()?;
    Ok(())
}
