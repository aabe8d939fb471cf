//! Content-addressed stage cache.
//!
//! Each stage stores its layers as float64 GeoTIFFs under
//! `<cache_dir>/<stage>/<key>/`, where the key hashes the stage's input
//! checksums and parameters. An entry is complete once its `done` marker
//! exists; entries are built in a scratch directory and renamed into place.

use std::fs;
use std::path::{Path, PathBuf};

use bioclim_core::io::{read_raster, write_raster_with, SampleType, WriteOptions, DEFAULT_NODATA};
use bioclim_core::{GridSpec, Raster};
use sha2::{Digest, Sha256};

use crate::error::Result;

const MARKER: &str = "done";

/// Builds a cache key from ordered `(name, value)` pairs.
#[derive(Debug, Clone, Default)]
pub struct KeyBuilder {
    hasher: Sha256,
}

impl KeyBuilder {
    pub fn new(stage: &str) -> Self {
        let mut k = KeyBuilder::default();
        k.add("stage", stage);
        k.add("engine", env!("CARGO_PKG_VERSION"));
        k
    }

    pub fn add(&mut self, name: &str, value: impl AsRef<str>) -> &mut Self {
        for part in [name, value.as_ref()] {
            self.hasher.update((part.len() as u64).to_le_bytes());
            self.hasher.update(part.as_bytes());
        }
        self
    }

    pub fn finish(&self) -> String {
        hex::encode(self.hasher.clone().finalize())
    }
}

#[derive(Debug, Clone)]
pub struct Cache {
    root: PathBuf,
}

impl Cache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Cache { root: root.into() }
    }

    fn entry(&self, stage: &str, key: &str) -> PathBuf {
        self.root.join(stage).join(key)
    }

    fn layer_path(dir: &Path, name: &str) -> PathBuf {
        dir.join(format!("{name}.tif"))
    }

    /// Path of an auxiliary file stored with an entry.
    pub fn file(&self, stage: &str, key: &str, name: &str) -> PathBuf {
        self.entry(stage, key).join(name)
    }

    pub fn contains(&self, stage: &str, key: &str) -> bool {
        self.entry(stage, key).join(MARKER).is_file()
    }

    /// Reads the named layers of a complete entry; `None` on a miss.
    pub fn load(&self, stage: &str, key: &str, names: &[String], grid: &GridSpec) -> Result<Option<Vec<Raster<f64>>>> {
        if !self.contains(stage, key) {
            return Ok(None);
        }
        let dir = self.entry(stage, key);
        let mut out = Vec::with_capacity(names.len());
        for name in names {
            let path = Self::layer_path(&dir, name);
            if !path.is_file() {
                log::warn!("cache entry {} lacks {name}; recomputing", dir.display());
                return Ok(None);
            }
            out.push(read_raster(&path, Some(grid))?);
        }
        Ok(Some(out))
    }

    /// Stores layers and auxiliary files as one entry.
    pub fn store(&self, stage: &str, key: &str, layers: &[(String, &Raster<f64>)], files: &[(&str, &[u8])]) -> Result<()> {
        let dir = self.entry(stage, key);
        let scratch = self.root.join(stage).join(format!(".{key}.partial"));
        if scratch.exists() {
            fs::remove_dir_all(&scratch)?;
        }
        fs::create_dir_all(&scratch)?;
        let opts = WriteOptions { nodata: DEFAULT_NODATA, sample: SampleType::F64 };
        for (name, layer) in layers {
            write_raster_with(*layer, Self::layer_path(&scratch, name), &opts)?;
        }
        for (name, bytes) in files {
            fs::write(scratch.join(name), bytes)?;
        }
        fs::write(scratch.join(MARKER), b"")?;
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::rename(&scratch, &dir)?;
        Ok(())
    }
}
