//! Layer manifest: binds input files to pipeline roles.
//!
//! CSV columns: `path,role,month,checksum,units`. `month` is 1..=12 for
//! monthly climate roles and empty otherwise; `checksum` is the SHA-256 of
//! the file, lowercase hex. Relative paths resolve against the manifest's
//! directory.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    TAvg,
    TMin,
    TMax,
    Precip,
    DemMin,
    DemMean,
    DemMax,
    DemFine,
}

impl Role {
    pub const ALL: [Role; 8] = [
        Role::TAvg,
        Role::TMin,
        Role::TMax,
        Role::Precip,
        Role::DemMin,
        Role::DemMean,
        Role::DemMax,
        Role::DemFine,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::TAvg => "t_avg",
            Role::TMin => "t_min",
            Role::TMax => "t_max",
            Role::Precip => "precip",
            Role::DemMin => "dem_min",
            Role::DemMean => "dem_mean",
            Role::DemMax => "dem_max",
            Role::DemFine => "dem_fine",
        }
    }

    pub fn is_monthly(self) -> bool {
        matches!(self, Role::TAvg | Role::TMin | Role::TMax | Role::Precip)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Role::ALL
            .into_iter()
            .find(|r| r.as_str() == s.trim())
            .ok_or_else(|| Error::Manifest(format!("unknown role `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerManifest {
    pub path: String,
    pub role: Role,
    pub month: Option<u8>,
    pub checksum: String,
    pub units: String,
}

/// SHA-256 of a file's bytes as lowercase hex.
pub fn file_checksum(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut file = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// All layers of one run, with paths resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    base: PathBuf,
    layers: Vec<LayerManifest>,
}

impl Manifest {
    pub fn new(base: impl Into<PathBuf>, layers: Vec<LayerManifest>) -> Result<Self> {
        let m = Manifest { base: base.into(), layers };
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.is_file() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
        let layers = reader.deserialize().collect::<std::result::Result<Vec<LayerManifest>, _>>()?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::new(base, layers)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for l in &self.layers {
            w.serialize(l)?;
        }
        w.flush()?;
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        let mut seen = BTreeMap::new();
        for l in &self.layers {
            match (l.role.is_monthly(), l.month) {
                (true, Some(m)) if (1..=12).contains(&m) => {}
                (true, _) => {
                    return Err(Error::Manifest(format!("{}: role {} needs a month in 1..=12", l.path, l.role)))
                }
                (false, Some(_)) => {
                    return Err(Error::Manifest(format!("{}: role {} takes no month", l.path, l.role)))
                }
                (false, None) => {}
            }
            if seen.insert((l.role, l.month), &l.path).is_some() {
                return Err(Error::Manifest(format!("duplicate entry for {} month {:?}", l.role, l.month)));
            }
        }
        for role in Role::ALL.into_iter().filter(|r| r.is_monthly()) {
            let n = self.layers.iter().filter(|l| l.role == role).count();
            if n != 0 && n != 12 {
                return Err(Error::Manifest(format!("role {role} lists {n} months, need 12")));
            }
        }
        Ok(())
    }

    pub fn layers(&self) -> &[LayerManifest] {
        &self.layers
    }

    pub fn resolve(&self, layer: &LayerManifest) -> PathBuf {
        let p = Path::new(&layer.path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn has_role(&self, role: Role) -> bool {
        self.layers.iter().any(|l| l.role == role)
    }

    /// Roles from `required` that have no entry.
    pub fn missing_roles(&self, required: &[Role]) -> Vec<Role> {
        required.iter().copied().filter(|r| !self.has_role(*r)).collect()
    }

    /// Entries for `role` in month order.
    pub fn entries(&self, role: Role) -> Vec<&LayerManifest> {
        let mut v: Vec<_> = self.layers.iter().filter(|l| l.role == role).collect();
        v.sort_by_key(|l| l.month);
        v
    }

    /// Recomputes each listed file's checksum and compares it with the
    /// manifest.
    pub fn verify(&self, layer: &LayerManifest) -> Result<()> {
        let path = self.resolve(layer);
        let found = file_checksum(&path)?;
        if !found.eq_ignore_ascii_case(layer.checksum.trim()) {
            return Err(Error::ChecksumMismatch { path, expected: layer.checksum.clone(), found });
        }
        Ok(())
    }

    pub fn verify_all(&self) -> Result<()> {
        self.layers.iter().try_for_each(|l| self.verify(l))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(role: Role, month: Option<u8>) -> LayerManifest {
        LayerManifest { path: format!("{role}_{month:?}.tif"), role, month, checksum: String::new(), units: "x".into() }
    }

    #[test]
    fn monthly_roles_need_twelve_months() {
        let mut layers: Vec<_> = (1..=11).map(|m| entry(Role::Precip, Some(m))).collect();
        assert!(Manifest::new(".", layers.clone()).is_err());
        layers.push(entry(Role::Precip, Some(12)));
        assert!(Manifest::new(".", layers.clone()).is_ok());
        layers.push(entry(Role::Precip, Some(12)));
        assert!(Manifest::new(".", layers).is_err());
    }

    #[test]
    fn month_rules() {
        assert!(Manifest::new(".", vec![entry(Role::DemMean, Some(3))]).is_err());
        let mut layers: Vec<_> = (1..=12).map(|m| entry(Role::TAvg, Some(m))).collect();
        layers[0].month = Some(13);
        assert!(Manifest::new(".", layers).is_err());
    }

    #[test]
    fn missing_roles_listed() {
        let m = Manifest::new(".", vec![entry(Role::DemMean, None)]).unwrap();
        assert_eq!(m.missing_roles(&[Role::DemMean, Role::DemFine]), vec![Role::DemFine]);
    }

    #[test]
    fn checksum_of_known_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc");
        std::fs::write(&p, b"abc").unwrap();
        assert_eq!(
            file_checksum(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        let m = Manifest::new(dir.path(), vec![entry(Role::DemFine, None)]).unwrap();
        m.write(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("path,role,month,checksum,units\n"));
        assert_eq!(Manifest::load(&path).unwrap(), m);
    }
}
