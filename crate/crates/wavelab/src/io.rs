//! Run artifacts: CSV tables, a binary column format for field dumps, fit
//! summaries and the manifest that makes a directory self-describing.
//!
//! Binary layout: the 8 bytes `WLBIN1\n\0`, a little-endian `u64` header
//! length, a UTF-8 JSON [`BinHeader`], then each column as little-endian `f64`
//! in header order.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::elliptic::{StripGrid, StripValues};
use crate::error::{Error, Result};
use crate::fit::Fit;
use crate::packets::FrameCoeffs;
use crate::spectral::{ComplexField, Field, GridSpec, RealField};

const MAGIC: &[u8; 8] = b"WLBIN1\n\0";

/// Plain table with named columns.
pub fn write_table(path: &Path, headers: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(headers)?;
    for r in rows {
        if r.len() != headers.len() {
            return Err(Error::Domain(format!("row has {} entries, header {}", r.len(), headers.len())));
        }
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.iter().map(String::from).collect();
    let rows = r.deserialize().collect::<std::result::Result<Vec<Vec<f64>>, _>>()?;
    Ok((headers, rows))
}

/// `x, re, im` per sample.
pub fn write_field_csv(path: &Path, u: &ComplexField) -> Result<()> {
    let g = *u.grid();
    let rows: Vec<Vec<f64>> = u.samples().iter().enumerate().map(|(j, z)| vec![g.x(j), z.re, z.im]).collect();
    write_table(path, &["x", "re", "im"], &rows)
}

pub fn write_real_csv(path: &Path, u: &RealField) -> Result<()> {
    write_field_csv(path, &u.to_complex())
}

/// `x, xi, re, im` for every nonzero coefficient.
pub fn write_coeffs_csv(path: &Path, c: &FrameCoeffs) -> Result<()> {
    let rows: Vec<Vec<f64>> = c.entries().into_iter().map(|(x, xi, z)| vec![x, xi, z.re, z.im]).collect();
    write_table(path, &["x", "xi", "re", "im"], &rows)
}

pub fn write_fit_json(path: &Path, fit: &Fit) -> Result<()> {
    write_json(path, fit)
}

pub fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, v)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinHeader {
    pub name: String,
    pub n: usize,
    pub length: f64,
    /// Present for strip dumps; columns are then `n_z` rows of `n` samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nz: Option<usize>,
    pub columns: Vec<String>,
}

pub fn write_bin(path: &Path, header: &BinHeader, columns: &[&[f64]]) -> Result<()> {
    if columns.len() != header.columns.len() {
        return Err(Error::Domain(format!("{} columns for {} names", columns.len(), header.columns.len())));
    }
    let rows = header.n * header.nz.unwrap_or(1);
    if let Some(c) = columns.iter().find(|c| c.len() != rows) {
        return Err(Error::Domain(format!("column of length {} in a dump of {rows} rows", c.len())));
    }
    let head = serde_json::to_vec(header)?;
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(MAGIC)?;
    f.write_all(&(head.len() as u64).to_le_bytes())?;
    f.write_all(&head)?;
    for c in columns {
        for v in c.iter() {
            f.write_all(&v.to_le_bytes())?;
        }
    }
    f.flush()?;
    Ok(())
}

pub fn read_bin(path: &Path) -> Result<(BinHeader, Vec<Vec<f64>>)> {
    let mut buf = Vec::new();
    File::open(path)?.read_to_end(&mut buf)?;
    let bad = || Error::Domain(format!("{} is not a binary field dump", path.display()));
    if buf.len() < 16 || &buf[..8] != MAGIC {
        return Err(bad());
    }
    let hl = u64::from_le_bytes(buf[8..16].try_into().unwrap()) as usize;
    let head: BinHeader = serde_json::from_slice(buf.get(16..16 + hl).ok_or_else(bad)?)?;
    let rows = head.n * head.nz.unwrap_or(1);
    let body = &buf[16 + hl..];
    if body.len() != 8 * rows * head.columns.len() {
        return Err(bad());
    }
    let cols = body
        .chunks_exact(8 * rows.max(1))
        .map(|c| c.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect())
        .collect();
    Ok((head, cols))
}

pub fn write_field_bin(path: &Path, name: &str, u: &ComplexField) -> Result<()> {
    let g = *u.grid();
    let re: Vec<f64> = u.samples().iter().map(|z| z.re).collect();
    let im: Vec<f64> = u.samples().iter().map(|z| z.im).collect();
    let h = BinHeader { name: name.into(), n: g.n, length: g.length, nz: None, columns: vec!["re".into(), "im".into()] };
    write_bin(path, &h, &[&re, &im])
}

/// Strip values with their Chebyshev depths, row `iz` holding level `z[iz]`.
pub fn write_strip_bin(path: &Path, name: &str, strip: &StripGrid, v: &StripValues) -> Result<()> {
    let g: GridSpec = strip.x;
    let z: Vec<f64> = (0..v.nz).flat_map(|iz| std::iter::repeat(strip.z[iz]).take(v.n)).collect();
    let h = BinHeader { name: name.into(), n: v.n, length: g.length, nz: Some(v.nz), columns: vec!["z".into(), "value".into()] };
    write_bin(path, &h, &[&z, &v.values])
}

/// One measured quantity checked against a target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable target, e.g. `<= 0.425`.
    pub target: String,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, target: format!("<= {bound:e}"), pass: value <= bound }
    }

    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, target: format!(">= {bound:e}"), pass: value >= bound }
    }

    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Check { name: name.into(), value, target: format!("in [{lo:e}, {hi:e}]"), pass: value >= lo && value <= hi }
    }
}

/// Fixed conventions recorded with every run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub domain: String,
    pub norms: String,
    pub fft: String,
    pub sup_norm: String,
    pub bottom: String,
}

impl Default for Conventions {
    fn default() -> Self {
        Conventions {
            domain: "periodic, length 2*pi unless the grid says otherwise".into(),
            norms: "un-normalized integrals over one period, trapezoid in space and time".into(),
            fft: "forward transform divided by n, inverse unscaled".into(),
            sup_norm: "L-infinity via 8x spectral oversampling in scans".into(),
            bottom: "flat bottom with Neumann closure for the potential and the pressure".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config: serde_json::Value,
    pub conventions: Conventions,
    #[serde(default)]
    pub frame_constants: Vec<FrameConstant>,
    #[serde(default)]
    pub checks: Vec<Check>,
    #[serde(default)]
    pub files: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameConstant {
    pub lambda: f64,
    pub measured: f64,
    pub analytic: f64,
}

/// Output directory written under a temporary name and renamed into place.
#[derive(Debug)]
pub struct ArtifactDir {
    tmp: PathBuf,
    target: PathBuf,
    files: Vec<String>,
}

impl ArtifactDir {
    pub fn create(target: &Path) -> Result<Self> {
        let parent = target.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(parent)?;
        let name = target.file_name().ok_or_else(|| Error::Domain(format!("bad artifact path {}", target.display())))?;
        let tmp = parent.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
        if tmp.exists() {
            fs::remove_dir_all(&tmp)?;
        }
        fs::create_dir(&tmp)?;
        Ok(ArtifactDir { tmp, target: target.to_path_buf(), files: Vec::new() })
    }

    /// Path for a new file inside the (temporary) directory.
    pub fn file(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.tmp.join(name)
    }

    pub fn target(&self) -> &Path {
        &self.target
    }

    /// Writes `manifest.json` and moves the directory into place, replacing
    /// any previous run.
    pub fn finish(mut self, mut manifest: Manifest) -> Result<PathBuf> {
        self.files.sort();
        manifest.files = self.files.clone();
        write_json(&self.tmp.join("manifest.json"), &manifest)?;
        if self.target.exists() {
            fs::remove_dir_all(&self.target)?;
        }
        fs::rename(&self.tmp, &self.target)?;
        let t = self.target.clone();
        self.tmp = PathBuf::new();
        Ok(t)
    }
}

impl Drop for ArtifactDir {
    fn drop(&mut self) {
        if !self.tmp.as_os_str().is_empty() {
            let _ = fs::remove_dir_all(&self.tmp);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::C64;

    #[test]
    fn binary_round_trip() {
        let d = tempfile::tempdir().unwrap();
        let g = GridSpec::new(16).unwrap();
        let u = ComplexField::from_fn(g, |x| C64::new(x.cos(), x.sin() * 0.5));
        let p = d.path().join("u.bin");
        write_field_bin(&p, "u", &u).unwrap();
        let (h, cols) = read_bin(&p).unwrap();
        assert_eq!(h.n, 16);
        assert_eq!(h.name, "u");
        for (j, z) in u.samples().iter().enumerate() {
            assert_eq!(cols[0][j], z.re);
            assert_eq!(cols[1][j], z.im);
        }
        fs::write(&p, b"nonsense").unwrap();
        assert!(read_bin(&p).is_err());
    }

    #[test]
    fn table_round_trip() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("t.csv");
        let rows = vec![vec![1.0, 0.1], vec![2.0, 1e-300]];
        write_table(&p, &["a", "b"], &rows).unwrap();
        let (h, back) = read_table(&p).unwrap();
        assert_eq!(h, vec!["a", "b"]);
        assert_eq!(back, rows);
        assert!(write_table(&p, &["a"], &rows).is_err());
    }

    #[test]
    fn artifact_appears_only_when_finished() {
        let d = tempfile::tempdir().unwrap();
        let target = d.path().join("run");
        let mut a = ArtifactDir::create(&target).unwrap();
        write_fit_json(&a.file("fit.json"), &Fit { slope: 0.5, intercept: 0.0, r2: 1.0 }).unwrap();
        assert!(!target.exists());
        let m = Manifest {
            command: "test".into(),
            version: "0".into(),
            config: serde_json::json!({}),
            conventions: Conventions::default(),
            frame_constants: vec![],
            checks: vec![],
            files: vec![],
        };
        a.finish(m).unwrap();
        let m: Manifest = read_json(&target.join("manifest.json")).unwrap();
        assert_eq!(m.files, vec!["fit.json"]);
        let f: Fit = read_json(&target.join("fit.json")).unwrap();
        assert_eq!(f.slope, 0.5);
        // an abandoned run leaves nothing behind
        drop(ArtifactDir::create(&d.path().join("other")).unwrap());
        assert_eq!(fs::read_dir(d.path()).unwrap().count(), 1);
    }
}
