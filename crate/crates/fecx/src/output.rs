//! Output directory with digests of everything written into it.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// `x` with 17 significant digits; empty for `None`, `nan`/`inf` spelled out.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x == 0.0 {
        "0".into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    /// Path relative to the output directory, `/`-separated.
    pub path: String,
    pub kind: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(OutputDir {
            root: root.to_owned(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    pub fn write_bytes(&mut self, name: &str, kind: &str, data: &[u8]) -> Result<()> {
        let path = self.root.join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let mut f = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        f.write_all(data)?;
        let digest = Sha256::digest(data);
        self.files.retain(|e| e.path != name);
        self.files.push(FileEntry {
            path: name.to_owned(),
            kind: kind.to_owned(),
            bytes: data.len() as u64,
            sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, kind: &str, value: &T) -> Result<()> {
        let mut data = serde_json::to_vec_pretty(value)?;
        data.push(b'\n');
        self.write_bytes(name, kind, &data)
    }

    /// CSV with a header row; every record must match the header length.
    pub fn write_csv(&mut self, name: &str, kind: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let data = w.into_inner().map_err(|e| anyhow::anyhow!("{}", e.error()))?;
        self.write_bytes(name, kind, &data)
    }

    /// One `row col value` line per entry, 0-based, in the order given.
    pub fn write_triples<I>(&mut self, name: &str, kind: &str, entries: I) -> Result<()>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut data = String::new();
        for (r, c, v) in entries {
            data.push_str(&format!("{r} {c} {}\n", num(v)));
        }
        self.write_bytes(name, kind, data.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            assert_eq!(s.split('e').next().unwrap().chars().filter(char::is_ascii_digit).count(), 17);
        }
        assert_eq!(num(0.0), "0");
        assert_eq!(opt(None), "");
    }

    #[test]
    fn digests_cover_written_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.write_csv("a.csv", "test", &["x", "y"], &[vec!["1".into(), "2".into()]]).unwrap();
        let data = fs::read(dir.path().join("a.csv")).unwrap();
        assert_eq!(data, b"x,y\n1,2\n");
        let e = &out.files()[0];
        assert_eq!(e.bytes, 8);
        let d: String = Sha256::digest(&data).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(e.sha256, d);
    }
}
