//! Binary and CSV persistence of sample pools.
//!
//! Layout: 8-byte magic `TAILPOOL`, `u32` format version, `u32` metadata
//! length (all little endian), the JSON metadata block, then `count`
//! little-endian `f64` values.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PoolKind, SamplePool};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"TAILPOOL";
pub const FORMAT_VERSION: u32 = 1;

/// JSON metadata block of a pool file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolMetadata {
    pub kind: PoolKind,
    pub generation: u32,
    pub law_fingerprint: String,
    pub seed_lineage: Vec<String>,
    pub count: u64,
}

pub fn write_pool_to<W: Write>(pool: &SamplePool, mut out: W) -> Result<()> {
    let meta = PoolMetadata {
        kind: pool.kind(),
        generation: pool.generation(),
        law_fingerprint: pool.law_fingerprint().to_string(),
        seed_lineage: pool.seed_lineage().to_vec(),
        count: pool.len() as u64,
    };
    let meta = serde_json::to_vec(&meta)?;
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(meta.len() as u32).to_le_bytes())?;
    out.write_all(&meta)?;
    for v in pool.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_pool_from<R: Read>(mut input: R) -> Result<SamplePool> {
    let mut header = [0u8; 16];
    input
        .read_exact(&mut header)
        .map_err(|_| Error::PoolFormat("truncated header".into()))?;
    if &header[..8] != MAGIC {
        return Err(Error::PoolFormat("bad magic".into()));
    }
    let version = u32::from_le_bytes(header[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::PoolFormat(format!("unsupported version {version}")));
    }
    let meta_len = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let mut meta = vec![0u8; meta_len];
    input
        .read_exact(&mut meta)
        .map_err(|_| Error::PoolFormat("truncated metadata".into()))?;
    let meta: PoolMetadata = serde_json::from_slice(&meta)?;
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() as u64 != meta.count * 8 {
        return Err(Error::PoolFormat(format!(
            "metadata announces {} values, file holds {} bytes of data",
            meta.count,
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    SamplePool::new(
        values,
        meta.generation,
        meta.kind,
        meta.law_fingerprint,
        meta.seed_lineage,
    )
}

pub fn write_pool(pool: &SamplePool, path: impl AsRef<Path>) -> Result<()> {
    write_pool_to(pool, BufWriter::new(File::create(path)?))
}

pub fn read_pool(path: impl AsRef<Path>) -> Result<SamplePool> {
    read_pool_from(BufReader::new(File::open(path)?))
}

/// One value per line under a `value` header.
pub fn write_csv_to<W: Write>(values: &[f64], mut out: W) -> Result<()> {
    writeln!(out, "value")?;
    for v in values {
        writeln!(out, "{v}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_csv(values: &[f64], path: impl AsRef<Path>) -> Result<()> {
    write_csv_to(values, BufWriter::new(File::create(path)?))
}

/// Reads a single-column CSV with a `value` header.
pub fn read_csv_values<R: Read>(input: R) -> Result<Vec<f64>> {
    let mut text = String::new();
    BufReader::new(input).read_to_string(&mut text)?;
    let mut lines = text.lines();
    match lines.next().map(str::trim) {
        Some("value") => {}
        other => {
            return Err(Error::PoolFormat(format!(
                "expected header `value`, got {other:?}"
            )))
        }
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .map_err(|e| Error::PoolFormat(format!("line {}: {e}", i + 2)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool() -> SamplePool {
        SamplePool::new(
            vec![0.5, -1.25, 3e300, 1e-300],
            7,
            PoolKind::RPartial,
            "ab".repeat(32),
            vec!["q:01".into(), "evolve:02".into()],
        )
        .unwrap()
    }

    #[test]
    fn binary_round_trip() {
        let mut buf = Vec::new();
        write_pool_to(&pool(), &mut buf).unwrap();
        assert_eq!(&buf[..8], MAGIC);
        assert_eq!(read_pool_from(buf.as_slice()).unwrap(), pool());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.pool");
        write_pool(&pool(), &path).unwrap();
        assert_eq!(read_pool(&path).unwrap(), pool());
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let mut buf = Vec::new();
        write_pool_to(&pool(), &mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(
            read_pool_from(bad.as_slice()),
            Err(Error::PoolFormat(_))
        ));
        let truncated = &buf[..buf.len() - 3];
        assert!(matches!(
            read_pool_from(truncated),
            Err(Error::PoolFormat(_))
        ));
        let mut version = buf.clone();
        version[8] = 9;
        assert!(matches!(
            read_pool_from(version.as_slice()),
            Err(Error::PoolFormat(_))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let mut buf = Vec::new();
        write_csv_to(pool().values(), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("value\n0.5\n"));
        assert_eq!(read_csv_values(buf.as_slice()).unwrap(), pool().values());
        assert!(read_csv_values("x\n1\n".as_bytes()).is_err());
    }
}
