//! Binary caches for point sets (`FQPS`) and spectra (`FQSP`), each with a
//! key=value sidecar manifest carrying a SHA-256 of the binary.
//!
//! Layout, all little-endian:
//!
//! ```text
//! FQPS  magic[4] version:u16 dim:u16 count:u64  count×(x:f64 y:f64)  δ:f64 density:f64
//! FQSP  magic[4] version:u16 dim:u16 count:u64  count×(s1 s2 re im stderr:f64)  c0:f64 R:f64 N:f64
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::error::{FqError, Result};
use crate::spectral::{Spectrum, SpectrumEntry};
use crate::trigsys::Vec2;
use crate::zeroset::{EnumOptions, PointSet, PointSource};

pub const POINTS_MAGIC: [u8; 4] = *b"FQPS";
pub const SPECTRUM_MAGIC: [u8; 4] = *b"FQSP";
pub const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 16;

/// Version string recorded in manifests.
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

fn header(magic: [u8; 4], count: u64) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN);
    out.extend_from_slice(&magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
    out
}

/// Checks magic, version and dimension, and that the body holds exactly
/// `count` records of `record` bytes plus `trailer` bytes. Returns `count`.
fn check_header(bytes: &[u8], magic: [u8; 4], record: usize, trailer: usize) -> Result<usize> {
    if bytes.len() < HEADER_LEN {
        return Err(FqError::Format(format!("truncated header: {} bytes", bytes.len())));
    }
    if bytes[..4] != magic {
        return Err(FqError::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&bytes[..4]),
            String::from_utf8_lossy(&magic)
        )));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(FqError::Format(format!("unsupported version {version}")));
    }
    let dim = u16::from_le_bytes([bytes[6], bytes[7]]);
    if dim != 2 {
        return Err(FqError::Format(format!("unsupported dimension {dim}")));
    }
    let count = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    let expected = usize::try_from(count)
        .ok()
        .and_then(|c| c.checked_mul(record))
        .and_then(|b| b.checked_add(HEADER_LEN + trailer))
        .ok_or_else(|| FqError::Format(format!("count {count} overflows")))?;
    if bytes.len() != expected {
        return Err(FqError::Format(format!("length {} does not match count {count}", bytes.len())));
    }
    Ok(count as usize)
}

fn read_f64s(bytes: &[u8]) -> impl Iterator<Item = f64> + '_ {
    bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
}

/// Decoded `FQPS` payload.
#[derive(Debug, Clone, PartialEq)]
pub struct RawPoints {
    pub points: Vec<Vec2>,
    pub separation: f64,
    pub density: f64,
}

pub fn encode_points(ps: &PointSet) -> Vec<u8> {
    let mut out = header(POINTS_MAGIC, ps.len() as u64);
    out.reserve(16 * ps.len() + 16);
    for p in ps.points() {
        out.extend_from_slice(&p[0].to_le_bytes());
        out.extend_from_slice(&p[1].to_le_bytes());
    }
    out.extend_from_slice(&ps.separation().to_le_bytes());
    out.extend_from_slice(&ps.density().to_le_bytes());
    out
}

pub fn decode_points(bytes: &[u8]) -> Result<RawPoints> {
    let count = check_header(bytes, POINTS_MAGIC, 16, 16)?;
    let body = &bytes[HEADER_LEN..];
    let mut vals = read_f64s(body);
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let p = [vals.next().expect("sized"), vals.next().expect("sized")];
        if !(p[0].is_finite() && p[1].is_finite()) {
            return Err(FqError::Format("non-finite coordinate".into()));
        }
        points.push(p);
    }
    let separation = vals.next().expect("sized");
    let density = vals.next().expect("sized");
    if !(separation > 0.0) || !(density >= 0.0 && density.is_finite()) {
        return Err(FqError::Format(format!("invalid trailer δ={separation}, density={density}")));
    }
    Ok(RawPoints { points, separation, density })
}

pub fn encode_spectrum(spec: &Spectrum) -> Vec<u8> {
    let mut out = header(SPECTRUM_MAGIC, spec.entries.len() as u64);
    for e in &spec.entries {
        for v in [e.s[0], e.s[1], e.c.re, e.c.im, e.stderr] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let rank = spec.growth_rank.map_or(f64::NAN, |n| n as f64);
    for v in [spec.c0, spec.estimation_radius, rank] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_spectrum(bytes: &[u8]) -> Result<Spectrum> {
    let count = check_header(bytes, SPECTRUM_MAGIC, 40, 24)?;
    let vals: Vec<f64> = read_f64s(&bytes[HEADER_LEN..]).collect();
    let mut entries = Vec::with_capacity(count);
    for rec in vals[..5 * count].chunks_exact(5) {
        if rec.iter().any(|v| !v.is_finite()) || rec[4] < 0.0 {
            return Err(FqError::Format("invalid spectrum record".into()));
        }
        entries.push(SpectrumEntry { s: [rec[0], rec[1]], c: Complex64::new(rec[2], rec[3]), stderr: rec[4] });
    }
    let (c0, radius, rank) = (vals[5 * count], vals[5 * count + 1], vals[5 * count + 2]);
    if !(c0.is_finite() && radius > 0.0 && radius.is_finite()) {
        return Err(FqError::Format(format!("invalid trailer c0={c0}, R={radius}")));
    }
    let growth_rank = if rank.is_nan() {
        None
    } else if rank >= 0.0 && rank <= 64.0 && rank.fract() == 0.0 {
        Some(rank as u32)
    } else {
        return Err(FqError::Format(format!("invalid growth rank {rank}")));
    };
    Spectrum::new(entries, c0, radius, growth_rank)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Flat `key=value` text; blank lines and `#` comments are ignored.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| FqError::Format(format!("line {}: expected key=value", no + 1)))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(FqError::Format(format!("line {}: empty key", no + 1)));
        }
        if map.insert(k.to_string(), v.trim().to_string()).is_some() {
            return Err(FqError::Format(format!("line {}: duplicate key {k}", no + 1)));
        }
    }
    Ok(map)
}

pub fn render_key_values(map: &BTreeMap<String, String>) -> String {
    map.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

pub fn manifest_path(bin: &Path) -> PathBuf {
    let mut name = bin.as_os_str().to_owned();
    name.push(".manifest");
    PathBuf::from(name)
}

fn required<'a>(map: &'a BTreeMap<String, String>, key: &str) -> Result<&'a str> {
    map.get(key).map(String::as_str).ok_or_else(|| FqError::Format(format!("manifest lacks {key}")))
}

fn required_f64(map: &BTreeMap<String, String>, key: &str) -> Result<f64> {
    required(map, key)?.parse().map_err(|_| FqError::Format(format!("manifest {key} is not a number")))
}

/// Writes `path` and its manifest. Returns the checksum.
pub fn write_point_cache(path: &Path, ps: &PointSet, opts: &EnumOptions) -> Result<String> {
    let bytes = encode_points(ps);
    let sum = sha256_hex(&bytes);
    let mut m = BTreeMap::new();
    m.insert("kind".into(), "points".into());
    m.insert("system".into(), ps.source.name.clone());
    m.insert("radius".into(), format!("{}", ps.source.radius));
    m.insert("grid_step".into(), format!("{}", opts.grid_step));
    m.insert("dedup_radius".into(), format!("{}", opts.dedup_radius));
    m.insert("residual_tol".into(), format!("{}", opts.residual_tol));
    m.insert("newton_iters".into(), format!("{}", opts.newton_iters));
    m.insert("count".into(), format!("{}", ps.len()));
    m.insert("code_version".into(), CODE_VERSION.into());
    m.insert("sha256".into(), sum.clone());
    fs::write(path, &bytes)?;
    fs::write(manifest_path(path), render_key_values(&m))?;
    Ok(sum)
}

/// Reads a point cache, verifying the manifest checksum.
pub fn read_point_cache(path: &Path) -> Result<(PointSet, String)> {
    let bytes = fs::read(path)?;
    let manifest = parse_key_values(&fs::read_to_string(manifest_path(path))?)?;
    let expected = required(&manifest, "sha256")?;
    let found = sha256_hex(&bytes);
    if found != expected {
        return Err(FqError::Checksum { expected: expected.to_string(), found });
    }
    let raw = decode_points(&bytes)?;
    let source = PointSource {
        name: required(&manifest, "system")?.to_string(),
        radius: required_f64(&manifest, "radius")?,
        grid_step: required_f64(&manifest, "grid_step")?,
    };
    Ok((PointSet::assemble(raw.points, raw.separation, source), found))
}

pub fn write_spectrum_cache(path: &Path, spec: &Spectrum, system: &str) -> Result<String> {
    let bytes = encode_spectrum(spec);
    let sum = sha256_hex(&bytes);
    let mut m = BTreeMap::new();
    m.insert("kind".into(), "spectrum".into());
    m.insert("system".into(), system.to_string());
    m.insert("entries".into(), format!("{}", spec.entries.len()));
    m.insert("code_version".into(), CODE_VERSION.into());
    m.insert("sha256".into(), sum.clone());
    fs::write(path, &bytes)?;
    fs::write(manifest_path(path), render_key_values(&m))?;
    Ok(sum)
}

pub fn read_spectrum_cache(path: &Path) -> Result<Spectrum> {
    let bytes = fs::read(path)?;
    let manifest = parse_key_values(&fs::read_to_string(manifest_path(path))?)?;
    let expected = required(&manifest, "sha256")?;
    let found = sha256_hex(&bytes);
    if found != expected {
        return Err(FqError::Checksum { expected: expected.to_string(), found });
    }
    decode_spectrum(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trigsys::builtin;
    use crate::zeroset::enumerate_disk;

    fn lattice_set() -> PointSet {
        enumerate_disk(&builtin("lattice").unwrap(), 5.0, &EnumOptions::default()).unwrap()
    }

    #[test]
    fn points_round_trip() {
        let ps = lattice_set();
        let raw = decode_points(&encode_points(&ps)).unwrap();
        assert_eq!(raw.points, ps.points());
        assert_eq!(raw.separation, ps.separation());
        assert_eq!(raw.density, ps.density());
    }

    #[test]
    fn header_layout() {
        let bytes = encode_points(&lattice_set());
        assert_eq!(&bytes[..4], b"FQPS");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
        assert_eq!(u16::from_le_bytes([bytes[6], bytes[7]]), 2);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 81);
        assert_eq!(bytes.len(), 16 + 81 * 16 + 16);
    }

    #[test]
    fn rejects_malformed() {
        let bytes = encode_points(&lattice_set());
        assert!(decode_points(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_points(&bad).is_err());
        let mut huge = bytes.clone();
        huge[8..16].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(decode_points(&huge).is_err());
        assert!(decode_points(&[]).is_err());
    }

    #[test]
    fn checksum_detects_flipped_byte() {
        let dir = std::env::temp_dir().join(format!("fq-cache-test-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("lattice.fqps");
        let ps = lattice_set();
        let sum = write_point_cache(&path, &ps, &EnumOptions::default()).unwrap();
        let (back, found) = read_point_cache(&path).unwrap();
        assert_eq!(found, sum);
        assert_eq!(back.radii_sorted(), ps.radii_sorted());
        let mut bytes = fs::read(&path).unwrap();
        bytes[40] ^= 0x01;
        fs::write(&path, bytes).unwrap();
        assert!(matches!(read_point_cache(&path), Err(FqError::Checksum { .. })));
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn key_values() {
        let m = parse_key_values("# c\n a = 1 \n\nb=x=y\n").unwrap();
        assert_eq!(m["a"], "1");
        assert_eq!(m["b"], "x=y");
        assert!(parse_key_values("novalue").is_err());
        assert!(parse_key_values("a=1\na=2").is_err());
        assert_eq!(parse_key_values(&render_key_values(&m)).unwrap(), m);
    }
}
