//! Flat binary field container with a text sidecar.
//!
//! Layout (little endian): magic `VSFB`, `u32` version, `u32` dim, `u32` n,
//! `f64` period, `f64` dealias fraction, `u32` component count, then each
//! component's samples as row-major `f64`.

use std::fs;
use std::path::{Path, PathBuf};

use super::field::Field;
use super::grid::Grid;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"VSFB";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 8 + 8 + 4;

pub fn encode(components: &[&Field]) -> Result<Vec<u8>> {
    let Some(first) = components.first() else {
        return Err(Error::Format("no components to write".into()));
    };
    let grid = first.grid();
    if components.iter().any(|c| c.grid() != grid) {
        return Err(Error::GridMismatch);
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * grid.len() * components.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    out.extend_from_slice(&grid.period().to_le_bytes());
    out.extend_from_slice(&grid.dealias_fraction().to_le_bytes());
    out.extend_from_slice(&(components.len() as u32).to_le_bytes());
    for c in components {
        for v in c.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

fn read_f64(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"))
}

pub fn decode(bytes: &[u8]) -> Result<(Grid, Vec<Field>)> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing VSFB header".into()));
    }
    let version = read_u32(bytes, 4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dim = read_u32(bytes, 8) as usize;
    let n = read_u32(bytes, 12) as usize;
    let period = read_f64(bytes, 16);
    let frac = read_f64(bytes, 24);
    let count = read_u32(bytes, 32) as usize;
    let grid = Grid::with_params(dim, n, period, frac)?;
    let expected = HEADER_LEN + 8 * grid.len() * count;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "expected {expected} bytes, found {}",
            bytes.len()
        )));
    }
    let mut fields = Vec::with_capacity(count);
    let mut at = HEADER_LEN;
    for _ in 0..count {
        let values = (0..grid.len())
            .map(|i| read_f64(bytes, at + 8 * i))
            .collect();
        at += 8 * grid.len();
        fields.push(Field::from_values(&grid, values)?);
    }
    Ok((grid, fields))
}

/// Path of the text sidecar next to a field file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".meta");
    PathBuf::from(os)
}

/// Writes the binary file and its `.meta` sidecar; `labels` name the components.
pub fn write_fields(path: &Path, components: &[&Field], labels: &[&str]) -> Result<()> {
    let bytes = encode(components)?;
    fs::write(path, &bytes)?;
    let grid = components[0].grid();
    let mut meta = String::new();
    meta.push_str("format = VSFB\n");
    meta.push_str(&format!("version = {VERSION}\n"));
    meta.push_str(&format!("dim = {}\n", grid.dim()));
    meta.push_str(&format!("n = {}\n", grid.n()));
    meta.push_str(&format!("period = {:.16e}\n", grid.period()));
    meta.push_str(&format!("dealias_fraction = {:.16e}\n", grid.dealias_fraction()));
    meta.push_str(&format!("components = {}\n", components.len()));
    meta.push_str(&format!("labels = {}\n", labels.join(",")));
    fs::write(sidecar_path(path), meta)?;
    Ok(())
}

pub fn read_fields(path: &Path) -> Result<(Grid, Vec<Field>)> {
    decode(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_exact_round_trip() {
        let g = Grid::with_params(2, 16, 3.5, 0.5).unwrap();
        let a = Field::from_fn(&g, |x| (x[0] * 1.3).sin() + x[1]);
        let b = Field::from_fn(&g, |x| 1.0 / (1.0 + x[0] * x[1]));
        let bytes = encode(&[&a, &b]).unwrap();
        let (g2, fields) = decode(&bytes).unwrap();
        assert_eq!(g2, g);
        assert_eq!(fields[0], a);
        assert_eq!(fields[1], b);
        let again = encode(&[&fields[0], &fields[1]]).unwrap();
        assert_eq!(bytes, again);
    }

    #[test]
    fn rejects_truncated_payload() {
        let g = Grid::new(2, 16).unwrap();
        let bytes = encode(&[&Field::zeros(&g)]).unwrap();
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode(b"nope").is_err());
    }

    #[test]
    fn writes_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.bin");
        let g = Grid::new(2, 16).unwrap();
        write_fields(&p, &[&Field::constant(&g, 1.0)], &["a"]).unwrap();
        let meta = fs::read_to_string(sidecar_path(&p)).unwrap();
        assert!(meta.contains("labels = a"));
        let (_, f) = read_fields(&p).unwrap();
        assert_eq!(f[0].values()[3], 1.0);
    }
}
