//! Field files.
//!
//! Text: a `# dmsol-field radius=M` header, then one `site re im` line per
//! site in `-M..=M`, numbers in shortest round-trip form. Binary: the magic
//! `DMSOLF01`, the radius and the site count as little-endian `u64`, then
//! `(re, im)` pairs as little-endian `f64`. Both round-trip bit-exactly.

use std::fs;
use std::path::Path;

use dmsol_core::{Complex64, LatticeField};

pub const BINARY_MAGIC: &[u8; 8] = b"DMSOLF01";
const TEXT_HEADER: &str = "# dmsol-field radius=";

#[derive(Debug, thiserror::Error)]
pub enum FieldFileError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: line {line}: {message}")]
    Text { path: String, line: usize, message: String },
    #[error("{path}: {message}")]
    Binary { path: String, message: String },
}

pub fn field_to_text(f: &LatticeField) -> String {
    let mut out = format!("{TEXT_HEADER}{}\n", f.radius());
    for (x, z) in f.sites().zip(f.values()) {
        out.push_str(&format!("{x} {:e} {:e}\n", z.re, z.im));
    }
    out
}

pub fn field_from_text(text: &str, path: &str) -> Result<LatticeField, FieldFileError> {
    let err = |line: usize, message: String| FieldFileError::Text { path: path.into(), line, message };
    let mut lines = text.lines().enumerate();
    let radius: usize = match lines.next() {
        Some((_, h)) if h.starts_with(TEXT_HEADER) => {
            h[TEXT_HEADER.len()..].trim().parse().map_err(|e| err(1, format!("bad radius: {e}")))?
        }
        _ => return Err(err(1, format!("expected header `{TEXT_HEADER}M`"))),
    };
    let mut values = Vec::with_capacity(2 * radius + 1);
    let mut expected = -(radius as i64);
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 3 {
            return Err(err(line_no, format!("expected 3 columns, found {}", cols.len())));
        }
        let x: i64 = cols[0].parse().map_err(|e| err(line_no, format!("bad site: {e}")))?;
        if x != expected {
            return Err(err(line_no, format!("expected site {expected}, found {x}")));
        }
        let re: f64 = cols[1].parse().map_err(|e| err(line_no, format!("bad real part: {e}")))?;
        let im: f64 = cols[2].parse().map_err(|e| err(line_no, format!("bad imaginary part: {e}")))?;
        values.push(Complex64::new(re, im));
        expected += 1;
    }
    if values.len() != 2 * radius + 1 {
        return Err(err(text.lines().count(), format!("expected {} sites, found {}", 2 * radius + 1, values.len())));
    }
    LatticeField::from_values(radius, values).map_err(|e| err(1, e.to_string()))
}

pub fn field_to_bytes(f: &LatticeField) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + 16 * f.len());
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&(f.radius() as u64).to_le_bytes());
    out.extend_from_slice(&(f.len() as u64).to_le_bytes());
    for z in f.values() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

pub fn field_from_bytes(bytes: &[u8], path: &str) -> Result<LatticeField, FieldFileError> {
    let err = |message: String| FieldFileError::Binary { path: path.into(), message };
    if bytes.len() < 24 || &bytes[..8] != BINARY_MAGIC {
        return Err(err("missing DMSOLF01 header".into()));
    }
    let word = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().expect("8 bytes"));
    let radius = word(8) as usize;
    let len = word(16) as usize;
    if len != 2 * radius + 1 || bytes.len() != 24 + 16 * len {
        return Err(err(format!("radius {radius}, {len} sites and {} bytes disagree", bytes.len())));
    }
    let num = |i: usize| f64::from_le_bytes(bytes[i..i + 8].try_into().expect("8 bytes"));
    let values = (0..len).map(|k| Complex64::new(num(24 + 16 * k), num(32 + 16 * k))).collect();
    LatticeField::from_values(radius, values).map_err(|e| err(e.to_string()))
}

fn is_binary(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "bin")
}

/// Writes binary for `.bin` paths and text otherwise.
pub fn write_field(path: &Path, f: &LatticeField) -> Result<(), FieldFileError> {
    let bytes = if is_binary(path) { field_to_bytes(f) } else { field_to_text(f).into_bytes() };
    fs::write(path, bytes).map_err(|source| FieldFileError::Io { path: path.display().to_string(), source })
}

pub fn read_field(path: &Path) -> Result<LatticeField, FieldFileError> {
    let name = path.display().to_string();
    let bytes = fs::read(path).map_err(|source| FieldFileError::Io { path: name.clone(), source })?;
    if is_binary(path) {
        field_from_bytes(&bytes, &name)
    } else {
        let text = String::from_utf8(bytes).map_err(|e| FieldFileError::Text { path: name.clone(), line: 1, message: e.to_string() })?;
        field_from_text(&text, &name)
    }
}

/// Bitwise equality, so that `-0.0` and NaN payloads count.
pub fn same_bits(a: &LatticeField, b: &LatticeField) -> bool {
    a.radius() == b.radius()
        && a.values().iter().zip(b.values()).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits())
}
