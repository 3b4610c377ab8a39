//! Serialization helpers: JSON with 17 significant digits and CSV cells.

use std::io;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::ser::Formatter;

use crate::error::{Error, Result};

/// Shortest-independent float rendering with 17 significant digits.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

struct Digits17;

impl Formatter for Digits17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{:.16e}", value as f64)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Digits17);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::invalid(format!("serialization failed: {e}")))?;
    out.push(b'\n');
    String::from_utf8(out).map_err(|e| Error::invalid(e.to_string()))
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "output path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, |x| x.len());
    if r == 0 || c == 0 || rows.iter().any(|x| x.len() != c) {
        return Err(Error::invalid("matrix rows must be nonempty and of equal length"));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}
