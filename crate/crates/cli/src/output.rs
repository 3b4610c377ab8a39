//! CSV rendering (header row, `,` separator, LF endings) and output paths.

use std::path::{Path, PathBuf};

use mixfeed::io::format_float;

pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[String]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Csv { text }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn floats(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|&v| format_float(v)).collect();
        self.row(&cells);
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

/// `dir/stem<suffix>` with the original extension (or `.csv`).
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path
        .extension()
        .map(|e| e.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}
