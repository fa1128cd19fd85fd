//! CSV and Markdown writers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;

/// 17 significant digits, round-trip exact.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        // normalises -0
        return format!("{:.16e}", 0.0);
    }
    format!("{x:.16e}")
}

/// Accumulates CSV rows in memory and writes them in one go.
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = header.join(",");
        buf.push('\n');
        Self { buf }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn write(self, dir: &Path, name: &str) -> Result<PathBuf> {
        write_file(dir, name, &self.buf)
    }
}

pub fn write_file(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, text)?;
    Ok(path)
}

/// Two-column Markdown table.
pub struct Summary {
    buf: String,
}

impl Summary {
    pub fn new(title: &str) -> Self {
        let mut buf = String::new();
        let _ = writeln!(buf, "# {title}\n\n| quantity | value |\n|---|---|");
        Self { buf }
    }

    pub fn item(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.buf, "| {key} | {value} |");
        self
    }

    pub fn note(&mut self, text: &str) -> &mut Self {
        let _ = writeln!(self.buf, "\n{text}");
        self
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        write_file(dir, "summary.md", &self.buf)
    }

    pub fn text(&self) -> &str {
        &self.buf
    }
}
