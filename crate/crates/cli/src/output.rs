//! CSV emission: '#' comment lines (version, config hash, parameter echo), one header
//! row, comma-separated rows, LF endings. Files are written to a sibling temp file and
//! renamed into place.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// What produced an output file.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub command: &'static str,
    pub echo: Value,
    pub hash: String,
}

impl Provenance {
    pub fn new(command: &'static str, echo: Value) -> Self {
        let canonical = serde_json::to_string(&echo).expect("echo serializes");
        let hash = Sha256::digest(canonical.as_bytes()).iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        });
        Self { command, echo, hash }
    }

    /// The comment block alone, for files whose body comes from elsewhere.
    pub fn header(&self, notes: &[String]) -> String {
        let mut out = String::new();
        self.comments(&mut out, notes);
        out
    }

    fn comments(&self, out: &mut String, notes: &[String]) {
        let _ = writeln!(out, "# mofsim {} {}", mofsim_core::VERSION, self.command);
        let _ = writeln!(out, "# config-sha256: {}", self.hash);
        let _ = writeln!(out, "# params: {}", serde_json::to_string(&self.echo).expect("echo serializes"));
        for n in notes {
            let _ = writeln!(out, "# {n}");
        }
    }
}

pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub notes: Vec<String>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new(), notes: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, prov: &Provenance) -> String {
        let mut out = String::new();
        prov.comments(&mut out, &self.notes);
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    /// Two-column whitespace-separated file for gnuplot.
    pub fn render_pair(&self, prov: &Provenance, x: usize, y: usize) -> String {
        let mut out = String::new();
        prov.comments(&mut out, &self.notes);
        let _ = writeln!(out, "# {} {}", self.columns[x], self.columns[y]);
        for row in &self.rows {
            let _ = writeln!(out, "{} {}", row[x], row[y]);
        }
        out
    }
}

/// Write `contents` to `path` via a temp file and rename; `-` goes to stdout.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    if path.as_os_str() == "-" {
        std::io::stdout().write_all(contents.as_bytes())?;
        return Ok(());
    }
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let name = path.file_name().ok_or_else(|| CliError::Io(format!("{}: not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".partial");
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, contents).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        io(e)
    })
}

/// `<output>.echo.json` next to a file output; nothing for stdout.
pub fn write_echo(output: &Path, prov: &Provenance) -> Result<(), CliError> {
    if output.as_os_str() == "-" {
        return Ok(());
    }
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".echo.json");
    write_echo_at(&output.with_file_name(name), prov)
}

pub fn write_echo_at(path: &Path, prov: &Provenance) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(&prov.echo).expect("echo serializes");
    text.push('\n');
    write_atomic(path, &text)
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    Ok(dir.to_path_buf())
}
