//! CSV writing with a stable schema: header row, fixed column order, floats
//! with 17 significant digits.

use anyhow::{Context, Result};
use std::io::Write;
use std::path::{Path, PathBuf};

/// Format a float with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct CsvWriter {
    file: std::io::BufWriter<std::fs::File>,
    path: PathBuf,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &str) -> Result<Self> {
        let file = std::fs::File::create(path)
            .with_context(|| format!("cannot write output file {}", path.display()))?;
        let mut writer = CsvWriter {
            file: std::io::BufWriter::new(file),
            path: path.to_path_buf(),
        };
        writer.raw_row(header)?;
        Ok(writer)
    }

    pub fn raw_row(&mut self, row: &str) -> Result<()> {
        writeln!(self.file, "{row}").with_context(|| format!("writing {}", self.path.display()))
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        self.file.flush().context("flushing output")?;
        Ok(self.path)
    }
}

/// Resolve the output path: explicit flag, else $QPOISSON_OUTPUT_DIR/<name>,
/// else ./<name>.
pub fn resolve_output(out: Option<PathBuf>, default_name: &str) -> PathBuf {
    match out {
        Some(path) => path,
        None => match std::env::var_os("QPOISSON_OUTPUT_DIR") {
            Some(dir) => PathBuf::from(dir).join(default_name),
            None => PathBuf::from(default_name),
        },
    }
}
