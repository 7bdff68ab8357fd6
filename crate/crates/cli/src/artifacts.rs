//! Output directory with CSV, JSON and SVG files.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Failure;
use crate::svg::Plot;

pub struct Artifacts {
    dir: PathBuf,
    pub written: Vec<String>,
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}

impl Artifacts {
    pub fn new(dir: &Path) -> Result<Self, Failure> {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Config(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), written: vec![] })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn text(&mut self, name: &str, content: &str) -> Result<(), Failure> {
        let path = self.dir.join(name);
        std::fs::write(&path, content).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// RFC 4180 CSV with a header row.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), Failure> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(vec![]);
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        let bytes = w.into_inner().map_err(|e| Failure::Config(format!("csv: {e}")))?;
        self.text(name, &String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), Failure> {
        let s = serde_json::to_string_pretty(value).map_err(|e| Failure::Config(format!("json: {e}")))?;
        self.text(name, &(s + "\n"))
    }

    pub fn svg(&mut self, name: &str, plot: &Plot) -> Result<(), Failure> {
        self.text(name, &plot.render())
    }
}
