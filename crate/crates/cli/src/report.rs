//! Report files. Every CSV row and every JSON document starts with the
//! config hash and the crate version.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub struct Reporter {
    dir: PathBuf,
    hash: String,
    written: Vec<String>,
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    config_hash: &'a str,
    version: &'a str,
    #[serde(flatten)]
    data: &'a T,
}

impl Reporter {
    pub fn new(dir: &Path, hash: String) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.into(), source })?;
        Ok(Reporter { dir: dir.into(), hash, written: Vec::new() })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        let mut head = vec!["config_hash", "version"];
        head.extend_from_slice(header);
        w.write_record(&head)?;
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            let mut rec = vec![self.hash.clone(), VERSION.to_string()];
            rec.extend(row);
            w.write_record(&rec)?;
        }
        w.flush().map_err(|source| CliError::Write { path, source })?;
        self.written.push(name.into());
        Ok(())
    }

    /// Writes `data` with the stamp fields merged in; `data` must serialize
    /// as a map.
    pub fn json<T: Serialize>(&mut self, name: &str, data: &T) -> Result<()> {
        let doc = Stamped { config_hash: &self.hash, version: VERSION, data };
        let text = serde_json::to_string_pretty(&doc)? + "\n";
        self.text(name, &text)
    }

    pub fn text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, text).map_err(|source| CliError::Write { path, source })?;
        self.written.push(name.into());
        Ok(())
    }
}

/// Shortest round-trip form, so reruns compare byte for byte.
pub fn num(x: f64) -> String {
    format!("{x}")
}
