//! Artifact writing: CSV files with a commented config header and JSON
//! summaries that embed the config.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::CliError;

/// Floats in CSV output: 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Output {
    dir: PathBuf,
    command: &'static str,
    config: ExperimentConfig,
    written: Vec<PathBuf>,
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl Output {
    pub fn new(dir: PathBuf, command: &'static str, config: &ExperimentConfig) -> Result<Self, CliError> {
        std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        let mut config = config.clone();
        config.output = None;
        Ok(Output { dir, command, config, written: Vec::new() })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// Writes `name` with `# command`, `# config` and `# seed` lines followed
    /// by `body`.
    pub fn csv<F>(&mut self, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
    {
        let path = self.dir.join(name);
        let write = || -> std::io::Result<()> {
            let mut w = BufWriter::new(File::create(&path)?);
            writeln!(w, "# seedbank {}", self.command)?;
            writeln!(w, "# config: {}", serde_json::to_string(&self.config)?)?;
            match self.config.seed {
                Some(s) => writeln!(w, "# seed: {s}")?,
                None => writeln!(w, "# seed: none")?,
            }
            body(&mut w)?;
            w.flush()
        };
        write().map_err(|e| io_err(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    /// Writes `{"command", "config", "seed", "results"}` as pretty JSON.
    pub fn json<S: Serialize>(&mut self, name: &str, results: &S) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct Summary<'a, S> {
            command: &'a str,
            config: &'a ExperimentConfig,
            seed: Option<u64>,
            results: &'a S,
        }
        let path = self.dir.join(name);
        let summary = Summary { command: self.command, config: &self.config, seed: self.config.seed, results };
        let mut text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        self.written.push(path);
        Ok(())
    }
}
