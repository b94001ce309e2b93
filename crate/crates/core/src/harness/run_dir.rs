use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::Table;
use crate::agent::{Checkpoint, CurvePoint, StepLog};
use crate::error::Result;

/// Redirects episode logs away from the run directory.
pub const LOG_DIR_ENV: &str = "CINE_RL_LOG_DIR";

/// Output directory of one run: `config.json`, `curve.csv`, `table.csv`,
/// `table.txt`, `checkpoint.bin` and `episodes.jsonl`.
#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
    log_dir: PathBuf,
}

impl RunDir {
    /// Creates the directory. Episode logs go to `$CINE_RL_LOG_DIR` when set.
    pub fn create(root: &Path) -> Result<Self> {
        let log_dir = std::env::var_os(LOG_DIR_ENV)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
            .unwrap_or_else(|| root.to_path_buf());
        Self::with_log_dir(root, &log_dir)
    }

    pub fn with_log_dir(root: &Path, log_dir: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        fs::create_dir_all(log_dir)?;
        Ok(Self {
            root: root.to_path_buf(),
            log_dir: log_dir.to_path_buf(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.root.join("checkpoint.bin")
    }

    pub fn episode_log_path(&self) -> PathBuf {
        self.log_dir.join("episodes.jsonl")
    }

    pub fn write_config<T: Serialize>(&self, config: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(config)?;
        text.push('\n');
        fs::write(self.root.join("config.json"), text)?;
        Ok(())
    }

    pub fn write_curve(&self, curve: &[CurvePoint]) -> Result<()> {
        let mut w = csv::Writer::from_path(self.root.join("curve.csv"))?;
        for p in curve {
            w.serialize(p)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_table(&self, table: &Table) -> Result<()> {
        fs::write(self.root.join("table.csv"), table.to_csv()?)?;
        fs::write(self.root.join("table.txt"), table.to_text())?;
        Ok(())
    }

    pub fn write_checkpoint(&self, ck: &Checkpoint) -> Result<()> {
        ck.save(&self.checkpoint_path())
    }

    pub fn episode_log(&self) -> Result<EpisodeLog> {
        Ok(EpisodeLog {
            out: BufWriter::new(File::create(self.episode_log_path())?),
        })
    }
}

/// JSON-lines writer, one record per time step.
pub struct EpisodeLog {
    out: BufWriter<File>,
}

impl EpisodeLog {
    pub fn append(&mut self, log: &StepLog) -> Result<()> {
        serde_json::to_writer(&mut self.out, log)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}
