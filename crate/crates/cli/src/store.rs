use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use mcf_core::io::Manifest;
use mcf_core::Error;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::exit::Failure;

const MANIFEST: &str = "manifest.json";
const PROGRESS: &str = "progress.jsonl";

#[derive(Serialize, Deserialize)]
struct Line<T> {
    cell: String,
    result: T,
}

/// Per-cell results of a sweep, appended to `progress.jsonl` as each cell
/// finishes. Reopening a directory holding the same configuration skips
/// the recorded cells; a different configuration is refused.
pub struct CellStore<T> {
    dir: PathBuf,
    manifest: Manifest,
    done: BTreeMap<String, T>,
    log: File,
}

impl<T: Serialize + DeserializeOwned + Clone> CellStore<T> {
    pub fn open<C: Serialize>(
        dir: &Path,
        command: &str,
        seed: u64,
        config: &C,
    ) -> Result<Self, Failure> {
        fs::create_dir_all(dir)?;
        let fresh = Manifest::new(command, seed, config)?;
        let manifest_path = dir.join(MANIFEST);
        let manifest = if manifest_path.exists() {
            let old = Manifest::read(&manifest_path)?;
            if old.command != fresh.command
                || old.config_hash != fresh.config_hash
                || old.seed != fresh.seed
            {
                return Err(Error::ConfigMismatch(format!(
                    "{} holds a different run; use a fresh output directory",
                    dir.display()
                ))
                .into());
            }
            old
        } else {
            fresh.write(&manifest_path)?;
            fresh
        };
        let mut done = BTreeMap::new();
        let progress = dir.join(PROGRESS);
        if progress.exists() {
            for (i, line) in BufReader::new(File::open(&progress)?).lines().enumerate() {
                let line = line?;
                match serde_json::from_str::<Line<T>>(&line) {
                    Ok(l) => {
                        done.insert(l.cell, l.result);
                    }
                    // A run killed mid-write leaves a truncated last line.
                    Err(e) => log::warn!("ignoring unreadable progress line {}: {e}", i + 1),
                }
            }
        }
        if !done.is_empty() {
            log::info!("resuming: {} cells already complete", done.len());
        }
        let log = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&progress)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
            done,
            log,
        })
    }

    pub fn get(&self, cell: &str) -> Option<&T> {
        self.done.get(cell)
    }

    pub fn record(&mut self, cell: &str, result: &T) -> Result<(), Failure> {
        let line = serde_json::to_string(&Line {
            cell: cell.to_string(),
            result,
        })?;
        writeln!(self.log, "{line}")?;
        self.log.flush()?;
        self.done.insert(cell.to_string(), result.clone());
        Ok(())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Hashes the listed output files into the manifest.
    pub fn finish(mut self, files: &[&str]) -> Result<(), Failure> {
        for f in files {
            self.manifest.record_file(&self.dir, f)?;
        }
        self.manifest.write(&self.dir.join(MANIFEST))?;
        Ok(())
    }
}
