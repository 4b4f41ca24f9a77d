//! Run directories and logging.

use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use anyhow::{Context, Result};

use crate::config::RunConfig;

static LOG_FILE: Mutex<Option<File>> = Mutex::new(None);

/// Writes to stderr and, once a run directory exists, to its `run.log`.
struct Tee;

impl Write for Tee {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        io::stderr().write_all(buf)?;
        if let Some(f) = LOG_FILE.lock().unwrap().as_mut() {
            f.write_all(buf)?;
        }
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        if let Some(f) = LOG_FILE.lock().unwrap().as_mut() {
            f.flush()?;
        }
        io::stderr().flush()
    }
}

pub fn init_logging(level: log::LevelFilter) {
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .format_target(false)
        .target(env_logger::Target::Pipe(Box::new(Tee)))
        .init();
}

/// Output directory of one command: resolved config, log and artifacts.
pub struct RunDir {
    pub path: PathBuf,
    started: Instant,
}

impl RunDir {
    pub fn create(path: &Path, cfg: &RunConfig) -> Result<Self> {
        fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))?;
        let dir = RunDir { path: path.to_path_buf(), started: Instant::now() };
        dir.write("config.toml", cfg.to_toml())?;
        let log = File::create(path.join("run.log")).with_context(|| format!("creating log in {}", path.display()))?;
        *LOG_FILE.lock().unwrap() = Some(log);
        Ok(dir)
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let p = self.file(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&p, contents).with_context(|| format!("writing {}", p.display()))
    }

    /// Wall-clock time lives in this sidecar only, so every other artifact
    /// stays byte-identical across reruns.
    pub fn finish(&self) -> Result<()> {
        let secs = self.started.elapsed().as_secs_f64();
        self.write("timing.json", serde_json::json!({ "seconds": secs }).to_string())?;
        log::info!("outputs in {} ({secs:.1}s)", self.path.display());
        Ok(())
    }
}
