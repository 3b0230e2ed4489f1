use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sunshadow::PhysParams;
use thiserror::Error;

/// Version of the CSV and JSON layouts written by the tool.
pub const SCHEMA_VERSION: u32 = 1;

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Module(#[from] sunshadow::Error),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type CliResult<T> = Result<T, CliError>;

/// Contents of a `--config` file. Every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub params: Option<PhysParams>,
    pub seed: Option<u64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::ConfigInvalid(format!("{}: {e}", path.display())))
    }
}

/// Physical constants that may be given on the command line.
#[derive(Debug, Default, Clone, Copy)]
pub struct ParamFlags {
    pub mu: Option<f64>,
    pub f: Option<f64>,
    pub r: Option<f64>,
    pub r_escape: Option<f64>,
}

/// Fully resolved configuration of one run, echoed into every artifact.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub tool: String,
    pub schema: u32,
    pub command: String,
    pub params: PhysParams,
    pub seed: u64,
    pub args: Value,
}

impl RunConfig {
    /// Config file values first, then flags on top; validated before use.
    pub fn resolve(
        file: Option<ConfigFile>,
        flags: ParamFlags,
        seed: Option<u64>,
        command: &str,
        args: Value,
    ) -> CliResult<Self> {
        let file = file.unwrap_or_default();
        let mut params = file.params.unwrap_or_default();
        if let Some(mu) = flags.mu {
            params.mu = mu;
        }
        if let Some(f) = flags.f {
            params.f = f;
        }
        if let Some(r) = flags.r {
            params.r = r;
        }
        if flags.r_escape.is_some() {
            params.r_escape = flags.r_escape;
        }
        params
            .validate()
            .map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        Ok(Self {
            tool: format!("ssmap {}", env!("CARGO_PKG_VERSION")),
            schema: SCHEMA_VERSION,
            command: command.to_string(),
            params,
            seed: seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            args,
        })
    }
}

/// Destination of an artifact: a file or standard output.
pub fn sink(out: Option<&PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Writes `{"config": ..., "result": ...}`.
pub fn write_json<T: Serialize>(cfg: &RunConfig, result: &T, out: Option<&PathBuf>) -> CliResult<()> {
    #[derive(Serialize)]
    struct Artifact<'a, T> {
        config: &'a RunConfig,
        result: &'a T,
    }
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, &Artifact { config: cfg, result })?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Writes a `# config: {...}` comment line followed by the CSV body.
pub fn write_csv<F>(cfg: &RunConfig, out: Option<&PathBuf>, body: F) -> CliResult<()>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let mut w = sink(out)?;
    writeln!(w, "# config: {}", serde_json::to_string(cfg)?)?;
    body(&mut w)?;
    w.flush()?;
    Ok(())
}
