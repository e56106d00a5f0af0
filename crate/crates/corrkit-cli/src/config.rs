//! Global option resolution: defaults, then a config file, then flags.

use std::fmt;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

/// Marker for operator mistakes (bad flags, missing inputs); mapped to
/// exit code 2 instead of 1.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Usage(msg.into()))
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Seed for every randomized step.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// Worker threads for batch commands; 0 means one per core.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    /// Write inspection images next to the main outputs.
    #[arg(long, global = true)]
    pub emit_visuals: bool,

    /// File of `key = value` lines (seed, threads, emit_visuals);
    /// explicit flags win over the file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

/// Fully resolved global options.
#[derive(Debug, Clone, Copy)]
pub struct Config {
    pub seed: u64,
    pub threads: usize,
    pub emit_visuals: bool,
}

impl Default for Config {
    fn default() -> Self {
        Self { seed: 0, threads: 0, emit_visuals: false }
    }
}

impl Config {
    pub fn resolve(args: &GlobalArgs) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(path) = &args.config {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            cfg.apply_file(&text)?;
        }
        if let Some(seed) = args.seed {
            cfg.seed = seed;
        }
        if let Some(threads) = args.threads {
            cfg.threads = threads;
        }
        if args.emit_visuals {
            cfg.emit_visuals = true;
        }
        Ok(cfg)
    }

    fn apply_file(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(usage(format!("config line {}: expected key = value, got {raw:?}", n + 1)));
            };
            let (key, value) = (key.trim(), value.trim());
            let parse = |what: &str| usage(format!("config line {}: bad {what} value {value:?}", n + 1));
            match key {
                "seed" => self.seed = value.parse().map_err(|_| parse("seed"))?,
                "threads" => self.threads = value.parse().map_err(|_| parse("threads"))?,
                "emit_visuals" => self.emit_visuals = value.parse().map_err(|_| parse("emit_visuals"))?,
                _ => return Err(usage(format!("config line {}: unknown key {key:?}", n + 1))),
            }
        }
        Ok(())
    }

    /// Installs the bounded worker pool. Call once, before any parallel work.
    pub fn install_thread_pool(&self) -> Result<()> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build_global()
            .context("installing the worker pool")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(text: Option<&str>, args: &mut GlobalArgs) -> Result<Config> {
        let dir = tempfile::tempdir().unwrap();
        if let Some(text) = text {
            let path = dir.path().join("cfg");
            std::fs::write(&path, text).unwrap();
            args.config = Some(path);
        }
        Config::resolve(args)
    }

    fn no_args() -> GlobalArgs {
        GlobalArgs { seed: None, threads: None, emit_visuals: false, config: None }
    }

    #[test]
    fn flags_override_file_overrides_defaults() {
        let mut args = no_args();
        args.seed = Some(9);
        let cfg = resolve(Some("seed = 5\nthreads = 3\n# note\nemit_visuals = true"), &mut args).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.threads, 3);
        assert!(cfg.emit_visuals);
    }

    #[test]
    fn unknown_key_is_a_usage_error() {
        let err = resolve(Some("sede = 5"), &mut no_args()).unwrap_err();
        assert!(err.downcast_ref::<Usage>().is_some(), "{err}");
    }

    #[test]
    fn defaults_without_file() {
        let cfg = resolve(None, &mut no_args()).unwrap();
        assert_eq!((cfg.seed, cfg.threads, cfg.emit_visuals), (0, 0, false));
    }
}
