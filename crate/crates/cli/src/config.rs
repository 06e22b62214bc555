use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::args::{CheckCommand, Cli, Command, Format, SolveCommand};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    CheckIdentities,
    CheckWave,
    CheckExtremal,
    SolveSphere,
    SolveHirzebruch,
    Report,
    Presets,
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    /// Structure (identities) or base (wave, extremal) preset.
    pub preset: Option<String>,
    /// Named expressions: `H`, `u`.
    pub expressions: BTreeMap<String, String>,
    pub points: usize,
    pub seed: u64,
    /// Overrides the per-check default when set.
    pub atol: Option<f64>,
    pub rtol: f64,
    pub grid: Option<usize>,
    pub h0: f64,
    pub table: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub per_point: bool,
}

impl RunConfig {
    pub fn new(task: Task) -> RunConfig {
        RunConfig {
            task,
            preset: None,
            expressions: BTreeMap::new(),
            points: 20,
            seed: 7,
            atol: None,
            rtol: 1e-8,
            grid: None,
            h0: 1.0,
            table: None,
            out: None,
            format: Format::Json,
            per_point: false,
        }
    }

    /// Defaults, then the config file, then flags.
    pub fn from_cli(cli: &Cli) -> Result<RunConfig, CliError> {
        let task = match &cli.command {
            Command::Check { what: CheckCommand::Identities(_) } => Task::CheckIdentities,
            Command::Check { what: CheckCommand::Wave(_) } => Task::CheckWave,
            Command::Check { what: CheckCommand::Extremal(_) } => Task::CheckExtremal,
            Command::Solve { what: SolveCommand::Sphere(_) } => Task::SolveSphere,
            Command::Solve { what: SolveCommand::Hirzebruch(_) } => Task::SolveHirzebruch,
            Command::Report => Task::Report,
            Command::Presets => Task::Presets,
        };
        let mut cfg = RunConfig::new(task);
        if let Some(path) = &cli.common.config {
            cfg.apply_file(path)?;
        }

        let c = &cli.common;
        set(&mut cfg.points, c.points);
        set(&mut cfg.seed, c.seed);
        if c.atol.is_some() {
            cfg.atol = c.atol;
        }
        set(&mut cfg.rtol, c.rtol);
        if c.out.is_some() {
            cfg.out = c.out.clone();
        }
        set(&mut cfg.format, c.format);
        cfg.per_point |= c.per_point || cfg.format == Format::Csv;

        let (preset, h, u, grid, h0, table) = match &cli.command {
            Command::Check { what: CheckCommand::Identities(a) } => {
                (a.structure.clone(), a.h.clone(), a.u.clone(), a.grid, a.h0, None)
            }
            Command::Check { what: CheckCommand::Wave(a) | CheckCommand::Extremal(a) } => {
                (a.base.clone(), a.h.clone(), a.u.clone(), None, None, None)
            }
            Command::Solve { what: SolveCommand::Sphere(a) } => (None, a.h.clone(), None, a.grid, None, a.table.clone()),
            Command::Solve { what: SolveCommand::Hirzebruch(a) } => (None, None, None, a.grid, a.h0, None),
            Command::Report | Command::Presets => (None, None, None, None, None, None),
        };
        if preset.is_some() {
            cfg.preset = preset;
        }
        if let Some(h) = h {
            cfg.expressions.insert("H".into(), h);
        }
        if let Some(u) = u {
            cfg.expressions.insert("u".into(), u);
        }
        if grid.is_some() {
            cfg.grid = grid;
        }
        set(&mut cfg.h0, h0);
        if table.is_some() {
            cfg.table = table;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `key = value` lines; `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", i + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| CliError::Config(format!("line {}: {key}: {what}", i + 1));
            match key {
                "points" => self.points = value.parse().map_err(|_| bad("expected an integer"))?,
                "seed" => self.seed = value.parse().map_err(|_| bad("expected an integer"))?,
                "tol" | "atol" => self.atol = Some(value.parse().map_err(|_| bad("expected a number"))?),
                "rtol" => self.rtol = value.parse().map_err(|_| bad("expected a number"))?,
                "grid" => self.grid = Some(value.parse().map_err(|_| bad("expected an integer"))?),
                "h0" => self.h0 = value.parse().map_err(|_| bad("expected a number"))?,
                "structure" | "base" | "preset" => self.preset = Some(value.to_string()),
                "H" | "u" => {
                    self.expressions.insert(key.to_string(), value.to_string());
                }
                "table" => self.table = Some(PathBuf::from(value)),
                "out" => self.out = Some(PathBuf::from(value)),
                "format" => {
                    self.format = match value {
                        "json" => Format::Json,
                        "csv" => Format::Csv,
                        _ => return Err(bad("expected json or csv")),
                    }
                }
                "per_point" => self.per_point = value.parse().map_err(|_| bad("expected true or false"))?,
                _ => return Err(CliError::Config(format!("line {}: unknown key `{key}`", i + 1))),
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.points == 0 {
            return Err(CliError::Config("points must be at least 1".into()));
        }
        if let Some(t) = self.atol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::Config(format!("tolerance must be positive, got {t}")));
            }
        }
        if !(self.rtol > 0.0 && self.rtol.is_finite()) {
            return Err(CliError::Config(format!("relative tolerance must be positive, got {}", self.rtol)));
        }
        Ok(())
    }

    /// The user tolerance, or the check's default.
    pub fn tol(&self, default: f64) -> f64 {
        self.atol.unwrap_or(default)
    }

    pub fn expression(&self, key: &str) -> Option<&str> {
        self.expressions.get(key).map(String::as_str)
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}
