//! Experiment configuration: a flat `key = value` text format with dotted
//! keys and `#` comments.
//!
//! ```text
//! # toxicity decay
//! params.rho = 0.2
//! grid.n = 256
//! sweep.epsilons = 1, 0.1, 0.01
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use crate::grid::Grid1D;
use crate::model::{ModelParams, TransitionPair};
use crate::trajectory::TimeGrid;

/// Configuration failures. The variant tells them apart; they all share the
/// process exit status for configuration errors.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {message}")]
    BadValue { key: String, message: String },
    #[error("invalid configuration: {0}")]
    Invariant(String),
}

impl ConfigError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairKind {
    #[default]
    Power,
    Holling,
    Saturation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub length: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSpec {
    pub t_final: f64,
    pub dt: f64,
    pub snapshot_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsSpec {
    pub p_norm: f64,
    pub zeta: f64,
    pub drop_preasymptotic: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Model constants; `epsilon` is overridden per sweep point.
    pub params: ModelParams,
    pub pair: TransitionPair,
    pub grid: GridSpec,
    pub time: TimeSpec,
    pub sweep: Vec<f64>,
    pub diagnostics: DiagnosticsSpec,
    pub seed: u64,
    pub output_dir: PathBuf,
}

/// `10^(-k/2)` for `k = 0..=7`.
pub fn default_sweep() -> Vec<f64> {
    (0..8).map(|k| 10f64.powf(-(k as f64) / 2.0)).collect()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            params: ModelParams::baseline(1.0),
            pair: TransitionPair::default(),
            grid: GridSpec {
                length: 1.0,
                n: 256,
            },
            time: TimeSpec {
                t_final: 5.0,
                dt: 1e-3,
                snapshot_count: 101,
            },
            sweep: default_sweep(),
            diagnostics: DiagnosticsSpec {
                p_norm: 2.0,
                zeta: 1.0,
                drop_preasymptotic: 1,
            },
            seed: 0,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn grid(&self) -> crate::Result<Grid1D> {
        Grid1D::new(self.grid.length, self.grid.n)
    }

    pub fn time_grid(&self) -> crate::Result<TimeGrid> {
        TimeGrid::uniform(self.time.t_final, self.time.dt, self.time.snapshot_count)
    }

    pub fn params_at(&self, epsilon: f64) -> ModelParams {
        self.params.with_epsilon(epsilon)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let inv = |e: crate::Error| ConfigError::Invariant(e.to_string());
        self.params.validate().map_err(inv)?;
        self.pair.validate().map_err(inv)?;
        self.grid().map_err(inv)?;
        if self.time.snapshot_count < 2 {
            return Err(ConfigError::Invariant(format!(
                "time.snapshot_count must be at least 2, got {}",
                self.time.snapshot_count
            )));
        }
        self.time_grid().map_err(inv)?;
        if self.sweep.is_empty() {
            return Err(ConfigError::Invariant(
                "sweep.epsilons must not be empty".into(),
            ));
        }
        if self.sweep.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(ConfigError::Invariant(
                "sweep.epsilons must all be positive".into(),
            ));
        }
        if self.sweep.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(ConfigError::Invariant(
                "sweep.epsilons must be strictly decreasing".into(),
            ));
        }
        if !(self.diagnostics.p_norm >= 1.0 && self.diagnostics.p_norm.is_finite()) {
            return Err(ConfigError::Invariant(format!(
                "diagnostics.p_norm must be a finite value >= 1, got {}",
                self.diagnostics.p_norm
            )));
        }
        if !(self.diagnostics.zeta > 0.0 && self.diagnostics.zeta.is_finite()) {
            return Err(ConfigError::Invariant(format!(
                "diagnostics.zeta must be positive, got {}",
                self.diagnostics.zeta
            )));
        }
        Ok(())
    }
}

/// Every key the format accepts.
pub const KNOWN_KEYS: &[&str] = &[
    "params.d_R1",
    "params.d_R2",
    "params.d_S",
    "params.gamma1",
    "params.gamma2",
    "params.eta1",
    "params.eta2",
    "params.mu",
    "params.rho",
    "params.R_hat",
    "pair.kind",
    "pair.p",
    "pair.q",
    "pair.a1",
    "pair.b1",
    "pair.c1",
    "pair.d1",
    "pair.a2",
    "pair.b2",
    "pair.c2",
    "pair.d2",
    "pair.S_hat",
    "grid.L",
    "grid.n",
    "time.T",
    "time.dt",
    "time.snapshot_count",
    "sweep.epsilons",
    "diagnostics.p_norm",
    "diagnostics.zeta",
    "diagnostics.drop_preasymptotic",
    "seed",
    "output_dir",
];

/// Pair coefficients collected before the variant is known.
#[derive(Debug, Clone)]
struct PairDraft {
    kind: PairKind,
    p: f64,
    q: f64,
    holling: [f64; 8],
    s_hat: f64,
}

impl PairDraft {
    fn from_pair(pair: &TransitionPair) -> Self {
        let mut draft = PairDraft {
            kind: PairKind::Power,
            p: 1.0,
            q: -1.0,
            holling: [1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0],
            s_hat: 1.0,
        };
        match *pair {
            TransitionPair::Power { p, q } => {
                draft.p = p;
                draft.q = q;
            }
            TransitionPair::Holling {
                a1,
                b1,
                c1,
                d1,
                a2,
                b2,
                c2,
                d2,
            } => {
                draft.kind = PairKind::Holling;
                draft.holling = [a1, b1, c1, d1, a2, b2, c2, d2];
            }
            TransitionPair::Saturation { s_hat } => {
                draft.kind = PairKind::Saturation;
                draft.s_hat = s_hat;
            }
        }
        draft
    }

    fn build(&self) -> TransitionPair {
        match self.kind {
            PairKind::Power => TransitionPair::Power {
                p: self.p,
                q: self.q,
            },
            PairKind::Holling => {
                let [a1, b1, c1, d1, a2, b2, c2, d2] = self.holling;
                TransitionPair::Holling {
                    a1,
                    b1,
                    c1,
                    d1,
                    a2,
                    b2,
                    c2,
                    d2,
                }
            }
            PairKind::Saturation => TransitionPair::Saturation { s_hat: self.s_hat },
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    value.parse::<f64>().map_err(|e| ConfigError::BadValue {
        key: key.into(),
        message: format!("`{value}` is not a number ({e})"),
    })
}

fn parse_usize(key: &str, value: &str) -> Result<usize, ConfigError> {
    value.parse::<usize>().map_err(|e| ConfigError::BadValue {
        key: key.into(),
        message: format!("`{value}` is not a nonnegative integer ({e})"),
    })
}

fn apply(
    cfg: &mut ExperimentConfig,
    pair: &mut PairDraft,
    key: &str,
    value: &str,
) -> Result<(), ConfigError> {
    let p = &mut cfg.params;
    let num = || parse_f64(key, value);
    match key {
        "params.d_R1" => p.d_r1 = num()?,
        "params.d_R2" => p.d_r2 = num()?,
        "params.d_S" => p.d_s = num()?,
        "params.gamma1" => p.gamma1 = num()?,
        "params.gamma2" => p.gamma2 = num()?,
        "params.eta1" => p.eta1 = num()?,
        "params.eta2" => p.eta2 = num()?,
        "params.mu" => p.mu = num()?,
        "params.rho" => p.rho = num()?,
        "params.R_hat" => p.r_hat = num()?,
        "pair.kind" => {
            pair.kind = match value.to_ascii_lowercase().as_str() {
                "power" => PairKind::Power,
                "holling" => PairKind::Holling,
                "saturation" => PairKind::Saturation,
                other => {
                    return Err(ConfigError::BadValue {
                        key: key.into(),
                        message: format!("expected power, holling or saturation, got `{other}`"),
                    })
                }
            }
        }
        "pair.p" => pair.p = num()?,
        "pair.q" => pair.q = num()?,
        "pair.a1" => pair.holling[0] = num()?,
        "pair.b1" => pair.holling[1] = num()?,
        "pair.c1" => pair.holling[2] = num()?,
        "pair.d1" => pair.holling[3] = num()?,
        "pair.a2" => pair.holling[4] = num()?,
        "pair.b2" => pair.holling[5] = num()?,
        "pair.c2" => pair.holling[6] = num()?,
        "pair.d2" => pair.holling[7] = num()?,
        "pair.S_hat" => pair.s_hat = num()?,
        "grid.L" => cfg.grid.length = num()?,
        "grid.n" => cfg.grid.n = parse_usize(key, value)?,
        "time.T" => cfg.time.t_final = num()?,
        "time.dt" => cfg.time.dt = num()?,
        "time.snapshot_count" => cfg.time.snapshot_count = parse_usize(key, value)?,
        "sweep.epsilons" => {
            cfg.sweep = value
                .split(',')
                .map(str::trim)
                .filter(|v| !v.is_empty())
                .map(|v| parse_f64(key, v))
                .collect::<Result<_, _>>()?
        }
        "diagnostics.p_norm" => cfg.diagnostics.p_norm = num()?,
        "diagnostics.zeta" => cfg.diagnostics.zeta = num()?,
        "diagnostics.drop_preasymptotic" => {
            cfg.diagnostics.drop_preasymptotic = parse_usize(key, value)?
        }
        "seed" => {
            cfg.seed = value.parse().map_err(|e| ConfigError::BadValue {
                key: key.into(),
                message: format!("`{value}` is not an unsigned integer ({e})"),
            })?
        }
        "output_dir" => cfg.output_dir = PathBuf::from(value),
        other => return Err(ConfigError::UnknownKey(other.into())),
    }
    Ok(())
}

fn split_assignment(text: &str) -> Option<(&str, &str)> {
    let (key, value) = text.split_once('=')?;
    let key = key.trim();
    let value = value.trim();
    if key.is_empty() {
        return None;
    }
    Some((key, value.trim_matches('"')))
}

/// Parses configuration text, then applies `key=value` overrides on top.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    let mut pair = PairDraft::from_pair(&cfg.pair);
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = split_assignment(line).ok_or_else(|| ConfigError::Parse {
            line: idx + 1,
            message: format!("expected `key = value`, got `{}`", raw.trim()),
        })?;
        apply(&mut cfg, &mut pair, key, value)?;
    }
    for item in overrides {
        let (key, value) = split_assignment(item).ok_or_else(|| ConfigError::Parse {
            line: 0,
            message: format!("override `{item}` is not of the form key=value"),
        })?;
        apply(&mut cfg, &mut pair, key, value)?;
    }
    cfg.pair = pair.build();
    cfg.validate()?;
    Ok(cfg)
}

/// Reads a configuration file (or uses defaults when `path` is `None`).
pub fn load_config(
    path: Option<&Path>,
    overrides: &[String],
) -> Result<ExperimentConfig, ConfigError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
            path: p.to_path_buf(),
            source,
        })?,
        None => String::new(),
    };
    parse_config(&text, overrides)
}

impl fmt::Display for ExperimentConfig {
    /// Renders the configuration in the file format, one key per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.params;
        writeln!(f, "params.d_R1 = {}", p.d_r1)?;
        writeln!(f, "params.d_R2 = {}", p.d_r2)?;
        writeln!(f, "params.d_S = {}", p.d_s)?;
        writeln!(f, "params.gamma1 = {}", p.gamma1)?;
        writeln!(f, "params.gamma2 = {}", p.gamma2)?;
        writeln!(f, "params.eta1 = {}", p.eta1)?;
        writeln!(f, "params.eta2 = {}", p.eta2)?;
        writeln!(f, "params.mu = {}", p.mu)?;
        writeln!(f, "params.rho = {}", p.rho)?;
        writeln!(f, "params.R_hat = {}", p.r_hat)?;
        match self.pair {
            TransitionPair::Power { p, q } => {
                writeln!(f, "pair.kind = power")?;
                writeln!(f, "pair.p = {p}")?;
                writeln!(f, "pair.q = {q}")?;
            }
            TransitionPair::Holling {
                a1,
                b1,
                c1,
                d1,
                a2,
                b2,
                c2,
                d2,
            } => {
                writeln!(f, "pair.kind = holling")?;
                for (k, v) in ["a1", "b1", "c1", "d1", "a2", "b2", "c2", "d2"]
                    .iter()
                    .zip([a1, b1, c1, d1, a2, b2, c2, d2])
                {
                    writeln!(f, "pair.{k} = {v}")?;
                }
            }
            TransitionPair::Saturation { s_hat } => {
                writeln!(f, "pair.kind = saturation")?;
                writeln!(f, "pair.S_hat = {s_hat}")?;
            }
        }
        writeln!(f, "grid.L = {}", self.grid.length)?;
        writeln!(f, "grid.n = {}", self.grid.n)?;
        writeln!(f, "time.T = {}", self.time.t_final)?;
        writeln!(f, "time.dt = {}", self.time.dt)?;
        writeln!(f, "time.snapshot_count = {}", self.time.snapshot_count)?;
        let eps: Vec<String> = self.sweep.iter().map(|e| format!("{e}")).collect();
        writeln!(f, "sweep.epsilons = {}", eps.join(", "))?;
        writeln!(f, "diagnostics.p_norm = {}", self.diagnostics.p_norm)?;
        writeln!(f, "diagnostics.zeta = {}", self.diagnostics.zeta)?;
        writeln!(
            f,
            "diagnostics.drop_preasymptotic = {}",
            self.diagnostics.drop_preasymptotic
        )?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "output_dir = {}", self.output_dir.display())
    }
}
