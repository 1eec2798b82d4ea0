//! Run configuration: flags, config files and defaults.

use std::path::PathBuf;
use std::str::FromStr;

use clap::Args;

use crate::capacity::AdaptiveScheme;
use crate::distribution::SeriesControl;
use crate::{db_to_linear, linear_to_db};

use super::CliError;

pub const DEFAULT_K_FACTOR: f64 = 2.0;
pub const DEFAULT_MEAN_SNR: f64 = 5.0;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_VALIDATE_SAMPLES: usize = 1_000_000;
pub const MIN_VALIDATE_SAMPLES: usize = 100_000;
pub const DEFAULT_DIST_SWEEP: &str = "0:20:200";

/// Options shared by every subcommand. Every field is optional so that flags
/// can be layered over a config file.
#[derive(Debug, Clone, Default, PartialEq, Args)]
pub struct Flags {
    /// Rician K factor of the first hop
    #[arg(long)]
    pub kx: Option<f64>,
    /// Rician K factor of the second hop
    #[arg(long)]
    pub ky: Option<f64>,
    /// Mean SNR of the first hop (linear)
    #[arg(long)]
    pub snr_x: Option<f64>,
    /// Mean SNR of the second hop (linear)
    #[arg(long)]
    pub snr_y: Option<f64>,
    /// Mean SNR of the first hop (dB)
    #[arg(long, allow_hyphen_values = true)]
    pub snr_x_db: Option<f64>,
    /// Mean SNR of the second hop (dB)
    #[arg(long, allow_hyphen_values = true)]
    pub snr_y_db: Option<f64>,
    /// Grid as start:stop:points, with an optional :db suffix. For `dist` the
    /// grid is over γ; otherwise it sweeps the first hop's mean SNR and the
    /// second hop keeps its configured ratio to the first.
    #[arg(long, allow_hyphen_values = true)]
    pub sweep: Option<String>,
    /// ora, opra, tifr, all, or a comma-separated list
    #[arg(long)]
    pub scheme: Option<String>,
    /// Maximum series terms per hop
    #[arg(long)]
    pub terms: Option<usize>,
    /// Series truncation tolerance
    #[arg(long)]
    pub tol: Option<f64>,
    /// Monte Carlo sample count (0 disables simulation columns)
    #[arg(long)]
    pub mc_samples: Option<usize>,
    /// Monte Carlo seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// csv or json
    #[arg(long)]
    pub format: Option<String>,
    /// Output file (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat key = value file mirroring these flags
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Extra CDF columns truncated at these term counts, e.g. 5,10,20
    #[arg(long)]
    pub compare_terms: Option<String>,
    /// Bandwidth in Hz that capacity columns are multiplied by
    #[arg(long)]
    pub bandwidth: Option<f64>,
}

fn parse_value<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T, CliError> {
    value.parse().map_err(|_| {
        CliError::Config(format!(
            "config line {line}: cannot parse '{value}' for key '{key}'"
        ))
    })
}

impl Flags {
    /// Parse a flat `key = value` file. Keys are the long flag names with or
    /// without leading dashes; `_` and `-` are interchangeable; `#` starts a
    /// comment.
    pub fn from_config_text(text: &str) -> Result<Flags, CliError> {
        let mut f = Flags::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .or_else(|| content.split_once(char::is_whitespace))
                .ok_or_else(|| {
                    CliError::Config(format!(
                        "config line {line}: expected 'key = value', got '{content}'"
                    ))
                })?;
            let key = key
                .trim()
                .trim_start_matches('-')
                .replace('_', "-")
                .to_ascii_lowercase();
            let value = value.trim().trim_matches('"');
            match key.as_str() {
                "kx" => f.kx = Some(parse_value(&key, value, line)?),
                "ky" => f.ky = Some(parse_value(&key, value, line)?),
                "snr-x" => f.snr_x = Some(parse_value(&key, value, line)?),
                "snr-y" => f.snr_y = Some(parse_value(&key, value, line)?),
                "snr-x-db" => f.snr_x_db = Some(parse_value(&key, value, line)?),
                "snr-y-db" => f.snr_y_db = Some(parse_value(&key, value, line)?),
                "sweep" => f.sweep = Some(value.to_string()),
                "scheme" => f.scheme = Some(value.to_string()),
                "terms" => f.terms = Some(parse_value(&key, value, line)?),
                "tol" => f.tol = Some(parse_value(&key, value, line)?),
                "mc-samples" => f.mc_samples = Some(parse_value(&key, value, line)?),
                "seed" => f.seed = Some(parse_value(&key, value, line)?),
                "format" => f.format = Some(value.to_string()),
                "out" => f.out = Some(PathBuf::from(value)),
                "compare-terms" => f.compare_terms = Some(value.to_string()),
                "bandwidth" => f.bandwidth = Some(parse_value(&key, value, line)?),
                "config" => {
                    return Err(CliError::Config(format!(
                        "config line {line}: config files cannot include other config files"
                    )))
                }
                other => {
                    return Err(CliError::Config(format!(
                        "config line {line}: unknown key '{other}'"
                    )))
                }
            }
        }
        Ok(f)
    }

    /// Field-wise `self` over `lower`. A hop's mean SNR is taken as a unit:
    /// either form given in `self` hides both forms in `lower`.
    pub fn overlay(self, lower: Flags) -> Flags {
        let (snr_x, snr_x_db) = if self.snr_x.is_some() || self.snr_x_db.is_some() {
            (self.snr_x, self.snr_x_db)
        } else {
            (lower.snr_x, lower.snr_x_db)
        };
        let (snr_y, snr_y_db) = if self.snr_y.is_some() || self.snr_y_db.is_some() {
            (self.snr_y, self.snr_y_db)
        } else {
            (lower.snr_y, lower.snr_y_db)
        };
        Flags {
            kx: self.kx.or(lower.kx),
            ky: self.ky.or(lower.ky),
            snr_x,
            snr_y,
            snr_x_db,
            snr_y_db,
            sweep: self.sweep.or(lower.sweep),
            scheme: self.scheme.or(lower.scheme),
            terms: self.terms.or(lower.terms),
            tol: self.tol.or(lower.tol),
            mc_samples: self.mc_samples.or(lower.mc_samples),
            seed: self.seed.or(lower.seed),
            format: self.format.or(lower.format),
            out: self.out.or(lower.out),
            config: self.config.or(lower.config),
            compare_terms: self.compare_terms.or(lower.compare_terms),
            bandwidth: self.bandwidth.or(lower.bandwidth),
        }
    }

    /// Flags layered over the config file they name, if any.
    pub fn with_config_file(self) -> Result<Flags, CliError> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path).map_err(|e| {
            CliError::Config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        Ok(self.overlay(Flags::from_config_text(&text)?))
    }
}

/// The subcommand a configuration is resolved for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Dist,
    Capacity,
    Cutoff,
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(CliError::Config(format!(
                "unknown format '{other}' (expected csv or json)"
            ))),
        }
    }
}

/// One hop: K factor and linear mean SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopConfig {
    pub k_factor: f64,
    pub mean_snr: f64,
}

/// `start:stop:points[:db]`, evenly spaced in the stated unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub db: bool,
}

/// A sweep point in the unit it was requested in and in linear scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub nominal: f64,
    pub linear: f64,
}

impl SweepPoint {
    /// The point in dB.
    pub fn db(&self, sweep_in_db: bool) -> f64 {
        if sweep_in_db {
            self.nominal
        } else {
            linear_to_db(self.linear)
        }
    }
}

impl FromStr for SweepSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = |why: &str| {
            CliError::Config(format!(
                "invalid sweep '{s}': {why} (expected start:stop:points[:db])"
            ))
        };
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        if parts.len() != 3 && parts.len() != 4 {
            return Err(bad("wrong number of fields"));
        }
        let start: f64 = parts[0].parse().map_err(|_| bad("start is not a number"))?;
        let stop: f64 = parts[1].parse().map_err(|_| bad("stop is not a number"))?;
        let points: usize = parts[2]
            .parse()
            .map_err(|_| bad("points is not a positive integer"))?;
        let db = match parts.get(3) {
            None => false,
            Some(u) if u.eq_ignore_ascii_case("db") => true,
            Some(u) if u.eq_ignore_ascii_case("lin") || u.eq_ignore_ascii_case("linear") => false,
            Some(_) => return Err(bad("unit must be 'db'")),
        };
        if !start.is_finite() || !stop.is_finite() {
            return Err(bad("bounds must be finite"));
        }
        if points < 2 {
            return Err(bad("at least 2 points are required"));
        }
        if stop <= start {
            return Err(bad("stop must exceed start"));
        }
        Ok(SweepSpec {
            start,
            stop,
            points,
            db,
        })
    }
}

impl SweepSpec {
    pub fn values(&self) -> Vec<SweepPoint> {
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let nominal = if i + 1 == self.points {
                    self.stop
                } else {
                    self.start + step * i as f64
                };
                let linear = if self.db {
                    db_to_linear(nominal)
                } else {
                    nominal
                };
                SweepPoint { nominal, linear }
            })
            .collect()
    }
}

/// A fully resolved run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub hop_x: HopConfig,
    pub hop_y: HopConfig,
    pub schemes: Vec<AdaptiveScheme>,
    pub sweep: Option<SweepSpec>,
    pub control: SeriesControl,
    pub mc_samples: Option<usize>,
    pub seed: u64,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub compare_terms: Vec<usize>,
    pub bandwidth: f64,
}

fn parse_schemes(s: &str) -> Result<Vec<AdaptiveScheme>, CliError> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim) {
        if item.eq_ignore_ascii_case("all") {
            for sc in AdaptiveScheme::ALL {
                if !out.contains(&sc) {
                    out.push(sc);
                }
            }
            continue;
        }
        let sc: AdaptiveScheme = item
            .parse()
            .map_err(|e: crate::Error| CliError::Config(e.to_string()))?;
        if !out.contains(&sc) {
            out.push(sc);
        }
    }
    out.sort_by_key(|s| AdaptiveScheme::ALL.iter().position(|a| a == s));
    Ok(out)
}

fn resolve_hop(
    name: &str,
    k: Option<f64>,
    linear: Option<f64>,
    db: Option<f64>,
) -> Result<HopConfig, CliError> {
    let k_factor = k.unwrap_or(DEFAULT_K_FACTOR);
    if !(k_factor >= 0.0) || !k_factor.is_finite() {
        return Err(CliError::Config(format!(
            "K factor of hop {name} must be finite and nonnegative, got {k_factor}"
        )));
    }
    let mean_snr = match (linear, db) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(format!(
                "give exactly one of --snr-{name} and --snr-{name}-db"
            )))
        }
        (Some(v), None) => v,
        (None, Some(d)) => db_to_linear(d),
        (None, None) => DEFAULT_MEAN_SNR,
    };
    if !(mean_snr > 0.0) || !mean_snr.is_finite() {
        return Err(CliError::Config(format!(
            "mean SNR of hop {name} must be positive and finite, got {mean_snr}"
        )));
    }
    Ok(HopConfig { k_factor, mean_snr })
}

impl RunConfig {
    /// Resolve layered flags against the defaults for `command`.
    pub fn resolve(flags: &Flags, command: CommandKind) -> Result<RunConfig, CliError> {
        let hop_x = resolve_hop("x", flags.kx, flags.snr_x, flags.snr_x_db)?;
        let hop_y = resolve_hop("y", flags.ky, flags.snr_y, flags.snr_y_db)?;
        let schemes = parse_schemes(flags.scheme.as_deref().unwrap_or("all"))?;
        let sweep_text = match (&flags.sweep, command) {
            (Some(s), _) => Some(s.as_str()),
            (None, CommandKind::Dist) => Some(DEFAULT_DIST_SWEEP),
            (None, _) => None,
        };
        let sweep = sweep_text.map(str::parse::<SweepSpec>).transpose()?;
        if let Some(sw) = sweep {
            let values = sw.values();
            match command {
                CommandKind::Dist if values[0].linear < 0.0 => {
                    return Err(CliError::Config("the γ grid must be nonnegative".into()))
                }
                CommandKind::Dist => {}
                _ if !sw.db && values[0].linear <= 0.0 => {
                    return Err(CliError::Config(
                        "a linear mean-SNR sweep must start above zero; use the :db suffix for dB"
                            .into(),
                    ))
                }
                _ => {}
            }
        }
        let defaults = SeriesControl::default();
        let control = SeriesControl {
            tolerance: flags.tol.unwrap_or(defaults.tolerance),
            max_terms: flags.terms.unwrap_or(defaults.max_terms),
        };
        control
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        let validate = command == CommandKind::Validate;
        let mc_samples = match flags.mc_samples {
            Some(0) if validate => {
                return Err(CliError::Config(
                    "validate needs Monte Carlo samples".into(),
                ))
            }
            Some(0) => None,
            Some(n) => Some(n),
            None if validate => Some(DEFAULT_VALIDATE_SAMPLES),
            None => None,
        };
        if let Some(n) = mc_samples {
            let floor = if validate {
                MIN_VALIDATE_SAMPLES
            } else {
                crate::montecarlo::MIN_SAMPLES
            };
            if n < floor {
                return Err(CliError::Config(format!(
                    "--mc-samples must be at least {floor} for this command, got {n}"
                )));
            }
        }
        let format = flags.format.as_deref().unwrap_or("csv").parse()?;
        let mut compare_terms = Vec::new();
        if let Some(list) = &flags.compare_terms {
            for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let n: usize = item.parse().map_err(|_| {
                    CliError::Config(format!(
                        "--compare-terms entries must be positive integers, got '{item}'"
                    ))
                })?;
                if n == 0 {
                    return Err(CliError::Config(
                        "--compare-terms entries must be positive".into(),
                    ));
                }
                compare_terms.push(n);
            }
        }
        let bandwidth = flags.bandwidth.unwrap_or(1.0);
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(CliError::Config(format!(
                "--bandwidth must be positive, got {bandwidth}"
            )));
        }
        Ok(RunConfig {
            hop_x,
            hop_y,
            schemes,
            sweep,
            control,
            mc_samples,
            seed: flags.seed.unwrap_or(DEFAULT_SEED),
            format,
            out: flags.out.clone(),
            compare_terms,
            bandwidth,
        })
    }

    /// Hop pairs for each mean-SNR row. A sweep sets the first hop's mean SNR
    /// and scales the second to keep the configured ratio.
    pub fn snr_rows(&self) -> Vec<(f64, HopConfig, HopConfig)> {
        match self.sweep {
            None => vec![(linear_to_db(self.hop_x.mean_snr), self.hop_x, self.hop_y)],
            Some(sw) => {
                let ratio = self.hop_y.mean_snr / self.hop_x.mean_snr;
                sw.values()
                    .into_iter()
                    .map(|p| {
                        let x = HopConfig {
                            mean_snr: p.linear,
                            ..self.hop_x
                        };
                        let y = HopConfig {
                            mean_snr: p.linear * ratio,
                            ..self.hop_y
                        };
                        (p.db(sw.db), x, y)
                    })
                    .collect()
            }
        }
    }
}
