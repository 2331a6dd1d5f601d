//! Flat `key = value` experiment configuration files.
//!
//! ```text
//! # comment
//! experiment = velocity_curve
//! m = 100
//! theta = pi/4
//! phi_points = 64
//! ```
//!
//! One assignment per line; blank lines and lines starting with `#` are
//! ignored. Numeric values are decimal floats or integers; angles may also be
//! written as multiples of `pi` (`pi`, `pi/4`, `2*pi/3`, `0.5*pi`). Lists are
//! comma separated. Keys not understood by the chosen experiment are rejected.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use crate::experiments::{BlochParams, CrossoverParams, DensityParams, DriftParams, SboParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown experiment {0:?}; expected one of {list}", list = Experiment::names().join(", "))]
    UnknownExperiment(String),

    #[error("key {key:?} is not valid for experiment {experiment}")]
    UnknownKey {
        key: String,
        experiment: &'static str,
    },

    #[error("missing required key {0:?}")]
    MissingKey(&'static str),

    #[error("line {line}: key {key:?} assigned more than once")]
    DuplicateKey { key: String, line: usize },

    #[error("invalid value for {key:?}: {value} ({constraint})")]
    Domain {
        key: &'static str,
        value: String,
        constraint: &'static str,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    Bloch,
    Sbo,
    ResonantDrift,
    VelocityCurve,
    VelocityMap,
    CrossoverScan,
    Density,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Bloch,
        Experiment::Sbo,
        Experiment::ResonantDrift,
        Experiment::VelocityCurve,
        Experiment::VelocityMap,
        Experiment::CrossoverScan,
        Experiment::Density,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Bloch => "bloch",
            Experiment::Sbo => "sbo",
            Experiment::ResonantDrift => "resonant_drift",
            Experiment::VelocityCurve => "velocity_curve",
            Experiment::VelocityMap => "velocity_map",
            Experiment::CrossoverScan => "crossover_scan",
            Experiment::Density => "density",
        }
    }

    pub fn names() -> Vec<&'static str> {
        Self::ALL.iter().map(Experiment::name).collect()
    }

    pub fn description(&self) -> &'static str {
        match self {
            Experiment::Bloch => "static field only: Bloch-like oscillations, centroid spectrum",
            Experiment::Sbo => "slightly detuned harmonic drive: super-Bloch oscillations",
            Experiment::ResonantDrift => {
                "harmonic drive at the Bloch frequency: drift trace and velocity"
            }
            Experiment::VelocityCurve => "drift velocity versus harmonic phase, with drift-law fit",
            Experiment::VelocityMap => "drift velocity over a gate-angle by phase grid",
            Experiment::CrossoverScan => {
                "dominant centroid frequency versus detuning, crossover estimate"
            }
            Experiment::Density => {
                "probability density maps for the static, detuned and resonant fields"
            }
        }
    }

    /// Keys accepted in addition to `experiment`.
    pub fn keys(&self) -> &'static [&'static str] {
        match self {
            Experiment::Bloch => &["m", "theta", "n_sites", "steps", "density_stride"],
            Experiment::Sbo => &[
                "m",
                "theta",
                "phi",
                "detuning",
                "amplitude_ratio",
                "n_sites",
                "steps",
            ],
            Experiment::ResonantDrift => &[
                "m",
                "theta",
                "phi",
                "amplitude_ratio",
                "n_sites",
                "steps",
                "window_start",
                "window_end",
            ],
            Experiment::VelocityCurve => &[
                "m",
                "theta",
                "amplitude_ratio",
                "n_sites",
                "steps",
                "window_start",
                "window_end",
                "phi_points",
            ],
            Experiment::VelocityMap => &[
                "m",
                "amplitude_ratio",
                "n_sites",
                "steps",
                "window_start",
                "window_end",
                "phi_points",
                "theta_points",
                "thetas",
            ],
            Experiment::CrossoverScan => &[
                "m",
                "theta",
                "phi",
                "amplitude_ratio",
                "n_sites",
                "steps",
                "grid_points",
                "grid_lo",
                "grid_hi",
            ],
            Experiment::Density => &[
                "m", "theta", "phi", "detuning", "n_sites", "steps", "stride",
            ],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|e| e.name() == s)
            .ok_or_else(|| ConfigError::UnknownExperiment(s.to_string()))
    }
}

/// Validated experiment configuration with every default applied.
#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentConfig {
    Bloch(BlochParams),
    Sbo(SboParams),
    ResonantDrift(DriftParams),
    VelocityCurve {
        base: DriftParams,
        phi_points: usize,
    },
    VelocityMap {
        base: DriftParams,
        phi_points: usize,
        /// Gate angles; `theta_points` evenly spaced values unless listed.
        thetas: Vec<f64>,
    },
    CrossoverScan(CrossoverParams),
    Density(DensityParams),
}

impl ExperimentConfig {
    pub fn experiment(&self) -> Experiment {
        match self {
            ExperimentConfig::Bloch(_) => Experiment::Bloch,
            ExperimentConfig::Sbo(_) => Experiment::Sbo,
            ExperimentConfig::ResonantDrift(_) => Experiment::ResonantDrift,
            ExperimentConfig::VelocityCurve { .. } => Experiment::VelocityCurve,
            ExperimentConfig::VelocityMap { .. } => Experiment::VelocityMap,
            ExperimentConfig::CrossoverScan(_) => Experiment::CrossoverScan,
            ExperimentConfig::Density(_) => Experiment::Density,
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
    column: usize,
}

/// Raw key-value pairs with their source positions.
struct Table {
    entries: BTreeMap<String, Entry>,
}

impl Table {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let eq = raw.find('=').ok_or_else(|| ConfigError::Syntax {
                line,
                column: raw.len() - raw.trim_start().len() + 1,
                message: "expected `key = value`".into(),
            })?;
            let key = raw[..eq].trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(ConfigError::Syntax {
                    line,
                    column: raw.len() - raw.trim_start().len() + 1,
                    message: format!("invalid key {key:?}"),
                });
            }
            let after = &raw[eq + 1..];
            let value = after.trim();
            let column = eq + 2 + (after.len() - after.trim_start().len());
            if value.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    column,
                    message: format!("missing value for {key:?}"),
                });
            }
            let value = value.trim_matches('"').to_string();
            if entries.contains_key(key) {
                return Err(ConfigError::DuplicateKey {
                    key: key.into(),
                    line,
                });
            }
            entries.insert(
                key.to_string(),
                Entry {
                    value,
                    line,
                    column,
                },
            );
        }
        Ok(Self { entries })
    }

    fn number(&self, key: &'static str) -> Result<Option<f64>, ConfigError> {
        self.entries
            .get(key)
            .map(|e| {
                parse_number(&e.value).ok_or_else(|| ConfigError::Syntax {
                    line: e.line,
                    column: e.column,
                    message: format!("{key:?} expects a number, got {:?}", e.value),
                })
            })
            .transpose()
    }

    fn real(&self, key: &'static str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.number(key)?.unwrap_or(default))
    }

    fn required_real(&self, key: &'static str) -> Result<f64, ConfigError> {
        self.number(key)?.ok_or(ConfigError::MissingKey(key))
    }

    fn count(&self, key: &'static str, default: usize) -> Result<usize, ConfigError> {
        match self.entries.get(key) {
            None => Ok(default),
            Some(e) => e.value.parse::<usize>().map_err(|_| ConfigError::Syntax {
                line: e.line,
                column: e.column,
                message: format!("{key:?} expects a non-negative integer, got {:?}", e.value),
            }),
        }
    }

    fn list(&self, key: &'static str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(e) = self.entries.get(key) else {
            return Ok(None);
        };
        e.value
            .split(',')
            .map(|item| {
                parse_number(item.trim()).ok_or_else(|| ConfigError::Syntax {
                    line: e.line,
                    column: e.column,
                    message: format!(
                        "{key:?} expects a comma-separated list of numbers, got {:?}",
                        item.trim()
                    ),
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }
}

/// Decimal number or a multiple of `pi`.
pub fn parse_number(text: &str) -> Option<f64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if let Ok(v) = s.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    let lower = s.to_ascii_lowercase();
    let pos = lower.find("pi")?;
    let (head, tail) = (&lower[..pos], &lower[pos + 2..]);
    let factor = match head {
        "" => 1.0,
        "-" => -1.0,
        h => h.strip_suffix('*')?.parse::<f64>().ok()?,
    };
    let divisor = match tail {
        "" => 1.0,
        t => t.strip_prefix('/')?.parse::<f64>().ok()?,
    };
    let v = factor * PI / divisor;
    v.is_finite().then_some(v)
}

fn domain(key: &'static str, value: impl fmt::Display, constraint: &'static str) -> ConfigError {
    ConfigError::Domain {
        key,
        value: value.to_string(),
        constraint,
    }
}

fn check_m(m: f64) -> Result<f64, ConfigError> {
    if m > 0.0 && m.is_finite() {
        Ok(m)
    } else {
        Err(domain("m", m, "must be positive"))
    }
}

fn check_theta(key: &'static str, theta: f64) -> Result<f64, ConfigError> {
    if (0.0..=PI).contains(&theta) {
        Ok(theta)
    } else {
        Err(domain(key, theta, "must lie in [0, pi]"))
    }
}

fn check_sites(n: usize) -> Result<usize, ConfigError> {
    if n >= 3 {
        Ok(n)
    } else {
        Err(domain("n_sites", n, "must be at least 3"))
    }
}

fn check_positive_count(key: &'static str, n: usize) -> Result<usize, ConfigError> {
    if n >= 1 {
        Ok(n)
    } else {
        Err(domain(key, n, "must be at least 1"))
    }
}

fn check_ratio(r: f64) -> Result<f64, ConfigError> {
    if r.is_finite() {
        Ok(r)
    } else {
        Err(domain("amplitude_ratio", r, "must be finite"))
    }
}

fn drift_base(t: &Table, theta: f64, phi: f64) -> Result<DriftParams, ConfigError> {
    let m = check_m(t.required_real("m")?)?;
    let window_start = t.count("window_start", 5)?;
    let window_end = t.count("window_end", 25)?;
    if window_end < window_start + 2 {
        return Err(domain(
            "window_end",
            window_end,
            "must be at least window_start + 2 Bloch periods",
        ));
    }
    let default_steps = (window_end as f64 * m).round() as usize;
    let steps = t.count("steps", default_steps)?;
    if (steps as f64) < (window_end as f64 * m).round() {
        return Err(domain(
            "steps",
            steps,
            "must cover window_end Bloch periods",
        ));
    }
    Ok(DriftParams {
        m,
        theta: check_theta("theta", theta)?,
        phi,
        amplitude_ratio: check_ratio(t.real("amplitude_ratio", 1.0)?)?,
        n_sites: check_sites(t.count("n_sites", 2000)?)?,
        steps,
        window_periods: (window_start, window_end),
    })
}

/// Parse and validate a configuration, applying defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let table = Table::parse(text)?;
    let experiment: Experiment = table
        .entries
        .get("experiment")
        .ok_or(ConfigError::MissingKey("experiment"))?
        .value
        .parse()?;
    let allowed = experiment.keys();
    if let Some(key) = table
        .entries
        .keys()
        .find(|k| k.as_str() != "experiment" && !allowed.contains(&k.as_str()))
    {
        return Err(ConfigError::UnknownKey {
            key: key.clone(),
            experiment: experiment.name(),
        });
    }
    let t = &table;
    let quarter = PI / 4.0;
    let config = match experiment {
        Experiment::Bloch => {
            let stride = t.count("density_stride", 0)?;
            ExperimentConfig::Bloch(BlochParams {
                m: check_m(t.required_real("m")?)?,
                theta: check_theta("theta", t.real("theta", quarter)?)?,
                n_sites: check_sites(t.count("n_sites", 1000)?)?,
                steps: check_positive_count("steps", t.count("steps", 1000)?)?,
                density_stride: (stride > 0).then_some(stride),
            })
        }
        Experiment::Sbo => {
            let detuning = t.real("detuning", 0.01)?;
            if detuning.is_nan() || detuning <= 0.0 {
                return Err(domain("detuning", detuning, "must be positive"));
            }
            ExperimentConfig::Sbo(SboParams {
                m: check_m(t.required_real("m")?)?,
                detuning,
                theta: check_theta("theta", t.real("theta", quarter)?)?,
                phi: t.real("phi", 0.0)?,
                amplitude_ratio: check_ratio(t.real("amplitude_ratio", 1.0)?)?,
                n_sites: check_sites(t.count("n_sites", 1000)?)?,
                steps: check_positive_count("steps", t.count("steps", 20_000)?)?,
            })
        }
        Experiment::ResonantDrift => ExperimentConfig::ResonantDrift(drift_base(
            t,
            t.real("theta", quarter)?,
            t.real("phi", 0.0)?,
        )?),
        Experiment::VelocityCurve => ExperimentConfig::VelocityCurve {
            base: drift_base(t, t.real("theta", quarter)?, 0.0)?,
            phi_points: check_positive_count("phi_points", t.count("phi_points", 64)?)?,
        },
        Experiment::VelocityMap => {
            let base = drift_base(t, quarter, 0.0)?;
            let phi_points = check_positive_count("phi_points", t.count("phi_points", 64)?)?;
            let thetas = match t.list("thetas")? {
                Some(list) => {
                    if t.entries.contains_key("theta_points") {
                        return Err(domain(
                            "theta_points",
                            "given",
                            "conflicts with an explicit thetas list",
                        ));
                    }
                    for &th in &list {
                        check_theta("thetas", th)?;
                    }
                    list
                }
                None => crate::experiments::theta_grid(check_positive_count(
                    "theta_points",
                    t.count("theta_points", 48)?,
                )?),
            };
            ExperimentConfig::VelocityMap {
                base,
                phi_points,
                thetas,
            }
        }
        Experiment::CrossoverScan => {
            let n_sites = check_sites(t.count("n_sites", 2500)?)?;
            let lo = t.real("grid_lo", 0.0)?;
            let hi = t.real("grid_hi", 1.0)?;
            if !(0.0..1.0).contains(&lo) {
                return Err(domain("grid_lo", lo, "must lie in [0, 1)"));
            }
            if !(hi > lo && hi <= 1.0) {
                return Err(domain("grid_hi", hi, "must lie in (grid_lo, 1]"));
            }
            ExperimentConfig::CrossoverScan(CrossoverParams {
                m: check_m(t.required_real("m")?)?,
                theta: check_theta("theta", t.real("theta", quarter)?)?,
                phi: t.real("phi", 0.0)?,
                amplitude_ratio: check_ratio(t.real("amplitude_ratio", 1.0)?)?,
                n_sites,
                steps: check_positive_count("steps", t.count("steps", 40 * n_sites)?)?.max(2),
                grid_points: check_positive_count("grid_points", t.count("grid_points", 30)?)?,
                grid_range: (lo, hi),
            })
        }
        Experiment::Density => {
            let detuning = t.real("detuning", 0.01)?;
            if detuning.is_nan() || detuning <= 0.0 {
                return Err(domain("detuning", detuning, "must be positive"));
            }
            ExperimentConfig::Density(DensityParams {
                m: check_m(t.required_real("m")?)?,
                theta: check_theta("theta", t.real("theta", quarter)?)?,
                phi: t.real("phi", 0.0)?,
                n_sites: check_sites(t.count("n_sites", 1000)?)?,
                steps: check_positive_count("steps", t.count("steps", 1000)?)?,
                stride: check_positive_count("stride", t.count("stride", 1)?)?,
                detuning,
            })
        }
    };
    Ok(config)
}

/// Write a float so that it parses back to the same bits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Render a configuration with every key spelled out; parses back to an equal
/// value.
pub fn serialize(config: &ExperimentConfig) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("experiment", config.experiment().name().to_string());
    let f = format_float;
    let drift = |kv: &mut dyn FnMut(&str, String), p: &DriftParams| {
        kv("m", f(p.m));
        kv("amplitude_ratio", f(p.amplitude_ratio));
        kv("n_sites", p.n_sites.to_string());
        kv("steps", p.steps.to_string());
        kv("window_start", p.window_periods.0.to_string());
        kv("window_end", p.window_periods.1.to_string());
    };
    match config {
        ExperimentConfig::Bloch(p) => {
            kv("m", f(p.m));
            kv("theta", f(p.theta));
            kv("n_sites", p.n_sites.to_string());
            kv("steps", p.steps.to_string());
            kv("density_stride", p.density_stride.unwrap_or(0).to_string());
        }
        ExperimentConfig::Sbo(p) => {
            kv("m", f(p.m));
            kv("detuning", f(p.detuning));
            kv("theta", f(p.theta));
            kv("phi", f(p.phi));
            kv("amplitude_ratio", f(p.amplitude_ratio));
            kv("n_sites", p.n_sites.to_string());
            kv("steps", p.steps.to_string());
        }
        ExperimentConfig::ResonantDrift(p) => {
            drift(&mut kv, p);
            kv("theta", f(p.theta));
            kv("phi", f(p.phi));
        }
        ExperimentConfig::VelocityCurve { base, phi_points } => {
            drift(&mut kv, base);
            kv("theta", f(base.theta));
            kv("phi_points", phi_points.to_string());
        }
        ExperimentConfig::VelocityMap {
            base,
            phi_points,
            thetas,
        } => {
            drift(&mut kv, base);
            kv("phi_points", phi_points.to_string());
            kv(
                "thetas",
                thetas.iter().map(|&x| f(x)).collect::<Vec<_>>().join(","),
            );
        }
        ExperimentConfig::CrossoverScan(p) => {
            kv("m", f(p.m));
            kv("theta", f(p.theta));
            kv("phi", f(p.phi));
            kv("amplitude_ratio", f(p.amplitude_ratio));
            kv("n_sites", p.n_sites.to_string());
            kv("steps", p.steps.to_string());
            kv("grid_points", p.grid_points.to_string());
            kv("grid_lo", f(p.grid_range.0));
            kv("grid_hi", f(p.grid_range.1));
        }
        ExperimentConfig::Density(p) => {
            kv("m", f(p.m));
            kv("theta", f(p.theta));
            kv("phi", f(p.phi));
            kv("detuning", f(p.detuning));
            kv("n_sites", p.n_sites.to_string());
            kv("steps", p.steps.to_string());
            kv("stride", p.stride.to_string());
        }
    }
    out
}
