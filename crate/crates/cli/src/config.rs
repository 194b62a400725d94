//! Run configuration: a flat JSON file and command-line flags with the same
//! key names. Flags win over the file.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use zigzag_core::exact::TruncationPolicy;
use zigzag_core::integrator::{IntegratorConfig, DEFAULT_EDGE_THRESHOLD};
use zigzag_core::lattice::{nondimensionalize, DimensionlessParams, PhysicalParams, Rate, RateUnit, DEFAULT_SITES, MIN_SITES};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Numeric,
    Exact,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    /// Guesses from the file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    RelL2,
    MaxAbs,
}

/// Every setting of a run. Each field is both a `--flag` and a JSON key.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ConfigArgs {
    /// Dimensionless gradient λ.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_plus: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_minus: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,

    /// Reference coupling C (physical input, replaces --lambda).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    /// Unit of --coupling: 1/cm or 1/mm.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling_unit: Option<String>,
    /// Index gradient α₀ (physical input).
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gradient: Option<f64>,
    /// Unit of --gradient: 1/cm or 1/mm.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gradient_unit: Option<String>,
    /// Base propagation constant μ (global phase only).
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_unit: Option<String>,
    /// Reference distances and decay length (µm).
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d2: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,

    /// Initially excited site n.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_site: Option<usize>,
    /// Lattice size N for the numeric solver.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sites: Option<usize>,
    /// Final dimensionless distance.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zmax: Option<f64>,
    /// Number of Z samples including 0 and zmax.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_samples: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_min: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_max: Option<usize>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge_threshold: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_tol: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub consecutive_below: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,

    /// Comparison threshold for --method both.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<Metric>,
    /// Exit 0 even when truncation flags are present.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub allow_flags: Option<bool>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

pub const DEFAULT_Z_SAMPLES: usize = 101;
pub const DEFAULT_M_MAX: usize = 40;
pub const DEFAULT_THRESHOLD: f64 = 1e-5;

impl ConfigArgs {
    /// Reads a flat JSON object. Unknown keys are rejected.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    /// `self` takes precedence over `base` key by key.
    pub fn overlay(&self, base: &ConfigArgs) -> ConfigArgs {
        let mut merged = to_map(base);
        merged.extend(to_map(self));
        serde_json::from_value(Value::Object(merged)).expect("round trip of a config map")
    }

    pub fn to_json(&self) -> Value {
        Value::Object(to_map(self))
    }
}

fn to_map(c: &ConfigArgs) -> Map<String, Value> {
    match serde_json::to_value(c).expect("config serializes") {
        Value::Object(m) => m,
        _ => unreachable!(),
    }
}

fn parse_unit(key: &str, tag: Option<&str>) -> Result<RateUnit> {
    match tag.map(|t| t.trim().to_ascii_lowercase()) {
        None => Ok(RateUnit::PerCm),
        Some(t) => match t.as_str() {
            "1/cm" | "cm^-1" | "per-cm" | "cm-1" => Ok(RateUnit::PerCm),
            "1/mm" | "mm^-1" | "per-mm" | "mm-1" => Ok(RateUnit::PerMm),
            _ => Err(CliError::Config(format!("--{key} / \"{key}\": unknown unit tag '{t}', expected 1/cm or 1/mm"))),
        },
    }
}

/// Where the dimensionless parameters came from.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamSource {
    Dimensionless,
    Physical { physical: PhysicalParams, z_scale: f64 },
}

/// Validated run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: DimensionlessParams,
    pub source: ParamSource,
    pub input_site: usize,
    pub sites: usize,
    pub z_max: f64,
    pub z_samples: usize,
    pub m_min: usize,
    pub m_max: usize,
    pub method: Method,
    pub rtol: f64,
    pub atol: f64,
    pub edge_threshold: f64,
    pub policy: TruncationPolicy,
    pub threshold: f64,
    pub metric: Metric,
    pub allow_flags: bool,
    pub output: Option<PathBuf>,
    pub format: Format,
    /// The merged keys as given, for metadata.
    pub echo: Value,
}

fn range_err(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("--{key} / \"{key}\": {msg}"))
}

/// Resolves the model parameters. Absent keys are appended to `missing`
/// so that a single error can name all of them.
pub fn resolve_params(c: &ConfigArgs, missing: &mut Vec<String>) -> Result<Option<(DimensionlessParams, ParamSource)>> {
    for (k, v) in [("alpha-plus", c.alpha_plus), ("alpha-minus", c.alpha_minus), ("beta", c.beta)] {
        if v.is_none() {
            missing.push(k.into());
        }
    }
    let physical = c.coupling.is_some() || c.gradient.is_some();
    if c.lambda.is_some() && physical {
        return Err(CliError::Config(
            "give either \"lambda\" or the physical pair \"coupling\"/\"gradient\", not both".into(),
        ));
    }
    for (tag, value, key) in [
        (&c.coupling_unit, c.coupling, "coupling-unit"),
        (&c.gradient_unit, c.gradient, "gradient-unit"),
        (&c.mu_unit, c.mu, "mu-unit"),
    ] {
        if tag.is_some() && value.is_none() {
            return Err(range_err(key, "unit tag given without its value"));
        }
    }
    if physical {
        for (k, v) in [("coupling", c.coupling), ("gradient", c.gradient)] {
            if v.is_none() {
                missing.push(k.into());
            }
        }
    } else if c.lambda.is_none() {
        missing.push("lambda (or coupling + gradient)".into());
    }
    let (Some(ap), Some(am), Some(beta)) = (c.alpha_plus, c.alpha_minus, c.beta) else {
        return Ok(None);
    };
    if let Some(lambda) = c.lambda {
        return Ok(Some((DimensionlessParams::new(lambda, ap, am, beta)?, ParamSource::Dimensionless)));
    }
    let (Some(cv), Some(gv)) = (c.coupling, c.gradient) else {
        return Ok(None);
    };
    let physical = PhysicalParams {
        coupling: Rate { value: cv, unit: parse_unit("coupling-unit", c.coupling_unit.as_deref())? },
        gradient: Rate { value: gv, unit: parse_unit("gradient-unit", c.gradient_unit.as_deref())? },
        mu: Rate { value: c.mu.unwrap_or(0.0), unit: parse_unit("mu-unit", c.mu_unit.as_deref())? },
        d1: c.d1.unwrap_or(0.0),
        d2: c.d2.unwrap_or(0.0),
        kappa: c.kappa.unwrap_or(1.0),
        alpha_plus: ap,
        alpha_minus: am,
        beta,
    };
    let (params, z_scale) = nondimensionalize(&physical)?;
    Ok(Some((params, ParamSource::Physical { physical, z_scale })))
}

impl RunConfig {
    pub fn from_args(c: &ConfigArgs) -> Result<Self> {
        let mut missing = Vec::new();
        let resolved = resolve_params(c, &mut missing)?;
        if c.input_site.is_none() {
            missing.push("input-site".into());
        }
        if c.zmax.is_none() {
            missing.push("zmax".into());
        }
        if !missing.is_empty() {
            return Err(CliError::MissingKeys(missing));
        }
        let (params, source) = resolved.expect("all parameter keys present");
        let input_site = c.input_site.unwrap();
        let z_max = c.zmax.unwrap();

        let sites = c.sites.unwrap_or(DEFAULT_SITES);
        let z_samples = c.z_samples.unwrap_or(DEFAULT_Z_SAMPLES);
        let m_min = c.m_min.unwrap_or(0);
        let m_max = c.m_max.unwrap_or(DEFAULT_M_MAX.min(sites.saturating_sub(1)));
        let method = c.method.unwrap_or(Method::Both);
        let defaults = TruncationPolicy::default();
        let policy = TruncationPolicy {
            tail_tol: c.tail_tol.unwrap_or(defaults.tail_tol),
            consecutive_below: c.consecutive_below.unwrap_or(defaults.consecutive_below),
            k_max: c.k_max.unwrap_or(defaults.k_max),
        };

        if !(z_max.is_finite() && z_max > 0.0) {
            return Err(range_err("zmax", format!("must be positive, got {z_max}")));
        }
        if z_samples < 2 {
            return Err(range_err("z-samples", format!("needs at least 2 samples, got {z_samples}")));
        }
        if sites < MIN_SITES {
            return Err(range_err("sites", format!("needs at least {MIN_SITES} sites, got {sites}")));
        }
        if input_site >= sites {
            return Err(range_err("input-site", format!("site {input_site} is outside a {sites}-site lattice")));
        }
        if m_min > m_max {
            return Err(range_err("m-min", format!("{m_min} exceeds m-max {m_max}")));
        }
        if method != Method::Exact && m_max >= sites {
            return Err(range_err("m-max", format!("site {m_max} is outside a {sites}-site lattice")));
        }
        let rtol = c.rtol.unwrap_or(IntegratorConfig::DEFAULT_RTOL);
        let atol = c.atol.unwrap_or(IntegratorConfig::DEFAULT_ATOL);
        for (k, v) in [("rtol", rtol), ("atol", atol), ("tail-tol", policy.tail_tol)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(range_err(k, format!("must be positive, got {v}")));
            }
        }
        if policy.consecutive_below == 0 {
            return Err(range_err("consecutive-below", "must be at least 1"));
        }
        let need = input_site.max(m_max) + 20;
        if policy.k_max < need {
            return Err(range_err("k-max", format!("{} is below the required {need} (max site + 20)", policy.k_max)));
        }
        let threshold = c.threshold.unwrap_or(DEFAULT_THRESHOLD);
        let edge_threshold = c.edge_threshold.unwrap_or(DEFAULT_EDGE_THRESHOLD);
        for (k, v) in [("threshold", threshold), ("edge-threshold", edge_threshold)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(range_err(k, format!("must be non-negative, got {v}")));
            }
        }
        let format = c
            .format
            .or_else(|| c.output.as_deref().map(Format::from_path))
            .unwrap_or(Format::Csv);

        Ok(RunConfig {
            params,
            source,
            input_site,
            sites,
            z_max,
            z_samples,
            m_min,
            m_max,
            method,
            rtol,
            atol,
            edge_threshold,
            policy,
            threshold,
            metric: c.metric.unwrap_or(Metric::RelL2),
            allow_flags: c.allow_flags.unwrap_or(false),
            output: c.output.clone(),
            format,
            echo: c.to_json(),
        })
    }

    /// Merges `flags` over the optional file and validates.
    pub fn load(flags: &ConfigArgs, file: Option<&Path>) -> Result<Self> {
        let merged = match file {
            Some(p) => flags.overlay(&ConfigArgs::from_file(p)?),
            None => flags.clone(),
        };
        Self::from_args(&merged)
    }

    pub fn integrator_config(&self) -> IntegratorConfig {
        IntegratorConfig::uniform(self.z_max, self.z_samples).with_tolerances(self.rtol, self.atol)
    }
}
