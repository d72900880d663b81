use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    FreeGaussian,
    HarmonicCoherent,
    WellEigenstate,
    WellPacket,
    TwoOrbitRecurrence,
}

impl ScenarioName {
    pub fn parse(s: &str) -> Option<Self> {
        Deserialize::deserialize(serde::de::value::StrDeserializer::<serde::de::value::Error>::new(s)).ok()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::FreeGaussian => "free_gaussian",
            Self::HarmonicCoherent => "harmonic_coherent",
            Self::WellEigenstate => "well_eigenstate",
            Self::WellPacket => "well_packet",
            Self::TwoOrbitRecurrence => "two_orbit_recurrence",
        }
    }

    pub fn is_well(self) -> bool {
        matches!(self, Self::WellEigenstate | Self::WellPacket | Self::TwoOrbitRecurrence)
    }
}

/// Engines in dependency order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Exact,
    Semiclassical,
    Bohm,
    Soliton,
}

// Raw sections: every field optional so scenario defaults can fill them.

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    mass: Option<f64>,
    hbar: Option<f64>,
    omega: Option<f64>,
    length: Option<f64>,
    coefficients: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    x_min: Option<f64>,
    x_max: Option<f64>,
    n: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    duration: Option<f64>,
    dt: Option<f64>,
    frame_stride: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    center: Option<f64>,
    sigma: Option<f64>,
    momentum: Option<f64>,
    level: Option<usize>,
    probe: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnsemble {
    n: Option<usize>,
    seed: Option<u64>,
    bins: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSemiclassical {
    p_min: Option<f64>,
    p_max: Option<f64>,
    p_samples: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecurrence {
    quantum: Option<u32>,
    steps: Option<u32>,
    weights: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    // Optional here so a file may leave it to an override.
    scenario: Option<ScenarioName>,
    #[serde(default)]
    model: RawModel,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    time: RawTime,
    #[serde(default)]
    state: RawState,
    #[serde(default)]
    ensemble: RawEnsemble,
    #[serde(default)]
    semiclassical: RawSemiclassical,
    #[serde(default)]
    recurrence: RawRecurrence,
    engines: Option<Vec<Engine>>,
    output: Option<PathBuf>,
    // Checked here for shape; expanded from the raw table.
    #[allow(dead_code)]
    #[serde(default)]
    sweep: BTreeMap<String, Vec<toml::Value>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub mass: f64,
    pub hbar: f64,
    pub omega: Option<f64>,
    pub length: Option<f64>,
    pub coefficients: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeConfig {
    pub duration: f64,
    /// `None` selects the step from the stability rule once the initial
    /// state exists.
    pub dt: Option<f64>,
    /// `None` aims at about twenty frames.
    pub frame_stride: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateConfig {
    pub center: f64,
    /// `None` for the oscillator ground-state width or an eigenstate.
    pub sigma: Option<f64>,
    pub momentum: f64,
    pub level: usize,
    /// Start of the single probe trajectory used for mismatch metrics.
    pub probe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n: usize,
    pub seed: u64,
    pub bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiclassicalConfig {
    pub p_min: f64,
    pub p_max: f64,
    pub p_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceConfig {
    /// `M` in `3 p1 L = 2πħ M + ΔS`.
    pub quantum: u32,
    pub steps: u32,
    pub weights: [f64; 2],
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: ScenarioName,
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub state: StateConfig,
    pub ensemble: EnsembleConfig,
    pub semiclassical: SemiclassicalConfig,
    pub recurrence: RecurrenceConfig,
    pub engines: Vec<Engine>,
    pub output: PathBuf,
}

impl ScenarioConfig {
    /// SHA-256 of the canonical JSON of every field except the output
    /// directory.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        value.as_object_mut().expect("config is an object").remove("output");
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }
}

fn config_error(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config { location: Some(location.into()), message: message.into() }
}

fn toml_error(text: &str, e: &toml::de::Error, context: Option<&str>) -> Error {
    let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
    let location = match (context, line) {
        (Some(c), _) => Some(c.to_string()),
        (None, Some(l)) => Some(format!("line {l}")),
        (None, None) => None,
    };
    Error::Config { location, message: e.message().trim().to_string() }
}

/// Sets `path` (dotted) inside a TOML table, creating tables as needed.
pub fn set_path(root: &mut toml::Table, path: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| config_error(path, "empty key"))?;
    let mut table = root;
    for p in parts {
        let entry = table.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| config_error(path, format!("`{p}` is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

/// Reads a scalar the way it would be written in a config file, falling
/// back to a bare string.
pub fn parse_value(text: &str) -> toml::Value {
    let text = text.trim();
    toml::from_str::<toml::Table>(&format!("v = {text}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(text.to_string()))
}

/// Parses a configuration and expands its sweep into one resolved config
/// per point (a single config without a sweep).
pub fn parse_config(text: &str) -> Result<Vec<ScenarioConfig>> {
    parse_config_with(text, &[], &[])
}

/// As [`parse_config`], applying `overrides` (dotted key, value) before
/// resolution and adding `extra_sweeps` to the file's own sweep table.
pub fn parse_config_with(
    text: &str,
    overrides: &[(String, toml::Value)],
    extra_sweeps: &[(String, Vec<toml::Value>)],
) -> Result<Vec<ScenarioConfig>> {
    // Strict pass over the text itself, for line numbers.
    toml::from_str::<RawConfig>(text).map_err(|e| toml_error(text, &e, None))?;
    let mut table: toml::Table = toml::from_str(text).map_err(|e| toml_error(text, &e, None))?;
    for (k, v) in overrides {
        set_path(&mut table, k, v.clone())?;
    }
    let mut sweep: BTreeMap<String, Vec<toml::Value>> = match table.remove("sweep") {
        Some(v) => v.try_into().map_err(|e: toml::de::Error| toml_error(text, &e, Some("sweep")))?,
        None => BTreeMap::new(),
    };
    for (k, values) in extra_sweeps {
        sweep.insert(k.clone(), values.clone());
    }
    for (k, values) in &sweep {
        if values.is_empty() {
            return Err(config_error(format!("sweep.{k}"), "empty value list"));
        }
    }

    let mut points: Vec<Vec<(String, toml::Value)>> = vec![Vec::new()];
    for (k, values) in &sweep {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((k.clone(), v.clone()));
                    q
                })
            })
            .collect();
    }
    let sweeping = !sweep.is_empty();
    points
        .into_iter()
        .enumerate()
        .map(|(i, point)| {
            let mut t = table.clone();
            for (k, v) in &point {
                set_path(&mut t, k, v.clone()).map_err(|_| config_error(format!("sweep.{k}"), "not a config key"))?;
            }
            let context = point.iter().map(|(k, _)| format!("sweep.{k}")).collect::<Vec<_>>().join(", ");
            let raw: RawConfig = toml::Value::Table(t)
                .try_into()
                .map_err(|e: toml::de::Error| toml_error(text, &e, Some(if sweeping { &context } else { "overrides" })))?;
            let mut cfg = resolve(raw)?;
            if cfg.scenario != ScenarioName::TwoOrbitRecurrence {
                // Echo the step and stride the run will use.
                let (model, psi0) = super::run::build_setup(&cfg)?;
                let e = super::run::exact_config(&cfg, &psi0, &model);
                cfg.time.dt = Some(e.dt);
                cfg.time.frame_stride = Some(e.frame_stride);
            }
            if sweeping {
                cfg.output = cfg.output.join(format!("run_{i:03}"));
            }
            Ok(cfg)
        })
        .collect()
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(config_error(name, format!("must be positive, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(config_error(name, format!("must be finite, got {v}")))
    }
}

fn resolve(raw: RawConfig) -> Result<ScenarioConfig> {
    use ScenarioName::*;
    let s = raw.scenario.ok_or_else(|| config_error("scenario", "missing required key"))?;
    let m = &raw.model;
    let mass = positive("model.mass", m.mass.unwrap_or(1.0))?;
    let hbar = positive(
        "model.hbar",
        m.hbar.unwrap_or(match s {
            WellPacket => 0.1,
            TwoOrbitRecurrence => 0.01,
            _ => 1.0,
        }),
    )?;
    let omega = match (s, m.omega) {
        (HarmonicCoherent, w) if m.coefficients.is_none() => Some(positive("model.omega", w.unwrap_or(1.0))?),
        (_, Some(_)) => return Err(config_error("model.omega", "only the harmonic scenario takes a frequency")),
        _ => None,
    };
    let length = match (s.is_well(), m.length) {
        (true, l) => Some(positive("model.length", l.unwrap_or(1.0))?),
        (false, Some(_)) => return Err(config_error("model.length", "only well scenarios take a length")),
        (false, None) => None,
    };
    if let Some(c) = &m.coefficients {
        if s.is_well() {
            return Err(config_error("model.coefficients", "well scenarios use a hard-wall potential"));
        }
        if c.is_empty() || c.iter().any(|v| !v.is_finite()) {
            return Err(config_error("model.coefficients", "need finite coefficients"));
        }
    }

    let g = &raw.grid;
    let (x_min, x_max, n_default) = match s {
        FreeGaussian => (-20.0, 20.0, 1024),
        HarmonicCoherent => (-15.0, 15.0, 1024),
        WellEigenstate | WellPacket => (0.0, length.unwrap(), 1024),
        TwoOrbitRecurrence => (0.0, length.unwrap(), 2048),
    };
    let grid = GridConfig {
        x_min: finite("grid.x_min", g.x_min.unwrap_or(x_min))?,
        x_max: finite("grid.x_max", g.x_max.unwrap_or(x_max))?,
        n: g.n.unwrap_or(n_default),
    };
    if grid.x_max <= grid.x_min {
        return Err(config_error("grid.x_max", "must exceed grid.x_min"));
    }
    if !grid.n.is_power_of_two() || grid.n < 16 {
        return Err(config_error("grid.n", format!("must be a power of two >= 16, got {}", grid.n)));
    }
    if let Some(l) = length {
        if grid.x_min != 0.0 || grid.x_max != l {
            return Err(config_error("grid", format!("well scenarios need the grid [0, {l}]")));
        }
    }

    let st = &raw.state;
    let level = st.level.unwrap_or(5);
    if level == 0 {
        return Err(config_error("state.level", "must be >= 1"));
    }
    let (center, sigma, momentum) = match s {
        FreeGaussian => (0.0, Some(1.0), 2.0),
        HarmonicCoherent => (2.0, None, 0.0),
        WellEigenstate => (0.3, None, 0.0),
        WellPacket | TwoOrbitRecurrence => (0.5, Some(0.05), 10.0),
    };
    let sigma = match st.sigma.or(sigma) {
        Some(v) => Some(positive("state.sigma", v)?),
        None if s == HarmonicCoherent && m.coefficients.is_some() => {
            return Err(config_error("state.sigma", "required for a polynomial potential"));
        }
        None => None,
    };
    let center = finite("state.center", st.center.unwrap_or(center))?;
    let probe_default = match s {
        WellEigenstate => center,
        _ => center + sigma.unwrap_or(0.0),
    };
    let state = StateConfig {
        center,
        sigma,
        momentum: finite("state.momentum", st.momentum.unwrap_or(momentum))?,
        level,
        probe: finite("state.probe", st.probe.unwrap_or(probe_default))?,
    };
    for (name, x) in [("state.center", state.center), ("state.probe", state.probe)] {
        let inside = if length.is_some() { x > grid.x_min && x < grid.x_max } else { x >= grid.x_min && x < grid.x_max };
        if !inside {
            return Err(config_error(name, format!("{x} lies outside the grid")));
        }
    }

    let period = |p: f64| 2.0 * mass * length.unwrap() / p;
    let duration_default = match s {
        FreeGaussian => 1.0,
        HarmonicCoherent => std::f64::consts::FRAC_PI_4 / omega.unwrap_or(1.0),
        WellEigenstate => period(level as f64 * std::f64::consts::PI * hbar / length.unwrap()),
        WellPacket => 0.05,
        TwoOrbitRecurrence => 0.0,
    };
    let t = &raw.time;
    let time = TimeConfig {
        duration: match t.duration {
            Some(d) => positive("time.duration", d)?,
            None => duration_default,
        },
        dt: t.dt.map(|d| positive("time.dt", d)).transpose()?,
        frame_stride: t.frame_stride,
    };
    if time.frame_stride == Some(0) {
        return Err(config_error("time.frame_stride", "must be >= 1"));
    }

    let e = &raw.ensemble;
    let ensemble = EnsembleConfig { n: e.n.unwrap_or(10_000), seed: e.seed.unwrap_or(0), bins: e.bins.unwrap_or(50) };
    if ensemble.n == 0 {
        return Err(config_error("ensemble.n", "must be >= 1"));
    }
    if ensemble.bins == 0 {
        return Err(config_error("ensemble.bins", "must be >= 1"));
    }

    let sc = &raw.semiclassical;
    let (p_lo, p_hi) = match s {
        WellPacket => (-14.0, 14.0),
        _ => (-60.0, 60.0),
    };
    let semiclassical = SemiclassicalConfig {
        p_min: finite("semiclassical.p_min", sc.p_min.unwrap_or(p_lo))?,
        p_max: finite("semiclassical.p_max", sc.p_max.unwrap_or(p_hi))?,
        p_samples: sc.p_samples.unwrap_or(256),
    };
    if semiclassical.p_max <= semiclassical.p_min {
        return Err(config_error("semiclassical.p_max", "must exceed semiclassical.p_min"));
    }
    if semiclassical.p_samples < 2 {
        return Err(config_error("semiclassical.p_samples", "must be >= 2"));
    }

    let r = &raw.recurrence;
    let recurrence =
        RecurrenceConfig { quantum: r.quantum.unwrap_or(477), steps: r.steps.unwrap_or(8), weights: r.weights.unwrap_or([1.0, 0.6]) };
    if recurrence.steps == 0 {
        return Err(config_error("recurrence.steps", "must be >= 1"));
    }
    for (i, w) in recurrence.weights.iter().enumerate() {
        positive(&format!("recurrence.weights[{i}]"), *w)?;
    }

    let mut engines = raw.engines.unwrap_or_else(|| match s {
        TwoOrbitRecurrence => vec![Engine::Exact],
        _ => vec![Engine::Exact, Engine::Semiclassical, Engine::Bohm, Engine::Soliton],
    });
    engines.sort();
    engines.dedup();
    if engines.is_empty() {
        return Err(config_error("engines", "select at least one engine"));
    }
    if s == TwoOrbitRecurrence && engines != [Engine::Exact] {
        return Err(config_error("engines", "the recurrence scenario runs the exact engine only"));
    }
    if engines.contains(&Engine::Soliton) && ensemble.n < 1000 {
        return Err(config_error("ensemble.n", "soliton statistics need at least 1000 members"));
    }

    Ok(ScenarioConfig {
        scenario: s,
        model: ModelConfig { mass, hbar, omega, length, coefficients: m.coefficients.clone() },
        grid,
        time,
        state,
        ensemble,
        semiclassical,
        recurrence,
        engines,
        output: raw.output.unwrap_or_else(|| PathBuf::from("out")),
    })
}
