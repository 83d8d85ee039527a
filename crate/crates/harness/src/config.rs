//! Scenario files.
//!
//! A scenario is a TOML document, optionally layered on a named preset and
//! then on `key=value` overrides (dotted keys, values in TOML syntax):
//!
//! ```toml
//! preset = "msd-cubic-paper"
//!
//! [rejection]
//! k_eta = 1000.0
//! ```

use std::path::Path;

use dobac_core::adaptive::{AdaptationGains, AdaptiveParams, ProjectionSet, ProjectionSets};
use dobac_core::reference::{ReferenceInput, ReferenceModel};
use dobac_core::signal::Sinusoid;
use dobac_core::{
    Basis, DobacError, InitialConditions, Matrix, ObserverConfig, PlantParams, RejectionConfig, RejectionMode,
    Result, Scenario, Signal, Vector,
};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

pub const MSD_CUBIC_PRESET: &str = "msd-cubic-paper";

const MSD_CUBIC_TEXT: &str = include_str!("../presets/msd-cubic-paper.toml");

pub fn preset_names() -> &'static [&'static str] {
    &[MSD_CUBIC_PRESET]
}

pub fn preset_text(name: &str) -> Result<&'static str> {
    match name {
        MSD_CUBIC_PRESET | "msd-cubic" => Ok(MSD_CUBIC_TEXT),
        other => Err(DobacError::config(
            "preset",
            format!("unknown preset `{other}` (available: {})", preset_names().join(", ")),
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default = "default_name")]
    pub name: String,
    pub plant: PlantSection,
    pub reference: ReferenceSection,
    pub adaptation: AdaptationSection,
    pub projection: ProjectionSection,
    #[serde(default)]
    pub observer: ObserverSection,
    pub rejection: RejectionSection,
    #[serde(default)]
    pub disturbance: SignalSpec,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

fn default_name() -> String {
    "scenario".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PlantSection {
    /// `x1' = x2`, `x2' = -a1 x1 - a2 x1^3 - damping x2 + lambda (u + d)`.
    MsdCubic { a1: f64, a2: f64, damping: f64, lambda: f64 },
    Linear {
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        lambda: f64,
        #[serde(default)]
        v: Vec<f64>,
        #[serde(default)]
        w: Vec<f64>,
        #[serde(default)]
        basis_v: Vec<String>,
        #[serde(default)]
        basis_w: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    pub a_r: Vec<Vec<f64>>,
    pub lambda_r: f64,
    #[serde(default)]
    pub v_r: Vec<f64>,
    /// Present for `r = c_r . x_r + excitation(t)`; absent for an external `r(t)`.
    #[serde(default)]
    pub c_r: Option<Vec<f64>>,
    #[serde(default)]
    pub excitation: SignalSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptationSection {
    pub p: Vec<Vec<f64>>,
    pub gamma_x: Vec<Vec<f64>>,
    pub gamma_r: f64,
    #[serde(default)]
    pub gamma_v: Vec<Vec<f64>>,
    #[serde(default)]
    pub gamma_w: Vec<Vec<f64>>,
    /// Defaults to the sign of the plant's `lambda`.
    #[serde(default)]
    pub sign_lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Interval {
    fn empty() -> Self {
        Interval { lower: vec![], upper: vec![] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionSection {
    #[serde(default = "default_margin")]
    pub margin: f64,
    pub k_x: Interval,
    pub k_r: Interval,
    #[serde(default = "Interval::empty")]
    pub v: Interval,
    #[serde(default = "Interval::empty")]
    pub w: Interval,
}

fn default_margin() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverSection {
    pub gain: f64,
}

impl Default for ObserverSection {
    fn default() -> Self {
        ObserverSection { gain: ObserverConfig::default().gain }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RejectionSection {
    pub mode: String,
    #[serde(default)]
    pub u_bar: Option<f64>,
    #[serde(default)]
    pub f_bar: Option<f64>,
    #[serde(default)]
    pub k_eta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveSpec {
    pub amplitude: f64,
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SignalSpec {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    Sinusoid {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        offset: f64,
    },
    Sum {
        waves: Vec<WaveSpec>,
        #[serde(default)]
        offset: f64,
    },
}

impl SignalSpec {
    fn to_signal(&self) -> Signal {
        match self {
            SignalSpec::Zero => Signal::Zero,
            SignalSpec::Constant { value } => Signal::Constant(*value),
            SignalSpec::Sinusoid { amplitude, frequency, phase, offset } => Signal::Sinusoid {
                wave: Sinusoid { amplitude: *amplitude, frequency: *frequency, phase: *phase },
                offset: *offset,
            },
            SignalSpec::Sum { waves, offset } => Signal::SumOfSinusoids {
                waves: waves
                    .iter()
                    .map(|w| Sinusoid { amplitude: w.amplitude, frequency: w.frequency, phase: w.phase })
                    .collect(),
                offset: *offset,
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default)]
    pub x: Option<Vec<f64>>,
    #[serde(default)]
    pub x_r: Option<Vec<f64>>,
    #[serde(default)]
    pub k_x: Option<Vec<f64>>,
    #[serde(default)]
    pub k_r: Option<f64>,
    #[serde(default)]
    pub v: Option<Vec<f64>>,
    #[serde(default)]
    pub w: Option<Vec<f64>>,
    #[serde(default)]
    pub u_drj: f64,
    #[serde(default)]
    pub d_u_hat: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_decimation")]
    pub decimation: usize,
    #[serde(default = "default_guard")]
    pub guard: f64,
}

fn default_horizon() -> f64 {
    dobac_core::scenario::DEFAULT_HORIZON
}
fn default_step() -> f64 {
    dobac_core::scenario::DEFAULT_STEP
}
fn default_decimation() -> usize {
    1
}
fn default_guard() -> f64 {
    dobac_core::scenario::DEFAULT_GUARD
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            horizon: default_horizon(),
            step: default_step(),
            decimation: default_decimation(),
            guard: default_guard(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    /// Steady-state window `[t0, t1]`; defaults to the last 40% of the horizon.
    #[serde(default)]
    pub window: Option<[f64; 2]>,
}

fn matrix(field: &str, rows: &[Vec<f64>]) -> Result<Matrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(DobacError::config(field, "rows have different lengths"));
    }
    Ok(Matrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn vector(v: &[f64]) -> Vector {
    Vector::from_column_slice(v)
}

fn interval(field: &str, iv: &Interval, margin: f64) -> Result<ProjectionSet> {
    ProjectionSet::from_intervals(&iv.lower, &iv.upper, margin).map_err(|e| match e {
        DobacError::Config { message, .. } => DobacError::config(field, message),
        other => other,
    })
}

impl ScenarioFile {
    /// Builds and validates the core scenario.
    pub fn to_scenario(&self) -> Result<Scenario> {
        let plant = match &self.plant {
            PlantSection::MsdCubic { a1, a2, damping, lambda } => PlantParams::msd_cubic(*a1, *a2, *damping, *lambda),
            PlantSection::Linear { a, b, lambda, v, w, basis_v, basis_w } => {
                let n = b.len();
                PlantParams {
                    a: matrix("plant.a", a)?,
                    b: vector(b),
                    lambda: *lambda,
                    v: vector(v),
                    w: vector(w),
                    basis_v: Basis::parse(n, basis_v)?,
                    basis_w: Basis::parse(n, basis_w)?,
                }
            }
        };
        let n = plant.dim();

        let r = &self.reference;
        let input = match &r.c_r {
            Some(c_r) => ReferenceInput::Feedback { c_r: vector(c_r), excitation: r.excitation.to_signal() },
            None => ReferenceInput::External(r.excitation.to_signal()),
        };
        let reference = ReferenceModel::new(matrix("reference.a_r", &r.a_r)?, plant.b.clone(), r.lambda_r, vector(&r.v_r), input)?;

        let a = &self.adaptation;
        let gains = AdaptationGains {
            gamma_x: matrix("adaptation.gamma_x", &a.gamma_x)?,
            gamma_r: a.gamma_r,
            gamma_v: matrix("adaptation.gamma_v", &a.gamma_v)?,
            gamma_w: matrix("adaptation.gamma_w", &a.gamma_w)?,
            p: matrix("adaptation.p", &a.p)?,
        };

        let p = &self.projection;
        let sets = ProjectionSets {
            k_x: interval("projection.k_x", &p.k_x, p.margin)?,
            k_r: interval("projection.k_r", &p.k_r, p.margin)?,
            v: interval("projection.v", &p.v, p.margin)?,
            w: interval("projection.w", &p.w, p.margin)?,
        };

        let rj = &self.rejection;
        let mode: RejectionMode = rj.mode.parse()?;
        let required = |field: &str, v: Option<f64>| {
            v.ok_or_else(|| DobacError::config(field, format!("required in {mode} mode")))
        };
        let rejection = match mode {
            RejectionMode::Off => RejectionConfig {
                mode,
                u_bar: rj.u_bar.unwrap_or(f64::INFINITY),
                f_bar: rj.f_bar.unwrap_or(f64::INFINITY),
                k_eta: rj.k_eta.unwrap_or(1.0),
            },
            RejectionMode::Direct => RejectionConfig {
                mode,
                u_bar: required("rejection.u_bar", rj.u_bar)?,
                f_bar: rj.f_bar.unwrap_or(f64::INFINITY),
                k_eta: rj.k_eta.unwrap_or(1.0),
            },
            RejectionMode::Integrating => RejectionConfig {
                mode,
                u_bar: required("rejection.u_bar", rj.u_bar)?,
                f_bar: required("rejection.f_bar", rj.f_bar)?,
                k_eta: required("rejection.k_eta", rj.k_eta)?,
            },
        };

        let ic = &self.initial;
        let centers = sets.centers();
        let params = if ic.k_x.is_some() || ic.k_r.is_some() || ic.v.is_some() || ic.w.is_some() {
            Some(AdaptiveParams {
                k_x: ic.k_x.as_deref().map(vector).unwrap_or(centers.k_x),
                k_r: ic.k_r.unwrap_or(centers.k_r),
                v: ic.v.as_deref().map(vector).unwrap_or(centers.v),
                w: ic.w.as_deref().map(vector).unwrap_or(centers.w),
            })
        } else {
            None
        };
        let initial = InitialConditions {
            x: ic.x.as_deref().map(vector).unwrap_or_else(|| Vector::zeros(n)),
            x_r: ic.x_r.as_deref().map(vector).unwrap_or_else(|| Vector::zeros(n)),
            params,
            u_drj: ic.u_drj,
            d_u_hat: ic.d_u_hat.as_deref().map(vector).unwrap_or_else(|| Vector::zeros(n)),
        };

        let scenario = Scenario {
            name: self.name.clone(),
            sign_lambda: a.sign_lambda.unwrap_or(plant.lambda.signum()),
            plant,
            reference,
            gains,
            sets,
            observer: ObserverConfig { gain: self.observer.gain },
            rejection,
            disturbance: self.disturbance.to_signal(),
            initial,
            horizon: self.sim.horizon,
            step: self.sim.step,
            decimation: self.sim.decimation,
            guard: self.sim.guard,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Steady-state analysis window.
    pub fn window(&self) -> Result<(f64, f64)> {
        let (t0, t1) = match self.analysis.window {
            Some([a, b]) => (a, b),
            None => (0.6 * self.sim.horizon, self.sim.horizon),
        };
        if !(0.0 <= t0 && t0 < t1 && t1 <= self.sim.horizon) {
            return Err(DobacError::config("analysis.window", format!("[{t0}, {t1}] is not inside [0, horizon]")));
        }
        Ok((t0, t1))
    }
}

fn parse_toml(text: &str, origin: &str) -> Result<Table> {
    text.parse::<Table>().map_err(|e| DobacError::config(origin, e.to_string()))
}

/// Recursively overlays `top` on `base`.
pub fn merge(base: &mut Table, top: Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Parses an override value as TOML, falling back to a bare string.
pub fn parse_value(text: &str) -> Value {
    format!("v = {text}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(text.to_string()))
}

/// Applies one `a.b.c=value` override.
pub fn apply_override(table: &mut Table, assignment: &str) -> Result<()> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| DobacError::config("--set", format!("expected key=value, got `{assignment}`")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(DobacError::config("--set", format!("bad key `{key}`")));
    }
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur.entry(part.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = match entry {
            Value::Table(t) => t,
            _ => return Err(DobacError::config(key.trim(), format!("`{part}` is not a table"))),
        };
    }
    cur.insert(parts[parts.len() - 1].to_string(), parse_value(value.trim()));
    Ok(())
}

/// Where a scenario comes from.
#[derive(Debug, Clone, Default)]
pub struct Source<'a> {
    pub preset: Option<&'a str>,
    pub config: Option<&'a Path>,
    pub overrides: &'a [String],
}

/// Resolves preset, file and overrides into a merged TOML table.
pub fn resolve_table(src: &Source<'_>) -> Result<Table> {
    let file = match src.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| DobacError::Io(format!("{}: {e}", path.display())))?;
            Some(parse_toml(&text, &path.display().to_string())?)
        }
        None => None,
    };
    let preset = src.preset.map(str::to_string).or_else(|| {
        file.as_ref().and_then(|f| f.get("preset")).and_then(Value::as_str).map(str::to_string)
    });
    let mut table = match &preset {
        Some(name) => parse_toml(preset_text(name)?, name)?,
        None => Table::new(),
    };
    if let Some(f) = file {
        merge(&mut table, f);
    }
    for o in src.overrides {
        apply_override(&mut table, o)?;
    }
    if preset.is_none() && src.config.is_none() && table.get("plant").is_none() {
        return Err(DobacError::config("scenario", "give --preset or --config"));
    }
    Ok(table)
}

pub fn file_from_table(table: Table) -> Result<ScenarioFile> {
    ScenarioFile::deserialize(Value::Table(table)).map_err(|e| DobacError::config("scenario", e.to_string()))
}

/// Loads a preset and/or file with overrides, validated.
pub fn load(src: &Source<'_>) -> Result<(ScenarioFile, Scenario)> {
    let file = file_from_table(resolve_table(src)?)?;
    let scenario = file.to_scenario()?;
    file.window()?;
    Ok((file, scenario))
}

/// Loads a preset by name or a scenario file by path.
pub fn load_scenario(preset_or_path: &str) -> Result<Scenario> {
    let src = if preset_names().contains(&preset_or_path) || preset_or_path == "msd-cubic" {
        Source { preset: Some(preset_or_path), ..Source::default() }
    } else {
        Source { config: Some(Path::new(preset_or_path)), ..Source::default() }
    };
    load(&src).map(|(_, s)| s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn override_values_parse_as_toml() {
        assert_eq!(parse_value("1000"), Value::Integer(1000));
        assert_eq!(parse_value("[1.0, 2]"), toml::toml! { v = [1.0, 2] }["v"]);
        assert_eq!(parse_value("off"), Value::String("off".into()));
        assert_eq!(parse_value("\"off\""), Value::String("off".into()));
    }

    #[test]
    fn dotted_override_creates_tables() {
        let mut t = Table::new();
        apply_override(&mut t, "a.b.c = 2.5").unwrap();
        assert_eq!(t["a"]["b"]["c"].as_float(), Some(2.5));
        assert!(apply_override(&mut t, "a.b.c.d=1").is_err());
        assert!(apply_override(&mut t, "novalue").is_err());
    }

    #[test]
    fn merge_is_deep() {
        let mut base: Table = "[x]\na = 1\nb = 2".parse().unwrap();
        merge(&mut base, "[x]\nb = 3\n[y]\nc = 4".parse().unwrap());
        assert_eq!(base["x"]["a"].as_integer(), Some(1));
        assert_eq!(base["x"]["b"].as_integer(), Some(3));
        assert_eq!(base["y"]["c"].as_integer(), Some(4));
    }
}
