//! Versioned TOML run configuration.
//!
//! A file only needs the keys it changes: the chosen `scenario` selects a
//! preset, the file is merged over it, then `--override key=value` pairs
//! are applied. Unknown keys anywhere are rejected.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use cpest_core::estimator::EstimatorGains;
use cpest_core::model::{c_from_kappas, CpParams, HeierCoefficients, PhysicalParams, PitchUnit, Scenario};
use cpest_core::pipeline::{default_alpha, InitialZ, PipelineConfig};
use cpest_core::plant::{NoiseSpec, PlantConfig, TorqueProfile, WindKind, WindProfile};
use serde::{Deserialize, Serialize};
use toml::Value;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioKind {
    S1,
    #[serde(rename = "S1-noise")]
    S1Noise,
    #[serde(rename = "S1-smallTe")]
    S1SmallTe,
    S2,
    #[serde(rename = "baseline-overparam")]
    BaselineOverparam,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] =
        [ScenarioKind::S1, ScenarioKind::S1Noise, ScenarioKind::S1SmallTe, ScenarioKind::S2, ScenarioKind::BaselineOverparam];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::S1 => "S1",
            ScenarioKind::S1Noise => "S1-noise",
            ScenarioKind::S1SmallTe => "S1-smallTe",
            ScenarioKind::S2 => "S2",
            ScenarioKind::BaselineOverparam => "baseline-overparam",
        }
    }

    pub fn model_scenario(self) -> Scenario {
        match self {
            ScenarioKind::S2 => Scenario::S2,
            _ => Scenario::S1,
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown scenario `{s}` (expected one of S1, S1-noise, S1-smallTe, S2, baseline-overparam)"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub scenario: ScenarioKind,
    /// Seeds the measurement noise.
    pub seed: u64,
    pub physical: Physical,
    pub truth: Truth,
    pub wind: Wind,
    pub torque: Torque,
    pub noise: Noise,
    pub regressor: Regressor,
    pub estimator: Estimator,
    pub integration: Integration,
    pub output: Output,
    pub sweep: Sweep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physical {
    /// Air density (kg/m³).
    pub rho: f64,
    /// Blade radius (m).
    pub radius: f64,
    /// Rotor inertia (kg·m²).
    pub inertia: f64,
}

/// True curve: explicit `c`, or derived from the seven Heier coefficients
/// at zero pitch when `c` is absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truth {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<[f64; 3]>,
    pub kappa: [f64; 7],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindShape {
    Constant,
    Sinusoidal,
    Steps,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Wind {
    pub shape: WindShape,
    /// Mean (or initial) speed (m/s).
    pub speed: f64,
    pub amplitude: f64,
    pub frequency_hz: f64,
    pub phase: f64,
    /// `[t, v]` breakpoints for `steps`.
    pub steps: Vec<[f64; 2]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TorqueLaw {
    Zero,
    S2Coupling,
    Constant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Torque {
    pub law: TorqueLaw,
    /// Constant generator torque as a multiple of the inertia (`Te = f·J`).
    pub te_over_inertia: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Noise {
    /// Half-width of the uniform wind-speed noise (m/s).
    pub wind_amplitude: f64,
    /// Half-width of the uniform rotor-speed noise (rad/s).
    pub rotor_amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Regressor {
    pub sigma: f64,
    /// Source of `z(0)`: the plant's initial condition or the first sample.
    pub initial_z: InitialZSource,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialZSource {
    Known,
    Measured,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Estimator {
    pub gamma_w: f64,
    pub f0: f64,
    /// Diagonal of Γ.
    pub gamma: [f64; 3],
    /// Explicit α; when absent, twice the bound over the prior box.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Relative half-width of the prior box around the true c.
    pub prior_halfwidth: f64,
    pub eta_floor: f64,
    pub w0: [f64; 4],
    /// Explicit η̂(0); when absent, `eta0_scale` times the true η.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta0: Option<[f64; 3]>,
    pub eta0_scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Integration {
    pub h: f64,
    pub t_final: f64,
    pub record_dt: f64,
    pub omega0: f64,
    pub omega_min: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    /// Output root; `--out` and `CPEST_OUT` take precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    pub curve_z_min: f64,
    pub curve_z_max: f64,
    pub curve_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    /// Constant `Te / J` values for `sweep-te`.
    pub te_over_inertia: Vec<f64>,
}

impl ScenarioConfig {
    pub fn preset(kind: ScenarioKind) -> Self {
        let k = HeierCoefficients::<f64>::reference();
        let phys = PhysicalParams::<f64>::reference();
        let mut cfg = ScenarioConfig {
            schema_version: SCHEMA_VERSION,
            scenario: kind,
            seed: 0,
            physical: Physical { rho: phys.rho, radius: phys.r, inertia: phys.inertia },
            truth: Truth { c: None, kappa: [k.kappa1, k.kappa2, k.kappa3, k.kappa4, k.kappa5, k.kappa6, k.kappa7] },
            wind: Wind { shape: WindShape::Constant, speed: 9.0, amplitude: 0.0, frequency_hz: 0.0, phase: 0.0, steps: vec![] },
            torque: Torque { law: TorqueLaw::Zero, te_over_inertia: 0.0 },
            noise: Noise { wind_amplitude: 0.0, rotor_amplitude: 0.0 },
            regressor: Regressor { sigma: 1.0, initial_z: InitialZSource::Known },
            estimator: Estimator {
                gamma_w: 100.0,
                f0: 1.0,
                gamma: [50.0, 50.0, 500.0],
                alpha: None,
                prior_halfwidth: 0.1,
                eta_floor: 1e-8,
                w0: [0.0; 4],
                eta0: None,
                eta0_scale: 0.5,
            },
            integration: Integration { h: 1e-3, t_final: 500.0, record_dt: 0.1, omega0: 10.0, omega_min: 1e-6 },
            output: Output { dir: None, curve_z_min: 0.01, curve_z_max: 0.6, curve_points: 300 },
            sweep: Sweep { te_over_inertia: vec![0.0, 0.01, 0.02, 0.05] },
        };
        match kind {
            ScenarioKind::S1 | ScenarioKind::BaselineOverparam => {}
            ScenarioKind::S1Noise => {
                cfg.noise = Noise { wind_amplitude: 0.3, rotor_amplitude: 0.5 };
            }
            ScenarioKind::S1SmallTe => {
                cfg.torque = Torque { law: TorqueLaw::Constant, te_over_inertia: 0.02 };
            }
            ScenarioKind::S2 => {
                cfg.wind = Wind { shape: WindShape::Sinusoidal, amplitude: 1.0, frequency_hz: 0.05, ..cfg.wind };
                cfg.torque.law = TorqueLaw::S2Coupling;
            }
        }
        cfg
    }

    /// Preset for the file's `scenario`, the file merged over it, then the
    /// overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let file = match path {
            Some(p) => {
                let text =
                    std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                text.parse::<toml::Table>().map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        Self::from_table(file, overrides)
    }

    pub fn from_table(file: toml::Table, overrides: &[String]) -> Result<Self, CliError> {
        let mut patches = Vec::with_capacity(overrides.len());
        for o in overrides {
            patches.push(parse_override(o)?);
        }
        // The scenario picks the preset, so resolve it first.
        let mut kind = ScenarioKind::S1;
        if let Some(v) = file.get("scenario") {
            kind = scenario_from_value(v)?;
        }
        for (path, value) in &patches {
            if path.len() == 1 && path[0] == "scenario" {
                kind = scenario_from_value(value)?;
            }
        }
        let preset = Value::try_from(Self::preset(kind)).map_err(|e| CliError::Config(e.to_string()))?;
        let mut merged = preset;
        merge(&mut merged, Value::Table(file));
        for (path, value) in patches {
            set_path(&mut merged, &path, value)?;
        }
        let cfg: ScenarioConfig = merged.try_into().map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version {} is not supported (this build reads version {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.output.curve_points == 0 {
            return Err(CliError::Config("output.curve_points must be >= 1".into()));
        }
        if !(self.output.curve_z_min > 0.0 && self.output.curve_z_max >= self.output.curve_z_min) {
            return Err(CliError::Config("output curve range needs 0 < curve_z_min <= curve_z_max".into()));
        }
        if !(self.estimator.eta0_scale > 0.0) {
            return Err(CliError::Config("estimator.eta0_scale must be > 0".into()));
        }
        if self.sweep.te_over_inertia.iter().any(|v| !(*v >= 0.0)) {
            return Err(CliError::Config("sweep.te_over_inertia values must be >= 0".into()));
        }
        self.pipeline().map(|_| ())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn phys(&self) -> Result<PhysicalParams<f64>, CliError> {
        let p = &self.physical;
        Ok(PhysicalParams::new(p.rho, p.radius, p.inertia)?)
    }

    pub fn true_curve(&self) -> Result<CpParams<f64>, CliError> {
        if let Some([c1, c2, c3]) = self.truth.c {
            return Ok(CpParams::new(c1, c2, c3)?);
        }
        let [kappa1, kappa2, kappa3, kappa4, kappa5, kappa6, kappa7] = self.truth.kappa;
        let k = HeierCoefficients {
            kappa1,
            kappa2,
            kappa3,
            kappa4,
            kappa5,
            kappa6,
            kappa7,
            ell: 2.0,
            pitch_unit: PitchUnit::Degrees,
        };
        Ok(c_from_kappas(&k, self.physical.radius)?)
    }

    fn wind_profile(&self) -> WindProfile<f64> {
        let w = &self.wind;
        let kind = match w.shape {
            WindShape::Constant => WindKind::Constant,
            WindShape::Sinusoidal => {
                WindKind::Sinusoidal { amplitude: w.amplitude, frequency_hz: w.frequency_hz, phase: w.phase }
            }
            WindShape::Steps => WindKind::Piecewise(w.steps.iter().map(|p| (p[0], p[1])).collect()),
        };
        WindProfile { base: w.speed, kind }
    }

    /// Core configuration for one run.
    pub fn pipeline(&self) -> Result<PipelineConfig<f64>, CliError> {
        let phys = self.phys()?;
        let c = self.true_curve()?;
        let i = &self.integration;
        let torque = match self.torque.law {
            TorqueLaw::Zero => TorqueProfile::Zero,
            TorqueLaw::S2Coupling => TorqueProfile::S2Coupling,
            TorqueLaw::Constant => TorqueProfile::Constant(self.torque.te_over_inertia * phys.inertia),
        };
        let plant = PlantConfig {
            phys,
            c,
            wind: self.wind_profile(),
            torque,
            scenario: self.scenario.model_scenario(),
            omega0: i.omega0,
            h: i.h,
            t_final: i.t_final,
            record_dt: i.record_dt,
            omega_min: i.omega_min,
        };
        plant.validate()?;
        let e = &self.estimator;
        let alpha = match e.alpha {
            Some(a) => a,
            None => default_alpha(&plant, e.prior_halfwidth)?,
        };
        let gains = EstimatorGains {
            gamma_w: e.gamma_w,
            f0: e.f0,
            gamma: [[e.gamma[0], 0.0, 0.0], [0.0, e.gamma[1], 0.0], [0.0, 0.0, e.gamma[2]]],
            alpha,
            eta_floor: e.eta_floor,
        };
        gains.validate()?;
        let noise =
            NoiseSpec { wind_amplitude: self.noise.wind_amplitude, rotor_amplitude: self.noise.rotor_amplitude, seed: self.seed };
        noise.validate()?;
        let mut cfg = PipelineConfig {
            plant,
            noise,
            sigma: self.regressor.sigma,
            gains,
            w0: e.w0,
            eta0: e.eta0,
            nominal_wind: Some(self.wind.speed),
            initial_z: match self.regressor.initial_z {
                InitialZSource::Known => InitialZ::Known,
                InitialZSource::Measured => InitialZ::Measured,
            },
        };
        if cfg.eta0.is_none() {
            cfg.eta0 = Some(cfg.true_eta()?.as_array().map(|v| v * e.eta0_scale));
        }
        if !(cfg.sigma > 0.0) {
            return Err(CliError::Config("regressor.sigma must be > 0".into()));
        }
        Ok(cfg)
    }
}

fn scenario_from_value(v: &Value) -> Result<ScenarioKind, CliError> {
    v.as_str().ok_or_else(|| CliError::Config("scenario must be a string".into()))?.parse().map_err(CliError::Config)
}

/// `a.b.c=value`; the value is read as TOML, or as a bare string if that
/// fails.
pub fn parse_override(s: &str) -> Result<(Vec<String>, Value), CliError> {
    let (key, raw) = s.split_once('=').ok_or_else(|| CliError::Config(format!("override `{s}` is not key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(CliError::Config(format!("override `{s}` has an empty key")));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    Ok((key.split('.').map(str::to_string).collect(), value))
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Table(b), Value::Table(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn set_path(root: &mut Value, path: &[String], value: Value) -> Result<(), CliError> {
    let mut cur = root;
    for (i, key) in path.iter().enumerate() {
        let table = cur
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override key `{}` does not name a table", path[..i].join("."))))?;
        if i + 1 == path.len() {
            table.insert(key.clone(), value);
            return Ok(());
        }
        cur = table.entry(key.clone()).or_insert_with(|| Value::Table(toml::Table::new()));
    }
    unreachable!("override path is non-empty")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_roundtrip() {
        for kind in ScenarioKind::ALL {
            let cfg = ScenarioConfig::preset(kind);
            cfg.validate().unwrap();
            let text = cfg.to_toml();
            let back = ScenarioConfig::from_table(text.parse().unwrap(), &[]).unwrap();
            assert_eq!(back, cfg, "{kind}");
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let t: toml::Table = "[estimator]\ngama_w = 3.0".parse().unwrap();
        let err = ScenarioConfig::from_table(t, &[]).unwrap_err();
        assert!(err.to_string().contains("gama_w"), "{err}");
        assert!(ScenarioConfig::from_table(toml::Table::new(), &["bogus=1".into()]).is_err());
    }

    #[test]
    fn overrides_and_scenario_selection() {
        let t: toml::Table = "scenario = \"S1-noise\"\nseed = 4".parse().unwrap();
        let cfg = ScenarioConfig::from_table(t, &["integration.t_final=20".into(), "estimator.gamma=[1,2,3]".into()]).unwrap();
        assert_eq!(cfg.scenario, ScenarioKind::S1Noise);
        assert_eq!(cfg.noise.rotor_amplitude, 0.5);
        assert_eq!(cfg.integration.t_final, 20.0);
        assert_eq!(cfg.estimator.gamma, [1.0, 2.0, 3.0]);
        let cfg = ScenarioConfig::from_table(toml::Table::new(), &["scenario=S2".into()]).unwrap();
        assert_eq!(cfg.torque.law, TorqueLaw::S2Coupling);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for o in [
            "schema_version=2",
            "integration.h=-1",
            "physical.inertia=0",
            "estimator.gamma=[1,-1,1]",
            "scenario=S3",
            "noise=3",
            "x",
        ] {
            assert!(ScenarioConfig::from_table(toml::Table::new(), &[o.to_string()]).is_err(), "{o}");
        }
    }

    #[test]
    fn default_truth_is_the_kappa_map() {
        let c = ScenarioConfig::preset(ScenarioKind::S1).true_curve().unwrap();
        assert!((c.c1 - 65.738).abs() < 1e-3 && (c.c2 - 0.14371).abs() < 1e-5 && (c.c3 - 11.413).abs() < 1e-3);
    }
}
