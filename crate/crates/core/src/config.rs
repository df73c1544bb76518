//! Experiment configuration: a sectioned TOML file plus `section.key=value`
//! overrides. Every omitted field takes the reference-experiment value.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::controller::{BarrierBounds, Gains, Mat7};
use crate::error::ConfigError;
use crate::human_trajectory::CircleTrajectory;
use crate::robot_model::{Elbow, KinematicParams, Mat2, RobotParams, Vec2, Vec7};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainsConfig {
    pub k_r: f64,
    pub k_phi: f64,
    pub k_1: f64,
    pub k_icl: f64,
    /// Diagonal of `Gamma1`.
    pub gamma1: [f64; 2],
    /// Diagonal of `Gamma2`.
    pub gamma2: [f64; 7],
    pub alpha_s4: f64,
    pub n_windows: usize,
    pub delta_t: f64,
    /// Human measurement delay `T` (s).
    #[serde(alias = "T")]
    pub delay: f64,
}

impl Default for GainsConfig {
    fn default() -> Self {
        Self {
            k_r: 0.1,
            k_phi: 1.0,
            k_1: 0.8,
            k_icl: 100.0,
            gamma1: [1.0; 2],
            gamma2: [0.5; 7],
            alpha_s4: 0.002,
            n_windows: 25,
            delta_t: 0.2,
            delay: 0.45,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    pub k_h: [f64; 2],
    pub k_r_bound: [f64; 2],
    /// Explicit error bound; when given, `k_r_bound` becomes `k_h + k_m`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_m: Option<[f64; 2]>,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            k_h: [0.75, 0.45],
            k_r_bound: [1.15, 1.85],
            k_m: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryConfig {
    /// Registered trajectory source name.
    pub source: String,
    pub center: [f64; 2],
    pub radius: [f64; 2],
    pub omega: f64,
    /// Table file for the `table` source.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        let c = CircleTrajectory::default();
        Self {
            source: "circle".into(),
            center: c.center,
            radius: c.radius,
            omega: c.omega,
            table: None,
        }
    }
}

impl TrajectoryConfig {
    pub fn circle(&self) -> CircleTrajectory {
        CircleTrajectory {
            center: self.center,
            radius: self.radius,
            omega: self.omega,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub duration: f64,
    pub dt: f64,
    pub plant_substeps: usize,
    pub p0: [f64; 2],
    pub elbow: Elbow,
    pub zeta_j0: [f64; 2],
    pub zeta_y0: [f64; 7],
    /// Reserved; the simulation draws no random numbers.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            duration: 50.0,
            dt: 0.01,
            plant_substeps: 4,
            p0: [0.78, 0.23],
            elbow: Elbow::Negative,
            zeta_j0: [0.5, 0.25],
            zeta_y0: [0.502, 0.082, 0.158, 0.0185, 9.5, 2.78, 0.0185],
            seed: 0,
        }
    }
}

/// Names of the runtime-selectable strategies and their tuning knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategyConfig {
    pub jacobian_inverse: String,
    pub jacobian_rate: String,
    pub icl_policy: String,
    pub integrator: String,
    /// Smallest singular value below which `dls` starts damping.
    pub dls_sigma: f64,
    /// Damping at a singular pose for `dls`.
    pub dls_lambda: f64,
    /// Determinant threshold for `switched`.
    pub switch_det: f64,
    /// Fixed damping for `switched` below the threshold.
    pub switch_damping: f64,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self {
            jacobian_inverse: "dls".into(),
            jacobian_rate: "full".into(),
            icl_policy: "fifo".into(),
            integrator: "rk4".into(),
            dls_sigma: 0.3,
            dls_lambda: 0.11,
            switch_det: 1e-3,
            switch_damping: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    pub k_lk: [f64; 3],
    pub omega: [f64; 3],
    pub lambda_threshold: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            k_lk: [1.0; 3],
            omega: [0.5; 3],
            lambda_threshold: crate::icl::EXCITATION_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub robot: RobotParams,
    pub gains: GainsConfig,
    pub bounds: BoundsConfig,
    pub trajectory: TrajectoryConfig,
    pub sim: RunConfig,
    pub strategies: StrategyConfig,
    pub diagnostics: DiagnosticsConfig,
}

impl SimConfig {
    pub fn gains(&self) -> Gains {
        let g = &self.gains;
        Gains {
            k_r: g.k_r,
            k_phi: g.k_phi,
            k_1: g.k_1,
            k_icl: g.k_icl,
            gamma1: Mat2::from_diagonal(&Vec2::from(g.gamma1)),
            gamma2: Mat7::from_diagonal(&Vec7::from(g.gamma2)),
            alpha_s4: g.alpha_s4,
            n_windows: g.n_windows,
            window: g.delta_t,
            delay: g.delay,
        }
    }

    pub fn bounds(&self) -> BarrierBounds {
        let k_h = Vec2::from(self.bounds.k_h);
        match self.bounds.k_m {
            Some(km) => BarrierBounds::from_limits(k_h, k_h + Vec2::from(km)),
            None => BarrierBounds::from_limits(k_h, Vec2::from(self.bounds.k_r_bound)),
        }
    }

    pub fn zeta_j0(&self) -> KinematicParams {
        KinematicParams(Vec2::from(self.sim.zeta_j0))
    }

    pub fn zeta_y0(&self) -> Vec7 {
        Vec7::from(self.sim.zeta_y0)
    }

    pub fn p0(&self) -> Vec2 {
        Vec2::from(self.sim.p0)
    }

    /// Number of control steps in the run.
    pub fn steps(&self) -> usize {
        (self.sim.duration / self.sim.dt).round() as usize
    }

    /// Field-level checks of everything the simulator relies on.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.robot
            .validate()
            .map_err(|e| ConfigError::invalid("robot", e.to_string()))?;
        let g = &self.gains;
        for (name, v) in [
            ("gains.k_r", g.k_r),
            ("gains.k_phi", g.k_phi),
            ("gains.k_1", g.k_1),
            ("gains.k_icl", g.k_icl),
            ("gains.alpha_s4", g.alpha_s4),
            ("gains.delay", g.delay),
        ] {
            non_negative(name, v)?;
        }
        positive("gains.delta_t", g.delta_t)?;
        for (i, v) in g.gamma1.iter().enumerate() {
            positive(&format!("gains.gamma1[{i}]"), *v)?;
        }
        for (i, v) in g.gamma2.iter().enumerate() {
            positive(&format!("gains.gamma2[{i}]"), *v)?;
        }
        if let Some(km) = self.bounds.k_m {
            for (i, v) in km.iter().enumerate() {
                positive(&format!("bounds.k_m[{i}]"), *v)?;
            }
        }
        for (i, v) in self.bounds.k_h.iter().enumerate() {
            non_negative(&format!("bounds.k_h[{i}]"), *v)?;
        }
        if !self.bounds().is_valid() {
            return Err(ConfigError::invalid(
                "bounds.k_r_bound",
                "must exceed bounds.k_h on every axis",
            ));
        }
        let s = &self.sim;
        positive("sim.dt", s.dt)?;
        non_negative("sim.duration", s.duration)?;
        if s.plant_substeps == 0 {
            return Err(ConfigError::invalid("sim.plant_substeps", "must be at least 1"));
        }
        for (name, v) in s.p0.iter().chain(&s.zeta_j0).chain(&s.zeta_y0).map(|v| ("sim", *v)) {
            if !v.is_finite() {
                return Err(ConfigError::invalid(name, "initial values must be finite"));
            }
        }
        let st = &self.strategies;
        positive("strategies.dls_sigma", st.dls_sigma)?;
        non_negative("strategies.dls_lambda", st.dls_lambda)?;
        non_negative("strategies.switch_det", st.switch_det)?;
        positive("strategies.switch_damping", st.switch_damping)?;
        let d = &self.diagnostics;
        for i in 0..3 {
            positive(&format!("diagnostics.k_lk[{i}]"), d.k_lk[i])?;
            if !(d.omega[i] > g.delay) {
                return Err(ConfigError::invalid(
                    format!("diagnostics.omega[{i}]"),
                    format!("must exceed the delay {}", g.delay),
                ));
            }
        }
        non_negative("diagnostics.lambda_threshold", d.lambda_threshold)?;
        Ok(())
    }

    /// Parses a TOML document and applies overrides, without validation.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        Self::deserialize(toml::Value::Table(table)).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::invalid(name, format!("must be positive, got {v}")))
    }
}

fn non_negative(name: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(ConfigError::invalid(name, format!("must be non-negative, got {v}")))
    }
}

/// Parses the right-hand side of an override as a TOML value, falling back
/// to a bare string so that `strategies.integrator=rk2` works unquoted.
fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), ConfigError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::Override(spec.into()))?;
    let (key, raw) = (key.trim(), raw.trim());
    let (section, field) = key.split_once('.').ok_or_else(|| ConfigError::Override(spec.into()))?;
    if section.is_empty() || field.is_empty() || field.contains('.') {
        return Err(ConfigError::Override(spec.into()));
    }
    let value = parse_value(raw);

    // probe the key on its own so that typos surface as unknown keys
    let mut probe = toml::Table::new();
    let mut inner = toml::Table::new();
    inner.insert(field.into(), value.clone());
    probe.insert(section.into(), toml::Value::Table(inner));
    if let Err(e) = SimConfig::deserialize(toml::Value::Table(probe)) {
        let msg = e.to_string();
        if msg.contains("unknown field") {
            return Err(ConfigError::UnknownKey(key.into()));
        }
        return Err(ConfigError::invalid(key, msg.trim().to_string()));
    }

    let entry = table
        .entry(section)
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    let toml::Value::Table(sec) = entry else {
        return Err(ConfigError::invalid(section, "expected a table"));
    };
    sec.insert(field.into(), value);
    Ok(())
}

/// Reads, overrides and validates a configuration. `None` means the
/// reference experiment.
pub fn parse_config(path: Option<&Path>, overrides: &[String]) -> Result<SimConfig, ConfigError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
            path: p.display().to_string(),
            source,
        })?,
        None => String::new(),
    };
    let cfg = SimConfig::from_toml_str(&text, overrides)?;
    cfg.validate()?;
    Ok(cfg)
}
