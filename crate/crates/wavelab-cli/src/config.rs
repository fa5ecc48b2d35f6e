//! Run configuration. Every section is optional in the file; missing keys take
//! the defaults below and unknown keys are rejected.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub scenario: String,
    pub grid: GridConfig,
    pub physics: PhysicsConfig,
    pub initial: InitialConfig,
    pub frequency: FrequencyConfig,
    pub evolution: EvolutionConfig,
    pub dispersive: DispersiveConfig,
    pub packets: PacketConfig,
    pub tolerances: Tolerances,
    /// Constant `(V, a)` used by `flow` and `parametrix` when no simulate
    /// artifact is given.
    pub coefficients: Option<ConstantCoeffs>,
    pub seed: u64,
    pub frozen_coeffs: bool,
    pub dump_strip: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: "rough-surface".into(),
            grid: GridConfig::default(),
            physics: PhysicsConfig::default(),
            initial: InitialConfig::default(),
            frequency: FrequencyConfig::default(),
            evolution: EvolutionConfig::default(),
            dispersive: DispersiveConfig::default(),
            packets: PacketConfig::default(),
            tolerances: Tolerances::default(),
            coefficients: None,
            seed: 7,
            frozen_coeffs: false,
            dump_strip: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n: usize,
    pub length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n: 512, length: 2.0 * PI }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsConfig {
    pub g: f64,
    pub h: f64,
    pub delta: f64,
    pub nz: usize,
    pub solver_tol: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        PhysicsConfig { g: 9.81, h: 1.0, delta: 0.1, nz: 24, solver_tol: 1e-10 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    PowerLaw,
    LinearWave,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    pub kind: InitialKind,
    pub eps: f64,
    /// Spectral decay of the power-law surface.
    pub power: f64,
    pub k_max: usize,
    /// Wavenumber of the linear wave.
    pub k: f64,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig { kind: InitialKind::PowerLaw, eps: 0.01, power: 2.5, k_max: 128, k: 8.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrequencyConfig {
    pub lambdas: Vec<f64>,
    pub c: f64,
    pub c1: f64,
    /// Gap scales `μ = λ^e` for each listed exponent.
    pub mu_exponents: Vec<f64>,
}

impl Default for FrequencyConfig {
    fn default() -> Self {
        FrequencyConfig { lambdas: vec![64.0, 128.0, 256.0, 512.0, 1024.0], c: 0.25, c1: 1.0 / 32.0, mu_exponents: vec![0.875, 0.9375] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_end: f64,
    pub filter_strength: f64,
    pub filter_order: i32,
    pub stride: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig { dt: 2.5e-3, t_end: 0.25, filter_strength: 36.0, filter_order: 36, stride: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DispersiveConfig {
    pub strichartz_t_end: f64,
    pub samples_per_scale: f64,
    pub smoothing_lambda: f64,
    pub kappas: Vec<f64>,
    pub smoothing_t_end: f64,
    pub samples_per_unit_time: f64,
    pub overlap_t_end: f64,
    pub two_point_lambda: f64,
    pub two_point_gaps: Vec<f64>,
}

impl Default for DispersiveConfig {
    fn default() -> Self {
        DispersiveConfig {
            strichartz_t_end: 0.25,
            samples_per_scale: 32.0,
            smoothing_lambda: 1024.0,
            kappas: vec![16.0, 32.0, 64.0, 128.0, 256.0],
            smoothing_t_end: 4.0,
            samples_per_unit_time: 1000.0,
            overlap_t_end: 0.5,
            two_point_lambda: 256.0,
            two_point_gaps: vec![0.05, 0.1, 0.2, 0.4],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PacketConfig {
    pub residual_samples: usize,
    pub residual_delta: f64,
    pub trials: usize,
    pub match_tol: f64,
    pub match_max_iter: usize,
    pub rays_per_cell: usize,
}

impl Default for PacketConfig {
    fn default() -> Self {
        PacketConfig { residual_samples: 16, residual_delta: 1e-4, trials: 20, match_tol: 1e-6, match_max_iter: 20, rays_per_cell: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub dtn_flat: f64,
    pub identity: f64,
    pub bilipschitz: f64,
    pub spreading_r2: f64,
    pub f1_gap: f64,
    pub frame: f64,
    pub contraction: f64,
    pub packet_exponent: f64,
    pub eikonal_gain: f64,
    pub orthogonality: f64,
    pub strichartz_exponent: f64,
    pub transport_exponent: f64,
    pub smoothing_exponent: f64,
    pub gap_factor: f64,
    pub overlap_exponent: f64,
    pub two_point_exponent: f64,
    pub two_point_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            dtn_flat: 1e-8,
            identity: 1e-2,
            bilipschitz: 0.5,
            spreading_r2: 0.99,
            f1_gap: 0.4,
            frame: 1e-10,
            contraction: 0.5,
            packet_exponent: -0.4,
            eikonal_gain: 2.0,
            orthogonality: 10.0,
            strichartz_exponent: 0.425,
            transport_exponent: 0.45,
            smoothing_exponent: -0.075,
            gap_factor: 2.0,
            overlap_exponent: 0.3,
            two_point_exponent: -1.0,
            two_point_slack: 0.15,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantCoeffs {
    pub v0: f64,
    pub a0: f64,
}

/// Parses a config. A run manifest is accepted too, so a finished artifact
/// can be replayed with `--config DIR/manifest.json`.
pub fn parse(text: &str) -> Result<RunConfig, String> {
    let v: serde_json::Value = serde_json::from_str(text).map_err(|e| format!("invalid JSON: {e}"))?;
    let v = match v {
        serde_json::Value::Object(ref m) if m.contains_key("command") && m.contains_key("config") => m["config"].clone(),
        other => other,
    };
    let cfg: RunConfig = serde_json::from_value(v).map_err(|e| e.to_string())?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        let pos = |name: &str, v: f64| if v > 0.0 && v.is_finite() { Ok(()) } else { Err(format!("{name} must be positive, got {v}")) };
        if self.grid.n < 16 || !self.grid.n.is_power_of_two() {
            return Err(format!("grid.n must be a power of two >= 16, got {}", self.grid.n));
        }
        pos("grid.length", self.grid.length)?;
        pos("physics.g", self.physics.g)?;
        pos("physics.h", self.physics.h)?;
        pos("physics.delta", self.physics.delta)?;
        pos("evolution.dt", self.evolution.dt)?;
        pos("evolution.t_end", self.evolution.t_end)?;
        if self.evolution.stride == 0 {
            return Err("evolution.stride must be at least 1".into());
        }
        if self.physics.nz < 16 {
            return Err(format!("physics.nz must be >= 16, got {}", self.physics.nz));
        }
        if self.frequency.lambdas.is_empty() {
            return Err("frequency.lambdas is empty".into());
        }
        for &l in &self.frequency.lambdas {
            pos("frequency.lambdas", l)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        assert_eq!(parse("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_are_named() {
        let e = parse(r#"{"grid": {"n": 64, "bogus_key": 1}}"#).unwrap_err();
        assert!(e.contains("bogus_key"), "{e}");
        let e = parse(r#"{"sceanrio": "x"}"#).unwrap_err();
        assert!(e.contains("sceanrio"), "{e}");
    }

    #[test]
    fn manifest_round_trips() {
        let mut c = RunConfig::default();
        c.seed = 99;
        let m = serde_json::json!({"command": "simulate", "config": c});
        assert_eq!(parse(&m.to_string()).unwrap(), c);
    }

    #[test]
    fn bad_values_rejected() {
        assert!(parse(r#"{"grid": {"n": 100}}"#).is_err());
        assert!(parse(r#"{"evolution": {"dt": -1}}"#).is_err());
    }
}
