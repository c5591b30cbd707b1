//! TOML run configuration. Every section is optional and falls back to its
//! defaults; unknown keys are rejected.
//!
//! ```toml
//! [geometry]   # link lengths and finger mounting
//! [safety]     # torque/velocity/position limits, watchdog
//! [sim]        # joint simulator
//! [backend]    # real-time or not, period, late-action policy
//! [control]    # wrench and fingertip gains
//! [cube]       # manipulated object
//! [lift]       # lift task
//! [circle]     # circle task
//! [env]        # reaching task
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{TipGains, WrenchGains};
use crate::env::ReachTaskSpec;
use crate::kinematics::{GeometryConfig, IkParams};
use crate::object_sim::CubeParams;
use crate::robot::BackendConfig;
use crate::safety::SafetyConfig;
use crate::sim::SimParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlConfig {
    pub wrench: WrenchGains,
    pub tip: TipGains,
    pub ik: IkParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LiftConfig {
    /// m
    pub height: f64,
    /// Duration of the move, s.
    pub duration: f64,
    /// Default run length, s; the extra time after the move is a hold.
    pub run_time: f64,
}

impl Default for LiftConfig {
    fn default() -> Self {
        Self { height: 0.2, duration: 5.0, run_time: 6.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CircleConfig {
    /// m
    pub radius: f64,
    /// s
    pub period: f64,
    /// Default run length, s.
    pub run_time: f64,
}

impl Default for CircleConfig {
    fn default() -> Self {
        Self { radius: 0.05, period: 8.0, run_time: 8.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub safety: SafetyConfig,
    pub sim: SimParams,
    pub backend: BackendConfig,
    pub control: ControlConfig,
    pub cube: CubeParams,
    pub lift: LiftConfig,
    pub circle: CircleConfig,
    pub env: ReachTaskSpec,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let checks = [
            self.geometry.validate(),
            self.safety.validate(),
            self.sim.validate(),
            self.backend.validate(),
            self.cube.validate(),
            self.env.validate(),
        ];
        for check in checks {
            check.map_err(ConfigError::Invalid)?;
        }
        if self.sim.delta != self.backend.delta {
            return Err(ConfigError::Invalid(format!(
                "sim.delta ({}) must equal backend.delta ({})",
                self.sim.delta, self.backend.delta
            )));
        }
        let w = &self.control.wrench;
        let gains = [w.p_lin, w.d_lin, w.p_ang, w.d_ang, self.control.tip.p, self.control.tip.d];
        if gains.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
            return Err(ConfigError::Invalid("control gains must be finite and non-negative".into()));
        }
        if !(self.lift.height > 0.0 && self.lift.duration > 0.0 && self.lift.run_time > 0.0) {
            return Err(ConfigError::Invalid("lift height, duration and run_time must be positive".into()));
        }
        if !(self.circle.radius >= 0.0 && self.circle.period > 0.0 && self.circle.run_time > 0.0) {
            return Err(ConfigError::Invalid("circle radius must be non-negative, period and run_time positive".into()));
        }
        Ok(())
    }
}
