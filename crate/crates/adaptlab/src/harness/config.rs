//! Scenario configuration: the structured text format driving every run.
//!
//! Unknown keys are rejected everywhere so a typo in an experiment file
//! fails loudly instead of silently falling back to a default.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::controllers::{
    CompensatorParams, IntegralMode, PidGains, SmcGains, SmcOptions, Switching,
};
use crate::designer::EndpointConfig;
use crate::dynamics::{
    CoeffFn, DisturbanceEvent, DisturbanceSpec, NoiseKind, StateVec, SystemSpec, TargetSignal,
};
use crate::{Error, Result};

/// One scenario: which plant, which base controller, what compensation,
/// what target, and the run geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub system: SystemName,
    /// Required when `system = "custom"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom_system: Option<CustomSystemCfg>,
    pub base_controller: BaseControllerCfg,
    pub compensator: CompensatorCfg,
    pub target: TargetSignal,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub disturbances: Vec<DisturbanceEvent>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    pub seed: u64,
    #[serde(default = "default_substeps")]
    pub substeps: u32,
    #[serde(default)]
    pub x0: [f64; 2],
    /// Override the plant's noise injection (None keeps the plant spec).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<bool>,
    /// Route compensation through the setpoint instead of the control signal.
    #[serde(default)]
    pub indirect_mode: bool,
    /// Clamp range for the shaped setpoint in indirect mode.
    #[serde(default = "default_setpoint_bounds")]
    pub setpoint_bounds: [f64; 2],
}

fn default_dt() -> f64 {
    0.001
}
fn default_horizon() -> f64 {
    5.0
}
fn default_substeps() -> u32 {
    1
}
fn default_setpoint_bounds() -> [f64; 2] {
    [-1000.0, 1000.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemName {
    Reference,
    Unknown1,
    Unknown2,
    MismatchU3,
    Custom,
}

/// Companion-form coefficients for a custom plant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomSystemCfg {
    pub a21: CoeffFn,
    pub a22: CoeffFn,
    pub b: CoeffFn,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disturbance: Option<DisturbanceSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseControllerCfg {
    Smc {
        #[serde(default = "default_lambda")]
        lambda: f64,
        #[serde(default = "default_k")]
        k: f64,
        #[serde(default = "default_gamma")]
        gamma: f64,
        /// Boundary-layer width; absent keeps the ideal sign switching.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        boundary_layer: Option<f64>,
        #[serde(default)]
        feedforward: bool,
    },
    Pid {
        kp: f64,
        #[serde(default)]
        ki: f64,
        #[serde(default)]
        kd: f64,
    },
}

fn default_lambda() -> f64 {
    5.0
}
fn default_k() -> f64 {
    2.0
}
fn default_gamma() -> f64 {
    1.0
}

impl Default for BaseControllerCfg {
    fn default() -> Self {
        BaseControllerCfg::Smc {
            lambda: default_lambda(),
            k: default_k(),
            gamma: default_gamma(),
            boundary_layer: None,
            feedforward: false,
        }
    }
}

impl BaseControllerCfg {
    pub fn smc_parts(&self) -> Option<(SmcGains, SmcOptions)> {
        match *self {
            BaseControllerCfg::Smc {
                lambda,
                k,
                gamma,
                boundary_layer,
                feedforward,
            } => Some((
                SmcGains { lambda, k, gamma },
                SmcOptions {
                    switching: match boundary_layer {
                        Some(epsilon) => Switching::BoundaryLayer { epsilon },
                        None => Switching::Sign,
                    },
                    feedforward,
                },
            )),
            BaseControllerCfg::Pid { .. } => None,
        }
    }

    pub fn pid_gains(&self) -> Option<PidGains> {
        match *self {
            BaseControllerCfg::Pid { kp, ki, kd } => Some(PidGains { kp, ki, kd }),
            BaseControllerCfg::Smc { .. } => None,
        }
    }
}

/// Where the compensator comes from: absent, pinned gains, or a design
/// session run before the final evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum CompensatorCfg {
    None,
    Fixed {
        kp: f64,
        kd: f64,
        kv: f64,
        ki: f64,
        #[serde(default)]
        integral_mode: IntegralMode,
    },
    Designer {
        backend: BackendKind,
        #[serde(default = "default_max_iter")]
        max_iter: u32,
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default)]
        integral_mode: IntegralMode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        endpoint: Option<EndpointConfig>,
        /// Transcript file for the replay backend (or recording target).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        transcript: Option<PathBuf>,
    },
}

fn default_max_iter() -> u32 {
    10
}

/// Default designer success tolerance on the tracking rmse, in the same
/// length units as the target (millimetres for the shipped scenarios).
fn default_tol() -> f64 {
    0.25
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Rules,
    Llm,
    Replay,
}

impl CompensatorCfg {
    pub fn fixed(params: CompensatorParams) -> Self {
        CompensatorCfg::Fixed {
            kp: params.kp,
            kd: params.kd,
            kv: params.kv,
            ki: params.ki,
            integral_mode: IntegralMode::default(),
        }
    }

    pub fn integral_mode(&self) -> IntegralMode {
        match self {
            CompensatorCfg::None => IntegralMode::default(),
            CompensatorCfg::Fixed { integral_mode, .. } => *integral_mode,
            CompensatorCfg::Designer { integral_mode, .. } => *integral_mode,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| Error::InvalidConfig(format!("serialize config: {}", e)))
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::InvalidConfig("scenario name must not be empty".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt={} must be > 0", self.dt)));
        }
        if !(self.horizon > self.dt) {
            return Err(Error::InvalidConfig(format!(
                "horizon={} must exceed dt={}",
                self.horizon, self.dt
            )));
        }
        if self.substeps == 0 {
            return Err(Error::InvalidConfig("substeps must be >= 1".into()));
        }
        if self.system == SystemName::Custom && self.custom_system.is_none() {
            return Err(Error::InvalidConfig(
                "system = \"custom\" requires a [custom_system] table".into(),
            ));
        }
        if self.system != SystemName::Custom && self.custom_system.is_some() {
            return Err(Error::InvalidConfig(
                "custom_system is only valid with system = \"custom\"".into(),
            ));
        }
        if let BaseControllerCfg::Smc {
            lambda, k, gamma, ..
        } = self.base_controller
        {
            SmcGains::new(lambda, k, gamma)?;
        }
        if let CompensatorCfg::Fixed { kp, kd, kv, ki, .. } = self.compensator {
            if ![kp, kd, kv, ki].iter().all(|g| g.is_finite()) {
                return Err(Error::InvalidConfig("compensator gains must be finite".into()));
            }
        }
        if let CompensatorCfg::Designer {
            backend,
            max_iter,
            tol,
            endpoint,
            transcript,
            ..
        } = &self.compensator
        {
            if *max_iter == 0 {
                return Err(Error::InvalidConfig("designer max_iter must be >= 1".into()));
            }
            if !(*tol > 0.0) {
                return Err(Error::InvalidConfig("designer tol must be > 0".into()));
            }
            if *backend == BackendKind::Llm && endpoint.is_none() {
                return Err(Error::InvalidConfig(
                    "llm backend requires an [compensator.endpoint] table".into(),
                ));
            }
            if *backend == BackendKind::Replay && transcript.is_none() {
                return Err(Error::InvalidConfig(
                    "replay backend requires a transcript path".into(),
                ));
            }
        }
        if self.indirect_mode && matches!(self.compensator, CompensatorCfg::None) {
            return Err(Error::InvalidConfig(
                "indirect_mode requires a compensator".into(),
            ));
        }
        if !(self.setpoint_bounds[0] < self.setpoint_bounds[1]) {
            return Err(Error::InvalidConfig("setpoint_bounds must be a proper interval".into()));
        }
        Ok(())
    }

    /// Build the plant this scenario drives.
    pub fn system_spec(&self) -> Result<SystemSpec> {
        let mut spec = match self.system {
            SystemName::Reference => SystemSpec::reference(),
            SystemName::Unknown1 => SystemSpec::unknown1(),
            SystemName::Unknown2 => SystemSpec::unknown2(),
            SystemName::MismatchU3 => SystemSpec::mismatch_u3(),
            SystemName::Custom => {
                let c = self.custom_system.as_ref().ok_or_else(|| {
                    Error::InvalidConfig("custom system table missing".into())
                })?;
                SystemSpec::custom(
                    c.a21,
                    c.a22,
                    c.b,
                    c.disturbance.unwrap_or(DisturbanceSpec::NONE),
                )
            }
        };
        if self.noise == Some(false) {
            if let crate::dynamics::SystemModel::Companion(ref mut m) = spec.model {
                m.disturbance.noise_kind = NoiseKind::None;
            }
        }
        Ok(spec)
    }

    pub fn x0(&self) -> StateVec {
        StateVec::new(self.x0[0], self.x0[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG_LIKE: &str = r#"
name = "example"
system = "unknown1"
dt = 0.001
horizon = 5.0
seed = 42

[base_controller]
kind = "smc"

[compensator]
source = "fixed"
kp = 20.0
kd = 10.0
kv = 8.5
ki = 1.0

[target]
kind = "step"
amplitude = 10.0
"#;

    #[test]
    fn parses_and_validates() {
        let cfg = ScenarioConfig::from_toml_str(FIG_LIKE).unwrap();
        assert_eq!(cfg.name, "example");
        assert_eq!(cfg.dt, 0.001);
        let (gains, opts) = cfg.base_controller.smc_parts().unwrap();
        assert_eq!(gains.lambda, 5.0);
        assert_eq!(gains.k, 2.0);
        assert_eq!(gains.gamma, 1.0);
        assert_eq!(opts.switching, Switching::Sign);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let text = FIG_LIKE.replace("horizon = 5.0", "horizon = 5.0\nhorizonn = 3.0");
        let err = ScenarioConfig::from_toml_str(&text).unwrap_err();
        assert!(matches!(err, Error::Toml(_)), "{err}");
    }

    #[test]
    fn missing_seed_is_an_error() {
        let text = FIG_LIKE.replace("seed = 42", "");
        assert!(ScenarioConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn zero_horizon_is_a_validation_fault() {
        let text = FIG_LIKE.replace("horizon = 5.0", "horizon = 0.0");
        let err = ScenarioConfig::from_toml_str(&text).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }

    #[test]
    fn roundtrips_through_toml() {
        let cfg = ScenarioConfig::from_toml_str(FIG_LIKE).unwrap();
        let text = cfg.to_toml_string().unwrap();
        let back = ScenarioConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
    }
}
