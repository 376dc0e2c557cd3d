//! Controller comparison suite: run several controller families on the
//! same plants under identical conditions and tabulate the outcomes.

use serde::{Deserialize, Serialize};

use crate::controllers::{
    CompensatedController, Compensator, CompensatorParams, Controller, DirectAdaptiveConfig,
    DirectAdaptiveController, IntegralMode, MracConfig, MracController, PidController, PidGains,
    SmcController,
};
use crate::dynamics::{simulate, SimParams, TargetSignal, Trajectory};
use crate::metrics::{compare_responses, step_metrics, ResponseMetrics, TrackingStats,
    DEFAULT_SETTLE_BAND};
use crate::{Error, Result};

use super::config::{BaseControllerCfg, CustomSystemCfg, SystemName};
use super::ScenarioConfig;

/// One plant the suite runs every controller against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantVariant {
    pub name: String,
    pub system: SystemName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom_system: Option<CustomSystemCfg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerChoice {
    Pid,
    Smc,
    DirectAdaptive,
    Mrac,
    Compensated,
}

impl ControllerChoice {
    pub const ALL: [ControllerChoice; 5] = [
        ControllerChoice::Pid,
        ControllerChoice::Smc,
        ControllerChoice::DirectAdaptive,
        ControllerChoice::Mrac,
        ControllerChoice::Compensated,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            ControllerChoice::Pid => "pid",
            ControllerChoice::Smc => "smc",
            ControllerChoice::DirectAdaptive => "direct_adaptive",
            ControllerChoice::Mrac => "mrac",
            ControllerChoice::Compensated => "compensated",
        }
    }
}

/// Comparison-suite configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub name: String,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    pub seed: u64,
    pub target: TargetSignal,
    pub plants: Vec<PlantVariant>,
    /// Rows to run; empty means all controller families.
    #[serde(default)]
    pub controllers: Vec<ControllerChoice>,
    #[serde(default = "default_pid")]
    pub pid: PidGains,
    #[serde(default)]
    pub mrac: MracConfig,
    #[serde(default)]
    pub direct_adaptive: DirectAdaptiveConfig,
    /// Gains for the compensated row.
    #[serde(default = "CompensatorParams::paper")]
    pub compensator: CompensatorParams,
    #[serde(default)]
    pub base_controller: BaseControllerCfg,
}

fn default_dt() -> f64 {
    0.001
}
fn default_horizon() -> f64 {
    5.0
}
fn default_pid() -> PidGains {
    PidGains {
        kp: 30.0,
        ki: 20.0,
        kd: 8.0,
    }
}

impl CompareConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: CompareConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.horizon > self.dt) {
            return Err(Error::InvalidConfig("bad dt/horizon".into()));
        }
        for p in &self.plants {
            if p.system == SystemName::Custom && p.custom_system.is_none() {
                return Err(Error::InvalidConfig(format!(
                    "plant {} needs a custom_system table",
                    p.name
                )));
            }
        }
        Ok(())
    }

    fn controllers(&self) -> Vec<ControllerChoice> {
        if self.controllers.is_empty() {
            ControllerChoice::ALL.to_vec()
        } else {
            self.controllers.clone()
        }
    }

    /// Scenario skeleton for one plant variant (no compensation; the
    /// comparison wires controllers in explicitly).
    fn plant_scenario(&self, plant: &PlantVariant) -> ScenarioConfig {
        ScenarioConfig {
            name: format!("{}-{}", self.name, plant.name),
            system: plant.system,
            custom_system: plant.custom_system,
            base_controller: self.base_controller.clone(),
            compensator: super::CompensatorCfg::None,
            target: self.target,
            disturbances: Vec::new(),
            dt: self.dt,
            horizon: self.horizon,
            seed: self.seed,
            substeps: 1,
            x0: [0.0, 0.0],
            noise: None,
            indirect_mode: false,
            setpoint_bounds: [-1000.0, 1000.0],
        }
    }
}

/// One (controller, plant) cell of the comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub controller: String,
    pub plant: String,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<ResponseMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tracking: Option<TrackingStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub name: String,
    pub rows: Vec<ComparisonRow>,
}

impl std::fmt::Display for ComparisonTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{:<16} {:<12} {:<8} {:>12} {:>12} {:>12}",
            "controller", "plant", "status", "rmse", "overshoot%", "settle(s)"
        )?;
        for row in &self.rows {
            let rmse = row
                .tracking
                .map(|t| format!("{:.4}", t.rmse))
                .unwrap_or_else(|| "-".into());
            let os = row
                .response
                .map(|r| format!("{:.2}", r.peak_overshoot_pct))
                .unwrap_or_else(|| "-".into());
            let settle = row
                .response
                .and_then(|r| r.settling_time)
                .map(|s| format!("{:.3}", s))
                .unwrap_or_else(|| "-".into());
            writeln!(
                f,
                "{:<16} {:<12} {:<8} {:>12} {:>12} {:>12}",
                row.controller, row.plant, row.status, rmse, os, settle
            )?;
        }
        Ok(())
    }
}

fn run_row(
    cfg: &CompareConfig,
    scenario: &ScenarioConfig,
    choice: ControllerChoice,
    reference: &Trajectory,
) -> Result<Trajectory> {
    let spec = scenario.system_spec()?;
    let params = SimParams {
        dt: cfg.dt,
        horizon: cfg.horizon,
        substeps: 1,
        x0: scenario.x0(),
        seed: super::scenario_seed(scenario),
    };
    let mut ctrl: Box<dyn Controller> = match choice {
        ControllerChoice::Pid => Box::new(PidController::new(cfg.pid)),
        ControllerChoice::Smc => {
            let (gains, options) = cfg
                .base_controller
                .smc_parts()
                .ok_or_else(|| Error::InvalidConfig("smc row needs an smc base".into()))?;
            Box::new(SmcController::new(gains, options))
        }
        ControllerChoice::DirectAdaptive => {
            Box::new(DirectAdaptiveController::new(cfg.direct_adaptive)?)
        }
        ControllerChoice::Mrac => Box::new(MracController::new(cfg.mrac)?),
        ControllerChoice::Compensated => {
            let (gains, options) = cfg
                .base_controller
                .smc_parts()
                .ok_or_else(|| Error::InvalidConfig("compensated row needs an smc base".into()))?;
            let comp = Compensator::new(
                cfg.compensator,
                IntegralMode::default(),
                reference.states.clone(),
            );
            Box::new(CompensatedController::new(
                SmcController::new(gains, options),
                comp,
            ))
        }
    };
    simulate(&spec, ctrl.as_mut(), &cfg.target, &params, &[])
}

/// Run every configured controller on every plant variant under identical
/// conditions. A faulting row is isolated; the rest of the table stands.
pub fn compare_controllers(cfg: &CompareConfig) -> Result<ComparisonTable> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let is_step = matches!(cfg.target, TargetSignal::Step { .. });

    // Common benchmark: the reference system under the shared base controller.
    let reference = {
        let ref_scenario = ScenarioConfig {
            name: format!("{}-reference", cfg.name),
            system: SystemName::Reference,
            custom_system: None,
            base_controller: cfg.base_controller.clone(),
            compensator: super::CompensatorCfg::None,
            target: cfg.target,
            disturbances: Vec::new(),
            dt: cfg.dt,
            horizon: cfg.horizon,
            seed: cfg.seed,
            substeps: 1,
            x0: [0.0, 0.0],
            noise: None,
            indirect_mode: false,
            setpoint_bounds: [-1000.0, 1000.0],
        };
        super::run_reference(&ref_scenario)?
    };

    for plant in &cfg.plants {
        let scenario = cfg.plant_scenario(plant);
        for choice in cfg.controllers() {
            let row = match run_row(cfg, &scenario, choice, &reference) {
                Ok(traj) => ComparisonRow {
                    controller: choice.label().to_string(),
                    plant: plant.name.clone(),
                    status: "ok".into(),
                    response: if is_step {
                        Some(step_metrics(&traj, DEFAULT_SETTLE_BAND)?)
                    } else {
                        None
                    },
                    tracking: Some(compare_responses(&reference, &traj)?),
                },
                Err(e) => ComparisonRow {
                    controller: choice.label().to_string(),
                    plant: plant.name.clone(),
                    status: format!("faulted: {}", e),
                    response: None,
                    tracking: None,
                },
            };
            rows.push(row);
        }
    }
    Ok(ComparisonTable {
        name: cfg.name.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::presets;

    #[test]
    fn empty_plant_set_yields_empty_table() {
        let mut cfg = presets::compare5();
        cfg.plants.clear();
        let table = compare_controllers(&cfg).unwrap();
        assert!(table.rows.is_empty());
    }

    #[test]
    fn all_controllers_near_zero_error_on_reference_plant() {
        // With the plant equal to the reference model, every controller
        // family should regulate well and the table should carry a row
        // per (controller, plant) pair.
        let mut cfg = presets::compare5();
        cfg.horizon = 2.0;
        cfg.plants = vec![PlantVariant {
            name: "reference".into(),
            system: SystemName::Reference,
            custom_system: None,
        }];
        let table = compare_controllers(&cfg).unwrap();
        assert_eq!(table.rows.len(), 5);
        for row in &table.rows {
            assert_eq!(row.status, "ok", "{:?}", row);
        }
    }
}
