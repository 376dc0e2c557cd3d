//! Scenario orchestration: paired reference/unknown runs, metrics and
//! region reports, artifact persistence, plotting, and preset scenarios.

mod artifact;
mod compare;
mod config;
mod plot;
mod presets;

pub use artifact::{load_artifact, read_pair_csv, write_artifact, ArtifactFiles, RunArtifact};
pub use compare::{compare_controllers, CompareConfig, ComparisonRow, ComparisonTable, PlantVariant};
pub use config::{
    BackendKind, BaseControllerCfg, CompensatorCfg, CustomSystemCfg, ScenarioConfig, SystemName,
};
pub use plot::{emit_plot, render_plot, PlotSeries, PlotStyle};
pub use presets::{compare5, preset, preset_names, presets};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controllers::{
    CompensatedController, Compensator, CompensatorParams, Controller, PidController,
    SetpointShapingController, SmcController,
};
use crate::designer::{
    refine_loop, ChatBackend, DesignMode, DesignSession, Evaluation, HttpTransport,
    RefineOptions, ReplayTransport, RulesBackend, SessionStatus,
};
use crate::dynamics::{simulate, SimParams, TargetSignal, Trajectory};
use crate::metrics::{
    compare_responses, diagnose, step_metrics, DiagnosisLabelSet, ResponseMetrics, TrackingStats,
    DEFAULT_SETTLE_BAND,
};
use crate::stability::{
    delta_bound, derive_region, region_check, verify_descent, BoundEnvelope, DescentReport,
    RegionSpec, RegionStatus,
};
use crate::{Error, Result};

/// Write a file atomically: temp file in the same directory, then rename.
/// An interrupted writer never leaves a half-written file at `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)?;
    }
    let file_name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::InvalidConfig(format!("bad path {:?}", path)))?;
    let tmp = path.with_file_name(format!(".{}.tmp{}", file_name, std::process::id()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn fnv1a(text: &str) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in text.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Per-scenario RNG stream: the configured seed mixed with the scenario
/// name, so suites of scenarios sharing one seed still draw independent
/// noise.
pub fn scenario_seed(cfg: &ScenarioConfig) -> u64 {
    cfg.seed ^ fnv1a(&cfg.name)
}

fn sim_params(cfg: &ScenarioConfig) -> SimParams {
    SimParams {
        dt: cfg.dt,
        horizon: cfg.horizon,
        substeps: cfg.substeps,
        x0: cfg.x0(),
        seed: scenario_seed(cfg),
    }
}

fn base_controller(cfg: &ScenarioConfig) -> Result<Box<dyn Controller>> {
    if let Some((gains, options)) = cfg.base_controller.smc_parts() {
        gains.validate()?;
        Ok(Box::new(SmcController::new(gains, options)))
    } else if let Some(gains) = cfg.base_controller.pid_gains() {
        Ok(Box::new(PidController::new(gains)))
    } else {
        Err(Error::InvalidConfig("unsupported base controller".into()))
    }
}

/// Simulate the reference system under the scenario's base controller and
/// target. The reference run never sees disturbance events.
pub fn run_reference(cfg: &ScenarioConfig) -> Result<Trajectory> {
    let spec = crate::dynamics::SystemSpec::reference();
    let mut ctrl = base_controller(cfg)?;
    simulate(&spec, ctrl.as_mut(), &cfg.target, &sim_params(cfg), &[])
}

/// Simulate the scenario's unknown system, optionally compensated against
/// the supplied reference trajectory.
pub fn run_unknown(
    cfg: &ScenarioConfig,
    compensation: Option<&CompensatorParams>,
    reference: &Trajectory,
) -> Result<Trajectory> {
    let spec = cfg.system_spec()?;
    let base = base_controller(cfg)?;
    let params = sim_params(cfg);
    match compensation {
        None => {
            let mut ctrl = base;
            simulate(&spec, ctrl.as_mut(), &cfg.target, &params, &cfg.disturbances)
        }
        Some(comp_params) => {
            let comp = Compensator::new(
                *comp_params,
                cfg.compensator.integral_mode(),
                reference.states.clone(),
            );
            if cfg.indirect_mode {
                let mut ctrl = SetpointShapingController::new(
                    base,
                    comp,
                    (cfg.setpoint_bounds[0], cfg.setpoint_bounds[1]),
                );
                let traj =
                    simulate(&spec, &mut ctrl, &cfg.target, &params, &cfg.disturbances)?;
                Ok(traj)
            } else {
                let mut ctrl = CompensatedController::new(base, comp);
                simulate(&spec, &mut ctrl, &cfg.target, &params, &cfg.disturbances)
            }
        }
    }
}

/// Evaluate one candidate compensator against the scenario: simulate the
/// unknown system with it and summarize the discrepancy from `reference`.
pub fn evaluate_candidate(
    cfg: &ScenarioConfig,
    reference: &Trajectory,
    candidate: &CompensatorParams,
) -> Result<Evaluation> {
    let unknown = run_unknown(cfg, Some(candidate), reference)?;
    summarize_pair(cfg, reference, &unknown)
}

fn summarize_pair(
    cfg: &ScenarioConfig,
    reference: &Trajectory,
    unknown: &Trajectory,
) -> Result<Evaluation> {
    let tracking = compare_responses(reference, unknown)?;
    let is_step = matches!(cfg.target, TargetSignal::Step { .. });
    let (response_reference, response_unknown) = if is_step {
        (
            Some(step_metrics(reference, DEFAULT_SETTLE_BAND)?),
            Some(step_metrics(unknown, DEFAULT_SETTLE_BAND)?),
        )
    } else {
        (None, None)
    };
    Ok(Evaluation {
        tracking,
        response_reference,
        response_unknown,
        amplitude: cfg.target.amplitude(),
        ref_series: reference.positions().collect(),
        unk_series: unknown.positions().collect(),
    })
}

/// Metrics bundle attached to every run artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsDoc {
    pub response_reference: Option<ResponseMetrics>,
    pub response_unknown: Option<ResponseMetrics>,
    pub response_baseline: Option<ResponseMetrics>,
    /// Mismatch labels for the uncompensated response (the baseline when
    /// present, otherwise the configured run).
    pub diagnosis: Option<DiagnosisLabelSet>,
    /// Reference vs the configured (possibly compensated) run.
    pub tracking: TrackingStats,
    /// Reference vs the uncompensated baseline, when one was run.
    pub tracking_baseline: Option<TrackingStats>,
}

/// Classification of the error state right after a forced-state event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisturbancePoint {
    pub time: f64,
    pub e1: f64,
    pub e2: f64,
    pub status: RegionStatus,
}

/// Convergence-region analysis attached to compensated runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub region: RegionSpec,
    /// Input gain the region was pinned at.
    pub b: f64,
    pub delta_bound: f64,
    pub envelope: BoundEnvelope,
    pub descent: DescentReport,
    pub disturbance_points: Vec<DisturbancePoint>,
}

/// Everything one scenario run produces, before persistence.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub config: ScenarioConfig,
    pub applied_compensator: Option<CompensatorParams>,
    pub reference: Trajectory,
    pub unknown: Trajectory,
    pub baseline: Option<Trajectory>,
    pub metrics: MetricsDoc,
    pub region: Option<RegionReport>,
    pub session: Option<DesignSession>,
}

fn designer_session(
    cfg: &ScenarioConfig,
    reference: &Trajectory,
) -> Result<Option<(CompensatorParams, DesignSession)>> {
    let CompensatorCfg::Designer {
        backend,
        max_iter,
        tol,
        endpoint,
        transcript,
        ..
    } = &cfg.compensator
    else {
        return Ok(None);
    };
    let opts = RefineOptions::<CompensatorParams> {
        mode: DesignMode::Compensator,
        max_iter: *max_iter,
        tol: *tol,
        ..RefineOptions::default()
    };
    let mut evaluator =
        |candidate: &CompensatorParams| evaluate_candidate(cfg, reference, candidate);
    let session = match backend {
        BackendKind::Rules => {
            let mut b = RulesBackend::default();
            refine_loop(&cfg.name, &mut evaluator, &mut b, &opts)?
        }
        BackendKind::Llm => {
            let endpoint = endpoint.clone().ok_or_else(|| {
                Error::InvalidConfig("llm backend requires endpoint config".into())
            })?;
            let mut b = ChatBackend::new(endpoint, HttpTransport);
            if let Some(path) = transcript {
                b = b.recording_to(path.clone());
            }
            refine_loop(&cfg.name, &mut evaluator, &mut b, &opts)?
        }
        BackendKind::Replay => {
            let path = transcript.as_ref().ok_or_else(|| {
                Error::InvalidConfig("replay backend requires a transcript path".into())
            })?;
            let endpoint = endpoint.clone().unwrap_or(crate::designer::EndpointConfig {
                base_url: "replay://local".into(),
                model_name: "recorded".into(),
                temperature: 0.0,
                timeout_secs: 1,
                max_retries: 0,
            });
            let mut b = ChatBackend::new(endpoint, ReplayTransport::from_file(path)?);
            refine_loop(&cfg.name, &mut evaluator, &mut b, &opts)?
        }
    };
    if session.status == SessionStatus::Faulted {
        return Err(Error::ControllerFault(format!(
            "design session faulted: {}",
            session.fault.as_deref().unwrap_or("unknown")
        )));
    }
    Ok(Some((session.final_params, session)))
}

/// Run one scenario end to end: reference run, compensator resolution
/// (fixed gains or a design session), unknown run, baseline run, metrics,
/// and the convergence-region report.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutcome> {
    cfg.validate()?;
    let reference = run_reference(cfg)?;

    let mut session = None;
    let applied = match &cfg.compensator {
        CompensatorCfg::None => None,
        CompensatorCfg::Fixed { kp, kd, kv, ki, .. } => {
            Some(CompensatorParams::new(*kp, *kd, *kv, *ki))
        }
        CompensatorCfg::Designer { .. } => {
            let (params, s) = designer_session(cfg, &reference)?
                .expect("designer config resolved to a session");
            session = Some(s);
            Some(params)
        }
    };

    let unknown = run_unknown(cfg, applied.as_ref(), &reference)?;
    let baseline = if applied.is_some() {
        Some(run_unknown(cfg, None, &reference)?)
    } else {
        None
    };

    let is_step = matches!(cfg.target, TargetSignal::Step { .. });
    let response_reference = is_step
        .then(|| step_metrics(&reference, DEFAULT_SETTLE_BAND))
        .transpose()?;
    let response_unknown = is_step
        .then(|| step_metrics(&unknown, DEFAULT_SETTLE_BAND))
        .transpose()?;
    let response_baseline = match &baseline {
        Some(b) if is_step => Some(step_metrics(b, DEFAULT_SETTLE_BAND)?),
        _ => None,
    };
    let diagnosis = match (&response_reference, &response_baseline, &response_unknown) {
        (Some(r), Some(b), _) => Some(diagnose(
            r,
            b,
            cfg.target.amplitude(),
            &Default::default(),
        )),
        (Some(r), None, Some(u)) => Some(diagnose(
            r,
            u,
            cfg.target.amplitude(),
            &Default::default(),
        )),
        _ => None,
    };
    let tracking = compare_responses(&reference, &unknown)?;
    let tracking_baseline = baseline
        .as_ref()
        .map(|b| compare_responses(&reference, b))
        .transpose()?;

    let region = match &applied {
        Some(params) => region_report(cfg, params, &reference, &unknown)?,
        None => None,
    };

    Ok(ScenarioOutcome {
        config: cfg.clone(),
        applied_compensator: applied,
        reference,
        unknown,
        baseline,
        metrics: MetricsDoc {
            response_reference,
            response_unknown,
            response_baseline,
            diagnosis,
            tracking,
            tracking_baseline,
        },
        region,
        session,
    })
}

fn region_report(
    cfg: &ScenarioConfig,
    params: &CompensatorParams,
    reference: &Trajectory,
    unknown: &Trajectory,
) -> Result<Option<RegionReport>> {
    let envelope = BoundEnvelope::paper_instance();
    let bound = delta_bound(&envelope)?;
    let b = 1.0;
    // Degenerate gains (no velocity-error damping) admit no region.
    if b * (params.kd + params.kv) <= 0.0 {
        return Ok(None);
    }
    let region = derive_region(params, bound, b)?;
    let descent = verify_descent(reference, unknown, &region)?;
    let mut disturbance_points = Vec::new();
    for event in &cfg.disturbances {
        let k = (event.time / cfg.dt).ceil() as usize;
        if k >= reference.len() {
            continue;
        }
        let e1 = reference.states[k].x1 - unknown.states[k].x1;
        let e2 = reference.states[k].x2 - unknown.states[k].x2;
        disturbance_points.push(DisturbancePoint {
            time: reference.t[k],
            e1,
            e2,
            status: region_check(e1, e2, &region),
        });
    }
    Ok(Some(RegionReport {
        region,
        b,
        delta_bound: bound,
        envelope,
        descent,
        disturbance_points,
    }))
}

/// Sample the region classification over a grid, for the region-map CSV.
pub fn region_map_csv(region: &RegionSpec, extent: f64, step: f64) -> String {
    let mut out = String::from("e1,e2,status\n");
    let n = (extent / step).round() as i64;
    for i in -n..=n {
        for j in -n..=n {
            let e1 = i as f64 * step;
            let e2 = j as f64 * step;
            let status = match region_check(e1, e2, region) {
                RegionStatus::Converging => "converging",
                RegionStatus::Inactive => "inactive",
                RegionStatus::Boundary => "boundary",
            };
            out.push_str(&format!("{},{},{}\n", e1, e2, status));
        }
    }
    out
}

impl ScenarioOutcome {
    /// Relative improvement of compensated over baseline tracking rmse.
    pub fn rmse_reduction(&self) -> Option<f64> {
        let base = self.metrics.tracking_baseline?;
        if base.rmse == 0.0 {
            return None;
        }
        Some(1.0 - self.metrics.tracking.rmse / base.rmse)
    }
}
