//! Deterministic rule-based designer.
//!
//! Encodes the observe-diagnose-boost reasoning trace: extract step
//! metrics, label the mismatch, then push the gain group that addresses
//! each label. Excess overshoot asks for more damping (kd, kv), a slow
//! rise asks for more proportional gain (kp), and a steady-state offset
//! asks for integral action (ki). Steps are multiplicative, nominally
//! 1.5x per targeted group, scaled mildly by the measured severity.

use serde::{Deserialize, Serialize};

use crate::controllers::CompensatorParams;
use crate::metrics::{DiagnosisLabel, DiagnosisLabelSet, ResponseMetrics};
use crate::{Error, Result};

use super::{DesignerBackend, Proposal, ProposeCtx};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RulesConfig {
    /// First proposal when starting from zero gains.
    pub bootstrap: CompensatorParams,
    /// Base multiplicative step: 0.5 means the targeted group grows 1.5x.
    pub step_factor: f64,
    /// Severity multiplier clamp.
    pub severity_range: (f64, f64),
    /// Lift-off values so a zero gain can still grow.
    pub kp_floor: f64,
    pub kd_floor: f64,
    pub kv_floor: f64,
    pub ki_floor: f64,
}

impl Default for RulesConfig {
    fn default() -> Self {
        RulesConfig {
            bootstrap: CompensatorParams::new(1.0, 0.5, 0.5, 0.0),
            step_factor: 0.5,
            severity_range: (1.0, 2.0),
            kp_floor: 1.0,
            kd_floor: 0.5,
            kv_floor: 0.5,
            ki_floor: 0.25,
        }
    }
}

/// Decision record serialized as the backend's reply, so rule-based
/// sessions carry the same parseable structure as endpoint sessions.
fn decision_reply(delta: &CompensatorParams, rationale: &str) -> String {
    serde_json::json!({
        "kp": delta.kp,
        "kd": delta.kd,
        "kv": delta.kv,
        "ki": delta.ki,
        "rationale": rationale,
    })
    .to_string()
}

/// One deterministic design step from the current gains and diagnosis.
pub fn rule_based_design(
    diag: &DiagnosisLabelSet,
    m_ref: &ResponseMetrics,
    m_unk: &ResponseMetrics,
    amplitude: f64,
    current: &CompensatorParams,
    cfg: &RulesConfig,
) -> (CompensatorParams, String) {
    let mut delta = CompensatorParams::ZERO;
    let mut reasons: Vec<String> = Vec::new();
    let (sev_lo, sev_hi) = cfg.severity_range;

    if diag.contains(&DiagnosisLabel::Matched) {
        return (delta, "responses match; no correction".to_string());
    }

    if diag.contains(&DiagnosisLabel::Sluggish) {
        let severity = match (m_unk.rise_time, m_ref.rise_time) {
            (Some(u), Some(r)) if r > 0.0 => (u / r - 1.0).clamp(sev_lo, sev_hi),
            _ => sev_hi,
        };
        delta.kp = cfg.step_factor * severity * current.kp.max(cfg.kp_floor);
        reasons.push("slow rise implies low gain; boost kp".to_string());
    }
    if diag.contains(&DiagnosisLabel::Overshooting) {
        let excess = m_unk.peak_overshoot_pct - m_ref.peak_overshoot_pct;
        let severity = (excess / 10.0).clamp(sev_lo, sev_hi);
        delta.kd = cfg.step_factor * severity * current.kd.max(cfg.kd_floor);
        delta.kv = cfg.step_factor * severity * current.kv.max(cfg.kv_floor);
        reasons.push("excess overshoot implies under-damping; boost kd and kv".to_string());
    }
    if diag.contains(&DiagnosisLabel::SteadyStateBias) {
        let bias = (m_unk.steady_state_error - m_ref.steady_state_error).abs();
        let severity = if amplitude != 0.0 {
            (bias / (0.02 * amplitude.abs())).clamp(sev_lo, sev_hi)
        } else {
            sev_hi
        };
        delta.ki = cfg.step_factor * severity * current.ki.max(cfg.ki_floor);
        reasons.push("steady-state offset implies gain mismatch; add integral action".to_string());
    }
    (delta, reasons.join("; "))
}

/// The deterministic backend. Never touches the network.
#[derive(Debug, Clone, Default)]
pub struct RulesBackend {
    pub cfg: RulesConfig,
}

impl RulesBackend {
    pub fn new(cfg: RulesConfig) -> Self {
        RulesBackend { cfg }
    }
}

impl DesignerBackend<CompensatorParams> for RulesBackend {
    fn name(&self) -> &'static str {
        "rules"
    }

    fn propose(&mut self, ctx: &ProposeCtx<'_, CompensatorParams>) -> Result<Proposal<CompensatorParams>> {
        if ctx.iteration == 1 && ctx.current == CompensatorParams::ZERO {
            let delta = self.cfg.bootstrap;
            let rationale = "bootstrap to the initial gain template";
            return Ok(Proposal {
                raw_reply: decision_reply(&delta, rationale),
                rationale: Some(rationale.to_string()),
                delta,
            });
        }
        let diag = ctx.diagnosis.ok_or_else(|| {
            Error::InvalidConfig(
                "rule-based designer needs step-response metrics; use a step target".into(),
            )
        })?;
        let (m_ref, m_unk) = match (
            &ctx.evaluation.response_reference,
            &ctx.evaluation.response_unknown,
        ) {
            (Some(r), Some(u)) => (r, u),
            _ => {
                return Err(Error::InvalidConfig(
                    "rule-based designer needs both metric sets".into(),
                ))
            }
        };
        let (mut delta, mut rationale) = rule_based_design(
            diag,
            m_ref,
            m_unk,
            ctx.evaluation.amplitude,
            &ctx.current,
            &self.cfg,
        );
        // Step indicators can match while the transient still deviates
        // from the reference; the loop only asks for a proposal when the
        // tracking error is above tolerance, so tighten the coupling
        // gains uniformly rather than standing still.
        if delta == CompensatorParams::ZERO {
            delta = CompensatorParams::new(
                self.cfg.step_factor * ctx.current.kp.max(self.cfg.kp_floor),
                self.cfg.step_factor * ctx.current.kd.max(self.cfg.kd_floor),
                self.cfg.step_factor * ctx.current.kv.max(self.cfg.kv_floor),
                0.0,
            );
            rationale =
                "indicators match but tracking error persists; tighten coupling gains".to_string();
        }
        Ok(Proposal {
            raw_reply: decision_reply(&delta, &rationale),
            rationale: Some(rationale),
            delta,
        })
    }
}
