//! Control laws: the sliding-mode base controller, the additive
//! compensator, baselines, and adaptive comparison controllers.
//!
//! Controllers are stateful per-run objects (integral accumulators,
//! adaptive gains); build a fresh instance per run and never share one
//! across runs. Internal integrals use the rectangle rule at the control
//! rate and are updated before use within a step.
//!
//! The base controller always evaluates its `f`/`g` model terms from the
//! reference parameterization, regardless of which plant it actually
//! drives — that mismatch is exactly what the compensator absorbs.

use serde::{Deserialize, Serialize};

use crate::dynamics::{StateVec, TargetSample, REF_A21, REF_A22, REF_B};
use crate::{Error, Result};

/// Per-step controller input.
#[derive(Debug, Clone, Copy)]
pub struct StepCtx {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub state: StateVec,
    pub target: TargetSample,
}

/// Base and compensation components of one control sample.
/// The applied input is always `base + comp`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSample {
    pub base: f64,
    pub comp: f64,
}

impl ControlSample {
    pub fn base_only(u: f64) -> Self {
        ControlSample { base: u, comp: 0.0 }
    }

    pub fn total(&self) -> f64 {
        compose_total(self.base, self.comp)
    }
}

/// Total control law: base controller plus additive compensation.
/// The base structure stays fixed while compensation is designed.
pub fn compose_total(u_base: f64, u_comp: f64) -> f64 {
    u_base + u_comp
}

/// A composed control law driven by the simulation loop.
pub trait Controller {
    fn control(&mut self, ctx: &StepCtx) -> Result<ControlSample>;

    /// Clear accumulated state before a fresh run.
    fn reset(&mut self) {}
}

impl Controller for Box<dyn Controller> {
    fn control(&mut self, ctx: &StepCtx) -> Result<ControlSample> {
        (**self).control(ctx)
    }

    fn reset(&mut self) {
        (**self).reset();
    }
}

/// Always outputs zero; free responses and plumbing tests.
pub struct ZeroController;

impl Controller for ZeroController {
    fn control(&mut self, _ctx: &StepCtx) -> Result<ControlSample> {
        Ok(ControlSample::base_only(0.0))
    }
}

// ---------------------------------------------------------------------------
// Sliding-mode base controller
// ---------------------------------------------------------------------------

/// Sliding-mode gains; all strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmcGains {
    /// Surface slope (1/s).
    pub lambda: f64,
    /// Switching gain.
    pub k: f64,
    /// Gain on the integral of the sliding variable.
    pub gamma: f64,
}

impl SmcGains {
    pub fn new(lambda: f64, k: f64, gamma: f64) -> Result<Self> {
        let g = SmcGains { lambda, k, gamma };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.k > 0.0 && self.gamma > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "SMC gains must be strictly positive, got lambda={}, k={}, gamma={}",
                self.lambda, self.k, self.gamma
            )));
        }
        Ok(())
    }
}

impl Default for SmcGains {
    /// Laboratory defaults, pinned in the shipped configs.
    fn default() -> Self {
        SmcGains {
            lambda: 5.0,
            k: 2.0,
            gamma: 1.0,
        }
    }
}

/// Switching term: ideal sign (with sign(0) = 0) or a boundary-layer
/// tanh(s/eps) that trades exactness for chatter suppression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Switching {
    Sign,
    BoundaryLayer { epsilon: f64 },
}

impl Default for Switching {
    fn default() -> Self {
        Switching::Sign
    }
}

impl Switching {
    pub fn apply(&self, s: f64) -> f64 {
        match *self {
            Switching::Sign => {
                if s > 0.0 {
                    1.0
                } else if s < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Switching::BoundaryLayer { epsilon } => (s / epsilon).tanh(),
        }
    }
}

/// Extra behavior switches for the SMC law.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmcOptions {
    #[serde(default)]
    pub switching: Switching,
    /// Add the desired acceleration as a feedforward term (off keeps the
    /// published law verbatim; steps have zero feedforward anyway).
    #[serde(default)]
    pub feedforward: bool,
}

/// The sliding-mode law
/// `u = (1/g)(-f - lambda*edot - k*switch(s) - gamma*s_integral)`
/// with `e = x1 - x1d`, `edot = x2 - v_d`, and `s = edot + lambda*e`.
///
/// The caller accumulates `s_integral = ∫ s dt`.
pub fn smc_control(
    state: &StateVec,
    target: &TargetSample,
    gains: &SmcGains,
    f_val: f64,
    g_val: f64,
    s_integral: f64,
    options: &SmcOptions,
) -> Result<f64> {
    if g_val == 0.0 {
        return Err(Error::ControllerFault(
            "SMC input gain g evaluated to zero".into(),
        ));
    }
    let e = state.x1 - target.position;
    let edot = state.x2 - target.velocity;
    let s = edot + gains.lambda * e;
    let ff = if options.feedforward {
        target.acceleration
    } else {
        0.0
    };
    let u = (-f_val - gains.lambda * edot - gains.k * options.switching.apply(s)
        - gains.gamma * s_integral
        + ff)
        / g_val;
    if !u.is_finite() {
        return Err(Error::ControllerFault(format!("SMC produced u={}", u)));
    }
    Ok(u)
}

/// Stateful SMC wrapper. `f` and `g` come from the reference
/// parameterization evaluated at the driven plant's state.
#[derive(Debug, Clone)]
pub struct SmcController {
    pub gains: SmcGains,
    pub options: SmcOptions,
    s_integral: f64,
}

impl SmcController {
    pub fn new(gains: SmcGains, options: SmcOptions) -> Self {
        SmcController {
            gains,
            options,
            s_integral: 0.0,
        }
    }

    fn sliding_variable(&self, ctx: &StepCtx) -> f64 {
        let e = ctx.state.x1 - ctx.target.position;
        let edot = ctx.state.x2 - ctx.target.velocity;
        edot + self.gains.lambda * e
    }
}

impl Controller for SmcController {
    fn control(&mut self, ctx: &StepCtx) -> Result<ControlSample> {
        let s = self.sliding_variable(ctx);
        self.s_integral += s * ctx.dt;
        let f_val = REF_A21 * ctx.state.x1 + REF_A22 * ctx.state.x2;
        let u = smc_control(
            &ctx.state,
            &ctx.target,
            &self.gains,
            f_val,
            REF_B,
            self.s_integral,
            &self.options,
        )?;
        Ok(ControlSample::base_only(u))
    }

    fn reset(&mut self) {
        self.s_integral = 0.0;
    }
}

// ---------------------------------------------------------------------------
// Compensator
// ---------------------------------------------------------------------------

/// Compensator gain vector. Finite but not sign-constrained: the designer
/// may propose negative corrections. `kd` and `kv` both multiply the
/// velocity error and are kept separate so designer proposals match the
/// four-gain parameterization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CompensatorParams {
    pub kp: f64,
    pub kd: f64,
    pub kv: f64,
    pub ki: f64,
}

impl CompensatorParams {
    pub const ZERO: CompensatorParams = CompensatorParams {
        kp: 0.0,
        kd: 0.0,
        kv: 0.0,
        ki: 0.0,
    };

    pub fn new(kp: f64, kd: f64, kv: f64, ki: f64) -> Self {
        CompensatorParams { kp, kd, kv, ki }
    }

    /// The published gain set: (20.0, 10.0, 8.5, 1.0).
    pub fn paper() -> Self {
        CompensatorParams::new(20.0, 10.0, 8.5, 1.0)
    }

    pub fn is_finite(&self) -> bool {
        self.kp.is_finite() && self.kd.is_finite() && self.kv.is_finite() && self.ki.is_finite()
    }

    pub fn add(&self, delta: &CompensatorParams) -> CompensatorParams {
        CompensatorParams {
            kp: self.kp + delta.kp,
            kd: self.kd + delta.kd,
            kv: self.kv + delta.kv,
            ki: self.ki + delta.ki,
        }
    }

    pub fn sub(&self, other: &CompensatorParams) -> CompensatorParams {
        CompensatorParams {
            kp: self.kp - other.kp,
            kd: self.kd - other.kd,
            kv: self.kv - other.kv,
            ki: self.ki - other.ki,
        }
    }

    pub fn scale(&self, s: f64) -> CompensatorParams {
        CompensatorParams {
            kp: self.kp * s,
            kd: self.kd * s,
            kv: self.kv * s,
            ki: self.ki * s,
        }
    }
}

/// Tracking error between the reference and the unknown system.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorState {
    /// Position error `x1_ref - x1_unknown`.
    pub e1: f64,
    /// Velocity error `x2_ref - x2_unknown`.
    pub e2: f64,
    /// Rectangle-rule integral of the configured tracking error.
    pub integral: f64,
}

impl ErrorState {
    pub fn new(e1: f64, e2: f64, integral: f64) -> Self {
        ErrorState { e1, e2, integral }
    }

    pub fn scale(&self, s: f64) -> ErrorState {
        ErrorState {
            e1: self.e1 * s,
            e2: self.e2 * s,
            integral: self.integral * s,
        }
    }
}

/// The compensation law `u_comp = kp*e1 + (kd + kv)*e2 + ki*I`.
pub fn compensator_control(err: &ErrorState, params: &CompensatorParams) -> f64 {
    params.kp * err.e1 + (params.kd + params.kv) * err.e2 + params.ki * err.integral
}

/// Which error feeds the compensator integral `I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum IntegralMode {
    /// `I = ∫ (x1_desired - x1_unknown) dt` — the literal published definition.
    #[default]
    DesiredVsUnknown,
    /// `I = ∫ (x1_ref - x1_unknown) dt` — alternative aligning I with e1.
    ReferenceVsUnknown,
}

/// Tracks the reference-vs-unknown error and produces `u_comp`.
#[derive(Debug, Clone)]
pub struct Compensator {
    pub params: CompensatorParams,
    pub mode: IntegralMode,
    ref_states: Vec<StateVec>,
    integral: f64,
}

impl Compensator {
    pub fn new(params: CompensatorParams, mode: IntegralMode, ref_states: Vec<StateVec>) -> Self {
        Compensator {
            params,
            mode,
            ref_states,
            integral: 0.0,
        }
    }

    fn ref_state(&self, step: usize) -> StateVec {
        let idx = step.min(self.ref_states.len().saturating_sub(1));
        self.ref_states.get(idx).copied().unwrap_or(StateVec::ZERO)
    }

    /// Advance the error integral and return (error, u_comp) for this step.
    pub fn step(&mut self, ctx: &StepCtx) -> (ErrorState, f64) {
        let r = self.ref_state(ctx.step);
        let e1 = r.x1 - ctx.state.x1;
        let e2 = r.x2 - ctx.state.x2;
        let integrand = match self.mode {
            IntegralMode::DesiredVsUnknown => ctx.target.position - ctx.state.x1,
            IntegralMode::ReferenceVsUnknown => e1,
        };
        self.integral += integrand * ctx.dt;
        let err = ErrorState::new(e1, e2, self.integral);
        (err, compensator_control(&err, &self.params))
    }

    pub fn reset(&mut self) {
        self.integral = 0.0;
    }
}

/// Base controller plus the additive compensator.
pub struct CompensatedController<C> {
    pub base: C,
    pub comp: Compensator,
}

impl<C: Controller> CompensatedController<C> {
    pub fn new(base: C, comp: Compensator) -> Self {
        CompensatedController { base, comp }
    }
}

impl<C: Controller> Controller for CompensatedController<C> {
    fn control(&mut self, ctx: &StepCtx) -> Result<ControlSample> {
        let (_, u_comp) = self.comp.step(ctx);
        let base = self.base.control(ctx)?;
        Ok(ControlSample {
            base: base.base + base.comp,
            comp: u_comp,
        })
    }

    fn reset(&mut self) {
        self.base.reset();
        self.comp.reset();
    }
}

/// Indirect compensation: the correction shifts the setpoint handed to
/// an opaque inner controller whose gains stay untouched.
pub struct SetpointShapingController<C> {
    pub inner: C,
    pub comp: Compensator,
    pub bounds: (f64, f64),
    clamp_events: usize,
}

impl<C: Controller> SetpointShapingController<C> {
    pub fn new(inner: C, comp: Compensator, bounds: (f64, f64)) -> Self {
        SetpointShapingController {
            inner,
            comp,
            bounds,
            clamp_events: 0,
        }
    }

    /// Number of steps on which the shaped setpoint hit a bound.
    pub fn clamp_events(&self) -> usize {
        self.clamp_events
    }

    /// Shaped setpoint for one step, before the inner controller runs.
    pub fn shape(&mut self, ctx: &StepCtx) -> f64 {
        let (_, correction) = self.comp.step(ctx);
        let raw = ctx.target.position + correction;
        let shaped = raw.clamp(self.bounds.0, self.bounds.1);
        if shaped != raw {
            self.clamp_events += 1;
        }
        shaped
    }
}

impl<C: Controller> Controller for SetpointShapingController<C> {
    fn control(&mut self, ctx: &StepCtx) -> Result<ControlSample> {
        let shaped = self.shape(ctx);
        let inner_ctx = StepCtx {
            target: TargetSample {
                position: shaped,
                ..ctx.target
            },
            ..*ctx
        };
        let c = self.inner.control(&inner_ctx)?;
        Ok(ControlSample::base_only(c.base + c.comp))
    }

    fn reset(&mut self) {
        self.inner.reset();
        self.comp.reset();
        self.clamp_events = 0;
    }
}

// ---------------------------------------------------------------------------
// PID baseline
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    #[serde(default)]
    pub ki: f64,
    #[serde(default)]
    pub kd: f64,
}

/// Textbook PID on desired-vs-plant error.
pub fn pid_control(e: f64, edot: f64, e_integral: f64, gains: &PidGains) -> f64 {
    gains.kp * e + gains.ki * e_integral + gains.kd * edot
}

#[derive(Debug, Clone)]
pub struct PidController {
    pub gains: PidGains,
    integral: f64,
}

impl PidController {
    pub fn new(gains: PidGains) -> Self {
        PidController {
            gains,
            integral: 0.0,
        }
    }
}

impl Controller for PidController {
    fn control(&mut self, ctx: &StepCtx) -> Result<ControlSample> {
        let e = ctx.target.position - ctx.state.x1;
        let edot = ctx.target.velocity - ctx.state.x2;
        self.integral += e * ctx.dt;
        Ok(ControlSample::base_only(pid_control(
            e,
            edot,
            self.integral,
            &self.gains,
        )))
    }

    fn reset(&mut self) {
        self.integral = 0.0;
    }
}

// ---------------------------------------------------------------------------
// Model reference adaptive controller
// ---------------------------------------------------------------------------

/// Solution of `Am' P + P Am = -I` for the reference closed loop
/// Am = [[0, 1], [-5, -3]]: P = [[1.3, 0.1], [0.1, 0.2]], so
/// e'PB = 0.1 e1 + 0.2 e2.
const MRAC_PB: (f64, f64) = (0.1, 0.2);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MracConfig {
    /// Adaptation rates for (theta1, theta2, theta3); all positive.
    pub gamma: [f64; 3],
    #[serde(default)]
    pub theta0: [f64; 3],
    /// Projection bound: each theta is clamped to this magnitude.
    pub theta_bound: f64,
    /// Command gain of the reference model input column [0, command_gain];
    /// 5.0 gives unit DC gain for the reference dynamics.
    pub command_gain: f64,
}

impl Default for MracConfig {
    fn default() -> Self {
        MracConfig {
            gamma: [2.0, 2.0, 2.0],
            theta0: [0.0; 3],
            theta_bound: 50.0,
            command_gain: 5.0,
        }
    }
}

impl MracConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gamma.iter().any(|g| !(*g > 0.0)) {
            return Err(Error::InvalidConfig(
                "MRAC adaptation rates must be positive".into(),
            ));
        }
        if !(self.theta_bound > 0.0) {
            return Err(Error::InvalidConfig("MRAC theta bound must be positive".into()));
        }
        Ok(())
    }
}

/// MRAC control law `u = theta1*x1 + theta2*x2 + theta3*r`.
pub fn mrac_control(state: &StateVec, theta: &[f64; 3], r: f64) -> f64 {
    theta[0] * state.x1 + theta[1] * state.x2 + theta[2] * r
}

/// One adaptation step `theta -= dt * gamma .* phi * (e'PB)` with
/// projection onto the configured bound. `e` is plant minus model.
pub fn mrac_update(
    theta: &[f64; 3],
    e: &StateVec,
    state: &StateVec,
    r: f64,
    gamma: &[f64; 3],
    dt: f64,
    bound: f64,
) -> [f64; 3] {
    let epb = MRAC_PB.0 * e.x1 + MRAC_PB.1 * e.x2;
    let phi = [state.x1, state.x2, r];
    let mut next = *theta;
    for j in 0..3 {
        next[j] = (next[j] - dt * gamma[j] * phi[j] * epb).clamp(-bound, bound);
    }
    next
}

/// MRAC with its own internally integrated reference model.
#[derive(Debug, Clone)]
pub struct MracController {
    pub cfg: MracConfig,
    theta: [f64; 3],
    model_state: StateVec,
}

impl MracController {
    pub fn new(cfg: MracConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(MracController {
            theta: cfg.theta0,
            cfg,
            model_state: StateVec::ZERO,
        })
    }

    pub fn with_theta(mut self, theta: [f64; 3]) -> Self {
        self.theta = theta;
        self
    }

    pub fn theta(&self) -> [f64; 3] {
        self.theta
    }

    pub fn model_state(&self) -> StateVec {
        self.model_state
    }

    /// Model error at a plant state: plant minus reference model.
    pub fn model_error(&self, state: &StateVec) -> StateVec {
        StateVec::new(
            state.x1 - self.model_state.x1,
            state.x2 - self.model_state.x2,
        )
    }

    fn model_deriv(&self, s: &StateVec, r: f64) -> StateVec {
        StateVec {
            x1: s.x2,
            x2: REF_A21 * s.x1 + REF_A22 * s.x2 + self.cfg.command_gain * r,
        }
    }

    fn advance_model(&mut self, r: f64, dt: f64) {
        let s = self.model_state;
        let k1 = self.model_deriv(&s, r);
        let half = dt / 2.0;
        let k2 = self.model_deriv(
            &StateVec::new(s.x1 + half * k1.x1, s.x2 + half * k1.x2),
            r,
        );
        let k3 = self.model_deriv(
            &StateVec::new(s.x1 + half * k2.x1, s.x2 + half * k2.x2),
            r,
        );
        let k4 = self.model_deriv(&StateVec::new(s.x1 + dt * k3.x1, s.x2 + dt * k3.x2), r);
        self.model_state = StateVec {
            x1: s.x1 + dt / 6.0 * (k1.x1 + 2.0 * k2.x1 + 2.0 * k3.x1 + k4.x1),
            x2: s.x2 + dt / 6.0 * (k1.x2 + 2.0 * k2.x2 + 2.0 * k3.x2 + k4.x2),
        };
    }
}

impl Controller for MracController {
    fn control(&mut self, ctx: &StepCtx) -> Result<ControlSample> {
        let r = ctx.target.position;
        let u = mrac_control(&ctx.state, &self.theta, r);
        if !u.is_finite() {
            return Err(Error::ControllerFault(format!("MRAC produced u={}", u)));
        }
        let e = self.model_error(&ctx.state);
        self.theta = mrac_update(
            &self.theta,
            &e,
            &ctx.state,
            r,
            &self.cfg.gamma,
            ctx.dt,
            self.cfg.theta_bound,
        );
        if self.theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::ControllerFault("MRAC gains diverged".into()));
        }
        self.advance_model(r, ctx.dt);
        Ok(ControlSample::base_only(u))
    }

    fn reset(&mut self) {
        self.theta = self.cfg.theta0;
        self.model_state = StateVec::ZERO;
    }
}

// ---------------------------------------------------------------------------
// Direct adaptive controller (certainty equivalence on the input gain)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectAdaptiveConfig {
    /// Adaptation rate for the payload/inverse-gain estimate.
    pub gamma_m: f64,
    pub m0: f64,
    /// Projection interval for the estimate.
    pub m_bounds: (f64, f64),
    pub smc: SmcGains,
    #[serde(default)]
    pub options: SmcOptions,
}

impl Default for DirectAdaptiveConfig {
    fn default() -> Self {
        DirectAdaptiveConfig {
            gamma_m: 0.05,
            m0: 1.0,
            m_bounds: (0.05, 10.0),
            smc: SmcGains::default(),
            options: SmcOptions::default(),
        }
    }
}

/// Certainty-equivalence control `u = m_hat * v` where `v` is the
/// desired acceleration command.
pub fn direct_adaptive_control(m_hat: f64, v: f64) -> f64 {
    m_hat * v
}

/// Gradient update `m_hat' = m_hat - dt * gamma_m * s * phi`, projected
/// into the configured interval.
pub fn payload_update(m_hat: f64, s: f64, phi: f64, gamma_m: f64, dt: f64, bounds: (f64, f64)) -> f64 {
    (m_hat - dt * gamma_m * s * phi).clamp(bounds.0, bounds.1)
}

#[derive(Debug, Clone)]
pub struct DirectAdaptiveController {
    pub cfg: DirectAdaptiveConfig,
    m_hat: f64,
    s_integral: f64,
}

impl DirectAdaptiveController {
    pub fn new(cfg: DirectAdaptiveConfig) -> Result<Self> {
        if !(cfg.gamma_m > 0.0) {
            return Err(Error::InvalidConfig("gamma_m must be positive".into()));
        }
        if !(cfg.m_bounds.0 < cfg.m_bounds.1) {
            return Err(Error::InvalidConfig("m_bounds must be a proper interval".into()));
        }
        Ok(DirectAdaptiveController {
            m_hat: cfg.m0,
            cfg,
            s_integral: 0.0,
        })
    }

    pub fn m_hat(&self) -> f64 {
        self.m_hat
    }
}

impl Controller for DirectAdaptiveController {
    fn control(&mut self, ctx: &StepCtx) -> Result<ControlSample> {
        let e = ctx.state.x1 - ctx.target.position;
        let edot = ctx.state.x2 - ctx.target.velocity;
        let s = edot + self.cfg.smc.lambda * e;
        self.s_integral += s * ctx.dt;
        let f_val = REF_A21 * ctx.state.x1 + REF_A22 * ctx.state.x2;
        // Acceleration command: the SMC numerator with unit input gain.
        let v = smc_control(
            &ctx.state,
            &ctx.target,
            &self.cfg.smc,
            f_val,
            1.0,
            self.s_integral,
            &self.cfg.options,
        )?;
        let u = direct_adaptive_control(self.m_hat, v);
        self.m_hat = payload_update(self.m_hat, s, v, self.cfg.gamma_m, ctx.dt, self.cfg.m_bounds);
        Ok(ControlSample::base_only(u))
    }

    fn reset(&mut self) {
        self.m_hat = self.cfg.m0;
        self.s_integral = 0.0;
    }
}

// ---------------------------------------------------------------------------
// MIT-rule adaptive PID (template family for direct controller design)
// ---------------------------------------------------------------------------

/// Parameter set a direct-design proposal instantiates: initial PID gains
/// plus one gradient adaptation rate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MitPidParams {
    pub kp0: f64,
    pub ki0: f64,
    pub kd0: f64,
    pub gamma: f64,
}

/// PID whose gains follow the MIT gradient rule
/// `theta_dot = gamma * e * phi` with the loop-sensitivity constant
/// absorbed into gamma; gains are projected into [0, cap].
#[derive(Debug, Clone)]
pub struct MitPidController {
    pub params: MitPidParams,
    gains: PidGains,
    integral: f64,
    cap: f64,
}

impl MitPidController {
    pub fn new(params: MitPidParams) -> Result<Self> {
        if !(params.gamma >= 0.0) {
            return Err(Error::InvalidConfig("MIT rule gamma must be >= 0".into()));
        }
        let cap = 10.0 * (params.kp0.abs() + params.ki0.abs() + params.kd0.abs() + 1.0);
        Ok(MitPidController {
            gains: PidGains {
                kp: params.kp0,
                ki: params.ki0,
                kd: params.kd0,
            },
            params,
            integral: 0.0,
            cap,
        })
    }

    pub fn gains(&self) -> PidGains {
        self.gains
    }
}

impl Controller for MitPidController {
    fn control(&mut self, ctx: &StepCtx) -> Result<ControlSample> {
        let e = ctx.target.position - ctx.state.x1;
        let edot = ctx.target.velocity - ctx.state.x2;
        self.integral += e * ctx.dt;
        let u = pid_control(e, edot, self.integral, &self.gains);
        let g = self.params.gamma;
        self.gains.kp = (self.gains.kp + ctx.dt * g * e * e).clamp(0.0, self.cap);
        self.gains.ki = (self.gains.ki + ctx.dt * g * e * self.integral).clamp(0.0, self.cap);
        self.gains.kd = (self.gains.kd + ctx.dt * g * e * edot).clamp(0.0, self.cap);
        if !u.is_finite() {
            return Err(Error::ControllerFault(format!("MIT-PID produced u={}", u)));
        }
        Ok(ControlSample::base_only(u))
    }

    fn reset(&mut self) {
        self.gains = PidGains {
            kp: self.params.kp0,
            ki: self.params.ki0,
            kd: self.params.kd0,
        };
        self.integral = 0.0;
    }
}
