//! System families and deterministic fixed-step simulation.
//!
//! Every plant in the family is second order. The companion-form members
//! satisfy `ẋ1 = x2` with the input entering only the second equation;
//! the structural-mismatch member deliberately violates that by feeding
//! the input into the first state equation as well.
//!
//! Integration is classical fourth-order Runge-Kutta with a zero-order
//! hold on the control and on the per-step noise sample. The control
//! sample rate is fixed by `dt`; `substeps` refines the integration grid
//! inside one control interval without touching the control sequence, so
//! refinement studies compare like with like.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controllers::{ControlSample, Controller, StepCtx};
use crate::{Error, Result};

/// Reference-system coefficients (position row of the companion form).
pub const REF_A21: f64 = -5.0;
pub const REF_A22: f64 = -3.0;
pub const REF_B: f64 = 1.0;

/// Two-dimensional state: position and velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateVec {
    pub x1: f64,
    pub x2: f64,
}

impl StateVec {
    pub const ZERO: StateVec = StateVec { x1: 0.0, x2: 0.0 };

    pub fn new(x1: f64, x2: f64) -> Self {
        StateVec { x1, x2 }
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }

    fn scaled_add(&self, scale: f64, other: &StateVec) -> StateVec {
        StateVec {
            x1: self.x1 + scale * other.x1,
            x2: self.x2 + scale * other.x2,
        }
    }
}

/// Shape of a state-dependent coefficient: `offset + amp * wave(freq * arg)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Waveform {
    Sin,
    Cos,
    Tanh,
}

/// Which state component feeds the waveform argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoeffArg {
    X1,
    X2,
}

/// State-dependent coefficient `offset + amp * wave(freq * x_i)`.
///
/// All waveforms have range [-1, 1], so the coefficient range is exactly
/// `offset ± |amp|` — that closure under bounds is what the envelope
/// checks and random system draws rely on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffFn {
    pub offset: f64,
    #[serde(default)]
    pub amp: f64,
    #[serde(default = "one")]
    pub freq: f64,
    #[serde(default = "default_wave")]
    pub wave: Waveform,
    #[serde(default = "default_arg")]
    pub arg: CoeffArg,
}

fn one() -> f64 {
    1.0
}
fn default_wave() -> Waveform {
    Waveform::Sin
}
fn default_arg() -> CoeffArg {
    CoeffArg::X1
}

impl CoeffFn {
    pub fn constant(value: f64) -> Self {
        CoeffFn {
            offset: value,
            amp: 0.0,
            freq: 1.0,
            wave: Waveform::Sin,
            arg: CoeffArg::X1,
        }
    }

    pub fn new(offset: f64, amp: f64, freq: f64, wave: Waveform, arg: CoeffArg) -> Self {
        CoeffFn {
            offset,
            amp,
            freq,
            wave,
            arg,
        }
    }

    pub fn eval(&self, state: &StateVec) -> f64 {
        let x = match self.arg {
            CoeffArg::X1 => state.x1,
            CoeffArg::X2 => state.x2,
        };
        let w = match self.wave {
            Waveform::Sin => (self.freq * x).sin(),
            Waveform::Cos => (self.freq * x).cos(),
            Waveform::Tanh => (self.freq * x).tanh(),
        };
        self.offset + self.amp * w
    }

    /// Closed range of the coefficient over all states.
    pub fn range(&self) -> (f64, f64) {
        (self.offset - self.amp.abs(), self.offset + self.amp.abs())
    }

    /// Human-readable rendering, e.g. `-3.5 + 3*sin(0.5*x1)`.
    pub fn describe(&self) -> String {
        if self.amp == 0.0 {
            return format!("{}", self.offset);
        }
        let wave = match self.wave {
            Waveform::Sin => "sin",
            Waveform::Cos => "cos",
            Waveform::Tanh => "tanh",
        };
        let arg = match self.arg {
            CoeffArg::X1 => "x1",
            CoeffArg::X2 => "x2",
        };
        format!(
            "{} + {}*{}({}*{})",
            self.offset, self.amp, wave, self.freq, arg
        )
    }
}

/// Additive disturbance on the velocity equation: `d = bias(x) + gain * xi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSpec {
    /// State-dependent bias term, e.g. `-0.2*sin(x1)`.
    pub bias: Option<CoeffFn>,
    #[serde(default)]
    pub noise_gain: f64,
    #[serde(default)]
    pub noise_kind: NoiseKind,
    /// Stream offset mixed with the run seed so distinct disturbance
    /// specs under the same run seed draw distinct noise.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    None,
    UniformSymmetric,
}

impl DisturbanceSpec {
    pub const NONE: DisturbanceSpec = DisturbanceSpec {
        bias: None,
        noise_gain: 0.0,
        noise_kind: NoiseKind::None,
        seed: 0,
    };

    pub fn eval(&self, state: &StateVec, xi: f64) -> f64 {
        let bias = self.bias.map(|b| b.eval(state)).unwrap_or(0.0);
        let noise = match self.noise_kind {
            NoiseKind::None => 0.0,
            NoiseKind::UniformSymmetric => self.noise_gain * xi,
        };
        bias + noise
    }

    /// Worst-case |d(t)| over all states and noise samples.
    pub fn magnitude_bound(&self) -> f64 {
        let bias_max = self
            .bias
            .map(|b| {
                let (lo, hi) = b.range();
                lo.abs().max(hi.abs())
            })
            .unwrap_or(0.0);
        let noise_max = match self.noise_kind {
            NoiseKind::None => 0.0,
            NoiseKind::UniformSymmetric => self.noise_gain.abs(),
        };
        bias_max + noise_max
    }

    pub fn has_noise(&self) -> bool {
        self.noise_kind != NoiseKind::None && self.noise_gain != 0.0
    }
}

/// Companion-form member: `ẋ1 = x2`, `ẋ2 = a21*x1 + a22*x2 + b*u + d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompanionModel {
    pub a21: CoeffFn,
    pub a22: CoeffFn,
    pub b: CoeffFn,
    pub disturbance: DisturbanceSpec,
}

/// Structural-mismatch member: the input leaks into the first equation
/// (`ẋ1 = x2 + g1*u`), so the plant is not companion form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MismatchModel {
    pub a21: f64,
    pub a22: f64,
    pub g1: f64,
    pub g2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemModel {
    Companion(CompanionModel),
    Mismatch(MismatchModel),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    Reference,
    Unknown1,
    Unknown2,
    MismatchU3,
    CustomCompanion,
}

/// A parameterized plant. Constructors cover the named family members;
/// `custom` builds arbitrary companion-form systems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub kind: SystemKind,
    pub model: SystemModel,
}

impl SystemSpec {
    /// Reference system: `ẋ2 = -5x1 - 3x2 + u`, no disturbance.
    pub fn reference() -> Self {
        SystemSpec {
            kind: SystemKind::Reference,
            model: SystemModel::Companion(CompanionModel {
                a21: CoeffFn::constant(REF_A21),
                a22: CoeffFn::constant(REF_A22),
                b: CoeffFn::constant(REF_B),
                disturbance: DisturbanceSpec::NONE,
            }),
        }
    }

    /// Unknown System 1:
    /// `a21 = -3.5 + 3sin(0.5x1)`, `a22 = -3 + 3cos(0.2x2)`,
    /// `b = 2 + 2sin(x1)`, `d = -0.2sin(x1) + 0.05ξ`.
    pub fn unknown1() -> Self {
        SystemSpec {
            kind: SystemKind::Unknown1,
            model: SystemModel::Companion(CompanionModel {
                a21: CoeffFn::new(-3.5, 3.0, 0.5, Waveform::Sin, CoeffArg::X1),
                a22: CoeffFn::new(-3.0, 3.0, 0.2, Waveform::Cos, CoeffArg::X2),
                b: CoeffFn::new(2.0, 2.0, 1.0, Waveform::Sin, CoeffArg::X1),
                disturbance: DisturbanceSpec {
                    bias: Some(CoeffFn::new(0.0, -0.2, 1.0, Waveform::Sin, CoeffArg::X1)),
                    noise_gain: 0.05,
                    noise_kind: NoiseKind::UniformSymmetric,
                    seed: 1,
                },
            }),
        }
    }

    /// Unknown System 2:
    /// `a21 = -4 + 2sin(x1)`, `a22 = -10 + 3tanh(0.2x2)`,
    /// `b = 0.8 + 0.2cos(x1)`, `d = -0.2sin(x1) + 0.5ξ`.
    pub fn unknown2() -> Self {
        SystemSpec {
            kind: SystemKind::Unknown2,
            model: SystemModel::Companion(CompanionModel {
                a21: CoeffFn::new(-4.0, 2.0, 1.0, Waveform::Sin, CoeffArg::X1),
                a22: CoeffFn::new(-10.0, 3.0, 0.2, Waveform::Tanh, CoeffArg::X2),
                b: CoeffFn::new(0.8, 0.2, 1.0, Waveform::Cos, CoeffArg::X1),
                disturbance: DisturbanceSpec {
                    bias: Some(CoeffFn::new(0.0, -0.2, 1.0, Waveform::Sin, CoeffArg::X1)),
                    noise_gain: 0.5,
                    noise_kind: NoiseKind::UniformSymmetric,
                    seed: 2,
                },
            }),
        }
    }

    /// Unknown System 3: comparable complexity to the others but the
    /// input enters the position equation, breaking companion structure.
    pub fn mismatch_u3() -> Self {
        SystemSpec {
            kind: SystemKind::MismatchU3,
            model: SystemModel::Mismatch(MismatchModel {
                a21: -4.0,
                a22: -3.0,
                g1: 0.7,
                g2: 0.5,
            }),
        }
    }

    pub fn custom(a21: CoeffFn, a22: CoeffFn, b: CoeffFn, disturbance: DisturbanceSpec) -> Self {
        SystemSpec {
            kind: SystemKind::CustomCompanion,
            model: SystemModel::Companion(CompanionModel {
                a21,
                a22,
                b,
                disturbance,
            }),
        }
    }

    /// Companion coefficients evaluated at a state; `None` for the
    /// structural-mismatch member.
    pub fn companion_coeffs(&self, state: &StateVec) -> Option<(f64, f64, f64)> {
        match &self.model {
            SystemModel::Companion(m) => {
                Some((m.a21.eval(state), m.a22.eval(state), m.b.eval(state)))
            }
            SystemModel::Mismatch(_) => None,
        }
    }

    pub fn disturbance(&self) -> DisturbanceSpec {
        match &self.model {
            SystemModel::Companion(m) => m.disturbance,
            SystemModel::Mismatch(_) => DisturbanceSpec::NONE,
        }
    }

    pub fn is_companion(&self) -> bool {
        matches!(self.model, SystemModel::Companion(_))
    }

    /// Equations in text form, for prompts and artifacts.
    pub fn describe(&self) -> String {
        match &self.model {
            SystemModel::Companion(m) => {
                let d = match (&m.disturbance.bias, m.disturbance.has_noise()) {
                    (Some(b), true) => format!(
                        " + [{}] + {}*xi(t)",
                        b.describe(),
                        m.disturbance.noise_gain
                    ),
                    (Some(b), false) => format!(" + [{}]", b.describe()),
                    (None, true) => format!(" + {}*xi(t)", m.disturbance.noise_gain),
                    (None, false) => String::new(),
                };
                format!(
                    "dx1/dt = x2\ndx2/dt = [{}]*x1 + [{}]*x2 + [{}]*u{}",
                    m.a21.describe(),
                    m.a22.describe(),
                    m.b.describe(),
                    d
                )
            }
            SystemModel::Mismatch(m) => format!(
                "dx1/dt = x2 + {}*u\ndx2/dt = {}*x1 + {}*x2 + {}*u",
                m.g1, m.a21, m.a22, m.g2
            ),
        }
    }
}

/// Evaluate the state derivative under control `u` and noise sample `xi`.
pub fn eval_dynamics(spec: &SystemSpec, state: &StateVec, u: f64, xi: f64) -> Result<StateVec> {
    if !state.is_finite() || !u.is_finite() || !xi.is_finite() {
        return Err(Error::NonFinite {
            context: "eval_dynamics input",
            detail: format!("state=({}, {}), u={}, xi={}", state.x1, state.x2, u, xi),
        });
    }
    if xi.abs() > 1.0 {
        return Err(Error::InvalidConfig(format!(
            "noise sample xi={} outside [-1, 1]",
            xi
        )));
    }
    let deriv = match &spec.model {
        SystemModel::Companion(m) => StateVec {
            x1: state.x2,
            x2: m.a21.eval(state) * state.x1
                + m.a22.eval(state) * state.x2
                + m.b.eval(state) * u
                + m.disturbance.eval(state, xi),
        },
        SystemModel::Mismatch(m) => StateVec {
            x1: state.x2 + m.g1 * u,
            x2: m.a21 * state.x1 + m.a22 * state.x2 + m.g2 * u,
        },
    };
    if !deriv.is_finite() {
        return Err(Error::NonFinite {
            context: "eval_dynamics output",
            detail: format!("derivative=({}, {})", deriv.x1, deriv.x2),
        });
    }
    Ok(deriv)
}

/// One classical RK4 step with `u` and `xi` held constant (zero-order hold).
pub fn rk4_step(spec: &SystemSpec, state: &StateVec, u: f64, xi: f64, dt: f64) -> Result<StateVec> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(Error::InvalidConfig(format!("rk4 step dt={} must be > 0", dt)));
    }
    let k1 = eval_dynamics(spec, state, u, xi)?;
    let k2 = eval_dynamics(spec, &state.scaled_add(dt / 2.0, &k1), u, xi)?;
    let k3 = eval_dynamics(spec, &state.scaled_add(dt / 2.0, &k2), u, xi)?;
    let k4 = eval_dynamics(spec, &state.scaled_add(dt, &k3), u, xi)?;
    let next = StateVec {
        x1: state.x1 + dt / 6.0 * (k1.x1 + 2.0 * k2.x1 + 2.0 * k3.x1 + k4.x1),
        x2: state.x2 + dt / 6.0 * (k1.x2 + 2.0 * k2.x2 + 2.0 * k3.x2 + k4.x2),
    };
    if !next.is_finite() {
        return Err(Error::NonFinite {
            context: "rk4_step",
            detail: format!("state=({}, {})", next.x1, next.x2),
        });
    }
    Ok(next)
}

/// Desired output at one instant, with derivatives for feedforward use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetSample {
    pub position: f64,
    pub velocity: f64,
    pub acceleration: f64,
}

/// Target signal applied from t = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSignal {
    Constant { value: f64 },
    Step { amplitude: f64 },
    Sinusoid { amplitude: f64, frequency_hz: f64 },
}

impl TargetSignal {
    pub fn sample(&self, t: f64) -> TargetSample {
        match *self {
            TargetSignal::Constant { value } => TargetSample {
                position: value,
                velocity: 0.0,
                acceleration: 0.0,
            },
            TargetSignal::Step { amplitude } => TargetSample {
                position: amplitude,
                velocity: 0.0,
                acceleration: 0.0,
            },
            TargetSignal::Sinusoid {
                amplitude,
                frequency_hz,
            } => {
                let w = 2.0 * std::f64::consts::PI * frequency_hz;
                TargetSample {
                    position: amplitude * (w * t).sin(),
                    velocity: amplitude * w * (w * t).cos(),
                    acceleration: -amplitude * w * w * (w * t).sin(),
                }
            }
        }
    }

    /// Nominal amplitude of the signal, used for relative error bands.
    pub fn amplitude(&self) -> f64 {
        match *self {
            TargetSignal::Constant { value } => value,
            TargetSignal::Step { amplitude } => amplitude,
            TargetSignal::Sinusoid { amplitude, .. } => amplitude,
        }
    }
}

/// Forces the state to `state` at the first control step with t >= time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceEvent {
    pub time: f64,
    pub x1: f64,
    pub x2: f64,
}

/// Time-indexed record of one run. All sequences have equal length and
/// `t[k] = k * dt`; `u_total[k] = u_base[k] + u_comp[k]` at every index.
/// The control at index k is the zero-order-hold value over [t_k, t_k+dt).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dt: f64,
    pub t: Vec<f64>,
    pub states: Vec<StateVec>,
    pub u_base: Vec<f64>,
    pub u_comp: Vec<f64>,
    pub u_total: Vec<f64>,
    pub target: Vec<f64>,
}

impl Trajectory {
    fn with_capacity(dt: f64, n: usize) -> Self {
        Trajectory {
            dt,
            t: Vec::with_capacity(n),
            states: Vec::with_capacity(n),
            u_base: Vec::with_capacity(n),
            u_comp: Vec::with_capacity(n),
            u_total: Vec::with_capacity(n),
            target: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, t: f64, state: StateVec, ctrl: ControlSample, target: f64) {
        self.t.push(t);
        self.states.push(state);
        self.u_base.push(ctrl.base);
        self.u_comp.push(ctrl.comp);
        self.u_total.push(ctrl.base + ctrl.comp);
        self.target.push(target);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Position channel as (t, x1) pairs.
    pub fn positions(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.t.iter().zip(self.states.iter()).map(|(t, s)| (*t, s.x1))
    }
}

/// Integration parameters for one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    /// Control period; also the trajectory sample period.
    pub dt: f64,
    pub horizon: f64,
    /// RK4 substeps per control period (1 = integrate at the control rate).
    pub substeps: u32,
    pub x0: StateVec,
    pub seed: u64,
}

impl SimParams {
    pub fn new(dt: f64, horizon: f64, seed: u64) -> Self {
        SimParams {
            dt,
            horizon,
            substeps: 1,
            x0: StateVec::ZERO,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
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
        if !self.x0.is_finite() {
            return Err(Error::InvalidConfig("x0 must be finite".into()));
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Noise stream seed for a run: mixes the run seed with the disturbance
/// spec's stream offset.
pub fn noise_stream_seed(run_seed: u64, spec: &SystemSpec) -> u64 {
    splitmix64(run_seed ^ splitmix64(spec.disturbance().seed))
}

/// Simulate one plant under one controller.
///
/// The noise sample is drawn once per control step, so integration
/// refinement via `substeps` leaves the control and disturbance
/// sequences untouched. A controller fault or non-finite state aborts
/// with the partial trajectory preserved in the error.
pub fn simulate(
    spec: &SystemSpec,
    controller: &mut dyn Controller,
    target: &TargetSignal,
    params: &SimParams,
    events: &[DisturbanceEvent],
) -> Result<Trajectory> {
    params.validate()?;
    let n = (params.horizon / params.dt).round() as usize;
    if n == 0 {
        return Err(Error::InvalidConfig("horizon shorter than one step".into()));
    }
    let mut events: Vec<DisturbanceEvent> = events.to_vec();
    events.sort_by(|a, b| a.time.total_cmp(&b.time));
    let mut next_event = 0usize;

    let mut rng = ChaCha8Rng::seed_from_u64(noise_stream_seed(params.seed, spec));
    let draw_noise = spec.disturbance().has_noise();

    let mut traj = Trajectory::with_capacity(params.dt, n + 1);
    let mut state = params.x0;

    for k in 0..=n {
        let t = k as f64 * params.dt;
        while next_event < events.len() && events[next_event].time <= t + 1e-12 {
            state = StateVec::new(events[next_event].x1, events[next_event].x2);
            next_event += 1;
        }
        if !state.is_finite() {
            return Err(Error::SimulationFault {
                t,
                diagnostic: format!("non-finite state ({}, {})", state.x1, state.x2),
                partial: Box::new(traj),
            });
        }
        let xi = if draw_noise {
            rng.gen_range(-1.0..=1.0)
        } else {
            0.0
        };
        let target_sample = target.sample(t);
        let ctx = StepCtx {
            step: k,
            t,
            dt: params.dt,
            state,
            target: target_sample,
        };
        let ctrl = match controller.control(&ctx) {
            Ok(c) => c,
            Err(e) => {
                return Err(Error::SimulationFault {
                    t,
                    diagnostic: format!("controller fault: {}", e),
                    partial: Box::new(traj),
                });
            }
        };
        traj.push(t, state, ctrl, target_sample.position);

        if k < n {
            let u = ctrl.base + ctrl.comp;
            let h = params.dt / params.substeps as f64;
            for _ in 0..params.substeps {
                state = match rk4_step(spec, &state, u, xi, h) {
                    Ok(s) => s,
                    Err(e) => {
                        return Err(Error::SimulationFault {
                            t,
                            diagnostic: format!("integration fault: {}", e),
                            partial: Box::new(traj),
                        });
                    }
                };
            }
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controllers::ZeroController;
    use proptest::prelude::*;
    use rand::Rng as _;

    /// Closed-form solution of the free reference system
    /// `ẍ + 3ẋ + 5x = 0` from (x10, x20).
    fn reference_free_response(x10: f64, x20: f64, t: f64) -> (f64, f64) {
        let sigma = -1.5;
        let w = (5.0_f64 - 2.25).sqrt();
        let a = x10;
        let b = (x20 - sigma * x10) / w;
        let e = (sigma * t).exp();
        let x = e * (a * (w * t).cos() + b * (w * t).sin());
        let v = e * ((sigma * a + w * b) * (w * t).cos() + (sigma * b - w * a) * (w * t).sin());
        (x, v)
    }

    #[test]
    fn reference_equilibrium_at_origin() {
        let spec = SystemSpec::reference();
        let d = eval_dynamics(&spec, &StateVec::ZERO, 0.0, 0.0).unwrap();
        assert_eq!(d, StateVec::ZERO);
    }

    #[test]
    fn reference_row_applied_at_unit_position() {
        let spec = SystemSpec::reference();
        let d = eval_dynamics(&spec, &StateVec::new(1.0, 0.0), 0.0, 0.0).unwrap();
        assert_eq!(d.x1, 0.0);
        assert_eq!(d.x2, -5.0);
    }

    #[test]
    fn unknown1_origin_is_equilibrium() {
        let spec = SystemSpec::unknown1();
        let d = eval_dynamics(&spec, &StateVec::ZERO, 0.0, 0.0).unwrap();
        assert_eq!(d.x1, 0.0);
        assert_eq!(d.x2, 0.0);
    }

    #[test]
    fn unknown1_matches_symbolic_substitution() {
        // Independent term-by-term evaluation at (pi, 0), u = 1, xi = 0.
        let x1 = std::f64::consts::PI;
        let a21 = -3.5 + 3.0 * (0.5 * x1).sin();
        let a22 = -3.0 + 3.0 * (0.2_f64 * 0.0).cos();
        let b = 2.0 + 2.0 * x1.sin();
        let d_bias = -0.2 * x1.sin();
        let expected = a21 * x1 + a22 * 0.0 + b * 1.0 + d_bias;

        let spec = SystemSpec::unknown1();
        let d = eval_dynamics(&spec, &StateVec::new(x1, 0.0), 1.0, 0.0).unwrap();
        assert_eq!(d.x1, 0.0);
        assert!((d.x2 - expected).abs() < 1e-15, "got {}, want {}", d.x2, expected);
    }

    #[test]
    fn unknown2_matches_symbolic_substitution() {
        let x1: f64 = 1.3;
        let x2: f64 = -0.7;
        let a21 = -4.0 + 2.0 * x1.sin();
        let a22 = -10.0 + 3.0 * (0.2 * x2).tanh();
        let b = 0.8 + 0.2 * x1.cos();
        let d_bias = -0.2 * x1.sin();
        let expected = a21 * x1 + a22 * x2 + b * 0.5 + d_bias;

        let spec = SystemSpec::unknown2();
        let d = eval_dynamics(&spec, &StateVec::new(x1, x2), 0.5, 0.0).unwrap();
        assert!((d.x2 - expected).abs() < 1e-15);
    }

    #[test]
    fn non_finite_input_faults() {
        let spec = SystemSpec::reference();
        let err = eval_dynamics(&spec, &StateVec::new(f64::NAN, 0.0), 0.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn rk4_zero_field_is_identity() {
        let spec = SystemSpec::custom(
            CoeffFn::constant(0.0),
            CoeffFn::constant(0.0),
            CoeffFn::constant(0.0),
            DisturbanceSpec::NONE,
        );
        let state = StateVec::new(3.0, 0.0);
        let next = rk4_step(&spec, &state, 7.0, 0.0, 0.5).unwrap();
        assert_eq!(next, state);
    }

    #[test]
    fn rk4_single_step_matches_linear_ode() {
        let spec = SystemSpec::reference();
        let x0 = StateVec::new(1.0, 0.0);
        let next = rk4_step(&spec, &x0, 0.0, 0.0, 0.01).unwrap();
        let (x, v) = reference_free_response(1.0, 0.0, 0.01);
        assert!((next.x1 - x).abs() < 1e-9, "x err {}", (next.x1 - x).abs());
        assert!((next.x2 - v).abs() < 1e-9, "v err {}", (next.x2 - v).abs());
    }

    #[test]
    fn rk4_order_is_four() {
        // Global error over a fixed interval drops ~16x when dt halves.
        let spec = SystemSpec::reference();
        let horizon = 0.64;
        let err_at = |dt: f64| {
            let mut state = StateVec::new(1.0, 0.0);
            let n = (horizon / dt).round() as usize;
            for _ in 0..n {
                state = rk4_step(&spec, &state, 0.0, 0.0, dt).unwrap();
            }
            let (x, _) = reference_free_response(1.0, 0.0, horizon);
            (state.x1 - x).abs()
        };
        let e1 = err_at(0.08);
        let e2 = err_at(0.04);
        let ratio = e1 / e2;
        assert!(
            (11.0..24.0).contains(&ratio),
            "convergence ratio {} not ~16",
            ratio
        );
    }

    #[test]
    fn simulate_zero_everything_stays_zero() {
        let spec = SystemSpec::reference();
        let mut ctrl = ZeroController;
        let params = SimParams::new(0.001, 0.5, 0);
        let traj = simulate(
            &spec,
            &mut ctrl,
            &TargetSignal::Constant { value: 0.0 },
            &params,
            &[],
        )
        .unwrap();
        assert_eq!(traj.len(), 501);
        assert!(traj.states.iter().all(|s| s.x1 == 0.0 && s.x2 == 0.0));
        assert!(traj.u_total.iter().all(|u| *u == 0.0));
    }

    #[test]
    fn simulate_is_deterministic() {
        let spec = SystemSpec::unknown1();
        let params = SimParams::new(0.001, 1.0, 42);
        let run = || {
            let mut ctrl = ZeroController;
            simulate(
                &spec,
                &mut ctrl,
                &TargetSignal::Step { amplitude: 1.0 },
                &params,
                &[],
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
    }

    #[test]
    fn disturbance_event_overwrites_state() {
        let spec = SystemSpec::reference();
        let mut ctrl = ZeroController;
        let params = SimParams::new(0.001, 0.1, 0);
        let traj = simulate(
            &spec,
            &mut ctrl,
            &TargetSignal::Constant { value: 0.0 },
            &params,
            &[DisturbanceEvent {
                time: 0.02,
                x1: 13.0,
                x2: 13.0,
            }],
        )
        .unwrap();
        assert_eq!(traj.states[20].x1, 13.0);
        assert_eq!(traj.states[20].x2, 13.0);
        assert_eq!(traj.states[19].x1, 0.0);
    }

    #[test]
    fn trajectory_time_grid_and_superposition() {
        let spec = SystemSpec::unknown1();
        let mut ctrl = ZeroController;
        let params = SimParams::new(0.002, 0.3, 7);
        let traj = simulate(
            &spec,
            &mut ctrl,
            &TargetSignal::Step { amplitude: 2.0 },
            &params,
            &[],
        )
        .unwrap();
        for (k, t) in traj.t.iter().enumerate() {
            assert_eq!(*t, k as f64 * params.dt);
        }
        for k in 0..traj.len() {
            assert_eq!(traj.u_total[k], traj.u_base[k] + traj.u_comp[k]);
        }
    }

    #[test]
    fn unknown1_coefficient_bounds_hold() {
        let spec = SystemSpec::unknown1();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10_000 {
            let state = StateVec::new(rng.gen_range(-100.0..100.0), rng.gen_range(-100.0..100.0));
            let (a21, a22, b) = spec.companion_coeffs(&state).unwrap();
            assert!((-6.5..=-0.5).contains(&a21), "a21={}", a21);
            assert!((-6.0..=0.0).contains(&a22), "a22={}", a22);
            assert!((0.0..=4.0).contains(&b), "b={}", b);
        }
    }

    #[test]
    fn unknown1_disturbance_bound_is_quarter() {
        let spec = SystemSpec::unknown1();
        assert!((spec.disturbance().magnitude_bound() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn system_specs_roundtrip_through_serde() {
        for spec in [
            SystemSpec::reference(),
            SystemSpec::unknown1(),
            SystemSpec::unknown2(),
            SystemSpec::mismatch_u3(),
        ] {
            let text = serde_json::to_string(&spec).unwrap();
            let back: SystemSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(spec, back);
        }
    }

    #[test]
    fn described_equations_name_every_term() {
        let text = SystemSpec::unknown1().describe();
        assert!(text.contains("dx1/dt = x2"));
        assert!(text.contains("-3.5 + 3*sin(0.5*x1)"));
        assert!(text.contains("0.05*xi(t)"));
        let text = SystemSpec::mismatch_u3().describe();
        assert!(text.contains("x2 + 0.7*u"));
    }

    proptest! {
        #[test]
        fn companion_first_component_is_velocity(
            x1 in -50.0..50.0f64,
            x2 in -50.0..50.0f64,
            u in -100.0..100.0f64,
        ) {
            for spec in [SystemSpec::reference(), SystemSpec::unknown1(), SystemSpec::unknown2()] {
                let d = eval_dynamics(&spec, &StateVec::new(x1, x2), u, 0.0).unwrap();
                prop_assert_eq!(d.x1, x2);
            }
        }

        #[test]
        fn mismatch_violates_companion_form(u in 0.1..100.0f64) {
            let spec = SystemSpec::mismatch_u3();
            let d = eval_dynamics(&spec, &StateVec::new(1.0, 2.0), u, 0.0).unwrap();
            prop_assert_ne!(d.x1, 2.0);
        }
    }
}
