//! Step-response indicators and reference-vs-unknown tracking statistics.
//!
//! Band crossings (settling, rise) are located by linear interpolation
//! between samples, so the indicators are stable under resampling finer
//! than the original grid.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::{Error, Result};

/// Default settling band: 2% of the step span.
pub const DEFAULT_SETTLE_BAND: f64 = 0.02;

/// Step-response indicators extracted from one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseMetrics {
    /// Peak excursion beyond the target, in percent of the step span.
    pub peak_overshoot_pct: f64,
    /// Time after which the response stays inside the settle band.
    /// `None` means the run ended outside the band (unsettled).
    pub settling_time: Option<f64>,
    /// Mean of (target - y) over the final 10% of the horizon.
    pub steady_state_error: f64,
    /// 10% -> 90% rise time; `None` if either threshold was never crossed.
    pub rise_time: Option<f64>,
    /// Extremes of (target - y) over the whole run.
    pub max_error: f64,
    pub min_error: f64,
}

/// Aggregate discrepancy between two position trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingStats {
    pub rmse: f64,
    pub max_abs: f64,
    /// Signed mean deviation over the last 10% of the horizon.
    pub final_gap: f64,
}

/// Extract step-response indicators.
///
/// The step span is measured from the first recorded position to the
/// final target value; overshoot and band widths are relative to it.
pub fn step_metrics(traj: &Trajectory, settle_band: f64) -> Result<ResponseMetrics> {
    if traj.is_empty() {
        return Err(Error::Metrics("empty trajectory".into()));
    }
    if !(settle_band > 0.0) {
        return Err(Error::Metrics(format!("settle band {} must be > 0", settle_band)));
    }
    let n = traj.len();
    let y: Vec<f64> = traj.states.iter().map(|s| s.x1).collect();
    let target = *traj.target.last().unwrap();
    let y0 = y[0];
    let span = target - y0;
    let norm = if span != 0.0 {
        span.abs()
    } else {
        target.abs().max(1.0)
    };
    let dir = if span >= 0.0 { 1.0 } else { -1.0 };

    let peak = y
        .iter()
        .map(|v| dir * (v - target))
        .fold(f64::NEG_INFINITY, f64::max);
    let peak_overshoot_pct = peak.max(0.0) / norm * 100.0;

    let band = settle_band * norm;
    let outside = |k: usize| (y[k] - target).abs() > band;
    let last_outside = (0..n).rev().find(|&k| outside(k));
    let settling_time = match last_outside {
        None => Some(0.0),
        Some(k) if k + 1 >= n => None,
        Some(k) => {
            let a = (y[k] - target).abs() - band;
            let b = (y[k + 1] - target).abs() - band;
            let frac = if a - b != 0.0 { a / (a - b) } else { 1.0 };
            Some(traj.t[k] + frac.clamp(0.0, 1.0) * traj.dt)
        }
    };

    let window = (n / 10).max(1);
    let steady_state_error = y[n - window..]
        .iter()
        .zip(traj.target[n - window..].iter())
        .map(|(v, tgt)| tgt - v)
        .sum::<f64>()
        / window as f64;

    let rise_time = if span != 0.0 {
        let t10 = first_crossing(&traj.t, &y, y0 + 0.1 * span, dir);
        let t90 = first_crossing(&traj.t, &y, y0 + 0.9 * span, dir);
        match (t10, t90) {
            (Some(a), Some(b)) if b >= a => Some(b - a),
            _ => None,
        }
    } else {
        None
    };

    let errs = traj
        .target
        .iter()
        .zip(y.iter())
        .map(|(tgt, v)| tgt - v);
    let max_error = errs.clone().fold(f64::NEG_INFINITY, f64::max);
    let min_error = errs.fold(f64::INFINITY, f64::min);

    Ok(ResponseMetrics {
        peak_overshoot_pct,
        settling_time,
        steady_state_error,
        rise_time,
        max_error,
        min_error,
    })
}

/// First time the response crosses `threshold` moving in direction `dir`,
/// interpolated between samples.
fn first_crossing(t: &[f64], y: &[f64], threshold: f64, dir: f64) -> Option<f64> {
    let reached = |v: f64| dir * (v - threshold) >= 0.0;
    if reached(y[0]) {
        return Some(t[0]);
    }
    for k in 1..y.len() {
        if reached(y[k]) {
            let dv = y[k] - y[k - 1];
            let frac = if dv != 0.0 {
                ((threshold - y[k - 1]) / dv).clamp(0.0, 1.0)
            } else {
                1.0
            };
            return Some(t[k - 1] + frac * (t[k] - t[k - 1]));
        }
    }
    None
}

/// Compare two position trajectories. When grids differ, the second is
/// linearly resampled onto the first's timeline.
pub fn compare_responses(a: &Trajectory, b: &Trajectory) -> Result<TrackingStats> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Metrics("empty trajectory".into()));
    }
    let b_resampled: Vec<f64> = if a.dt == b.dt && a.len() == b.len() {
        b.states.iter().map(|s| s.x1).collect()
    } else {
        a.t.iter().map(|t| sample_position(b, *t)).collect()
    };
    let diffs: Vec<f64> = a
        .states
        .iter()
        .zip(b_resampled.iter())
        .map(|(s, v)| s.x1 - v)
        .collect();
    let n = diffs.len();
    let rmse = (diffs.iter().map(|d| d * d).sum::<f64>() / n as f64).sqrt();
    let max_abs = diffs.iter().map(|d| d.abs()).fold(0.0, f64::max);
    let window = (n / 10).max(1);
    let final_gap = diffs[n - window..].iter().sum::<f64>() / window as f64;
    Ok(TrackingStats {
        rmse,
        max_abs,
        final_gap,
    })
}

fn sample_position(traj: &Trajectory, t: f64) -> f64 {
    let last = traj.len() - 1;
    if t <= traj.t[0] {
        return traj.states[0].x1;
    }
    if t >= traj.t[last] {
        return traj.states[last].x1;
    }
    let k = ((t - traj.t[0]) / traj.dt).floor() as usize;
    let k = k.min(last - 1);
    let frac = (t - traj.t[k]) / traj.dt;
    traj.states[k].x1 + frac * (traj.states[k + 1].x1 - traj.states[k].x1)
}

/// Qualitative mismatch labels between a reference and an unknown response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosisLabel {
    /// Excess overshoot: under-damped relative to the reference.
    Overshooting,
    /// Slow rise: low-gain relative to the reference.
    Sluggish,
    /// Persistent offset between the steady states.
    SteadyStateBias,
    /// No mismatch above the thresholds.
    Matched,
}

pub type DiagnosisLabelSet = BTreeSet<DiagnosisLabel>;

/// Thresholds for the qualitative diagnosis; all comparisons are made
/// relative to the reference metrics so identical metric sets always
/// diagnose as matched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosisThresholds {
    /// Overshoot label when the unknown exceeds the reference by more
    /// than this many percentage points.
    pub overshoot_excess_points: f64,
    /// Sluggish label when the rise-time ratio exceeds this.
    pub rise_time_ratio: f64,
    /// Bias label when the steady-state error differs by more than this
    /// fraction of the step amplitude.
    pub bias_fraction: f64,
}

impl Default for DiagnosisThresholds {
    fn default() -> Self {
        DiagnosisThresholds {
            overshoot_excess_points: 5.0,
            rise_time_ratio: 1.25,
            bias_fraction: 0.02,
        }
    }
}

/// Label the mismatch between reference and unknown step metrics.
pub fn diagnose(
    m_ref: &ResponseMetrics,
    m_unk: &ResponseMetrics,
    amplitude: f64,
    th: &DiagnosisThresholds,
) -> DiagnosisLabelSet {
    let mut labels = BTreeSet::new();
    if m_unk.peak_overshoot_pct - m_ref.peak_overshoot_pct > th.overshoot_excess_points {
        labels.insert(DiagnosisLabel::Overshooting);
    }
    let sluggish = match (m_unk.rise_time, m_ref.rise_time) {
        (Some(u), Some(r)) if r > 0.0 => u / r > th.rise_time_ratio,
        (Some(u), Some(r)) => u > r,
        (None, Some(_)) => true,
        _ => false,
    };
    if sluggish {
        labels.insert(DiagnosisLabel::Sluggish);
    }
    let bias = (m_unk.steady_state_error - m_ref.steady_state_error).abs();
    if bias > th.bias_fraction * amplitude.abs() {
        labels.insert(DiagnosisLabel::SteadyStateBias);
    }
    if labels.is_empty() {
        labels.insert(DiagnosisLabel::Matched);
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controllers::ControlSample;
    use crate::dynamics::StateVec;
    use proptest::prelude::*;

    fn make_traj(dt: f64, ys: &[f64], target: f64) -> Trajectory {
        let mut traj = Trajectory {
            dt,
            t: Vec::new(),
            states: Vec::new(),
            u_base: Vec::new(),
            u_comp: Vec::new(),
            u_total: Vec::new(),
            target: Vec::new(),
        };
        for (k, y) in ys.iter().enumerate() {
            traj.t.push(k as f64 * dt);
            traj.states.push(StateVec::new(*y, 0.0));
            traj.u_base.push(0.0);
            traj.u_comp.push(0.0);
            traj.u_total.push(0.0);
            traj.target.push(target);
        }
        traj
    }

    fn first_order_traj(dt: f64, horizon: f64) -> Trajectory {
        let n = (horizon / dt).round() as usize;
        let ys: Vec<f64> = (0..=n).map(|k| 1.0 - (-(k as f64) * dt).exp()).collect();
        make_traj(dt, &ys, 1.0)
    }

    #[test]
    fn empty_trajectory_faults() {
        let traj = make_traj(0.001, &[], 1.0);
        assert!(step_metrics(&traj, 0.02).is_err());
    }

    #[test]
    fn instantaneous_step_is_perfect() {
        let traj = make_traj(0.01, &[1.0; 200], 1.0);
        let m = step_metrics(&traj, 0.02).unwrap();
        assert_eq!(m.peak_overshoot_pct, 0.0);
        assert_eq!(m.settling_time, Some(0.0));
        assert_eq!(m.steady_state_error, 0.0);
    }

    #[test]
    fn first_order_settling_matches_closed_form() {
        // |y - 1| = e^{-t} crosses the 2% band at t = ln(50).
        let traj = first_order_traj(0.001, 6.0);
        let m = step_metrics(&traj, 0.02).unwrap();
        let expected = 50.0_f64.ln();
        assert_eq!(m.peak_overshoot_pct, 0.0);
        let settle = m.settling_time.unwrap();
        assert!(
            (settle - expected).abs() < 1e-4,
            "settling {} vs ln(50) {}",
            settle,
            expected
        );
        // 10->90% rise: ln(10) - ln(10/9).
        let rise_expected = 10.0_f64.ln() - (10.0_f64 / 9.0).ln();
        let rise = m.rise_time.unwrap();
        assert!((rise - rise_expected).abs() < 1e-4, "rise {}", rise);
    }

    #[test]
    fn twenty_percent_overshoot() {
        let ys = [0.0, 0.5, 1.1, 1.2, 1.1, 1.0, 1.0, 1.0, 1.0, 1.0];
        let traj = make_traj(0.1, &ys, 1.0);
        let m = step_metrics(&traj, 0.02).unwrap();
        assert!((m.peak_overshoot_pct - 20.0).abs() < 1e-12);
    }

    #[test]
    fn unsettled_run_is_marked() {
        let ys = [0.0, 0.2, 0.4, 0.5, 0.5, 0.5];
        let traj = make_traj(0.1, &ys, 1.0);
        let m = step_metrics(&traj, 0.02).unwrap();
        assert_eq!(m.settling_time, None);
        assert_eq!(m.rise_time, None);
    }

    #[test]
    fn metrics_stable_under_finer_resampling() {
        let coarse = step_metrics(&first_order_traj(0.001, 6.0), 0.02).unwrap();
        let fine = step_metrics(&first_order_traj(0.00025, 6.0), 0.02).unwrap();
        assert!((coarse.peak_overshoot_pct - fine.peak_overshoot_pct).abs() < 1e-6);
        assert!(
            (coarse.settling_time.unwrap() - fine.settling_time.unwrap()).abs() < 1e-6
        );
        assert!((coarse.rise_time.unwrap() - fine.rise_time.unwrap()).abs() < 1e-6);
        // The steady-state window mean shifts only with the residual decay.
        assert!((coarse.steady_state_error - fine.steady_state_error).abs() < 1e-4);
    }

    #[test]
    fn monotone_response_has_zero_overshoot() {
        let ys: Vec<f64> = (0..100).map(|k| (k as f64) / 99.0).collect();
        let traj = make_traj(0.01, &ys, 1.0);
        let m = step_metrics(&traj, 0.02).unwrap();
        assert_eq!(m.peak_overshoot_pct, 0.0);
    }

    #[test]
    fn compare_identical_is_zero() {
        let a = first_order_traj(0.001, 2.0);
        let s = compare_responses(&a, &a).unwrap();
        assert_eq!(s.rmse, 0.0);
        assert_eq!(s.max_abs, 0.0);
        assert_eq!(s.final_gap, 0.0);
    }

    #[test]
    fn compare_constant_offset() {
        let a = make_traj(0.01, &[2.0; 100], 2.0);
        let b = make_traj(0.01, &[1.5; 100], 2.0);
        let s = compare_responses(&a, &b).unwrap();
        assert!((s.rmse - 0.5).abs() < 1e-12);
        assert!((s.final_gap - 0.5).abs() < 1e-12);
        assert!(s.max_abs >= s.final_gap.abs());
    }

    #[test]
    fn compare_matches_direct_resummation() {
        let ys_a: Vec<f64> = (0..500).map(|k| (k as f64 * 0.01).sin()).collect();
        let ys_b: Vec<f64> = (0..500).map(|k| (k as f64 * 0.013).cos()).collect();
        let a = make_traj(0.001, &ys_a, 0.0);
        let b = make_traj(0.001, &ys_b, 0.0);
        let s = compare_responses(&a, &b).unwrap();
        let mut sq = 0.0;
        for k in 0..500 {
            let d: f64 = ys_a[k] - ys_b[k];
            sq += d * d;
        }
        let rmse = (sq / 500.0).sqrt();
        assert!((s.rmse - rmse).abs() < 1e-12);
    }

    #[test]
    fn diagnose_examples() {
        let th = DiagnosisThresholds::default();
        let base = ResponseMetrics {
            peak_overshoot_pct: 0.0,
            settling_time: Some(1.0),
            steady_state_error: 0.0,
            rise_time: Some(0.4),
            max_error: 1.0,
            min_error: 0.0,
        };
        let over = ResponseMetrics {
            peak_overshoot_pct: 30.0,
            ..base
        };
        assert!(diagnose(&base, &over, 10.0, &th).contains(&DiagnosisLabel::Overshooting));

        let slow_biased = ResponseMetrics {
            rise_time: Some(0.8),
            steady_state_error: 0.3,
            ..base
        };
        let labels = diagnose(&base, &slow_biased, 10.0, &th);
        assert!(labels.contains(&DiagnosisLabel::Sluggish));
        assert!(labels.contains(&DiagnosisLabel::SteadyStateBias));
        assert!(!labels.contains(&DiagnosisLabel::Matched));
    }

    proptest! {
        #[test]
        fn diagnose_self_is_matched(
            overshoot in 0.0..50.0f64,
            rise in 0.01..5.0f64,
            sse in -3.0..3.0f64,
        ) {
            let m = ResponseMetrics {
                peak_overshoot_pct: overshoot,
                settling_time: Some(1.0),
                steady_state_error: sse,
                rise_time: Some(rise),
                max_error: 1.0,
                min_error: -1.0,
            };
            let labels = diagnose(&m, &m, 10.0, &DiagnosisThresholds::default());
            prop_assert_eq!(labels.len(), 1);
            prop_assert!(labels.contains(&DiagnosisLabel::Matched));
        }

        #[test]
        fn rmse_is_symmetric(offset in -5.0..5.0f64) {
            let a = make_traj(0.01, &[1.0; 50], 1.0);
            let ys: Vec<f64> = (0..50).map(|k| 1.0 + offset + 0.01 * k as f64).collect();
            let b = make_traj(0.01, &ys, 1.0);
            let ab = compare_responses(&a, &b).unwrap();
            let ba = compare_responses(&b, &a).unwrap();
            prop_assert!((ab.rmse - ba.rmse).abs() < 1e-12);
        }
    }
}
