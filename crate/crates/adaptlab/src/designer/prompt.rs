//! Deterministic prompt construction.
//!
//! Prompts are plain text with a fixed section order, fixed 6-significant
//! digit numeric formatting, and a fixed downsampling stride, so the same
//! inputs always produce byte-identical prompts.

use crate::dynamics::SystemSpec;
use crate::metrics::ResponseMetrics;

use super::refine::Evaluation;
use super::ProposalSchema;

/// Default task objective for compensator design.
pub const DEFAULT_TASK: &str = "Design an additive compensator so that the unknown \
system's response tracks the reference system's response. The base controller \
stays fixed; you adjust only the compensator gains.";

/// Maximum (t, y) pairs embedded per response series.
pub const MAX_PROMPT_POINTS: usize = 200;

/// Everything one designer round shows the backend.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignPrompt {
    pub task_text: String,
    pub ref_samples: Vec<(f64, f64)>,
    pub unk_samples: Vec<(f64, f64)>,
    pub metrics_ref: Option<ResponseMetrics>,
    pub metrics_unk: Option<ResponseMetrics>,
    pub qualitative_notes: Option<String>,
    /// Direct mode only: the plant equations in text form.
    pub system_description: Option<String>,
    /// Direct mode only: the existing controller in text form.
    pub controller_description: Option<String>,
    pub reply_contract: String,
}

/// Six significant digits, scientific notation.
fn fmt6(x: f64) -> String {
    format!("{:.5e}", x)
}

fn fmt_opt(x: Option<f64>) -> String {
    match x {
        Some(v) => fmt6(v),
        None => "none".to_string(),
    }
}

/// Downsample a series to at most `MAX_PROMPT_POINTS` with a fixed stride.
fn downsample(series: &[(f64, f64)]) -> Vec<(f64, f64)> {
    if series.len() <= MAX_PROMPT_POINTS {
        return series.to_vec();
    }
    let stride = series.len().div_ceil(MAX_PROMPT_POINTS);
    series.iter().step_by(stride).copied().collect()
}

fn metrics_line(label: &str, m: &Option<ResponseMetrics>) -> String {
    match m {
        Some(m) => format!(
            "{}: overshoot_pct={} settling_time_s={} steady_state_error={} rise_time_s={} max_error={} min_error={}",
            label,
            fmt6(m.peak_overshoot_pct),
            fmt_opt(m.settling_time),
            fmt6(m.steady_state_error),
            fmt_opt(m.rise_time),
            fmt6(m.max_error),
            fmt6(m.min_error),
        ),
        None => format!("{}: not available (non-step target)", label),
    }
}

/// Build the compensator-design prompt from one evaluation round.
pub fn build_prompt<P: ProposalSchema>(
    task_text: &str,
    eval: &Evaluation,
    notes: Option<&str>,
) -> DesignPrompt {
    DesignPrompt {
        task_text: task_text.to_string(),
        ref_samples: downsample(&eval.ref_series),
        unk_samples: downsample(&eval.unk_series),
        metrics_ref: eval.response_reference,
        metrics_unk: eval.response_unknown,
        qualitative_notes: notes.map(|s| s.to_string()),
        system_description: None,
        controller_description: None,
        reply_contract: P::reply_contract().to_string(),
    }
}

/// Build the direct-controller-design prompt: instead of responses alone,
/// the backend receives the plant equations and the existing controller,
/// and must parameterize a controller from the template family.
pub fn direct_controller_prompt<P: ProposalSchema>(
    system: &SystemSpec,
    existing_controller: &str,
    eval: &Evaluation,
    notes: Option<&str>,
) -> DesignPrompt {
    DesignPrompt {
        task_text: "Design an adaptive controller from scratch for the system \
described below, replacing the existing controller."
            .to_string(),
        ref_samples: downsample(&eval.ref_series),
        unk_samples: downsample(&eval.unk_series),
        metrics_ref: eval.response_reference,
        metrics_unk: eval.response_unknown,
        qualitative_notes: notes.map(|s| s.to_string()),
        system_description: Some(system.describe()),
        controller_description: Some(existing_controller.to_string()),
        reply_contract: P::reply_contract().to_string(),
    }
}

impl DesignPrompt {
    /// Render with a fixed section order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("# Task\n");
        out.push_str(&self.task_text);
        out.push('\n');
        if let Some(sys) = &self.system_description {
            out.push_str("\n# System dynamics\n");
            out.push_str(sys);
            out.push('\n');
        }
        if let Some(ctrl) = &self.controller_description {
            out.push_str("\n# Existing controller\n");
            out.push_str(ctrl);
            out.push('\n');
        }
        out.push_str("\n# Reference response samples (t, y)\n");
        for (t, y) in &self.ref_samples {
            out.push_str(&format!("t={} y={}\n", fmt6(*t), fmt6(*y)));
        }
        out.push_str("\n# Unknown response samples (t, y)\n");
        for (t, y) in &self.unk_samples {
            out.push_str(&format!("t={} y={}\n", fmt6(*t), fmt6(*y)));
        }
        out.push_str("\n# Step-response metrics\n");
        out.push_str(&metrics_line("reference", &self.metrics_ref));
        out.push('\n');
        out.push_str(&metrics_line("unknown", &self.metrics_unk));
        out.push('\n');
        if let Some(notes) = &self.qualitative_notes {
            out.push_str("\n# Notes\n");
            out.push_str(notes);
            out.push('\n');
        }
        out.push_str("\n# Reply format\n");
        out.push_str(&self.reply_contract);
        out.push('\n');
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controllers::CompensatorParams;
    use crate::metrics::TrackingStats;

    fn sample_eval(n: usize) -> Evaluation {
        Evaluation {
            tracking: TrackingStats {
                rmse: 1.0,
                max_abs: 2.0,
                final_gap: 0.5,
            },
            response_reference: None,
            response_unknown: None,
            amplitude: 10.0,
            ref_series: (0..n).map(|k| (k as f64 * 0.001, k as f64)).collect(),
            unk_series: (0..n).map(|k| (k as f64 * 0.001, 2.0 * k as f64)).collect(),
        }
    }

    #[test]
    fn prompt_is_deterministic() {
        let eval = sample_eval(500);
        let a = build_prompt::<CompensatorParams>(DEFAULT_TASK, &eval, Some("sluggish"));
        let b = build_prompt::<CompensatorParams>(DEFAULT_TASK, &eval, Some("sluggish"));
        assert_eq!(a.to_text(), b.to_text());
    }

    #[test]
    fn long_series_downsampled_to_budget() {
        let eval = sample_eval(10_000);
        let p = build_prompt::<CompensatorParams>(DEFAULT_TASK, &eval, None);
        assert!(p.ref_samples.len() <= MAX_PROMPT_POINTS);
        assert!(p.unk_samples.len() <= MAX_PROMPT_POINTS);
        assert_eq!(p.ref_samples[0], (0.0, 0.0));
    }

    #[test]
    fn direct_prompt_carries_equations() {
        let eval = sample_eval(10);
        let spec = crate::dynamics::SystemSpec::reference();
        let p = direct_controller_prompt::<crate::controllers::MitPidParams>(
            &spec,
            "u = smc(x, target)",
            &eval,
            None,
        );
        let text = p.to_text();
        assert!(text.contains("dx1/dt = x2"));
        assert!(text.contains("# Existing controller"));
        assert!(text.contains("kp0"));
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt6(1.234567891), "1.23457e0");
        assert_eq!(fmt6(0.0), "0.00000e0");
        assert_eq!(fmt6(-12345.678), "-1.23457e4");
    }
}
