//! Run persistence: the paired-trajectory CSV, metrics/region JSON, the
//! overlay plot, and the self-describing artifact index.
//!
//! The artifact index is written last via an atomic rename, so its
//! presence guarantees every referenced file is complete. Floats go
//! through Rust's shortest round-trip formatting, which makes re-running
//! from the embedded config snapshot reproduce the CSV bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controllers::CompensatorParams;
use crate::dynamics::{StateVec, Trajectory};
use crate::{Error, Result};

use super::plot::{emit_plot, PlotSeries, PlotStyle};
use super::{write_atomic, MetricsDoc, RegionReport, ScenarioConfig, ScenarioOutcome};

/// Fixed column order of the paired-trajectory CSV. The control columns
/// belong to the unknown-system run.
pub const CSV_HEADER: &str = "t,target,x1_ref,x2_ref,x1_unk,x2_unk,u_base,u_comp,u_total";

/// Serialize a reference/unknown pair in the fixed column order.
pub fn pair_csv(reference: &Trajectory, unknown: &Trajectory) -> Result<String> {
    if reference.len() != unknown.len() {
        return Err(Error::InvalidConfig(format!(
            "trajectory lengths differ: {} vs {}",
            reference.len(),
            unknown.len()
        )));
    }
    let mut out = String::with_capacity(reference.len() * 64);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for k in 0..reference.len() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            unknown.t[k],
            unknown.target[k],
            reference.states[k].x1,
            reference.states[k].x2,
            unknown.states[k].x1,
            unknown.states[k].x2,
            unknown.u_base[k],
            unknown.u_comp[k],
            unknown.u_total[k],
        ));
    }
    Ok(out)
}

/// Parse a paired-trajectory CSV back into (reference, unknown). The
/// reference side carries zero controls (the file only stores the
/// unknown run's control decomposition).
pub fn read_pair_csv(text: &str) -> Result<(Trajectory, Trajectory)> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Metrics("empty trajectory file".into()))?;
    if header.trim() != CSV_HEADER {
        return Err(Error::Metrics(format!(
            "unexpected trajectory header: {}",
            header
        )));
    }
    let mut t = Vec::new();
    let mut target = Vec::new();
    let mut ref_states = Vec::new();
    let mut unk_states = Vec::new();
    let mut u_base = Vec::new();
    let mut u_comp = Vec::new();
    let mut u_total = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::Metrics(format!(
                "line {}: expected 9 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Metrics(format!("line {}: {}", lineno + 2, e)))
        };
        t.push(parse(fields[0])?);
        target.push(parse(fields[1])?);
        ref_states.push(StateVec::new(parse(fields[2])?, parse(fields[3])?));
        unk_states.push(StateVec::new(parse(fields[4])?, parse(fields[5])?));
        u_base.push(parse(fields[6])?);
        u_comp.push(parse(fields[7])?);
        u_total.push(parse(fields[8])?);
    }
    if t.len() < 2 {
        return Err(Error::Metrics("trajectory file has fewer than 2 samples".into()));
    }
    let dt = t[1] - t[0];
    let n = t.len();
    let reference = Trajectory {
        dt,
        t: t.clone(),
        states: ref_states,
        u_base: vec![0.0; n],
        u_comp: vec![0.0; n],
        u_total: vec![0.0; n],
        target: target.clone(),
    };
    let unknown = Trajectory {
        dt,
        t,
        states: unk_states,
        u_base,
        u_comp,
        u_total,
        target,
    };
    Ok((reference, unknown))
}

/// File set one run leaves behind, relative to the artifact directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactFiles {
    pub trajectory_csv: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_csv: Option<String>,
    pub metrics_json: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_json: Option<String>,
    pub plot_svg: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_json: Option<String>,
    pub config_toml: String,
}

/// Self-describing index of one completed run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub tool_version: String,
    /// Embedded config snapshot: re-running it reproduces the run.
    pub config: ScenarioConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub applied_compensator: Option<CompensatorParams>,
    pub files: ArtifactFiles,
    pub metrics: MetricsDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionReport>,
}

/// Persist a finished run under `out_dir/<scenario name>/`.
pub fn write_artifact(outcome: &ScenarioOutcome, out_dir: &Path) -> Result<RunArtifact> {
    let dir = out_dir.join(&outcome.config.name);
    std::fs::create_dir_all(&dir)?;

    let files = ArtifactFiles {
        trajectory_csv: "trajectory.csv".into(),
        baseline_csv: outcome.baseline.as_ref().map(|_| "baseline.csv".to_string()),
        metrics_json: "metrics.json".into(),
        region_json: outcome.region.as_ref().map(|_| "region.json".to_string()),
        plot_svg: "plot.svg".into(),
        session_json: outcome.session.as_ref().map(|_| "session.json".to_string()),
        config_toml: "config.toml".into(),
    };

    write_atomic(
        &dir.join(&files.trajectory_csv),
        pair_csv(&outcome.reference, &outcome.unknown)?.as_bytes(),
    )?;
    if let (Some(baseline), Some(name)) = (&outcome.baseline, &files.baseline_csv) {
        write_atomic(
            &dir.join(name),
            pair_csv(&outcome.reference, baseline)?.as_bytes(),
        )?;
    }
    write_atomic(
        &dir.join(&files.metrics_json),
        serde_json::to_string_pretty(&outcome.metrics)?.as_bytes(),
    )?;
    if let (Some(region), Some(name)) = (&outcome.region, &files.region_json) {
        write_atomic(&dir.join(name), serde_json::to_string_pretty(region)?.as_bytes())?;
    }
    if let (Some(session), Some(name)) = (&outcome.session, &files.session_json) {
        write_atomic(&dir.join(name), session.to_json()?.as_bytes())?;
    }
    write_atomic(
        &dir.join(&files.config_toml),
        outcome.config.to_toml_string()?.as_bytes(),
    )?;

    let mut series = vec![PlotSeries {
        label: "reference".into(),
        points: outcome.reference.positions().collect(),
    }];
    if let Some(baseline) = &outcome.baseline {
        series.push(PlotSeries {
            label: "uncompensated".into(),
            points: baseline.positions().collect(),
        });
        series.push(PlotSeries {
            label: "compensated".into(),
            points: outcome.unknown.positions().collect(),
        });
    } else {
        series.push(PlotSeries {
            label: "unknown".into(),
            points: outcome.unknown.positions().collect(),
        });
    }
    let style = PlotStyle {
        title: outcome.config.name.clone(),
        ..PlotStyle::default()
    };
    emit_plot(&series, &style, &dir.join(&files.plot_svg))?;

    let artifact = RunArtifact {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: outcome.config.clone(),
        applied_compensator: outcome.applied_compensator,
        files,
        metrics: outcome.metrics.clone(),
        region: outcome.region.clone(),
    };
    // Written last: its presence marks the run complete.
    write_atomic(
        &dir.join("artifact.json"),
        serde_json::to_string_pretty(&artifact)?.as_bytes(),
    )?;
    Ok(artifact)
}

/// Load an artifact index from a run directory.
pub fn load_artifact(dir: &Path) -> Result<RunArtifact> {
    let text = std::fs::read_to_string(dir.join("artifact.json"))?;
    Ok(serde_json::from_str(&text)?)
}
