//! Command-line front end for the adaptive-compensation laboratory.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use adaptlab::controllers::CompensatorParams;
use adaptlab::harness::{
    self, compare_controllers, load_artifact, read_pair_csv, region_map_csv, run_scenario,
    write_artifact, write_atomic, BackendKind, CompareConfig, CompensatorCfg, ScenarioConfig,
};
use adaptlab::metrics::{step_metrics, DEFAULT_SETTLE_BAND};
use adaptlab::stability::{delta_bound, derive_region, BoundEnvelope};
use adaptlab::{Error, Result};

#[derive(Parser)]
#[command(
    name = "adaptlab",
    version,
    about = "Adaptive-control laboratory: reference-tracking compensator synthesis and verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its artifacts.
    Simulate {
        /// Scenario config file (TOML) or preset name.
        config: String,
        /// Output directory for run artifacts.
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a compensator design session on a scenario.
    Design {
        /// Scenario config file (TOML) or preset name.
        config: String,
        /// Designer backend.
        #[arg(long, value_parser = parse_backend)]
        backend: BackendKind,
        #[arg(long)]
        max_iter: Option<u32>,
        /// Success tolerance on the tracking rmse.
        #[arg(long)]
        tol: Option<f64>,
        /// Transcript to replay (replay backend) or to record (llm backend).
        #[arg(long)]
        transcript: Option<PathBuf>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Derive the convergence region from compensator gains and emit a
    /// sampled region map.
    AnalyzeRegion {
        /// Gains config (TOML); defaults to the published gain set.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "runs/region")]
        out: PathBuf,
    },
    /// Run the controller comparison suite.
    Compare {
        /// Suite config file (TOML) or the name "compare5".
        config: String,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compute step-response metrics from a trajectory CSV.
    Metrics {
        trajectory: PathBuf,
        /// Settling band as a fraction of the step span.
        #[arg(long, default_value_t = DEFAULT_SETTLE_BAND)]
        settle_band: f64,
    },
    /// Print a preset scenario config, or list all presets.
    Preset {
        /// Preset name; omit with --list to enumerate.
        name: Option<String>,
        #[arg(long)]
        list: bool,
    },
    /// Re-run a completed artifact from its embedded config snapshot.
    Rerun {
        /// Run directory containing artifact.json.
        dir: PathBuf,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
}

fn parse_backend(s: &str) -> std::result::Result<BackendKind, String> {
    match s {
        "rules" => Ok(BackendKind::Rules),
        "llm" => Ok(BackendKind::Llm),
        "replay" => Ok(BackendKind::Replay),
        other => Err(format!("unknown backend '{}': use rules, llm, or replay", other)),
    }
}

/// Gains file for analyze-region.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionConfig {
    kp: f64,
    kd: f64,
    kv: f64,
    ki: f64,
    #[serde(default = "one")]
    b: f64,
    #[serde(default)]
    envelope: Option<BoundEnvelope>,
}

fn one() -> f64 {
    1.0
}

impl Default for RegionConfig {
    fn default() -> Self {
        let p = CompensatorParams::paper();
        RegionConfig {
            kp: p.kp,
            kd: p.kd,
            kv: p.kv,
            ki: p.ki,
            b: 1.0,
            envelope: None,
        }
    }
}

fn load_scenario(config: &str) -> Result<ScenarioConfig> {
    let path = Path::new(config);
    if path.exists() {
        ScenarioConfig::load(path)
    } else {
        harness::preset(config)
    }
}

fn cmd_simulate(config: &str, out: &Path, seed: Option<u64>) -> Result<serde_json::Value> {
    let mut cfg = load_scenario(config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let outcome = run_scenario(&cfg)?;
    let artifact = write_artifact(&outcome, out)?;
    Ok(serde_json::json!({
        "scenario": cfg.name,
        "out_dir": out.join(&cfg.name),
        "tracking_rmse": outcome.metrics.tracking.rmse,
        "tracking_rmse_baseline": outcome.metrics.tracking_baseline.map(|t| t.rmse),
        "rmse_reduction": outcome.rmse_reduction(),
        "session": outcome.session.as_ref().map(|s| serde_json::json!({
            "status": s.status,
            "iterations": s.iteration_count(),
        })),
        "files": artifact.files,
    }))
}

fn cmd_design(
    config: &str,
    backend: BackendKind,
    max_iter: Option<u32>,
    tol: Option<f64>,
    transcript: Option<PathBuf>,
    out: &Path,
    seed: Option<u64>,
) -> Result<serde_json::Value> {
    let mut cfg = load_scenario(config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    // Start from the config's designer settings when present, otherwise
    // from defaults, then apply the flag overrides.
    let (mut iter, mut tolerance, mut endpoint, mut path) = match &cfg.compensator {
        CompensatorCfg::Designer {
            max_iter,
            tol,
            endpoint,
            transcript,
            ..
        } => (*max_iter, *tol, endpoint.clone(), transcript.clone()),
        _ => (10, 0.25, None, None),
    };
    if let Some(m) = max_iter {
        iter = m;
    }
    if let Some(t) = tol {
        tolerance = t;
    }
    if transcript.is_some() {
        path = transcript;
    }
    if backend != BackendKind::Llm {
        endpoint = None;
    }
    cfg.compensator = CompensatorCfg::Designer {
        backend,
        max_iter: iter,
        tol: tolerance,
        integral_mode: cfg.compensator.integral_mode(),
        endpoint,
        transcript: path,
    };
    cfg.validate()?;
    let outcome = run_scenario(&cfg)?;
    let artifact = write_artifact(&outcome, out)?;
    let session = outcome.session.as_ref().expect("design run has a session");
    Ok(serde_json::json!({
        "scenario": cfg.name,
        "status": session.status,
        "iterations": session.iteration_count(),
        "final_params": session.final_params,
        "tracking_rmse": outcome.metrics.tracking.rmse,
        "out_dir": out.join(&cfg.name),
        "files": artifact.files,
    }))
}

fn cmd_analyze_region(config: Option<&Path>, out: &Path) -> Result<serde_json::Value> {
    let rc: RegionConfig = match config {
        Some(path) => toml::from_str(&std::fs::read_to_string(path)?)?,
        None => RegionConfig::default(),
    };
    let envelope = rc.envelope.unwrap_or_else(BoundEnvelope::paper_instance);
    let bound = delta_bound(&envelope)?;
    let params = CompensatorParams::new(rc.kp, rc.kd, rc.kv, rc.ki);
    let region = derive_region(&params, bound, rc.b)?;
    let report = serde_json::json!({
        "gains": params,
        "b": rc.b,
        "envelope": envelope,
        "delta_bound": bound,
        "c1": region.c1,
        "threshold": region.threshold,
        "descent_condition": format!(
            "{:.2}*e1 + e2 > {:.0} (e2 > 0) or < -{:.0} (e2 < 0)",
            region.c1, region.threshold, region.threshold
        ),
    });
    std::fs::create_dir_all(out)?;
    write_atomic(&out.join("region.json"), serde_json::to_string_pretty(&report)?.as_bytes())?;
    write_atomic(
        &out.join("region_map.csv"),
        region_map_csv(&region, 30.0, 1.0).as_bytes(),
    )?;
    Ok(report)
}

fn cmd_compare(config: &str, out: &Path, seed: Option<u64>) -> Result<serde_json::Value> {
    let path = Path::new(config);
    let mut cfg = if path.exists() {
        CompareConfig::load(path)?
    } else if config == "compare5" {
        harness::compare5()
    } else {
        return Err(Error::InvalidConfig(format!(
            "no such suite config file or preset: {}",
            config
        )));
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let table = compare_controllers(&cfg)?;
    let dir = out.join(&cfg.name);
    std::fs::create_dir_all(&dir)?;
    write_atomic(
        &dir.join("comparison.json"),
        serde_json::to_string_pretty(&table)?.as_bytes(),
    )?;
    write_atomic(&dir.join("comparison.txt"), table.to_string().as_bytes())?;
    eprintln!("{}", table);
    Ok(serde_json::json!({
        "suite": cfg.name,
        "rows": table.rows.len(),
        "out_dir": dir,
    }))
}

fn cmd_metrics(trajectory: &Path, settle_band: f64) -> Result<serde_json::Value> {
    let text = std::fs::read_to_string(trajectory)?;
    let (reference, unknown) = read_pair_csv(&text)?;
    Ok(serde_json::json!({
        "reference": step_metrics(&reference, settle_band)?,
        "unknown": step_metrics(&unknown, settle_band)?,
    }))
}

fn cmd_preset(name: Option<&str>, list: bool) -> Result<serde_json::Value> {
    if list || name.is_none() {
        return Ok(serde_json::json!({ "presets": harness::preset_names() }));
    }
    let cfg = harness::preset(name.unwrap())?;
    print!("{}", cfg.to_toml_string()?);
    Ok(serde_json::Value::Null)
}

fn cmd_rerun(dir: &Path, out: &Path) -> Result<serde_json::Value> {
    let artifact = load_artifact(dir)?;
    let outcome = run_scenario(&artifact.config)?;
    let rewritten = write_artifact(&outcome, out)?;
    Ok(serde_json::json!({
        "scenario": artifact.config.name,
        "out_dir": out.join(&artifact.config.name),
        "tracking_rmse": outcome.metrics.tracking.rmse,
        "files": rewritten.files,
    }))
}

fn run(cli: Cli) -> Result<()> {
    let summary = match cli.command {
        Command::Simulate { config, out, seed } => cmd_simulate(&config, &out, seed)?,
        Command::Design {
            config,
            backend,
            max_iter,
            tol,
            transcript,
            out,
            seed,
        } => cmd_design(&config, backend, max_iter, tol, transcript, &out, seed)?,
        Command::AnalyzeRegion { config, out } => cmd_analyze_region(config.as_deref(), &out)?,
        Command::Compare { config, out, seed } => cmd_compare(&config, &out, seed)?,
        Command::Metrics {
            trajectory,
            settle_band,
        } => cmd_metrics(&trajectory, settle_band)?,
        Command::Preset { name, list } => cmd_preset(name.as_deref(), list)?,
        Command::Rerun { dir, out } => cmd_rerun(&dir, &out)?,
    };
    if !summary.is_null() {
        println!("{}", serde_json::to_string_pretty(&summary)?);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let doc = serde_json::json!({
                "error": e.kind(),
                "message": e.to_string(),
            });
            eprintln!("{}", doc);
            ExitCode::FAILURE
        }
    }
}
