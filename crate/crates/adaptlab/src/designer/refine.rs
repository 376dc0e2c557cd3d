//! The closed-loop refinement cycle: simulate, summarize, propose, apply.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::dynamics::SystemSpec;
use crate::metrics::{diagnose, DiagnosisThresholds, ResponseMetrics, TrackingStats};
use crate::{Error, Result};

use super::prompt::{build_prompt, direct_controller_prompt};
use super::{
    DesignMode, DesignerBackend, IterationRecord, ParamVector, ProposalSchema, ProposeCtx,
    Session, SessionStatus, DEFAULT_TASK,
};

/// Outcome of simulating a scenario with one candidate parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Reference-vs-unknown tracking statistics; rmse is the convergence
    /// criterion.
    pub tracking: TrackingStats,
    pub response_reference: Option<ResponseMetrics>,
    pub response_unknown: Option<ResponseMetrics>,
    /// Target amplitude, for relative thresholds.
    pub amplitude: f64,
    /// Full (t, y) position series; prompts downsample these.
    pub ref_series: Vec<(f64, f64)>,
    pub unk_series: Vec<(f64, f64)>,
}

/// Anything that can score a candidate parameter set.
pub trait Evaluator<P> {
    fn evaluate(&mut self, params: &P) -> Result<Evaluation>;
}

impl<P, F> Evaluator<P> for F
where
    F: FnMut(&P) -> Result<Evaluation>,
{
    fn evaluate(&mut self, params: &P) -> Result<Evaluation> {
        self(params)
    }
}

/// Loop settings. The backtracking safeguard rolls a step back when it
/// worsens the rmse by more than `backtrack_ratio`, halving the step at
/// most `max_halvings` times before giving up on the iteration.
#[derive(Debug, Clone)]
pub struct RefineOptions<P> {
    pub mode: DesignMode,
    pub max_iter: u32,
    pub tol: f64,
    pub initial: P,
    pub task_text: String,
    pub notes: Option<String>,
    pub persist_path: Option<PathBuf>,
    pub backtrack_ratio: f64,
    pub max_halvings: u32,
    pub parse_retries: u32,
    pub thresholds: DiagnosisThresholds,
    /// Direct mode: plant equations and existing-controller description.
    pub direct_inputs: Option<(SystemSpec, String)>,
}

impl<P: ParamVector> Default for RefineOptions<P> {
    fn default() -> Self {
        RefineOptions {
            mode: DesignMode::Compensator,
            max_iter: 10,
            tol: 0.5,
            initial: P::default(),
            task_text: DEFAULT_TASK.to_string(),
            notes: None,
            persist_path: None,
            backtrack_ratio: 1.25,
            max_halvings: 3,
            parse_retries: 1,
            thresholds: DiagnosisThresholds::default(),
            direct_inputs: None,
        }
    }
}

fn config_snapshot<P: ParamVector>(opts: &RefineOptions<P>) -> serde_json::Value {
    serde_json::json!({
        "mode": match opts.mode {
            DesignMode::Compensator => "compensator",
            DesignMode::DirectController => "direct_controller",
        },
        "max_iter": opts.max_iter,
        "tol": opts.tol,
        "backtrack_ratio": opts.backtrack_ratio,
        "max_halvings": opts.max_halvings,
        "parse_retries": opts.parse_retries,
        "task_text": opts.task_text,
    })
}

fn persist<P: ProposalSchema>(session: &Session<P>, path: &Option<PathBuf>) -> Result<()> {
    if let Some(path) = path {
        crate::harness::write_atomic(path, session.to_json()?.as_bytes())?;
    }
    Ok(())
}

/// Run the iterative design cycle until the tracking rmse drops below
/// tolerance, the iteration budget runs out, or a fault ends the session.
/// The session is persisted after every iteration when a path is set.
pub fn refine_loop<P, E, B>(
    scenario: &str,
    evaluator: &mut E,
    backend: &mut B,
    opts: &RefineOptions<P>,
) -> Result<Session<P>>
where
    P: ProposalSchema,
    E: Evaluator<P>,
    B: DesignerBackend<P>,
{
    if opts.mode == DesignMode::DirectController && opts.direct_inputs.is_none() {
        return Err(Error::InvalidConfig(
            "direct-controller mode needs the plant description".into(),
        ));
    }
    let mut params = opts.initial;
    let mut eval = evaluator.evaluate(&params)?;
    let mut session = Session {
        mode: opts.mode,
        scenario: scenario.to_string(),
        backend: backend.name().to_string(),
        config: config_snapshot(opts),
        initial: params,
        initial_stats: eval.tracking,
        iterations: Vec::new(),
        status: SessionStatus::MaxIterations,
        nondeterministic: backend.nondeterministic(),
        final_params: params,
        fault: None,
    };
    if eval.tracking.rmse < opts.tol {
        session.status = SessionStatus::Converged;
        persist(&session, &opts.persist_path)?;
        return Ok(session);
    }

    for index in 1..=opts.max_iter {
        let diagnosis = match (&eval.response_reference, &eval.response_unknown) {
            (Some(r), Some(u)) => Some(diagnose(r, u, eval.amplitude, &opts.thresholds)),
            _ => None,
        };
        let prompt = match (&opts.mode, &opts.direct_inputs) {
            (DesignMode::DirectController, Some((system, controller))) => {
                direct_controller_prompt::<P>(system, controller, &eval, opts.notes.as_deref())
            }
            _ => build_prompt::<P>(&opts.task_text, &eval, opts.notes.as_deref()),
        };

        // Ask the backend, tolerating a bounded number of parse faults.
        let mut proposal = None;
        let mut last_fault = None;
        for _ in 0..=opts.parse_retries {
            let ctx = ProposeCtx {
                iteration: index,
                mode: opts.mode,
                prompt: &prompt,
                current: params,
                evaluation: &eval,
                diagnosis: diagnosis.as_ref(),
            };
            match backend.propose(&ctx) {
                Ok(p) => {
                    proposal = Some(p);
                    break;
                }
                Err(e @ Error::ParseFault { .. }) => last_fault = Some(e),
                Err(e) => {
                    session.status = SessionStatus::Faulted;
                    session.fault = Some(e.to_string());
                    persist(&session, &opts.persist_path)?;
                    return Ok(session);
                }
            }
        }
        let proposal = match proposal {
            Some(p) => p,
            None => {
                session.status = SessionStatus::Faulted;
                session.fault = last_fault.map(|e| e.to_string());
                persist(&session, &opts.persist_path)?;
                return Ok(session);
            }
        };
        if !proposal.delta.is_finite() {
            session.status = SessionStatus::Faulted;
            session.fault = Some("backend proposed non-finite delta".into());
            persist(&session, &opts.persist_path)?;
            return Ok(session);
        }

        // Apply with the monotone safeguard.
        let mut delta = proposal.delta;
        let mut halvings = 0u32;
        let mut rolled_back = false;
        let mut candidate = params.add(&delta);
        let mut cand_eval = match evaluator.evaluate(&candidate) {
            Ok(e) => e,
            Err(e) => {
                session.status = SessionStatus::Faulted;
                session.fault = Some(e.to_string());
                persist(&session, &opts.persist_path)?;
                return Ok(session);
            }
        };
        while cand_eval.tracking.rmse > opts.backtrack_ratio * eval.tracking.rmse
            && halvings < opts.max_halvings
        {
            halvings += 1;
            delta = delta.scale(0.5);
            candidate = params.add(&delta);
            cand_eval = match evaluator.evaluate(&candidate) {
                Ok(e) => e,
                Err(e) => {
                    session.status = SessionStatus::Faulted;
                    session.fault = Some(e.to_string());
                    persist(&session, &opts.persist_path)?;
                    return Ok(session);
                }
            };
        }
        if cand_eval.tracking.rmse > opts.backtrack_ratio * eval.tracking.rmse {
            rolled_back = true;
            delta = P::default();
            candidate = params;
            cand_eval = eval.clone();
        }

        session.iterations.push(IterationRecord {
            index,
            prompt: prompt.to_text(),
            raw_reply: proposal.raw_reply,
            rationale: proposal.rationale,
            delta,
            proposal: candidate,
            run_stats: cand_eval.tracking,
            halvings,
            rolled_back,
        });
        params = candidate;
        eval = cand_eval;
        session.final_params = params;
        if eval.tracking.rmse < opts.tol {
            session.status = SessionStatus::Converged;
            persist(&session, &opts.persist_path)?;
            return Ok(session);
        }
        persist(&session, &opts.persist_path)?;
    }
    session.status = SessionStatus::MaxIterations;
    persist(&session, &opts.persist_path)?;
    Ok(session)
}
