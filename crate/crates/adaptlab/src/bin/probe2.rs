// Temporary sweep probe: SMC gains x integral mode per scenario.

use adaptlab::controllers::{CompensatorParams, IntegralMode};
use adaptlab::designer::{refine_loop, RefineOptions, RulesBackend};
use adaptlab::harness::{
    evaluate_candidate, preset, run_reference, run_scenario, BaseControllerCfg, CompensatorCfg,
    ScenarioConfig,
};
use adaptlab::metrics::{step_metrics, ResponseMetrics};

fn with_variant(name: &str, k: f64, mode: IntegralMode) -> ScenarioConfig {
    let mut cfg = preset(name).unwrap();
    cfg.base_controller = BaseControllerCfg::Smc {
        lambda: 5.0,
        k,
        gamma: 1.0,
        boundary_layer: None,
        feedforward: false,
    };
    if let CompensatorCfg::Fixed {
        ref mut integral_mode,
        ..
    } = cfg.compensator
    {
        *integral_mode = mode;
    }
    cfg
}

fn show_step(name: &str, k: f64, mode: IntegralMode) {
    let cfg = with_variant(name, k, mode);
    match run_scenario(&cfg) {
        Ok(o) => {
            let base = o.metrics.tracking_baseline.unwrap();
            let comp = o.metrics.tracking;
            println!(
                "{:>7} k={:<4} {:?}: uncomp {:>10.4} comp {:>8.4} red {:>6.1}% tailgap {:>8.4}",
                name,
                k,
                mode,
                base.rmse,
                comp.rmse,
                100.0 * (1.0 - comp.rmse / base.rmse),
                comp.final_gap
            );
        }
        Err(e) => println!("{:>7} k={:<4} {:?}: FAULT {}", name, k, mode, e),
    }
}

fn show_sin(name: &str, k: f64, mode: IntegralMode) {
    let cfg = with_variant(name, k, mode);
    match run_scenario(&cfg) {
        Ok(o) => {
            let period = match cfg.target {
                adaptlab::dynamics::TargetSignal::Sinusoid { frequency_hz, .. } => {
                    1.0 / frequency_hz
                }
                _ => unreachable!(),
            };
            let start = (period / cfg.dt).ceil() as usize;
            let dev = |traj: &adaptlab::dynamics::Trajectory| {
                o.reference
                    .states
                    .iter()
                    .zip(traj.states.iter())
                    .skip(start)
                    .map(|(r, u)| (r.x1 - u.x1).abs())
                    .fold(0.0f64, f64::max)
            };
            println!(
                "{:>7} k={:<4} {:?}: comp max dev {:>8.4} ({:>5.1}% A) | uncomp {:>8.4}",
                name,
                k,
                mode,
                dev(&o.unknown),
                10.0 * dev(&o.unknown),
                dev(o.baseline.as_ref().unwrap())
            );
        }
        Err(e) => println!("{:>7} k={:<4} {:?}: FAULT {}", name, k, mode, e),
    }
}

fn show_ref_quality(k: f64) {
    let mut cfg = preset("fig3a").unwrap();
    cfg.base_controller = BaseControllerCfg::Smc {
        lambda: 5.0,
        k,
        gamma: 1.0,
        boundary_layer: None,
        feedforward: false,
    };
    let traj = run_reference(&cfg).unwrap();
    let m: ResponseMetrics = step_metrics(&traj, 0.02).unwrap();
    println!(
        "reference k={}: overshoot {:.2}% settle {:?} rise {:?} sse {:.4}",
        k, m.peak_overshoot_pct, m.settling_time, m.rise_time, m.steady_state_error
    );
}

fn fig3e_detail(k: f64, mode: IntegralMode) {
    let cfg = with_variant("fig3e", k, mode);
    let o = run_scenario(&cfg).unwrap();
    let rr = o.region.as_ref().unwrap();
    let band = 0.5;
    let gaps: Vec<f64> = o
        .reference
        .states
        .iter()
        .zip(o.unknown.states.iter())
        .map(|(r, u)| (r.x1 - u.x1).abs())
        .collect();
    let dist_step = (0.02 / cfg.dt).ceil() as usize;
    let reentry = gaps
        .iter()
        .enumerate()
        .skip(dist_step)
        .find(|(_, g)| **g <= band)
        .map(|(i, _)| i as f64 * cfg.dt);
    let tail_max = gaps[gaps.len() - gaps.len() / 10..]
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);
    let base = o.metrics.tracking_baseline.unwrap();
    println!(
        "fig3e k={:<4} {:?}: point {:?} reentry {:?} tailmax {:.4} | uncomp final {:.4} | viol {}",
        k,
        mode,
        rr.disturbance_points[0].status,
        reentry,
        tail_max,
        base.final_gap,
        rr.descent.violations.len()
    );
}

fn designer_probe(k: f64, tol: f64) {
    let mut cfg = with_variant("fig3a", k, IntegralMode::DesiredVsUnknown);
    cfg.compensator = CompensatorCfg::None;
    let reference = run_reference(&cfg).unwrap();
    let mut evaluator = |p: &CompensatorParams| evaluate_candidate(&cfg, &reference, p);
    let mut backend = RulesBackend::default();
    let opts = RefineOptions::<CompensatorParams> {
        tol,
        max_iter: 10,
        ..RefineOptions::default()
    };
    let session = refine_loop("fig3a", &mut evaluator, &mut backend, &opts).unwrap();
    println!(
        "designer k={} tol={}: {:?} in {} iters (rmse0 {:.3})",
        k,
        tol,
        session.status,
        session.iteration_count(),
        session.initial_stats.rmse
    );
    for it in &session.iterations {
        println!(
            "   it{}: kp={:.2} kd={:.2} kv={:.2} ki={:.2} rmse={:.4} halv={} rb={} [{}]",
            it.index,
            it.proposal.kp,
            it.proposal.kd,
            it.proposal.kv,
            it.proposal.ki,
            it.run_stats.rmse,
            it.halvings,
            it.rolled_back,
            it.rationale.as_deref().unwrap_or("")
        );
    }
}

fn main() {
    for k in [2.0, 20.0, 60.0] {
        show_ref_quality(k);
    }
    println!();
    for name in ["fig3a", "fig3b", "fig3f"] {
        for k in [2.0, 60.0] {
            for mode in [IntegralMode::DesiredVsUnknown, IntegralMode::ReferenceVsUnknown] {
                show_step(name, k, mode);
            }
        }
        println!();
    }
    for name in ["fig3c", "fig3d"] {
        for k in [2.0, 60.0] {
            show_sin(name, k, IntegralMode::DesiredVsUnknown);
            show_sin(name, k, IntegralMode::ReferenceVsUnknown);
        }
        println!();
    }
    for k in [2.0, 60.0] {
        for mode in [IntegralMode::DesiredVsUnknown, IntegralMode::ReferenceVsUnknown] {
            fig3e_detail(k, mode);
        }
    }
    println!();
    designer_probe(60.0, 0.5);
    designer_probe(2.0, 0.5);
}
