// Temporary probe: remaining preset tuning decisions.

use adaptlab::controllers::CompensatorParams;
use adaptlab::designer::{refine_loop, RefineOptions, RulesBackend};
use adaptlab::dynamics::TargetSignal;
use adaptlab::harness::{
    compare_controllers, evaluate_candidate, preset, run_reference, run_scenario,
    BaseControllerCfg, CompensatorCfg,
};

fn main() {
    // fig3d frequency sweep at tuned SMC.
    for freq in [0.25, 0.2, 0.15] {
        let mut cfg = preset("fig3d").unwrap();
        cfg.base_controller = BaseControllerCfg::Smc {
            lambda: 5.0,
            k: 60.0,
            gamma: 1.0,
            boundary_layer: None,
            feedforward: false,
        };
        cfg.target = TargetSignal::Sinusoid {
            amplitude: 10.0,
            frequency_hz: freq,
        };
        let o = run_scenario(&cfg).unwrap();
        let start = (1.0 / freq / cfg.dt).ceil() as usize;
        let dev = o
            .reference
            .states
            .iter()
            .zip(o.unknown.states.iter())
            .skip(start)
            .map(|(r, u)| (r.x1 - u.x1).abs())
            .fold(0.0f64, f64::max);
        println!("fig3d f={} : comp max dev {:.4} = {:.1}%A", freq, dev, 10.0 * dev);
    }

    // fig3e: intermediate switching gains, want uncomp final gap > 1.5
    // and compensated re-entry (ideally staying) in the 0.5 band.
    for k in [2.0, 4.0, 6.0, 10.0] {
        let mut cfg = preset("fig3e").unwrap();
        cfg.base_controller = BaseControllerCfg::Smc {
            lambda: 5.0,
            k,
            gamma: 1.0,
            boundary_layer: None,
            feedforward: false,
        };
        let o = run_scenario(&cfg).unwrap();
        let gaps: Vec<f64> = o
            .reference
            .states
            .iter()
            .zip(o.unknown.states.iter())
            .map(|(r, u)| (r.x1 - u.x1).abs())
            .collect();
        let dist_step = 20;
        let reentry = gaps
            .iter()
            .enumerate()
            .skip(dist_step)
            .find(|(_, g)| **g <= 0.5)
            .map(|(i, _)| i as f64 * cfg.dt);
        let tail_max = gaps[gaps.len() - gaps.len() / 10..]
            .iter()
            .cloned()
            .fold(0.0f64, f64::max);
        let base = o.metrics.tracking_baseline.unwrap();
        let rr = o.region.unwrap();
        println!(
            "fig3e k={:<3}: {:?} reentry {:?} tailmax {:.3} uncomp_final {:.3} viol {}",
            k, rr.disturbance_points[0].status, reentry, tail_max, base.final_gap,
            rr.descent.violations.len()
        );
    }

    // fig3f with PD base (no integral): bounded baseline?
    for (kp, kd) in [(30.0, 8.0), (50.0, 10.0)] {
        let mut cfg = preset("fig3f").unwrap();
        cfg.base_controller = BaseControllerCfg::Pid {
            kp,
            ki: 0.0,
            kd,
        };
        match run_scenario(&cfg) {
            Ok(o) => {
                let base = o.metrics.tracking_baseline.unwrap();
                let comp = o.metrics.tracking;
                println!(
                    "fig3f PD({},{}): uncomp {:.4} comp {:.4} reduction {:.1}%",
                    kp,
                    kd,
                    base.rmse,
                    comp.rmse,
                    100.0 * (1.0 - comp.rmse / base.rmse)
                );
            }
            Err(e) => println!("fig3f PD({},{}): FAULT {}", kp, kd, e),
        }
    }
    // fig3f with SMC but small gamma.
    for (k, gamma) in [(60.0, 0.05), (20.0, 0.05)] {
        let mut cfg = preset("fig3f").unwrap();
        cfg.base_controller = BaseControllerCfg::Smc {
            lambda: 5.0,
            k,
            gamma,
            boundary_layer: None,
            feedforward: false,
        };
        match run_scenario(&cfg) {
            Ok(o) => {
                let base = o.metrics.tracking_baseline.unwrap();
                let comp = o.metrics.tracking;
                println!(
                    "fig3f SMC(k={}, g={}): uncomp {:.4} comp {:.4} reduction {:.1}%",
                    k,
                    gamma,
                    base.rmse,
                    comp.rmse,
                    100.0 * (1.0 - comp.rmse / base.rmse)
                );
            }
            Err(e) => println!("fig3f SMC(k={}, g={}): FAULT {}", k, gamma, e),
        }
    }

    // Designer tolerance sweep at tuned gains.
    for tol in [0.5, 0.25, 0.15] {
        let mut cfg = preset("fig3a").unwrap();
        cfg.base_controller = BaseControllerCfg::Smc {
            lambda: 5.0,
            k: 60.0,
            gamma: 1.0,
            boundary_layer: None,
            feedforward: false,
        };
        cfg.compensator = CompensatorCfg::None;
        let reference = run_reference(&cfg).unwrap();
        let mut evaluator = |p: &CompensatorParams| evaluate_candidate(&cfg, &reference, p);
        let mut backend = RulesBackend::default();
        let opts = RefineOptions::<CompensatorParams> {
            tol,
            max_iter: 10,
            ..RefineOptions::default()
        };
        let s = refine_loop("fig3a", &mut evaluator, &mut backend, &opts).unwrap();
        println!(
            "designer tol={}: {:?} in {} iters, final kp={:.2} rmse={:.4}",
            tol,
            s.status,
            s.iteration_count(),
            s.final_params.kp,
            s.iterations.last().map(|i| i.run_stats.rmse).unwrap_or(s.initial_stats.rmse)
        );
    }

    // t2-indirect design phase.
    let cfg = preset("t2-indirect").unwrap();
    match run_scenario(&cfg) {
        Ok(o) => {
            let s = o.session.unwrap();
            println!(
                "t2-indirect: {:?} in {} iters; tracking rmse {:.4}",
                s.status,
                s.iteration_count(),
                o.metrics.tracking.rmse
            );
        }
        Err(e) => println!("t2-indirect FAULT {}", e),
    }

    // compare5 with a stronger payload2 spread.
    let table = compare_controllers(&adaptlab::harness::compare5()).unwrap();
    let pick = |ctrl: &str, plant: &str| {
        table
            .rows
            .iter()
            .find(|r| r.controller == ctrl && r.plant == plant)
            .and_then(|r| r.tracking)
            .map(|t| t.rmse)
            .unwrap_or(f64::NAN)
    };
    println!(
        "compare5 spread: pid |{:.4}-{:.4}|={:.4}  compensated |{:.4}-{:.4}|={:.4}",
        pick("pid", "payload1"),
        pick("pid", "payload2"),
        (pick("pid", "payload1") - pick("pid", "payload2")).abs(),
        pick("compensated", "payload1"),
        pick("compensated", "payload2"),
        (pick("compensated", "payload1") - pick("compensated", "payload2")).abs(),
    );
}
