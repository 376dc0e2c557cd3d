// Temporary numeric probe for scenario tuning. Not part of the deliverable.

use adaptlab::controllers::CompensatorParams;
use adaptlab::designer::{refine_loop, RefineOptions, RulesBackend};
use adaptlab::dynamics::{rk4_step, StateVec, SystemSpec};
use adaptlab::harness::{
    self, compare_controllers, evaluate_candidate, preset, run_reference, run_scenario,
    run_unknown,
};
use adaptlab::metrics::compare_responses;
use adaptlab::stability::{delta_bound, derive_region, region_check, BoundEnvelope};

fn reduction(name: &str) {
    let cfg = preset(name).unwrap();
    match run_scenario(&cfg) {
        Ok(outcome) => {
            let base = outcome.metrics.tracking_baseline.unwrap();
            let comp = outcome.metrics.tracking;
            println!(
                "{:>10}: uncomp rmse {:>9.4}  comp rmse {:>9.4}  reduction {:>6.1}%  max_abs {:>8.4} final_gap {:>8.4}",
                name,
                base.rmse,
                comp.rmse,
                100.0 * (1.0 - comp.rmse / base.rmse),
                comp.max_abs,
                comp.final_gap,
            );
        }
        Err(e) => println!("{:>10}: FAULT {}", name, e),
    }
}

fn sinusoid_dev(name: &str) {
    let cfg = preset(name).unwrap();
    let outcome = run_scenario(&cfg).unwrap();
    let period = match cfg.target {
        adaptlab::dynamics::TargetSignal::Sinusoid { frequency_hz, .. } => 1.0 / frequency_hz,
        _ => unreachable!(),
    };
    let start = (period / cfg.dt).ceil() as usize;
    let max_dev = outcome
        .reference
        .states
        .iter()
        .zip(outcome.unknown.states.iter())
        .skip(start)
        .map(|(r, u)| (r.x1 - u.x1).abs())
        .fold(0.0f64, f64::max);
    let base_max = outcome
        .reference
        .states
        .iter()
        .zip(outcome.baseline.as_ref().unwrap().states.iter())
        .skip(start)
        .map(|(r, u)| (r.x1 - u.x1).abs())
        .fold(0.0f64, f64::max);
    println!(
        "{:>10}: max dev after 1 period = {:.4} ({:.1}% of A)   uncompensated {:.4}",
        name,
        max_dev,
        10.0 * max_dev,
        base_max
    );
}

fn main() {
    println!("=== paper region constants ===");
    let env = BoundEnvelope::paper_instance();
    let bound = delta_bound(&env).unwrap();
    let region = derive_region(&CompensatorParams::paper(), bound, 1.0).unwrap();
    println!("bound={} c1={} threshold={}", bound, region.c1, region.threshold);

    println!("\n=== free response accuracy (criterion 5a) ===");
    let spec = SystemSpec::reference();
    let mut state = StateVec::new(1.0, 0.0);
    let dt = 0.001;
    let mut max_err = 0.0f64;
    for k in 0..5000 {
        state = rk4_step(&spec, &state, 0.0, 0.0, dt).unwrap();
        let t = (k + 1) as f64 * dt;
        let w = (5.0f64 - 2.25).sqrt();
        let e = (-1.5 * t).exp();
        let x = e * ((w * t).cos() + (1.5 / w) * (w * t).sin());
        max_err = max_err.max((state.x1 - x).abs());
    }
    println!("max |x_rk4 - x_analytic| over 5 s = {:.3e}", max_err);

    println!("\n=== step reductions (criteria 6, 9, 13-ish) ===");
    for name in ["fig3a", "fig3b", "fig3f", "novel1", "novel2"] {
        reduction(name);
    }

    println!("\n=== sinusoids (criterion 7) ===");
    for name in ["fig3c", "fig3d"] {
        sinusoid_dev(name);
    }

    println!("\n=== fig3e (criterion 8) ===");
    let cfg = preset("fig3e").unwrap();
    let outcome = run_scenario(&cfg).unwrap();
    let rr = outcome.region.as_ref().unwrap();
    for p in &rr.disturbance_points {
        println!(
            "disturbance at t={}: e=({:.3}, {:.3}) -> {:?}",
            p.time, p.e1, p.e2, p.status
        );
    }
    let band = 0.05 * 10.0;
    let dist_step = (0.02 / cfg.dt).ceil() as usize;
    let gaps: Vec<f64> = outcome
        .reference
        .states
        .iter()
        .zip(outcome.unknown.states.iter())
        .map(|(r, u)| (r.x1 - u.x1).abs())
        .collect();
    let reentry = gaps
        .iter()
        .enumerate()
        .skip(dist_step)
        .find(|(_, g)| **g <= band)
        .map(|(k, _)| k as f64 * cfg.dt);
    let tail = &gaps[gaps.len() - gaps.len() / 10..];
    let tail_max = tail.iter().cloned().fold(0.0f64, f64::max);
    println!(
        "compensated: re-entry into 0.5mm band at t={:?}, tail max gap {:.4}",
        reentry, tail_max
    );
    let base_tracking = outcome.metrics.tracking_baseline.unwrap();
    println!(
        "uncompensated final_gap {:.4} (need |.| > {:.2}), rmse {:.4}",
        base_tracking.final_gap,
        3.0 * band,
        base_tracking.rmse
    );
    println!("descent: {} converging samples, {} violations",
        rr.descent.converging_samples, rr.descent.violations.len());

    println!("\n=== half-step refinement on fig3a compensated (criterion 5b) ===");
    let cfg = preset("fig3a").unwrap();
    let reference = run_reference(&cfg).unwrap();
    let comp = CompensatorParams::paper();
    let coarse = run_unknown(&cfg, Some(&comp), &reference).unwrap();
    let mut cfg2 = cfg.clone();
    cfg2.substeps = 2;
    let ref2 = run_reference(&cfg2).unwrap();
    let fine = run_unknown(&cfg2, Some(&comp), &ref2).unwrap();
    let rms: f64 = (coarse
        .states
        .iter()
        .zip(fine.states.iter())
        .map(|(a, b)| (a.x1 - b.x1).powi(2))
        .sum::<f64>()
        / coarse.len() as f64)
        .sqrt();
    println!("substeps 1 vs 2 position RMS diff = {:.3e}", rms);

    println!("\n=== designer on fig3a (criterion 10) ===");
    let cfg = preset("fig3a").unwrap();
    let reference = run_reference(&cfg).unwrap();
    let mut evaluator = |p: &CompensatorParams| evaluate_candidate(&cfg, &reference, p);
    let mut backend = RulesBackend::default();
    let opts = RefineOptions::<CompensatorParams> {
        tol: 0.5,
        max_iter: 10,
        ..RefineOptions::default()
    };
    let session = refine_loop("fig3a", &mut evaluator, &mut backend, &opts).unwrap();
    println!(
        "status {:?} after {} iterations; initial rmse {:.4}",
        session.status,
        session.iteration_count(),
        session.initial_stats.rmse
    );
    for it in &session.iterations {
        println!(
            "  iter {}: kp={:.2} kd={:.2} kv={:.2} ki={:.2} rmse={:.4} halv={} rb={}",
            it.index,
            it.proposal.kp,
            it.proposal.kd,
            it.proposal.kv,
            it.proposal.ki,
            it.run_stats.rmse,
            it.halvings,
            it.rolled_back
        );
    }

    println!("\n=== random companion draws (criterion 13) ===");
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    for i in 0..5 {
        use adaptlab::dynamics::{CoeffArg, CoeffFn, DisturbanceSpec, NoiseKind, Waveform};
        let a21_off = rng.gen_range(-5.0..-2.0);
        let a21_amp = rng.gen_range(0.2..1.4f64).min(-0.5 - a21_off).max(0.0);
        let a22_off = rng.gen_range(-5.0..-1.0);
        let a22_amp = rng.gen_range(0.2..1.0f64).min(-a22_off).min(6.0 + a22_off);
        let b_off = rng.gen_range(1.0..3.0);
        let b_amp = rng.gen_range(0.1..0.9f64).min(b_off).min(4.0 - b_off);
        let mut cfg = preset("fig3a").unwrap();
        cfg.name = format!("draw{}", i);
        cfg.system = harness::SystemName::Custom;
        cfg.custom_system = Some(harness::CustomSystemCfg {
            a21: CoeffFn::new(a21_off, a21_amp, rng.gen_range(0.3..1.2), Waveform::Sin, CoeffArg::X1),
            a22: CoeffFn::new(a22_off, a22_amp, rng.gen_range(0.1..0.4), Waveform::Cos, CoeffArg::X2),
            b: CoeffFn::new(b_off, b_amp, rng.gen_range(0.5..1.2), Waveform::Sin, CoeffArg::X1),
            disturbance: Some(DisturbanceSpec {
                bias: Some(CoeffFn::new(0.0, -0.1, 1.0, Waveform::Sin, CoeffArg::X1)),
                noise_gain: 0.05,
                noise_kind: NoiseKind::UniformSymmetric,
                seed: i,
            }),
        });
        cfg.seed = 300 + i;
        let outcome = run_scenario(&cfg).unwrap();
        let base = outcome.metrics.tracking_baseline.unwrap().rmse;
        let comp = outcome.metrics.tracking.rmse;
        println!(
            "draw{}: a21=[{:.2},{:.2}] b=[{:.2},{:.2}] uncomp {:.4} comp {:.4} better={}",
            i,
            a21_off - a21_amp,
            a21_off + a21_amp,
            b_off - b_amp,
            b_off + b_amp,
            base,
            comp,
            comp < base
        );
    }

    println!("\n=== t2 indirect test phase ===");
    let cfg = preset("t2-indirect-test").unwrap();
    match run_scenario(&cfg) {
        Ok(outcome) => {
            let base = outcome.metrics.tracking_baseline.unwrap();
            println!(
                "uncomp rmse {:.4} comp rmse {:.4}",
                base.rmse, outcome.metrics.tracking.rmse
            );
        }
        Err(e) => println!("FAULT {}", e),
    }

    println!("\n=== compare5 ===");
    let table = compare_controllers(&harness::compare5()).unwrap();
    print!("{}", table);

    println!("\n=== designer scenario preset (design-fig3a) ===");
    let cfg = preset("design-fig3a").unwrap();
    match run_scenario(&cfg) {
        Ok(o) => {
            let s = o.session.unwrap();
            println!("status {:?} iterations {}", s.status, s.iteration_count());
        }
        Err(e) => println!("FAULT {}", e),
    }
}
