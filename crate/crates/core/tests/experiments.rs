//! Study orchestration: artifacts, re-evaluation and the derived fits.

use proptest::prelude::*;
use trigate::experiments::{
    cmd_decoherence, cmd_optimize, cmd_robustness, evaluate_pulse, linear_fit, threshold_time, write_optimize_artifacts,
    DecoherenceSpec, RobustnessSpec, RunConfig,
};
use trigate::noise::{average_state_fidelity_with, ChannelOrder, NoiseSpec};
use trigate::{make_target, GateName, Propagator, PulseShape, PulseTable, SussadeConfig};

fn short_ccz(evals: u64, seed: u64) -> RunConfig {
    RunConfig {
        theta_ns: 8.0,
        optimizer: SussadeConfig {
            population_size: 8,
            max_evaluations: Some(evals),
            seed,
            ..SussadeConfig::default()
        },
        ..RunConfig::default()
    }
}

fn some_pulse() -> PulseTable {
    let values = vec![
        vec![0.3, -0.2, 0.1, 0.0, 0.4, -0.1],
        vec![0.2, 0.2, -0.3, 0.1, 0.0, 0.05],
        vec![-0.1, 0.0, 0.25, -0.2, 0.1, 0.3],
    ];
    PulseTable::new(6.0, PulseShape::PiecewiseConstant, values).unwrap()
}

#[test]
fn saved_pulse_reevaluates_to_reported_fidelity() {
    let cfg = short_ccz(200, 11);
    let r = cmd_optimize(&cfg, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_optimize_artifacts(&cfg, &r, dir.path()).unwrap();
    let reloaded = PulseTable::from_json(&std::fs::read_to_string(dir.path().join("pulse.json")).unwrap()).unwrap();
    let (f, _) = evaluate_pulse(&cfg, &reloaded).unwrap();
    assert!((f - r.fidelity).abs() < 1e-12, "{f} vs {}", r.fidelity);
    assert_eq!(r.n_params, 24);
    assert_eq!(r.leakage.len(), 8);
}

#[test]
fn optimize_is_reproducible_and_respects_budget() {
    let cfg = short_ccz(100, 4);
    let a = cmd_optimize(&cfg, None).unwrap();
    let b = cmd_optimize(&cfg, None).unwrap();
    assert_eq!(a.pulse, b.pulse);
    assert_eq!(a.fidelity, b.fidelity);
    assert!(a.evaluations <= 100 + 8);
    assert!(!a.target_reached);
}

#[test]
fn warm_start_never_loses_ground() {
    let cfg = short_ccz(120, 2);
    let first = cmd_optimize(&cfg, None).unwrap();
    let second = cmd_optimize(&short_ccz(120, 9), Some(&first.pulse)).unwrap();
    assert!(second.fidelity >= first.fidelity - 1e-15);
}

#[test]
fn robustness_at_zero_is_exact_and_mean_degrades() {
    let cfg = RunConfig {
        theta_ns: 6.0,
        ..RunConfig::default()
    };
    let spec = RobustnessSpec {
        delta_khz: vec![0.0, 200.0, 3000.0],
        trials_per_point: 50,
    };
    let r = cmd_robustness(&cfg, &some_pulse(), &spec, 1).unwrap();
    assert_eq!(r.rows[0].mean_fidelity, r.unperturbed);
    assert_eq!(r.rows[0].min_fidelity, r.unperturbed);
    // random far-from-optimal pulse: only the zero row is exact
    assert!(r.rows.iter().all(|row| row.min_fidelity <= row.mean_fidelity));
}

#[test]
fn coherent_limit_bounds_state_fidelity_from_below() {
    // |⟨k|T†U|k⟩| averaged is at least |Tr(T†U)|/8
    let cfg = RunConfig {
        theta_ns: 6.0,
        ..RunConfig::default()
    };
    let p = some_pulse();
    let prop = Propagator::new(cfg.chain().unwrap()).unwrap();
    let target = make_target(GateName::Ccz);
    let (f, comp) = evaluate_pulse(&cfg, &p).unwrap();
    let ev = average_state_fidelity_with(&prop, &p, &target, &NoiseSpec::noiseless(), &comp, 1).unwrap();
    assert!(ev.fbar >= f - 1e-12, "{} < {f}", ev.fbar);
    assert!(ev.max_trace_deficit < 1e-12);
}

#[test]
fn channel_order_barely_matters_at_short_steps() {
    let cfg = RunConfig {
        theta_ns: 6.0,
        ..RunConfig::default()
    };
    let p = some_pulse();
    let prop = Propagator::new(cfg.chain().unwrap()).unwrap();
    let target = make_target(GateName::Ccz);
    let (_, comp) = evaluate_pulse(&cfg, &p).unwrap();
    let fbar = |order| {
        let noise = NoiseSpec {
            order,
            ..NoiseSpec::uniform(10_000.0)
        };
        average_state_fidelity_with(&prop, &p, &target, &noise, &comp, 1).unwrap().fbar
    };
    let d = (fbar(ChannelOrder::AmplitudeThenPhase) - fbar(ChannelOrder::PhaseThenAmplitude)).abs();
    assert!(d < 1e-6, "{d:e}");
}

#[test]
fn decoherence_deficit_shrinks_with_coherence_time() {
    let cfg = RunConfig {
        theta_ns: 6.0,
        ..RunConfig::default()
    };
    let r = cmd_decoherence(&cfg, &some_pulse(), &DecoherenceSpec { t_us: vec![10.0, 20.0, 60.0] }).unwrap();
    for w in r.rows.windows(2) {
        assert!(w[1].fbar > w[0].fbar);
    }
    assert!(r.fitted_coefficient.is_finite());
}

#[test]
fn linear_fit_recovers_exact_line() {
    let x = [20.0, 30.0, 40.0, 50.0];
    let y: Vec<f64> = x.iter().map(|v| 0.002 * v - 0.01).collect();
    let fit = linear_fit(&x, &y).unwrap();
    assert!((fit.slope - 0.002).abs() < 1e-15);
    assert!((fit.intercept + 0.01).abs() < 1e-14);
    assert!((fit.r_squared - 1.0).abs() < 1e-12);
    assert!(linear_fit(&[1.0], &[2.0]).is_none());
}

#[test]
fn threshold_time_interpolates_first_crossing() {
    let pts = [(10.0, 0.5), (20.0, 0.9), (30.0, 0.995), (40.0, 0.999)];
    let t = threshold_time(&pts, 0.99).unwrap();
    // 0.9 → 0.995 over 10 ns; 0.99 is 0.09/0.095 of the way
    assert!((t - (20.0 + 10.0 * 0.09 / 0.095)).abs() < 1e-12);
    assert_eq!(threshold_time(&pts, 0.9999), None);
    assert_eq!(threshold_time(&[(5.0, 0.999)], 0.99), Some(5.0));
}

#[test]
fn config_round_trips_through_json() {
    let cfg = RunConfig {
        gate: GateName::Fredkin,
        decoherence: Some(DecoherenceSpec::default()),
        ..RunConfig::default()
    };
    let back = RunConfig::from_json(&cfg.to_json().unwrap()).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.digest(), cfg.digest());
    assert!(RunConfig::from_json(r#"{"theta_ns": 26.5}"#).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn digest_tracks_every_field(seed in any::<u64>(), theta in 1u32..60) {
        let a = RunConfig { theta_ns: theta as f64, ..RunConfig::default() };
        let mut b = a.clone();
        b.optimizer.seed = seed.wrapping_add(1);
        let mut a2 = a.clone();
        a2.optimizer.seed = seed;
        prop_assert_ne!(a2.digest(), b.digest());
        prop_assert_eq!(a2.digest(), a2.clone().digest());
    }
}
