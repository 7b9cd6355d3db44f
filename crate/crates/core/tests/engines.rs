use qdka_core::model::{validate, Averaging, BetaEnsemble, KickConfig, NoiseConfig};
use qdka_core::scan::{evaluate, run_eta_scan, uniform_grid, Engine};
use qdka_core::{analytic, propagator, PhysicalSetupF64};

#[test]
fn ensemble_engines_agree() {
    for (ell, beta0) in [(1, 0.5_f64), (2, 0.0), (2, 0.5), (3, 0.5)] {
        for averaging in [Averaging::Coherent, Averaging::Incoherent] {
            let bundle = validate(
                KickConfig::new(ell, 0.6, 4),
                BetaEnsemble::new(beta0, 0.06).with_nodes(32).with_averaging(averaging),
                NoiseConfig::silent(),
            )
            .unwrap();
            for eta in [-0.9, -0.31, 0.0, 0.12, 0.5] {
                let a = analytic::fidelity_ensemble_with_nodes(&bundle, eta, 32).unwrap();
                let p = propagator::fidelity_ensemble(&bundle, eta).unwrap();
                assert!((a - p).abs() < 1e-8, "ell={ell} beta0={beta0} eta={eta}: {a} vs {p}");
            }
        }
    }
}

#[test]
fn single_silent_realization_matches_analytic() {
    let bundle = validate(KickConfig::new(1, 0.6_f64, 4), BetaEnsemble::new(0.5, 0.06), NoiseConfig::silent()).unwrap();
    let est = propagator::fidelity_mc_ensemble(&bundle, 0.2).unwrap();
    assert_eq!(est.realizations, 1);
    let a = analytic::fidelity_ensemble(&bundle, 0.2).unwrap();
    assert!((est.mean - a).abs() < 1e-8);
}

#[test]
fn noisy_scan_is_independent_of_thread_count() {
    let bundle = validate(
        KickConfig::new(1, 0.6, 4).with_reversal(2.4),
        BetaEnsemble::new(0.5, 0.06).with_nodes(16),
        NoiseConfig::experimental(16, 99),
    )
    .unwrap();
    let grid = uniform_grid(-0.3, 0.3, 7);
    let setup = PhysicalSetupF64::rb87();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_eta_scan(&bundle, &grid, Engine::NoisyPropagator, &setup).unwrap())
    };
    let one = run(1);
    let many = run(5);
    for (a, b) in one.fidelity.iter().zip(&many.fidelity) {
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.std_error.unwrap().to_bits(), b.std_error.unwrap().to_bits());
    }
}

#[test]
fn single_precision_tracks_double() {
    let c64 = KickConfig::new(2, 0.6_f64, 4);
    let c32 = KickConfig::new(2, 0.6_f32, 4);
    for eta in [0.0, 0.1, 0.35] {
        let d = analytic::fidelity_plane_wave(&c64, 0.5, eta).unwrap();
        let s = analytic::fidelity_plane_wave(&c32, 0.5, eta as f32).unwrap();
        assert!((d - s as f64).abs() < 1e-4, "eta={eta}: {d} vs {s}");
    }
    let b32 = validate(c32, BetaEnsemble::new(0.5_f32, 0.06), NoiseConfig::silent()).unwrap();
    let f = evaluate(&b32, 0.0, Engine::Analytic).unwrap().mean;
    assert!(f > 0.0 && f <= 1.0 + 1e-5);
}

#[test]
fn offset_momentum_coherent_average_carries_a_residual_phase() {
    use qdka_core::model::Warning;
    use qdka_core::Complex;
    let config = KickConfig::new(2, 0.6_f64, 4).with_n0(2);
    let bundle = validate(config, BetaEnsemble::new(0.5, 0.06), NoiseConfig::silent()).unwrap();
    assert!(bundle.warnings().contains(&Warning::OffsetCoherentPhase));
    let eta = 0.1;
    let policy = propagator::LatticePolicy::default();
    // Per-β amplitudes differ only by exp(-2πiℓ n0 β) up to a constant.
    let ratio = |beta: f64| {
        let a = analytic::echo_amplitude(&config, beta, eta).unwrap().value;
        let p = propagator::experimental_amplitude(&config, beta, eta, None, &policy).unwrap();
        p / a
    };
    let r0 = ratio(0.5);
    for beta in [0.47, 0.52, 0.55] {
        let expected = Complex::from_polar(1.0, -2.0 * std::f64::consts::PI * 2.0 * 2.0 * (beta - 0.5));
        assert!((ratio(beta) / r0 - expected).norm() < 1e-9, "beta={beta}");
    }
    let quiet = validate(KickConfig::new(2, 0.6_f64, 4), BetaEnsemble::new(0.5, 0.06), NoiseConfig::silent()).unwrap();
    assert!(quiet.warnings().is_empty());
}

#[test]
fn engines_agree_for_non_ideal_reversal() {
    for (ell, strength) in [(1, 2.0_f64), (2, 2.6), (3, 3.1)] {
        let config = KickConfig::new(ell, 0.6, 4).with_reversal(strength);
        for (beta, eta) in [(0.5, 0.0), (0.2, 0.33), (0.0, -0.7)] {
            let a = analytic::fidelity_plane_wave(&config, beta, eta).unwrap();
            let p = propagator::fidelity_experimental_sequence(&config, beta, eta, None).unwrap();
            assert!((a - p).abs() < 1e-10, "ell={ell} R={strength} beta={beta} eta={eta}: {a} vs {p}");
        }
    }
}
