//! Oracle-backed properties of the energy model: the skip-correction
//! theorem, stationarity/grid agreement, argmin invariance under transit
//! noise, and the multi-level reduction against an exhaustive grid.

use mlec_core::channel::EfficacyFamily;
use mlec_core::energy::{
    coupling_balance_residual, multilevel_energy, optimize_multilevel, optimize_two_level,
    stationarity_residual, two_level_energy, Coupling, EnergyParams, LevelSpec, OptimizerStatus,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_efficacy(rng: &mut ChaCha8Rng) -> EfficacyFamily<f64> {
    let ceiling = rng.random_range(0.1..0.99);
    let scale = rng.random_range(0.1..5.0);
    if rng.random::<bool>() {
        EfficacyFamily::inverse_exponential(ceiling, scale).unwrap()
    } else {
        EfficacyFamily::linear_saturating(ceiling, scale).unwrap()
    }
}

/// Draw parameters inside the skip-correction regime: bit ratio below one,
/// upstream/downstream repair cost ratio above it, independent coupling.
fn skip_regime_draw(rng: &mut ChaCha8Rng) -> EnergyParams<f64> {
    let alpha = rng.random_range(0.05..0.95);
    let upstream_bits = rng.random_range(100.0..10_000.0);
    let downstream_repair = rng.random_range(1.0..20.0);
    let upstream_repair = downstream_repair * rng.random_range(alpha * 1.01..20.0);
    EnergyParams {
        error_rate: rng.random_range(0.001..0.5),
        upstream_repair_cost: upstream_repair,
        downstream_repair_cost: downstream_repair,
        upstream_bits,
        downstream_bits: alpha * upstream_bits,
        efficacy: random_efficacy(rng),
        coupling: Coupling::Independent,
        downstream_base_cost: rng.random_range(0.0..5.0),
        transit_noise: 0.0,
    }
    .validated()
    .unwrap()
}

fn grid_argmin(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> (f64, f64) {
    let mut best_x = lo;
    let mut best = f(lo);
    for i in 1..points {
        let x = lo + (hi - lo) * i as f64 / (points - 1) as f64;
        let value = f(x);
        if value < best {
            best = value;
            best_x = x;
        }
    }
    (best_x, best)
}

#[test]
fn skip_correction_theorem_against_the_grid_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    for draw in 0..200 {
        let p = skip_regime_draw(&mut rng);
        let k_max = rng.random_range(1.0..10.0);
        let result = optimize_two_level(&p, k_max);
        assert_eq!(
            result.detect_energies[0], 0.0,
            "draw {draw}: optimiser left zero"
        );
        assert_eq!(result.status, OptimizerStatus::Boundary, "draw {draw}");
        let (oracle_x, oracle_val) =
            grid_argmin(|k| two_level_energy(&p, k), 0.0, k_max, 10_000);
        assert_eq!(oracle_x, 0.0, "draw {draw}: oracle disagrees");
        assert!(result.normalized_energy <= oracle_val + 1e-12, "draw {draw}");
    }
}

#[test]
fn stationarity_residual_is_the_energy_derivative() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD1FF);
    let h = 1e-6;
    for _ in 0..200 {
        let mut p = skip_regime_draw(&mut rng);
        // Exercise the differentiable couplings too.
        p.coupling = match rng.random_range(0..3) {
            0 => Coupling::Independent,
            1 => Coupling::ExponentialDecay {
                initial: rng.random_range(0.1..8.0),
                scale: rng.random_range(0.2..3.0),
            },
            _ => Coupling::LinearRamp {
                initial: rng.random_range(1.0..8.0),
            },
        };
        let p = p.validated().unwrap();
        let k = rng.random_range(0.01..6.0);
        // Stay away from the linear-ramp kink where one-sided slopes differ.
        if let Coupling::LinearRamp { initial } = p.coupling {
            if (k - initial).abs() < 10.0 * h {
                continue;
            }
        }
        if let EfficacyFamily::LinearSaturating { scale, .. } = p.efficacy {
            if (k - scale).abs() < 10.0 * h {
                continue;
            }
        }
        let numeric = (two_level_energy(&p, k + h) - two_level_energy(&p, k - h)) / (2.0 * h);
        let analytic = stationarity_residual(&p, k).unwrap();
        assert!(
            (numeric - analytic).abs() < 1e-4 * analytic.abs().max(1.0),
            "k={k}: numeric {numeric} vs analytic {analytic}"
        );
    }
}

#[test]
fn the_two_stationarity_forms_vanish_together() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xFACE);
    let mut checked = 0;
    while checked < 10_000 {
        let mut p = skip_regime_draw(&mut rng);
        p.coupling = match rng.random_range(0..4) {
            0 => Coupling::Independent,
            1 => Coupling::ExponentialDecay {
                initial: rng.random_range(0.1..8.0),
                scale: rng.random_range(0.2..3.0),
            },
            2 => Coupling::LinearRamp {
                initial: rng.random_range(1.0..8.0),
            },
            _ => Coupling::Step {
                initial: rng.random_range(0.1..8.0),
                threshold: rng.random_range(0.5..3.0),
            },
        };
        let p = p.validated().unwrap();
        let k = rng.random_range(0.0..6.0);
        let (Ok(m), Ok(b)) = (stationarity_residual(&p, k), coupling_balance_residual(&p, k))
        else {
            // Both forms must refuse the same undefined points.
            assert!(stationarity_residual(&p, k).is_err());
            assert!(coupling_balance_residual(&p, k).is_err());
            continue;
        };
        let alpha = p.bit_ratio();
        assert!(
            (b + m / alpha).abs() < 1e-9 * (1.0 + m.abs() / alpha),
            "forms disagree: m={m} b={b} alpha={alpha}"
        );
        checked += 1;
    }
}

#[test]
fn interior_stationary_points_match_grid_minima() {
    // A steep exponential decline produces interior optima; wherever the
    // optimiser reports one, the residual vanishes and the grid oracle finds
    // the same point within its resolution.
    let mut rng = ChaCha8Rng::seed_from_u64(0xA11);
    let mut interior_seen = 0;
    for _ in 0..200 {
        let mut p = skip_regime_draw(&mut rng);
        p.coupling = Coupling::ExponentialDecay {
            initial: rng.random_range(5.0..20.0),
            scale: rng.random_range(0.2..0.8),
        };
        let p = p.validated().unwrap();
        let k_max = 6.0;
        let result = optimize_two_level(&p, k_max);
        let (oracle_x, oracle_val) =
            grid_argmin(|k| two_level_energy(&p, k), 0.0, k_max, 10_000);
        // The optimiser may never do worse than the finer oracle grid, and
        // the two minima must agree in value (ties in location are fine).
        assert!(
            result.normalized_energy <= oracle_val + 1e-12 * oracle_val.abs().max(1.0),
            "optimum {} above oracle {oracle_val}",
            result.normalized_energy
        );
        let at_oracle = two_level_energy(&p, oracle_x);
        assert!(
            (result.normalized_energy - at_oracle).abs()
                <= 1e-4 * at_oracle.abs().max(1.0),
            "optimum {} far from oracle value {at_oracle}",
            result.normalized_energy
        );
        if result.status == OptimizerStatus::Interior {
            interior_seen += 1;
            let residual = stationarity_residual(&p, result.detect_energies[0]).unwrap();
            assert!(
                residual.abs() < 1e-3,
                "interior point is not stationary: residual {residual}"
            );
        }
    }
    assert!(interior_seen > 20, "regime produced {interior_seen} interior optima");
}

#[test]
fn transit_noise_never_moves_the_argmin() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x90D);
    for _ in 0..100 {
        let mut p = skip_regime_draw(&mut rng);
        p.coupling = match rng.random_range(0..3) {
            0 => Coupling::Independent,
            1 => Coupling::ExponentialDecay {
                initial: rng.random_range(0.1..10.0),
                scale: rng.random_range(0.2..2.0),
            },
            _ => Coupling::Step {
                initial: rng.random_range(0.1..8.0),
                threshold: rng.random_range(0.5..4.0),
            },
        };
        let p = p.validated().unwrap();
        let k_max = rng.random_range(1.0..8.0);
        let bare = optimize_two_level(&p, k_max);
        let mut noisy = p;
        noisy.transit_noise = rng.random_range(0.0..0.5);
        let noisy = noisy.validated().unwrap();
        let shifted = optimize_two_level(&noisy, k_max);
        assert_eq!(bare.detect_energies, shifted.detect_energies);
        assert_eq!(bare.status, shifted.status);
    }
}

#[test]
fn multilevel_matches_an_exhaustive_two_dimensional_grid() {
    let efficacy = EfficacyFamily::inverse_exponential(0.9, 1.0).unwrap();
    let levels = vec![
        LevelSpec {
            repair_cost: 10.0,
            bits: 1000.0,
            efficacy,
            coupling: Coupling::Independent,
            base_cost: 0.0,
        },
        LevelSpec {
            repair_cost: 12.0,
            bits: 600.0,
            efficacy,
            coupling: Coupling::Independent,
            base_cost: 0.0,
        },
        LevelSpec {
            repair_cost: 9.0,
            bits: 240.0,
            efficacy,
            coupling: Coupling::Independent,
            base_cost: 0.5,
        },
    ];
    let error_rate = 0.1;
    let k_max = 4.0;
    let result = optimize_multilevel(&levels, error_rate, k_max).unwrap();

    // Independent oracle: evaluate the full three-level chain on a 200 x 200
    // grid of the two free energies, with the formula written out directly.
    let z = |k: f64| 0.9 * (1.0 - (-k).exp());
    let chain = |k0: f64, k1: f64| {
        let w1 = 600.0 / 1000.0;
        let w2 = 240.0 / 1000.0;
        let repaired0 = error_rate * z(k0);
        let reach1 = error_rate - repaired0;
        let repaired1 = reach1 * z(k1);
        let reach2 = reach1 - repaired1;
        (k0 + 10.0 * repaired0)
            + w1 * (k1 + 12.0 * repaired1)
            + w2 * (0.5 + 9.0 * reach2)
    };
    let mut oracle = (0.0, 0.0, f64::INFINITY);
    for i in 0..200 {
        for j in 0..200 {
            let k0 = k_max * i as f64 / 199.0;
            let k1 = k_max * j as f64 / 199.0;
            let value = chain(k0, k1);
            if value < oracle.2 {
                oracle = (k0, k1, value);
            }
        }
    }
    let resolution = k_max / 199.0;
    assert!(
        (result.detect_energies[0] - oracle.0).abs() <= resolution,
        "level 0: {} vs oracle {}",
        result.detect_energies[0],
        oracle.0
    );
    assert!(
        (result.detect_energies[1] - oracle.1).abs() <= resolution,
        "level 1: {} vs oracle {}",
        result.detect_energies[1],
        oracle.1
    );
    assert!(result.normalized_energy <= oracle.2 + 1e-9);

    // Cross-check the library's own chain formula against the hand-written
    // oracle at a few arbitrary points.
    for &(a, b) in &[(0.0, 0.0), (1.0, 0.5), (2.5, 3.0)] {
        let lib = multilevel_energy(&levels, error_rate, &[a, b]).unwrap();
        assert!((lib - chain(a, b)).abs() < 1e-12);
    }
}

#[test]
fn all_alpha_below_one_pushes_correction_downstream() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x3AA);
    for _ in 0..50 {
        let efficacy = random_efficacy(&mut rng);
        let bits0 = rng.random_range(500.0..2000.0);
        let alpha1 = rng.random_range(0.2..0.9);
        let alpha2 = rng.random_range(0.2..0.9);
        let repair = rng.random_range(2.0..15.0);
        let levels = vec![
            LevelSpec {
                repair_cost: repair,
                bits: bits0,
                efficacy,
                coupling: Coupling::Independent,
                base_cost: 0.0,
            },
            LevelSpec {
                repair_cost: repair,
                bits: bits0 * alpha1,
                efficacy,
                coupling: Coupling::Independent,
                base_cost: 0.0,
            },
            LevelSpec {
                repair_cost: repair,
                bits: bits0 * alpha1 * alpha2,
                efficacy,
                coupling: Coupling::Independent,
                base_cost: rng.random_range(0.0..2.0),
            },
        ];
        let result = optimize_multilevel(&levels, rng.random_range(0.01..0.4), 5.0).unwrap();
        assert_eq!(result.detect_energies[0], 0.0);
        assert_eq!(result.detect_energies[1], 0.0);
    }
}
