mod common;

use std::f64::consts::PI;

use common::power;
use fermitherm_core::radial::bare_hamiltonian;
use fermitherm_core::{
    guaranteed_existence_qmax, hydrogen_level, linear_free_energy, linear_ground_free_energy, mu_of_q, q_max_lin,
    q_of_mu, scf_global, QMax, ScfConfig,
};
use proptest::prelude::*;

const ZETA3: f64 = 1.202_056_903_159_594_2;

#[test]
fn charge_is_nondecreasing_in_mu() {
    for m in [1.4, 2.0, 2.5] {
        let spec = power(m);
        let mut last = 0.0;
        for k in 0..400 {
            let mu = -2.0 + k as f64 * 0.005;
            let q = q_of_mu(&spec, 1.0, 1.0, mu).unwrap();
            assert!(q >= last, "m = {m}, mu = {mu}");
            last = q;
        }
    }
}

#[test]
fn charge_vanishes_below_the_ground_level() {
    let spec = power(2.0);
    for z in [0.5, 1.0, 3.0] {
        let lambda1 = -z * z / 4.0;
        assert_eq!(q_of_mu(&spec, z, 1.0, lambda1).unwrap(), 0.0);
        assert_eq!(q_of_mu(&spec, z, 1.0, 10.0 * lambda1).unwrap(), 0.0);
        assert!(q_of_mu(&spec, z, 1.0, 0.99 * lambda1).unwrap() > 0.0);
    }
}

#[test]
fn ground_terms_satisfy_legendre_identity() {
    for (m, z, t) in [(2.0, 2.0, 1.0), (1.5, 1.0, 0.3), (2.5, 3.0, 2.0)] {
        let spec = power(m);
        for j in 1..200u64 {
            let lambda = hydrogen_level(z, j).unwrap().lambda / t;
            let g = spec.occupation(lambda);
            let direct = lambda * g + spec.beta(g).unwrap();
            assert!((spec.beta_star(lambda) - direct).abs() < 1e-12);
        }
    }
}

#[test]
fn ground_energy_scales_with_temperature() {
    // F(T) = T·Σ j² β*(λ_j/T): for m = 2, Z = 2 and T ≥ ½ every level is unsaturated, giving −Z⁴ζ(2)/(64T).
    let spec = power(2.0);
    for t in [1.0, 2.0, 5.0] {
        let got = linear_ground_free_energy(&spec, 2.0, t).unwrap();
        let exact = -16.0 * PI * PI / 6.0 / (64.0 * t);
        assert!((got.value - exact).abs() <= 1e-9 + got.tail_bound, "T = {t}");
    }
}

#[test]
fn unsaturated_q_max_matches_closed_form() {
    // Σ j² (c/(m j²))^{1/(m−1)} = (c/m)^{1/(m−1)} ζ(2/(m−1) − 2), c = Z²/(4T).
    let cases: [(f64, f64); 3] = [(1.5, PI * PI / 6.0), (1.4, ZETA3), (1.25, PI.powi(6) / 945.0)];
    for (m, zeta) in cases {
        for (z, t) in [(1.0, 1.0), (2.0, 3.0), (1.0, 0.5)] {
            let c = z * z / (4.0 * t);
            if c >= m {
                continue;
            }
            let exact = (c / m).powf(1.0 / (m - 1.0)) * zeta;
            match q_max_lin(&power(m), z, t) {
                QMax::Finite { value, tail_bound } => {
                    assert!((value - exact).abs() <= tail_bound + 1e-12 * exact, "m = {m}: {value} vs {exact}");
                }
                QMax::Infinite => panic!("m = {m} should be finite"),
            }
        }
    }
}

#[test]
fn guaranteed_charge_below_q_max() {
    for m in [1.2, 1.4, 1.5, 1.6] {
        for (z, t) in [(1.0, 1.0), (2.0, 1.0), (1.0, 0.2), (3.0, 5.0)] {
            let spec = power(m);
            let qg = guaranteed_existence_qmax(&spec, z, t);
            let qm = q_max_lin(&spec, z, t).value();
            assert!(qg <= qm + 1e-12, "m = {m}, Z = {z}, T = {t}: {qg} > {qm}");
            assert!(qg > 0.0 && qg <= z);
        }
    }
}

#[test]
fn guaranteed_charge_solves_its_defining_equation() {
    // m = 2, Z = 1, T = 1: q = (1−q)² ζ(2)/8.
    let c = PI * PI / 48.0;
    let root = (1.0 + 2.0 * c - (4.0 * c + 1.0).sqrt()) / (2.0 * c);
    let got = guaranteed_existence_qmax(&power(2.0), 1.0, 1.0);
    assert!((got - root).abs() < 1e-9);
    assert!((got - 0.148932).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mu_of_q_inverts_q_of_mu(frac in 0.01f64..0.99, m in 1.2f64..1.6) {
        let spec = power(m);
        let qmax = q_max_lin(&spec, 1.0, 1.0).value();
        let q = frac * qmax;
        let mu = mu_of_q(&spec, 1.0, 1.0, q).unwrap();
        prop_assert!(mu < 0.0);
        prop_assert!((q_of_mu(&spec, 1.0, 1.0, mu).unwrap() - q).abs() <= 1e-12_f64.max(1e-10 * q));
    }
}

/// `T Σ_ℓ (2ℓ+1) Σ_k β*(ε_ℓk/T)` over the discrete bare spectrum.
fn discrete_ground_energy(config: &ScfConfig) -> f64 {
    let grid = config.grid().unwrap();
    (0..=config.l_max)
        .map(|l| {
            let ev = bare_hamiltonian(&grid, l, config.z).eigenvalues_below(0.0);
            (2 * l + 1) as f64 * ev.iter().map(|e| config.t * config.spec.beta_star(e / config.t)).sum::<f64>()
        })
        .sum()
}

#[test]
fn non_interacting_minimum_on_the_grid() {
    let spec = power(2.0);
    let mut config = ScfConfig::new(spec, 2.0, 1.0, None);
    config.l_max = 3;
    config.n_points = 4000;
    config.r_max = 120.0;
    config.interactions = false;
    let r = scf_global(&config).unwrap();
    assert!(r.converged);
    // Same minimum from the level sum over the discrete spectrum.
    let levels = discrete_ground_energy(&config);
    assert!((r.energy.total_free - levels).abs() < 1e-12, "{} vs {levels}", r.energy.total_free);
    // Channels ℓ ≤ 3 hold min(j², 16) states of level j. Levels with
    // j ≳ 9 do not fit in the box; they carry 4Σ_{j≥9} j⁻⁴ ≈ 2.3e−3.
    let truncated: f64 = (1..2_000_000u64)
        .map(|j| {
            let lambda = -1.0 / (j * j) as f64;
            (j * j).min(16) as f64 * spec.beta_star(lambda)
        })
        .sum();
    let missing = 4.0 * (9..2_000_000u64).map(|j| (j as f64).powi(-4)).sum::<f64>();
    let gap = r.energy.total_free - truncated;
    assert!(gap > 0.0 && gap < missing + 2e-4, "{} vs {truncated}", r.energy.total_free);
}

#[test]
fn linear_free_energy_of_zero_state() {
    let spec = power(2.0);
    let grid = fermitherm_core::RadialGrid::new(100, 20.0).unwrap();
    let zero = fermitherm_core::DensityMatrix::zeros(&grid, 2);
    assert_eq!(linear_free_energy(&zero, &spec, 1.0, 1.0).unwrap(), 0.0);
}
