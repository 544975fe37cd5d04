mod common;

use common::{power, random_direction, random_state};
use fermitherm_core::{free_energy, hf_energy, inequality_audit, mean_field_hamiltonian, DensityMatrix, RadialGrid};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn shifted(gamma: &DensityMatrix, delta: &DensityMatrix, eps: f64) -> DensityMatrix {
    DensityMatrix {
        grid: gamma.grid.clone(),
        blocks: gamma.blocks.iter().zip(&delta.blocks).map(|(g, d)| g + d * eps).collect(),
    }
}

#[test]
fn hamiltonian_is_the_energy_gradient() {
    let grid = RadialGrid::new(120, 25.0).unwrap();
    for seed in 0..20u64 {
        let z = 1.0 + (seed % 3) as f64;
        let gamma = random_state(&grid, 2, 3, seed);
        let delta = random_direction(&grid, 2, 1000 + seed);
        let h = mean_field_hamiltonian(&gamma, z).unwrap();
        let analytic: f64 = delta
            .blocks
            .iter()
            .enumerate()
            .map(|(l, d)| (2 * l + 1) as f64 * h.block(l).dot(d))
            .sum();
        let eps = 1e-4;
        let plus = hf_energy(&shifted(&gamma, &delta, eps), z).unwrap().total_hf;
        let minus = hf_energy(&shifted(&gamma, &delta, -eps), z).unwrap().total_hf;
        let numeric = (plus - minus) / (2.0 * eps);
        let rel = (numeric - analytic).abs() / analytic.abs().max(1e-3);
        assert!(rel <= 1e-6, "seed {seed}: {numeric} vs {analytic}");
    }
}

#[test]
fn dilation_scaling_laws() {
    let grid = RadialGrid::new(150, 30.0).unwrap();
    let spec = power(2.0);
    let gamma = random_state(&grid, 2, 3, 5);
    let e = free_energy(&gamma, &spec, 0.0, 1.0).unwrap();
    for eta in [0.5, 2.0, 7.0] {
        let d = free_energy(&gamma.dilate(eta).unwrap(), &spec, 0.0, 1.0).unwrap();
        assert!((d.kinetic - eta * eta * e.kinetic).abs() <= 1e-12 * d.kinetic.abs());
        assert!((d.direct - eta * e.direct).abs() <= 1e-12 * d.direct.abs());
        assert!((d.exchange - eta * e.exchange).abs() <= 1e-12 * d.exchange.abs());
        assert!((d.entropy_term - e.entropy_term).abs() <= 1e-12 * e.entropy_term.abs());
        assert_eq!(d.nuclear, 0.0);
    }
}

#[test]
fn interaction_part_of_hamiltonian_is_nonnegative() {
    let grid = RadialGrid::new(100, 25.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for seed in 0..4u64 {
        let gamma = random_state(&grid, 2, 3, seed);
        let h = mean_field_hamiltonian(&gamma, 1.0).unwrap();
        for l in 0..=2 {
            let full = h.block(l);
            let bare = h.bare_block(l).to_dense();
            for _ in 0..50 {
                let v = DVector::from_fn(grid.len(), |_, _| rng.random_range(-1.0..1.0)).normalize();
                let a = v.dot(&(&full * &v));
                let b = v.dot(&(&bare * &v));
                assert!(a >= b - 1e-9, "l = {l}: {a} < {b}");
            }
        }
    }
}

#[test]
fn exchange_between_zero_and_direct() {
    let grid = RadialGrid::new(120, 25.0).unwrap();
    let spec = power(2.0);
    for seed in 0..10u64 {
        let gamma = random_state(&grid, 3, 3, 300 + seed);
        let e = hf_energy(&gamma, 1.0).unwrap();
        assert!(e.exchange >= 0.0);
        assert!(e.exchange <= e.direct);
        let audit = inequality_audit(&gamma, &spec, 1.0, 1.0).unwrap();
        assert!(audit.all_pass(), "seed {seed}: {audit:?}");
    }
}
