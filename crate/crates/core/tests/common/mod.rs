#![allow(dead_code)]

use fermitherm_core::{DensityMatrix, EntropySpec, RadialGrid};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn power(m: f64) -> EntropySpec {
    EntropySpec::power(m).unwrap()
}

/// Golden-section argmin of `ν ↦ λν + ν^m` on `[0, 1]`.
///
/// Points are compared through the divided difference of `ν^m`, which stays
/// accurate where the two function values agree to rounding.
pub fn golden_argmin(lambda: f64, m: f64) -> f64 {
    let slope = |x: f64, y: f64| -> f64 {
        // (y^m − x^m)/(y − x) for 0 ≤ x < y
        if x == 0.0 {
            return y.powf(m - 1.0);
        }
        let d = y - x;
        x.powf(m) * (m * (d / x).ln_1p()).exp_m1() / d
    };
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let x1 = b - phi * (b - a);
        let x2 = a + phi * (b - a);
        if x2 <= x1 {
            break;
        }
        // f(x2) − f(x1) = (x2 − x1)(λ + slope)
        if lambda + slope(x1, x2) > 0.0 {
            b = x2;
        } else {
            a = x1;
        }
    }
    0.5 * (a + b)
}

/// Orthonormal columns `r^{ℓ+1} e^{−a r}` times random polynomials.
pub fn smooth_orbitals(grid: &RadialGrid, l: usize, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = grid.len();
    let mut m = DMatrix::zeros(n, k);
    for c in 0..k {
        let a = rng.random_range(0.3..1.5);
        let p: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        for (i, r) in grid.r.iter().enumerate() {
            let poly = 1.0 + p[0] * r + p[1] * r * r / 4.0 + p[2] * r.powi(3) / 27.0;
            m[(i, c)] = r.powi(l as i32 + 1) * (-a * r).exp() * poly * (c as f64 * 0.7 * r).cos();
        }
    }
    m.qr().q()
}

/// A random state in the discrete `K` with `k` orbitals per channel.
pub fn random_state(grid: &RadialGrid, l_max: usize, k: usize, seed: u64) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let channels: Vec<(Vec<f64>, DMatrix<f64>)> = (0..=l_max)
        .map(|l| {
            let v = smooth_orbitals(grid, l, k, &mut rng);
            let occ = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
            (occ, v)
        })
        .collect();
    DensityMatrix::from_orbitals(grid, &channels).unwrap()
}

/// Random symmetric blocks of unit Frobenius norm spanned by smooth functions.
pub fn random_direction(grid: &RadialGrid, l_max: usize, seed: u64) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks = (0..=l_max)
        .map(|l| {
            let v = smooth_orbitals(grid, l, 3, &mut rng);
            let c = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
            let c = &c + c.transpose();
            let b = &v * c * v.transpose();
            let norm = b.norm();
            b / norm
        })
        .collect();
    DensityMatrix { grid: grid.clone(), blocks }
}

/// Rank-one state `q|φ⟩⟨φ|` in the `ℓ = 0` channel.
pub fn rank_one_s(grid: &RadialGrid, phi: &[f64], q: f64, l_max: usize) -> DensityMatrix {
    let n = grid.len();
    let v = DMatrix::from_column_slice(n, 1, phi);
    let mut channels = vec![(vec![q], v)];
    for _ in 0..l_max {
        channels.push((Vec::new(), DMatrix::zeros(n, 0)));
    }
    DensityMatrix::from_orbitals(grid, &channels).unwrap()
}

/// Normalized nodal values of `r e^{−a r}`.
pub fn hydrogenic_s(grid: &RadialGrid, a: f64) -> Vec<f64> {
    let v: Vec<f64> = grid.r.iter().map(|r| r * (-a * r).exp()).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}
