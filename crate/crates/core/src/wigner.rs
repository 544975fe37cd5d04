//! Wigner 3j symbols for integer angular momenta.

fn factorial(n: i64) -> f64 {
    debug_assert!((0..=170).contains(&n));
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

fn triangle(a: i64, b: i64, c: i64) -> bool {
    c >= (a - b).abs() && c <= a + b
}

/// `(j1 j2 j3; m1 m2 m3)` by the Racah formula.
pub fn wigner_3j(j1: u32, j2: u32, j3: u32, m1: i32, m2: i32, m3: i32) -> f64 {
    let (j1, j2, j3) = (j1 as i64, j2 as i64, j3 as i64);
    let (m1, m2, m3) = (m1 as i64, m2 as i64, m3 as i64);
    if m1 + m2 + m3 != 0 || !triangle(j1, j2, j3) || m1.abs() > j1 || m2.abs() > j2 || m3.abs() > j3 {
        return 0.0;
    }
    let delta = factorial(j1 + j2 - j3) * factorial(j1 - j2 + j3) * factorial(-j1 + j2 + j3)
        / factorial(j1 + j2 + j3 + 1);
    let norm = libm::sqrt(
        delta
            * factorial(j1 + m1)
            * factorial(j1 - m1)
            * factorial(j2 + m2)
            * factorial(j2 - m2)
            * factorial(j3 + m3)
            * factorial(j3 - m3),
    );
    let k_min = 0.max(j2 - j3 - m1).max(j1 - j3 + m2);
    let k_max = (j1 + j2 - j3).min(j1 - m1).min(j2 + m2);
    let mut sum = 0.0;
    for k in k_min..=k_max {
        let den = factorial(k)
            * factorial(j1 + j2 - j3 - k)
            * factorial(j1 - m1 - k)
            * factorial(j2 + m2 - k)
            * factorial(j3 - j2 + m1 + k)
            * factorial(j3 - j1 - m2 + k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / den;
    }
    let phase = if (j1 - j2 - m3).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    phase * norm * sum
}

/// `A_L(ℓ, ℓ′) = (2ℓ+1)(2ℓ′+1)·(ℓ L ℓ′; 0 0 0)²`.
pub fn exchange_angular_factor(l: u32, big_l: u32, lp: u32) -> f64 {
    let w = wigner_3j(l, big_l, lp, 0, 0, 0);
    ((2 * l + 1) * (2 * lp + 1)) as f64 * w * w
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed form for zero projections.
    fn three_j_zero(a: u32, b: u32, c: u32) -> f64 {
        let j = (a + b + c) as i64;
        if j % 2 == 1 || !triangle(a as i64, b as i64, c as i64) {
            return 0.0;
        }
        let g = j / 2;
        let (a, b, c) = (a as i64, b as i64, c as i64);
        let delta = factorial(j - 2 * a) * factorial(j - 2 * b) * factorial(j - 2 * c) / factorial(j + 1);
        let sign = if g % 2 == 0 { 1.0 } else { -1.0 };
        sign * libm::sqrt(delta) * factorial(g) / (factorial(g - a) * factorial(g - b) * factorial(g - c))
    }

    #[test]
    fn known_values() {
        assert!((wigner_3j(1, 1, 0, 0, 0, 0) + 1.0 / libm::sqrt(3.0)).abs() < 1e-15);
        assert!((wigner_3j(1, 1, 2, 0, 0, 0) - libm::sqrt(2.0 / 15.0)).abs() < 1e-15);
        assert!((wigner_3j(2, 2, 2, 0, 0, 0) + libm::sqrt(2.0 / 35.0)).abs() < 1e-15);
        assert_eq!(wigner_3j(1, 1, 1, 0, 0, 0), 0.0);
        assert!((wigner_3j(1, 1, 1, 1, -1, 0) - 1.0 / libm::sqrt(6.0)).abs() < 1e-15);
    }

    #[test]
    fn zero_projection_closed_form() {
        for a in 0..=12 {
            for b in 0..=12 {
                for c in 0..=24 {
                    let x = wigner_3j(a, b, c, 0, 0, 0);
                    let y = three_j_zero(a, b, c);
                    assert!((x - y).abs() < 1e-13, "({a} {b} {c}): {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn orthogonality_sum() {
        // Σ_L (2L+1)(ℓ L ℓ′; 000)² = 1
        for l in 0..=8 {
            for lp in 0..=8 {
                let s: f64 = (0..=(l + lp))
                    .map(|big_l| {
                        let w = wigner_3j(l, big_l, lp, 0, 0, 0);
                        (2 * big_l + 1) as f64 * w * w
                    })
                    .sum();
                assert!((s - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn column_permutation_symmetry() {
        for (a, b, c) in [(1, 2, 3), (2, 2, 2), (3, 4, 5), (6, 3, 5)] {
            for m1 in -(a as i32)..=(a as i32) {
                for m2 in -(b as i32)..=(b as i32) {
                    let m3 = -m1 - m2;
                    let x = wigner_3j(a, b, c, m1, m2, m3);
                    let y = wigner_3j(b, c, a, m2, m3, m1);
                    assert!((x - y).abs() < 1e-14);
                }
            }
        }
    }
}
