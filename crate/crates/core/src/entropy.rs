//! Entropy functions β on `[0, 1]`, the occupation map `g` and `β*`.
//!
//! `g(λ) = argmin_{0≤ν≤1} (λν + β(ν))` assigns a filling to an energy level
//! and `β*(λ) = λ g(λ) + β(g(λ))` is the corresponding minimum value. These
//! functions are temperature-free: callers pass `λ / T`.

use crate::error::{Error, Result};
use crate::series::{sum_with_power_tail, Cutoff, PowerTail};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntropyFamily {
    /// `β(ν) = ν^m`.
    Power,
}

/// Whether the level-sum condition `Σ_j j² |β*(−Z²/(4Tj²))| < ∞` can hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum A4Status {
    /// Holds or fails depending on `(Z, T)`; check with [`EntropySpec::validate_a4`].
    Conditional,
    /// Fails for every `T > 0` (power family with `m ≥ 3`).
    Violated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropySpec {
    pub family: EntropyFamily,
    pub m: f64,
    /// `g(λ) = 1` for every `λ ≤ saturation_lambda`.
    pub saturation_lambda: f64,
    pub a4: A4Status,
}

/// Outcome of the level-sum check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct A4Report {
    pub converges: bool,
    pub value: f64,
    pub tail_bound: f64,
    pub terms: u64,
}

const A4_CUTOFF: Cutoff = Cutoff {
    abs_tol: 0.0,
    rel_tol: 1e-10,
    max_terms: 1_000_000,
};

impl EntropySpec {
    /// The power family `β(ν) = ν^m`, `m > 1`.
    pub fn power(m: f64) -> Result<Self> {
        if !(m > 1.0) || !m.is_finite() {
            return Err(Error::InvalidExponent(m));
        }
        Ok(Self {
            family: EntropyFamily::Power,
            m,
            saturation_lambda: -m,
            a4: if m < 3.0 {
                A4Status::Conditional
            } else {
                A4Status::Violated
            },
        })
    }

    /// `β(ν)`; outside `[0, 1]` the entropy is `+∞` and this is an error.
    pub fn beta(&self, nu: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&nu) {
            return Err(Error::OccupationOutOfRange(nu));
        }
        Ok(self.beta_unchecked(nu))
    }

    pub(crate) fn beta_unchecked(&self, nu: f64) -> f64 {
        match self.family {
            EntropyFamily::Power => {
                if nu <= 0.0 {
                    0.0
                } else {
                    libm::pow(nu, self.m)
                }
            }
        }
    }

    /// `β′(ν)` on `[0, 1]`.
    pub fn beta_prime(&self, nu: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&nu) {
            return Err(Error::OccupationOutOfRange(nu));
        }
        Ok(match self.family {
            EntropyFamily::Power => self.m * libm::pow(nu, self.m - 1.0),
        })
    }

    /// Occupation map `g(λ)`.
    pub fn occupation(&self, lambda: f64) -> f64 {
        if !(lambda < 0.0) {
            return 0.0;
        }
        if lambda <= self.saturation_lambda {
            return 1.0;
        }
        match self.family {
            EntropyFamily::Power => libm::pow(-lambda / self.m, 1.0 / (self.m - 1.0)).min(1.0),
        }
    }

    /// `β*(λ) = λ g(λ) + β(g(λ))`.
    pub fn beta_star(&self, lambda: f64) -> f64 {
        if !(lambda < 0.0) {
            return 0.0;
        }
        if lambda <= self.saturation_lambda {
            // g = 1
            return lambda + self.beta_unchecked(1.0);
        }
        match self.family {
            EntropyFamily::Power => {
                let m = self.m;
                -(m - 1.0) * libm::pow(-lambda / m, m / (m - 1.0))
            }
        }
    }

    /// Sums `Σ_j j² |β*(−Z²/(4Tj²))|` with an integral-comparison tail bound.
    pub fn validate_a4(&self, z: f64, t: f64) -> A4Report {
        let c = z * z / (4.0 * t);
        let m = self.m;
        // Levels with c/j² < m sit in the closed-form window where
        // j²|β*| = (m−1)(c/m)^{m/(m−1)} j^{-2/(m−1)}.
        let from = first_unsaturated(c, -self.saturation_lambda);
        let tail = PowerTail {
            coeff: (m - 1.0) * libm::pow(c / m, m / (m - 1.0)),
            exponent: 2.0 / (m - 1.0),
            from,
        };
        let sum = sum_with_power_tail(
            |j| {
                let jf = j as f64;
                jf * jf * libm::fabs(self.beta_star(-c / (jf * jf)))
            },
            tail,
            A4_CUTOFF,
        );
        A4Report {
            converges: sum.value.is_finite(),
            value: sum.value,
            tail_bound: sum.tail_bound,
            terms: sum.terms,
        }
    }
}

/// Smallest `j ≥ 1` with `c / j² < saturation`.
pub(crate) fn first_unsaturated(c: f64, saturation: f64) -> u64 {
    if c <= 0.0 {
        return 1;
    }
    let mut j = libm::floor(libm::sqrt(c / saturation)).max(1.0) as u64;
    while c / ((j * j) as f64) >= saturation {
        j += 1;
    }
    while j > 1 && c / (((j - 1) * (j - 1)) as f64) < saturation {
        j -= 1;
    }
    j
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn exponent_must_exceed_one() {
        assert_eq!(EntropySpec::power(1.0), Err(Error::InvalidExponent(1.0)));
        assert!(EntropySpec::power(0.5).is_err());
        assert!(EntropySpec::power(f64::NAN).is_err());
    }

    #[test]
    fn saturation_and_a4_flags() {
        let s = EntropySpec::power(2.0).unwrap();
        assert_eq!(s.saturation_lambda, -2.0);
        assert_eq!(s.a4, A4Status::Conditional);
        assert_eq!(EntropySpec::power(3.0).unwrap().a4, A4Status::Violated);
    }

    #[test]
    fn beta_values() {
        let s2 = EntropySpec::power(2.0).unwrap();
        assert_eq!(s2.beta(0.5).unwrap(), 0.25);
        assert_eq!(s2.beta(0.0).unwrap(), 0.0);
        assert_eq!(EntropySpec::power(1.5).unwrap().beta(1.0).unwrap(), 1.0);
        assert_eq!(s2.beta(1.2), Err(Error::OccupationOutOfRange(1.2)));
        assert!(s2.beta(-1e-3).is_err());
    }

    #[test]
    fn occupation_values() {
        let s = EntropySpec::power(2.0).unwrap();
        assert_eq!(s.occupation(-1.0), 0.5);
        assert_eq!(s.occupation(0.7), 0.0);
        assert_eq!(s.occupation(0.0), 0.0);
        assert_eq!(s.occupation(-4.0), 1.0);
        assert_eq!(s.occupation(-2.0), 1.0);
    }

    #[test]
    fn beta_star_values() {
        let s = EntropySpec::power(2.0).unwrap();
        assert!((s.beta_star(-1.0) + 0.25).abs() < 1e-15);
        assert_eq!(s.beta_star(1.0), 0.0);
        assert_eq!(s.beta_star(-3.0), -2.0);
    }

    #[test]
    fn beta_star_saturated_matches_grid_argmin() {
        // Brute-force min over ν of λν + ν² at λ = −3.
        let s = EntropySpec::power(2.0).unwrap();
        let mut best = f64::INFINITY;
        for k in 0..=100_000 {
            let nu = k as f64 / 100_000.0;
            best = best.min(-3.0 * nu + nu * nu);
        }
        assert!((s.beta_star(-3.0) - best).abs() < 1e-9);
    }

    #[test]
    fn a4_m2_is_pi_squared_over_24() {
        let s = EntropySpec::power(2.0).unwrap();
        let r = s.validate_a4(2.0, 1.0);
        assert!(r.converges);
        assert!((r.value - PI * PI / 24.0).abs() < 1e-10);
    }

    #[test]
    fn a4_diverges_at_m3() {
        let r = EntropySpec::power(3.0).unwrap().validate_a4(1.0, 1.0);
        assert!(!r.converges);
        assert!(r.value.is_infinite());
    }

    #[test]
    fn a4_small_charge_hot_limit() {
        // Every term is (Z²/(8T))² / j², so the sum is Z⁴/(64T²)·ζ(2).
        let (z, t) = (0.001, 1000.0);
        let r = EntropySpec::power(2.0).unwrap().validate_a4(z, t);
        assert!(r.converges);
        let expected = z.powi(4) / (64.0 * t * t) * PI * PI / 6.0;
        assert!(((r.value - expected) / expected).abs() < 1e-9);
    }

    #[test]
    fn first_unsaturated_index() {
        assert_eq!(first_unsaturated(1.0, 2.0), 1);
        assert_eq!(first_unsaturated(8.0, 2.0), 3); // 8/4 = 2 is still saturated
        assert_eq!(first_unsaturated(0.0, 2.0), 1);
    }
}
