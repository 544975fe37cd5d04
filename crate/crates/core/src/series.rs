//! Summation of positive series whose terms become an exact power law.
//!
//! Every level sum in this crate has the shape `Σ_{j≥1} f(j)` where, beyond
//! some index, `f(j) = c·j^{-p}` exactly. The sum is taken directly up to a
//! cutoff `J` and the remainder is bracketed by
//! `∫_{J+1}^∞ c x^{-p} dx ≤ Σ_{j>J} f(j) ≤ ∫_J^∞ c x^{-p} dx`.
//! The reported value uses the bracket midpoint, and `tail_bound` is its
//! half-width.

/// Result of a bracketed series summation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum {
    /// Best estimate of the full sum (`+∞` when the tail diverges).
    pub value: f64,
    /// Rigorous bound on `|value − true sum|`.
    pub tail_bound: f64,
    /// Number of explicitly summed terms.
    pub terms: u64,
    /// Whether `tail_bound` met the requested tolerance.
    pub converged: bool,
}

impl SeriesSum {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// Asymptotic power law `coeff · j^{-exponent}` valid for `j ≥ from`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerTail {
    pub coeff: f64,
    pub exponent: f64,
    pub from: u64,
}

/// Stopping rule for [`sum_with_power_tail`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_terms: u64,
}

impl Cutoff {
    pub const LEVEL_SUMS: Cutoff = Cutoff {
        abs_tol: 1e-12,
        rel_tol: 1e-10,
        max_terms: 10_000_000,
    };
}

/// Compensated (Neumaier) accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if libm::fabs(self.sum) >= libm::fabs(x) {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn tail_integral(tail: &PowerTail, from: f64) -> f64 {
    // ∫_from^∞ c x^{-p} dx, p > 1
    tail.coeff * libm::pow(from, 1.0 - tail.exponent) / (tail.exponent - 1.0)
}

/// Sums `Σ_{j≥1} term(j)` given that `term(j) = tail.coeff · j^{-tail.exponent}`
/// for every `j ≥ tail.from`.
///
/// A nonpositive coefficient means the tail vanishes identically. An exponent
/// `≤ 1` with a positive coefficient is a divergent series and yields
/// `value = +∞`.
pub fn sum_with_power_tail(term: impl Fn(u64) -> f64, tail: PowerTail, cutoff: Cutoff) -> SeriesSum {
    let from = tail.from.max(1);
    let mut acc = KahanSum::default();
    let mut j = 1u64;

    // Pre-asymptotic head.
    while j < from {
        acc.add(term(j));
        j += 1;
    }

    if tail.coeff <= 0.0 {
        return SeriesSum {
            value: acc.value(),
            tail_bound: 0.0,
            terms: j - 1,
            converged: true,
        };
    }
    if tail.exponent <= 1.0 {
        return SeriesSum {
            value: f64::INFINITY,
            tail_bound: f64::INFINITY,
            terms: j - 1,
            converged: false,
        };
    }

    // Index where the bracket half-width c·J^{-p}/2 (an upper bound on
    // ½∫_J^{J+1}) first drops below the absolute tolerance.
    // With a purely relative tolerance, start from a short head and refine.
    let target = if cutoff.abs_tol > 0.0 {
        libm::pow(tail.coeff / (2.0 * cutoff.abs_tol), 1.0 / tail.exponent)
    } else {
        1024.0
    };
    let mut stop = if target.is_finite() && target < cutoff.max_terms as f64 {
        (libm::ceil(target) as u64).max(from - 1).max(1)
    } else {
        cutoff.max_terms
    };

    let mut last = 0u64;
    loop {
        // Terms are summed from small to large magnitude in blocks of
        // decreasing index, keeping rounding error at the level of the result.
        let mut block = KahanSum::default();
        let mut k = stop;
        while k > last.max(from - 1) {
            block.add(tail.coeff * libm::pow(k as f64, -tail.exponent));
            k -= 1;
        }
        acc.add(block.value());
        last = stop;

        let upper = tail_integral(&tail, stop as f64);
        let lower = tail_integral(&tail, (stop + 1) as f64);
        let half_width = 0.5 * (upper - lower);
        let value = acc.value() + 0.5 * (upper + lower);
        let tol = cutoff.abs_tol.max(cutoff.rel_tol * libm::fabs(value));
        if half_width <= tol {
            return SeriesSum {
                value,
                tail_bound: half_width,
                terms: stop,
                converged: true,
            };
        }
        if stop >= cutoff.max_terms {
            return SeriesSum {
                value,
                tail_bound: half_width,
                terms: stop,
                converged: false,
            };
        }
        // Relative tolerance not yet met; needs a longer head.
        let next = libm::pow(tail.coeff / (2.0 * tol), 1.0 / tail.exponent);
        stop = if next.is_finite() {
            (libm::ceil(next) as u64).max(stop + 1).min(cutoff.max_terms)
        } else {
            cutoff.max_terms
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn zeta_two_from_pure_power_law() {
        let tail = PowerTail {
            coeff: 1.0,
            exponent: 2.0,
            from: 1,
        };
        let s = sum_with_power_tail(|j| 1.0 / (j * j) as f64, tail, Cutoff::LEVEL_SUMS);
        assert!(s.converged);
        assert!((s.value - PI * PI / 6.0).abs() <= s.tail_bound + 1e-14);
        assert!((s.value - PI * PI / 6.0).abs() < 1e-12);
    }

    #[test]
    fn head_terms_are_summed_exactly() {
        // f(1) = 5, f(2) = 7, then 1/j^4.
        let tail = PowerTail {
            coeff: 1.0,
            exponent: 4.0,
            from: 3,
        };
        let s = sum_with_power_tail(
            |j| match j {
                1 => 5.0,
                2 => 7.0,
                _ => unreachable!("tail terms come from the power law"),
            },
            tail,
            Cutoff::LEVEL_SUMS,
        );
        let zeta4 = PI.powi(4) / 90.0;
        assert!((s.value - (12.0 + zeta4 - 1.0 - 1.0 / 16.0)).abs() < 1e-12);
    }

    #[test]
    fn divergent_tail_reports_infinity() {
        let tail = PowerTail {
            coeff: 0.5,
            exponent: 1.0,
            from: 1,
        };
        let s = sum_with_power_tail(|_| unreachable!(), tail, Cutoff::LEVEL_SUMS);
        assert!(s.value.is_infinite());
        assert!(!s.converged);
    }

    #[test]
    fn vanishing_tail_is_exact() {
        let tail = PowerTail {
            coeff: 0.0,
            exponent: 3.0,
            from: 4,
        };
        let s = sum_with_power_tail(|j| j as f64, tail, Cutoff::LEVEL_SUMS);
        assert_eq!(s.value, 6.0);
        assert_eq!(s.tail_bound, 0.0);
    }
}
