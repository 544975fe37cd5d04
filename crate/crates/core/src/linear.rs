//! Exact results for the non-interacting model
//! `F(γ) = tr((−Δ − Z/|x|)γ) + T tr β(γ)`.
//!
//! The one-body spectrum is the hydrogen series `λ_j = −Z²/(4j²)` with
//! multiplicity `j²`, so every quantity reduces to a level sum.

use crate::entropy::{first_unsaturated, EntropySpec};
use crate::error::{Error, Result};
use crate::series::{sum_with_power_tail, Cutoff, PowerTail, SeriesSum};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HydrogenLevel {
    pub j: u64,
    pub lambda: f64,
    pub multiplicity: u64,
}

/// `j`-th hydrogen level of `−Δ − Z/|x|`.
pub fn hydrogen_level(z: f64, j: u64) -> Result<HydrogenLevel> {
    if j < 1 {
        return Err(Error::InvalidLevelIndex);
    }
    let jf = j as f64;
    Ok(HydrogenLevel {
        j,
        lambda: -z * z / (4.0 * jf * jf),
        multiplicity: j * j,
    })
}

/// Existence regimes of the linear problem for the power family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `1 < m < 5/3`: the maximal charge is finite.
    FiniteQmax,
    /// `5/3 ≤ m < 3`: every charge is bound.
    InfiniteQmax,
    /// `m ≥ 3`: the linear energy is unbounded from below.
    Unbounded,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::FiniteQmax => "finite_qmax",
            Regime::InfiniteQmax => "infinite_qmax",
            Regime::Unbounded => "unbounded",
        }
    }
}

pub fn regime_classify(m: f64) -> Regime {
    if m < 5.0 / 3.0 {
        Regime::FiniteQmax
    } else if m < 3.0 {
        Regime::InfiniteQmax
    } else {
        Regime::Unbounded
    }
}

/// Maximal charge of the linear model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QMax {
    Finite { value: f64, tail_bound: f64 },
    Infinite,
}

impl QMax {
    pub fn value(&self) -> f64 {
        match *self {
            QMax::Finite { value, .. } => value,
            QMax::Infinite => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearReport {
    /// `None` when the model is unbounded from below.
    pub ground_free_energy: Option<SeriesSum>,
    pub q_max_lin: QMax,
    pub regime: Regime,
    pub q_guaranteed: f64,
}

/// Ground-state free energy `inf_K F = T Σ_j j² β*(λ_j/T)`.
pub fn linear_ground_free_energy(spec: &EntropySpec, z: f64, t: f64) -> Result<SeriesSum> {
    let a4 = spec.validate_a4(z, t);
    if !a4.value.is_finite() {
        return Err(Error::UnboundedModel);
    }
    if !a4.converges {
        return Err(Error::PrecisionLimit(a4.terms));
    }
    // Every term is nonpositive and the level-sum check already bounds the
    // tail of Σ j²|β*|; the free energy is its negative scaled by T.
    Ok(SeriesSum {
        value: -t * a4.value,
        tail_bound: t * a4.tail_bound,
        terms: a4.terms,
        converged: true,
    })
}

/// `q_max^lin(T) = Σ_j j² g(λ_j/T)`.
pub fn q_max_lin(spec: &EntropySpec, z: f64, t: f64) -> QMax {
    let m = spec.m;
    let c = z * z / (4.0 * t);
    // In the unsaturated window j² g = (c/m)^{1/(m−1)} j^{2−2/(m−1)}.
    let tail = PowerTail {
        coeff: libm::pow(c / m, 1.0 / (m - 1.0)),
        exponent: 2.0 / (m - 1.0) - 2.0,
        from: first_unsaturated(c, -spec.saturation_lambda),
    };
    let sum = sum_with_power_tail(
        |j| {
            let jf = j as f64;
            jf * jf * spec.occupation(-c / (jf * jf))
        },
        tail,
        Cutoff::LEVEL_SUMS,
    );
    if sum.value.is_finite() {
        QMax::Finite {
            value: sum.value,
            tail_bound: sum.tail_bound,
        }
    } else {
        QMax::Infinite
    }
}

/// Upper bound on the number of levels a single `q(μ)` evaluation may visit.
const MAX_LEVELS: f64 = 1e8;

/// `q(μ) = Σ_j j² g((λ_j − μ)/T)` for `μ ≤ 0`.
pub fn q_of_mu(spec: &EntropySpec, z: f64, t: f64, mu: f64) -> Result<f64> {
    if mu > 0.0 || mu.is_nan() {
        return Err(Error::InvalidParameter("chemical potential must be nonpositive"));
    }
    if mu == 0.0 {
        return Ok(q_max_lin(spec, z, t).value());
    }
    // Only levels strictly below μ contribute.
    let j_max = z / (2.0 * libm::sqrt(-mu));
    if j_max > MAX_LEVELS {
        return Err(Error::PrecisionLimit(MAX_LEVELS as u64));
    }
    let j_max = libm::ceil(j_max) as u64 + 1;
    let mut acc = crate::series::KahanSum::default();
    for j in (1..=j_max).rev() {
        let level = hydrogen_level(z, j)?;
        let occ = spec.occupation((level.lambda - mu) / t);
        if occ > 0.0 {
            acc.add(level.multiplicity as f64 * occ);
        }
    }
    Ok(acc.value())
}

/// Inverse of [`q_of_mu`] by bisection. Returns `−∞` for `q = 0`.
pub fn mu_of_q(spec: &EntropySpec, z: f64, t: f64, q: f64) -> Result<f64> {
    if q < 0.0 || q.is_nan() {
        return Err(Error::NegativeCharge(q));
    }
    if q == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let q_max = q_max_lin(spec, z, t).value();
    if q >= q_max {
        return Err(Error::UnreachableCharge { q, q_max });
    }
    let lambda_1 = hydrogen_level(z, 1)?.lambda;
    let mut lo = lambda_1 - t * spec.m;
    let mut hi = 0.0f64;
    let mut mu = 0.5 * (lo + hi);
    for _ in 0..200 {
        mu = 0.5 * (lo + hi);
        if mu == lo || mu == hi {
            break;
        }
        let qm = match q_of_mu(spec, z, t, mu) {
            Ok(v) => v,
            // Too close to the continuum to resolve; treat as overshoot.
            Err(Error::PrecisionLimit(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        if libm::fabs(qm - q) <= 1e-12 {
            return Ok(mu);
        }
        if qm < q {
            lo = mu;
        } else {
            hi = mu;
        }
    }
    Ok(mu)
}

/// Largest `q` with `q ≤ min(Σ_j g(−(Z−q)²/(4Tj²)), Z)`.
///
/// The level sum carries no `j²` weight.
pub fn guaranteed_existence_qmax(spec: &EntropySpec, z: f64, t: f64) -> f64 {
    let rhs = |q: f64| -> f64 {
        let c = (z - q) * (z - q) / (4.0 * t);
        let m = spec.m;
        let tail = PowerTail {
            coeff: libm::pow(c / m, 1.0 / (m - 1.0)),
            exponent: 2.0 / (m - 1.0),
            from: first_unsaturated(c, -spec.saturation_lambda),
        };
        let s = sum_with_power_tail(
            |j| {
                let jf = j as f64;
                spec.occupation(-c / (jf * jf))
            },
            tail,
            Cutoff::LEVEL_SUMS,
        );
        s.value.min(z)
    };
    // q − rhs(q) is increasing on [0, Z], negative at 0 and equal to Z at Z.
    let (mut lo, mut hi) = (0.0f64, z);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if mid <= rhs(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

pub fn linear_report(spec: &EntropySpec, z: f64, t: f64) -> LinearReport {
    LinearReport {
        ground_free_energy: linear_ground_free_energy(spec, z, t).ok(),
        q_max_lin: q_max_lin(spec, z, t),
        regime: regime_classify(spec.m),
        q_guaranteed: guaranteed_existence_qmax(spec, z, t),
    }
}
