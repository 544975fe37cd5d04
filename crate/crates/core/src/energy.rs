//! Hartree-Fock energy, free energy, the mean-field Hamiltonian and the
//! inequality audit.
//!
//! For channel blocks `Γ_ℓ` the exchange term is
//! `½ Σ_{ℓℓ′} Σ_L A_L(ℓ,ℓ′) Σ_ij Γ_ℓ,ij Γ_ℓ′,ij w_L,ij` with
//! `A_L = (2ℓ+1)(2ℓ′+1)(ℓ L ℓ′; 0 0 0)²`. For a single `s` orbital only
//! `L = 0` survives with `A_0 = 1`, and exchange equals the direct term.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::entropy::EntropySpec;
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, symmetric_eigen_below, symmetric_eigenvalues, Eigenpairs, Tridiagonal};
use crate::radial::{
    density_from_gamma, hartree_potential, kinetic_matrix, nuclear_potential, DensityMatrix, RadialDensity,
    RadialGrid, SPECTRUM_TOL,
};
use crate::wigner::exchange_angular_factor;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub nuclear: f64,
    pub direct: f64,
    pub exchange: f64,
    /// `tr β(γ)`, without the temperature.
    pub entropy_term: f64,
    pub total_hf: f64,
    pub total_free: f64,
}

impl EnergyBreakdown {
    /// Adds `T·tr β(γ)` given the entropy term.
    pub fn with_entropy(self, entropy_term: f64, t: f64) -> Self {
        Self::assemble(self.kinetic, self.nuclear, self.direct, self.exchange, entropy_term, t)
    }

    fn assemble(kinetic: f64, nuclear: f64, direct: f64, exchange: f64, entropy_term: f64, t: f64) -> Self {
        let total_hf = kinetic + nuclear + direct - exchange;
        Self {
            kinetic,
            nuclear,
            direct,
            exchange,
            entropy_term,
            total_hf,
            total_free: total_hf + t * entropy_term,
        }
    }
}

/// Coefficients `A_L(ℓ,ℓ′)/(2ℓ+1)` for `ℓ, ℓ′ ≤ l_max`.
#[derive(Debug, Clone)]
pub(crate) struct ExchangeTable {
    l_max: usize,
    coeff: Vec<f64>,
}

impl ExchangeTable {
    pub(crate) fn new(l_max: usize) -> Self {
        let nl = l_max + 1;
        let nbig = 2 * l_max + 1;
        let mut coeff = vec![0.0; nl * nl * nbig];
        for l in 0..nl {
            for lp in 0..nl {
                for big_l in 0..nbig {
                    coeff[(l * nl + lp) * nbig + big_l] =
                        exchange_angular_factor(l as u32, big_l as u32, lp as u32) / (2 * l + 1) as f64;
                }
            }
        }
        Self { l_max, coeff }
    }

    /// `A_L(ℓ,ℓ′)/(2ℓ+1)`.
    pub(crate) fn get(&self, l: usize, lp: usize, big_l: usize) -> f64 {
        let nl = self.l_max + 1;
        self.coeff[(l * nl + lp) * (2 * self.l_max + 1) + big_l]
    }

    /// Multipoles with a nonzero coefficient for the pair `(ℓ, ℓ′)`.
    pub(crate) fn multipoles(&self, l: usize, lp: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = l.abs_diff(lp);
        (lo..=l + lp)
            .step_by(2)
            .map(move |big_l| (big_l, self.get(l, lp, big_l)))
            .filter(|(_, c)| *c != 0.0)
    }
}

/// Exchange operators `K_ℓ,ij = Σ_{ℓ′,L} A_L/(2ℓ+1)·Γ_ℓ′,ij·w_L,ij`.
pub(crate) fn exchange_operators(gamma: &DensityMatrix) -> Vec<DMatrix<f64>> {
    let grid = &gamma.grid;
    let n = grid.len();
    let nl = gamma.blocks.len();
    let table = ExchangeTable::new(nl - 1);
    let nbig = 2 * nl - 1;
    // kernel[ℓ][ℓ′] as a polynomial in t = r_</r_> divided by r_>.
    let mut poly = vec![vec![0.0; nbig]; nl * nl];
    for l in 0..nl {
        for lp in 0..nl {
            for (big_l, c) in table.multipoles(l, lp) {
                poly[l * nl + lp][big_l] = c;
            }
        }
    }
    let mut out = vec![DMatrix::zeros(n, n); nl];
    let mut pair = vec![0.0; nl * nl];
    let mut powers = vec![0.0; nbig];
    for j in 0..n {
        for i in 0..=j {
            let (lo, hi) = (grid.r[i], grid.r[j]);
            let t = lo / hi;
            let mut p = 1.0 / hi;
            for pw in powers.iter_mut() {
                *pw = p;
                p *= t;
            }
            for (k, s) in pair.iter_mut().enumerate() {
                *s = poly[k].iter().zip(&powers).map(|(c, p)| c * p).sum();
            }
            for l in 0..nl {
                let mut v = 0.0;
                for lp in 0..nl {
                    v += pair[l * nl + lp] * gamma.blocks[lp][(i, j)];
                }
                out[l][(i, j)] = v;
                out[l][(j, i)] = v;
            }
        }
    }
    out
}

/// Per-channel mean-field operator `H_ℓ = T_ℓ + diag(−Z/r + V_H) − K_ℓ`.
#[derive(Debug, Clone)]
pub struct MeanFieldHamiltonian {
    pub grid: RadialGrid,
    pub kinetic: Vec<Tridiagonal>,
    pub nuclear: Vec<f64>,
    pub hartree: Vec<f64>,
    pub exchange: Vec<DMatrix<f64>>,
}

impl MeanFieldHamiltonian {
    pub fn l_max(&self) -> usize {
        self.kinetic.len() - 1
    }

    /// Dense `H_ℓ`.
    pub fn block(&self, l: usize) -> DMatrix<f64> {
        let n = self.grid.len();
        let mut h = match self.exchange.get(l) {
            Some(k) => -k,
            None => DMatrix::zeros(n, n),
        };
        let t = &self.kinetic[l];
        for i in 0..n {
            h[(i, i)] += t.diag[i] + self.nuclear[i] + self.hartree[i];
            if i + 1 < n {
                h[(i, i + 1)] += t.off[i];
                h[(i + 1, i)] += t.off[i];
            }
        }
        h
    }

    /// `H` of the non-interacting model: no Hartree or exchange part.
    pub fn bare(grid: &RadialGrid, l_max: usize, z: f64) -> Self {
        Self {
            grid: grid.clone(),
            kinetic: (0..=l_max).map(|l| kinetic_matrix(grid, l)).collect(),
            nuclear: nuclear_potential(grid, z),
            hartree: vec![0.0; grid.len()],
            exchange: Vec::new(),
        }
    }

    pub fn is_interacting(&self) -> bool {
        !self.exchange.is_empty()
    }

    /// `H` is affine in `γ`, so `H[(1−α)γ + αγ′] = (1−α)H[γ] + αH[γ′]`.
    pub fn mix(&self, other: &Self, alpha: f64) -> Self {
        let exchange = if self.exchange.is_empty() {
            other.exchange.iter().map(|k| k * alpha).collect()
        } else if other.exchange.is_empty() {
            self.exchange.iter().map(|k| k * (1.0 - alpha)).collect()
        } else {
            self.exchange
                .iter()
                .zip(&other.exchange)
                .map(|(a, b)| a * (1.0 - alpha) + b * alpha)
                .collect()
        };
        Self {
            grid: self.grid.clone(),
            kinetic: self.kinetic.clone(),
            nuclear: self.nuclear.clone(),
            hartree: self
                .hartree
                .iter()
                .zip(&other.hartree)
                .map(|(a, b)| (1.0 - alpha) * a + alpha * b)
                .collect(),
            exchange,
        }
    }

    /// `Σ_ℓ (2ℓ+1) tr(diag(r)·H_ℓ·Γ_ℓ)`.
    pub fn radial_moment(&self, gamma: &DensityMatrix) -> f64 {
        let r = &self.grid.r;
        let mut total = 0.0;
        for (l, g) in gamma.blocks.iter().enumerate() {
            let h = self.block(l);
            // Γ symmetric: Σ_ij r_i H_ij Γ_ji = Σ_ij r_i H_ij Γ_ij.
            let mut s = 0.0;
            for j in 0..r.len() {
                for i in 0..r.len() {
                    s += r[i] * h[(i, j)] * g[(i, j)];
                }
            }
            total += (2 * l + 1) as f64 * s;
        }
        total
    }

    /// Eigenpairs of `H_ℓ` below `upper`; without exchange `H_ℓ` is
    /// tridiagonal and is solved as such.
    pub fn eigen_below(&self, l: usize, upper: f64) -> Eigenpairs {
        if self.is_interacting() {
            return symmetric_eigen_below(self.block(l), upper);
        }
        let mut t = self.bare_block(l);
        for (d, v) in t.diag.iter_mut().zip(&self.hartree) {
            *d += v;
        }
        let values = t.eigenvalues_below(upper);
        let ys = t.eigenvectors(&values);
        let n = self.grid.len();
        let vectors = DMatrix::from_fn(n, values.len(), |i, j| ys[j][i]);
        Eigenpairs { values, vectors }
    }

    /// Kinetic plus nuclear part of channel `ℓ`.
    pub fn bare_block(&self, l: usize) -> Tridiagonal {
        let mut t = self.kinetic[l].clone();
        for (d, v) in t.diag.iter_mut().zip(&self.nuclear) {
            *d += v;
        }
        t
    }
}

fn check_layout(gamma: &DensityMatrix) -> Result<()> {
    let n = gamma.grid.len();
    if gamma.blocks.is_empty() || gamma.blocks.iter().any(|b| b.nrows() != n || b.ncols() != n) {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

pub fn mean_field_hamiltonian(gamma: &DensityMatrix, z: f64) -> Result<MeanFieldHamiltonian> {
    check_layout(gamma)?;
    let grid = &gamma.grid;
    let rho = density_from_gamma(gamma);
    Ok(MeanFieldHamiltonian {
        grid: grid.clone(),
        kinetic: (0..gamma.blocks.len()).map(|l| kinetic_matrix(grid, l)).collect(),
        nuclear: nuclear_potential(grid, z),
        hartree: hartree_potential(grid, &rho)?,
        exchange: exchange_operators(gamma),
    })
}

/// `½·h·Σ ρ_i V_i`, equal to `½ h² ΣΣ ρ_i ρ_j / max(r_i, r_j)`.
pub(crate) fn direct_energy(rho: &RadialDensity, hartree: &[f64]) -> f64 {
    0.5 * rho.grid.h * rho.rho_line.iter().zip(hartree).map(|(a, b)| a * b).sum::<f64>()
}

struct Parts {
    kinetic: f64,
    nuclear: f64,
    direct: f64,
    exchange: f64,
}

fn hf_parts(gamma: &DensityMatrix, z: f64, interactions: bool) -> Result<Parts> {
    check_layout(gamma)?;
    let grid = &gamma.grid;
    let mut kinetic = 0.0;
    let mut nuclear = 0.0;
    for (l, b) in gamma.blocks.iter().enumerate() {
        let w = (2 * l + 1) as f64;
        kinetic += w * kinetic_matrix(grid, l).trace_product(b);
        nuclear -= w * z * (0..grid.len()).map(|i| b[(i, i)] / grid.r[i]).sum::<f64>();
    }
    let (direct, exchange) = if interactions {
        let rho = density_from_gamma(gamma);
        let vh = hartree_potential(grid, &rho)?;
        let k = exchange_operators(gamma);
        let ex = 0.5
            * gamma
                .blocks
                .iter()
                .zip(&k)
                .enumerate()
                .map(|(l, (g, k))| (2 * l + 1) as f64 * g.dot(k))
                .sum::<f64>();
        (direct_energy(&rho, &vh), ex)
    } else {
        (0.0, 0.0)
    };
    Ok(Parts {
        kinetic,
        nuclear,
        direct,
        exchange,
    })
}

/// `E^HF(γ)` reusing `H[γ]`. With a bare `h` only kinetic and nuclear
/// terms are filled.
pub(crate) fn energy_from_operators(gamma: &DensityMatrix, h: &MeanFieldHamiltonian) -> EnergyBreakdown {
    let grid = &gamma.grid;
    let mut kinetic = 0.0;
    let mut nuclear = 0.0;
    let mut exchange = 0.0;
    for (l, b) in gamma.blocks.iter().enumerate() {
        let w = (2 * l + 1) as f64;
        kinetic += w * h.kinetic[l].trace_product(b);
        nuclear += w * (0..grid.len()).map(|i| b[(i, i)] * h.nuclear[i]).sum::<f64>();
        if let Some(k) = h.exchange.get(l) {
            exchange += 0.5 * w * b.dot(k);
        }
    }
    let direct = if h.is_interacting() {
        direct_energy(&density_from_gamma(gamma), &h.hartree)
    } else {
        0.0
    };
    EnergyBreakdown::assemble(kinetic, nuclear, direct, exchange, 0.0, 0.0)
}

/// `E^HF(γ)`; the entropy fields are zero.
pub fn hf_energy(gamma: &DensityMatrix, z: f64) -> Result<EnergyBreakdown> {
    let p = hf_parts(gamma, z, true)?;
    Ok(EnergyBreakdown::assemble(p.kinetic, p.nuclear, p.direct, p.exchange, 0.0, 0.0))
}

/// `Σ_ℓ (2ℓ+1) Σ_k β(ν_ℓk)` from block spectra.
pub fn entropy_of_spectra(spec: &EntropySpec, spectra: &[Vec<f64>]) -> f64 {
    spectra
        .iter()
        .enumerate()
        .map(|(l, ev)| (2 * l + 1) as f64 * ev.iter().map(|&v| spec.beta_unchecked(v)).sum::<f64>())
        .sum()
}

/// `E^HF(γ) + T·tr β(γ)`.
pub fn free_energy(gamma: &DensityMatrix, spec: &EntropySpec, z: f64, t: f64) -> Result<EnergyBreakdown> {
    let p = hf_parts(gamma, z, true)?;
    let s = entropy_of_spectra(spec, &gamma.spectra()?);
    Ok(EnergyBreakdown::assemble(p.kinetic, p.nuclear, p.direct, p.exchange, s, t))
}

/// `tr((−Δ − Z/|x|)γ) + T·tr β(γ)`.
pub fn linear_free_energy(gamma: &DensityMatrix, spec: &EntropySpec, z: f64, t: f64) -> Result<f64> {
    let p = hf_parts(gamma, z, false)?;
    let s = entropy_of_spectra(spec, &gamma.spectra()?);
    Ok(p.kinetic + p.nuclear + t * s)
}

/// Smooth radial cutoff: 1 on `[0, R]`, `cos²(π(r/R − 1)/2)` on `(R, 2R)`,
/// 0 beyond.
pub fn cutoff_profile(r: f64, radius: f64) -> f64 {
    let s = r / radius;
    if s <= 1.0 {
        1.0
    } else if s >= 2.0 {
        0.0
    } else {
        let c = libm::cos(0.5 * core::f64::consts::PI * (s - 1.0));
        c * c
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

impl InequalityCheck {
    fn le(lhs: f64, rhs: f64, tol: f64) -> Self {
        Self {
            lhs,
            rhs,
            pass: lhs <= rhs + tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrownKosakiCheck {
    pub radius: f64,
    pub check: InequalityCheck,
}

/// Results of the inequalities every state in `K` satisfies.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityAudit {
    /// exchange ≤ direct.
    pub exchange_vs_direct: InequalityCheck,
    /// `½·kinetic − 2Z²·tr γ ≤ E^HF`.
    pub coercivity: InequalityCheck,
    /// `tr β(XγX) ≤ tr(X β(γ) X)` for radial cutoffs `X`.
    pub brown_kosaki: Vec<BrownKosakiCheck>,
    /// Lowest eigenvalue of `r·T_0 + T_0·r`; reported, never asserted.
    pub hardy_diagnostic: f64,
}

impl InequalityAudit {
    pub fn all_pass(&self) -> bool {
        self.exchange_vs_direct.pass && self.coercivity.pass && self.brown_kosaki.iter().all(|b| b.check.pass)
    }
}

pub const AUDIT_TOL: f64 = 1e-9;

/// `(tr β(XΓX), tr(X β(Γ) X))` summed over channels for diagonal `X = diag(chi)`.
pub fn brown_kosaki_sides(gamma: &DensityMatrix, spec: &EntropySpec, chi: &[f64]) -> Result<(f64, f64)> {
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for (l, b) in gamma.blocks.iter().enumerate() {
        let w = (2 * l + 1) as f64;
        let (nu, v) = symmetric_eigen(b.clone());
        let mut beta_nu = Vec::with_capacity(nu.len());
        for &x in &nu {
            if !(-SPECTRUM_TOL..=1.0 + SPECTRUM_TOL).contains(&x) {
                return Err(Error::SpectrumOutOfRange(x));
            }
            beta_nu.push(spec.beta_unchecked(x.clamp(0.0, 1.0)));
        }
        // β(Γ)_ii = Σ_k V_ik² β(ν_k)
        for (i, c) in chi.iter().enumerate() {
            let d: f64 = (0..nu.len()).map(|k| v[(i, k)] * v[(i, k)] * beta_nu[k]).sum();
            rhs += w * c * c * d;
        }
        let xgx = DMatrix::from_fn(b.nrows(), b.ncols(), |i, j| chi[i] * b[(i, j)] * chi[j]);
        lhs += w * symmetric_eigenvalues(xgx)
            .into_iter()
            .map(|x| spec.beta_unchecked(x.clamp(0.0, 1.0)))
            .sum::<f64>();
    }
    Ok((lhs, rhs))
}

pub fn inequality_audit(gamma: &DensityMatrix, spec: &EntropySpec, z: f64, _t: f64) -> Result<InequalityAudit> {
    let e = hf_energy(gamma, z)?;
    let q = gamma.trace();
    let grid = &gamma.grid;
    let mut brown_kosaki = Vec::new();
    for frac in [0.1, 0.25, 0.5] {
        let radius = frac * grid.r_max;
        let chi: Vec<f64> = grid.r.iter().map(|&r| cutoff_profile(r, radius)).collect();
        let (lhs, rhs) = brown_kosaki_sides(gamma, spec, &chi)?;
        brown_kosaki.push(BrownKosakiCheck {
            radius,
            check: InequalityCheck::le(lhs, rhs, AUDIT_TOL),
        });
    }
    Ok(InequalityAudit {
        exchange_vs_direct: InequalityCheck::le(e.exchange, e.direct, AUDIT_TOL),
        coercivity: InequalityCheck::le(0.5 * e.kinetic - 2.0 * z * z * q, e.total_hf, AUDIT_TOL),
        brown_kosaki,
        hardy_diagnostic: hardy_diagnostic(grid),
    })
}

/// Lowest eigenvalue of the symmetrized product `r·T_0 + T_0·r`.
pub fn hardy_diagnostic(grid: &RadialGrid) -> f64 {
    let t = kinetic_matrix(grid, 0);
    let r = &grid.r;
    let diag = t.diag.iter().zip(r).map(|(d, ri)| 2.0 * ri * d).collect();
    let off = t.off.iter().enumerate().map(|(i, e)| (r[i] + r[i + 1]) * e).collect();
    Tridiagonal::new(diag, off).eigenvalue(0)
}
