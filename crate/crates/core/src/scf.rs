//! Self-consistent field minimization of the free energy over the discrete
//! set of density matrices, with the fixed-point equation
//! `γ = g((H_γ − μ)/T)`.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::energy::{energy_from_operators, exchange_operators, EnergyBreakdown, MeanFieldHamiltonian};
use crate::entropy::EntropySpec;
use crate::error::{Error, Result};
use crate::linear::{q_max_lin, regime_classify, QMax, Regime};
use crate::radial::{density_from_gamma, hartree_potential, bare_hamiltonian, DensityMatrix, RadialGrid};

/// Problem and solver parameters. `q = None` is the unconstrained problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ScfConfig {
    pub spec: EntropySpec,
    pub z: f64,
    pub t: f64,
    pub q: Option<f64>,
    pub n_points: usize,
    pub r_max: f64,
    pub l_max: usize,
    pub alpha: f64,
    pub tol_gamma: f64,
    pub tol_energy: f64,
    pub max_iter: usize,
    /// `false` drops the Hartree and exchange terms (the linear model).
    pub interactions: bool,
}

impl ScfConfig {
    pub fn new(spec: EntropySpec, z: f64, t: f64, q: Option<f64>) -> Self {
        Self {
            spec,
            z,
            t,
            q,
            n_points: 2000,
            r_max: 60.0 / z,
            l_max: 3,
            alpha: 0.5,
            tol_gamma: 1e-9,
            tol_energy: 1e-9,
            max_iter: 500,
            interactions: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.z > 0.0) || !self.z.is_finite() {
            return Err(Error::InvalidParameter("Z must be positive"));
        }
        if !(self.t > 0.0) || !self.t.is_finite() {
            return Err(Error::InvalidParameter("T must be positive"));
        }
        if let Some(q) = self.q {
            if q < 0.0 || !q.is_finite() {
                return Err(Error::NegativeCharge(q));
            }
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParameter("mixing must lie in (0, 1]"));
        }
        if !(self.tol_gamma > 0.0) || !(self.tol_energy > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be positive"));
        }
        if regime_classify(self.spec.m) == Regime::Unbounded {
            return Err(Error::UnboundedModel);
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<RadialGrid> {
        RadialGrid::new(self.n_points, self.r_max)
    }
}

/// Occupations `n_k = g((ε_k − μ)/T)` of a level list.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelFilling {
    /// `−∞` when nothing is occupied.
    pub mu: f64,
    pub occupations: Vec<f64>,
}

fn filled_charge(levels: &[(f64, f64)], spec: &EntropySpec, t: f64, mu: f64) -> f64 {
    levels.iter().map(|&(e, w)| w * spec.occupation((e - mu) / t)).sum()
}

/// Chooses `μ ≤ 0` so that `Σ_k mult_k·g((ε_k − μ)/T) = q`.
///
/// `levels` holds `(ε, multiplicity)`. If even `μ = 0` leaves the sum below
/// `q` the charge cannot be bound.
pub fn occupations_from_levels(levels: &[(f64, f64)], spec: &EntropySpec, t: f64, q: f64) -> Result<LevelFilling> {
    if q < 0.0 || q.is_nan() {
        return Err(Error::NegativeCharge(q));
    }
    if q == 0.0 {
        return Ok(LevelFilling {
            mu: f64::NEG_INFINITY,
            occupations: vec![0.0; levels.len()],
        });
    }
    let q_max = filled_charge(levels, spec, t, 0.0);
    if q_max < q {
        return Err(Error::UnreachableCharge { q, q_max });
    }
    let e_min = levels.iter().map(|l| l.0).fold(f64::INFINITY, f64::min);
    let mut lo = e_min + t * spec.saturation_lambda;
    let mut hi = 0.0f64;
    let mut mu = hi;
    for _ in 0..200 {
        mu = 0.5 * (lo + hi);
        let s = filled_charge(levels, spec, t, mu);
        if libm::fabs(s - q) <= 1e-13 * q.max(1.0) || mu == lo || mu == hi {
            break;
        }
        if s < q {
            lo = mu;
        } else {
            hi = mu;
        }
    }
    Ok(LevelFilling {
        mu,
        occupations: levels.iter().map(|&(e, _)| spec.occupation((e - mu) / t)).collect(),
    })
}

/// Occupied eigenpairs of one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelOrbitals {
    pub energies: Vec<f64>,
    pub occupations: Vec<f64>,
    /// Unit orbitals as columns.
    pub vectors: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScfStatus {
    Converged,
    MaxIterations,
    /// `μ = 0` does not bind the requested charge.
    UnreachableCharge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizerAudit {
    /// `max_ℓ ‖Γ_ℓ − g((H_ℓ − μ)/T)‖_F` recomputed at the result.
    pub selfconsistency_residual: f64,
    /// `Σ_ℓ (2ℓ+1) tr(diag(r)·H_ℓ·Γ_ℓ)`; nonpositive at a minimizer.
    pub lieb_value: f64,
    pub lieb_ok: bool,
    /// `(j, ε_j, −(Z−q)²/(4j²))` for the lowest `s` levels of `H_γ`.
    pub eigenvalue_checks: Vec<(usize, f64, f64)>,
    pub eigenvalue_bound_ok: bool,
    /// `tr γ`, `Σ g(ε/T)` over `H_γ` and over the bare operator.
    pub qmaxlin_chain: [f64; 3],
    pub qmaxlin_chain_ok: bool,
    pub energy_negative_ok: bool,
}

impl MinimizerAudit {
    pub fn all_pass(&self) -> bool {
        self.lieb_ok && self.eigenvalue_bound_ok && self.qmaxlin_chain_ok && self.energy_negative_ok
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScfResult {
    pub gamma: DensityMatrix,
    pub orbitals: Vec<ChannelOrbitals>,
    /// `0` for the unconstrained problem, `−∞` when `γ = 0`.
    pub mu: f64,
    pub energy: EnergyBreakdown,
    /// Last `max_ℓ ‖Γ_new − Γ‖_F`.
    pub residual: f64,
    pub iterations: usize,
    pub status: ScfStatus,
    pub converged: bool,
    /// Free energy of each iterate.
    pub energy_history: Vec<f64>,
    /// Charge at `r > 0.9·r_max`.
    pub boundary_charge: f64,
    /// Boundary charge above 1% of the total: binding may be a box artifact.
    pub boundary_flag: bool,
    pub audit: Option<MinimizerAudit>,
}

pub const EIGENVALUE_BOUND_TOL: f64 = 5e-4;
pub const LIEB_TOL: f64 = 1e-8;
pub const CHAIN_TOL: f64 = 1e-9;

/// One diagonalization step: occupied orbitals of `g((H − μ)/T)`.
struct Filling {
    mu: f64,
    orbitals: Vec<ChannelOrbitals>,
}

fn fill(h: &MeanFieldHamiltonian, config: &ScfConfig) -> Result<Filling> {
    let nl = h.kinetic.len();
    // μ ≤ 0, so only negative eigenvalues can carry occupation.
    let eig: Vec<_> = (0..nl).map(|l| h.eigen_below(l, 0.0)).collect();
    let levels: Vec<(f64, f64)> = eig
        .iter()
        .enumerate()
        .flat_map(|(l, e)| e.values.iter().map(move |&v| (v, (2 * l + 1) as f64)))
        .collect();
    let (mu, occ) = match config.q {
        Some(q) => {
            let f = occupations_from_levels(&levels, &config.spec, config.t, q)?;
            (f.mu, f.occupations)
        }
        None => (
            0.0,
            levels.iter().map(|&(e, _)| config.spec.occupation(e / config.t)).collect(),
        ),
    };
    let mut offset = 0;
    let mut orbitals = Vec::with_capacity(nl);
    for e in eig {
        let k = e.values.len();
        let keep: Vec<usize> = (0..k).filter(|&i| occ[offset + i] > 0.0).collect();
        orbitals.push(ChannelOrbitals {
            energies: keep.iter().map(|&i| e.values[i]).collect(),
            occupations: keep.iter().map(|&i| occ[offset + i]).collect(),
            vectors: e.vectors.select_columns(&keep),
        });
        offset += k;
    }
    Ok(Filling { mu, orbitals })
}

fn gamma_from_orbitals(grid: &RadialGrid, orbitals: &[ChannelOrbitals]) -> Result<DensityMatrix> {
    let channels: Vec<(Vec<f64>, DMatrix<f64>)> =
        orbitals.iter().map(|o| (o.occupations.clone(), o.vectors.clone())).collect();
    DensityMatrix::from_orbitals(grid, &channels)
}

fn entropy_of_orbitals(spec: &EntropySpec, orbitals: &[ChannelOrbitals]) -> f64 {
    orbitals
        .iter()
        .enumerate()
        .map(|(l, o)| (2 * l + 1) as f64 * o.occupations.iter().map(|&v| spec.beta_unchecked(v)).sum::<f64>())
        .sum()
}

fn hamiltonian(gamma: &DensityMatrix, config: &ScfConfig) -> Result<MeanFieldHamiltonian> {
    let mut h = MeanFieldHamiltonian::bare(&gamma.grid, gamma.l_max(), config.z);
    if config.interactions {
        h.hartree = hartree_potential(&gamma.grid, &density_from_gamma(gamma))?;
        h.exchange = exchange_operators(gamma);
    }
    Ok(h)
}

fn boundary_charge(gamma: &DensityMatrix) -> f64 {
    let rho = density_from_gamma(gamma);
    let grid = &gamma.grid;
    grid.r
        .iter()
        .zip(&rho.rho_line)
        .filter(|(r, _)| **r > 0.9 * grid.r_max)
        .map(|(_, p)| grid.h * p)
        .sum()
}

fn zero_result(grid: &RadialGrid, config: &ScfConfig, mu: f64) -> ScfResult {
    let n = grid.len();
    ScfResult {
        gamma: DensityMatrix::zeros(grid, config.l_max),
        orbitals: vec![
            ChannelOrbitals {
                energies: Vec::new(),
                occupations: Vec::new(),
                vectors: DMatrix::zeros(n, 0),
            };
            config.l_max + 1
        ],
        mu,
        energy: EnergyBreakdown::default(),
        residual: 0.0,
        iterations: 0,
        status: ScfStatus::Converged,
        converged: true,
        energy_history: vec![0.0],
        boundary_charge: 0.0,
        boundary_flag: false,
        audit: None,
    }
}

fn run(config: &ScfConfig) -> Result<ScfResult> {
    config.validate()?;
    let grid = config.grid()?;
    if config.q == Some(0.0) {
        let mut res = zero_result(&grid, config, f64::NEG_INFINITY);
        res.audit = Some(minimizer_audit(&res, config)?);
        return Ok(res);
    }

    // Warm start from the linear-model minimizer.
    let mut h = MeanFieldHamiltonian::bare(&grid, config.l_max, config.z);
    let mut gamma = DensityMatrix::zeros(&grid, config.l_max);
    let mut alpha = config.alpha;
    let mut history = Vec::new();
    let mut prev_energy = f64::INFINITY;
    let mut increases = 0;
    let mut residual = f64::INFINITY;
    let mut first = true;

    for iter in 1..=config.max_iter {
        let filling = match fill(&h, config) {
            Ok(f) => f,
            Err(Error::UnreachableCharge { .. }) => {
                let mut res = zero_result(&grid, config, 0.0);
                res.gamma = gamma.clone();
                res.energy = energy_from_operators(&gamma, &h);
                res.status = ScfStatus::UnreachableCharge;
                res.converged = false;
                res.iterations = iter;
                res.energy_history = history;
                return Ok(res);
            }
            Err(e) => return Err(e),
        };
        let gamma_new = gamma_from_orbitals(&grid, &filling.orbitals)?;
        let h_new = hamiltonian(&gamma_new, config)?;
        let energy = energy_from_operators(&gamma_new, &h_new)
            .with_entropy(entropy_of_orbitals(&config.spec, &filling.orbitals), config.t);
        history.push(energy.total_free);

        if first {
            // The warm start is the first proper iterate.
            first = false;
        } else {
            residual = gamma.max_block_distance(&gamma_new)?;
            let de = libm::fabs(energy.total_free - prev_energy);
            if residual <= config.tol_gamma && de <= config.tol_energy {
                let boundary = boundary_charge(&gamma_new);
                let trace = gamma_new.trace();
                let mut res = ScfResult {
                    gamma: gamma_new,
                    orbitals: filling.orbitals,
                    mu: filling.mu,
                    energy,
                    residual,
                    iterations: iter,
                    status: ScfStatus::Converged,
                    converged: true,
                    energy_history: history,
                    boundary_charge: boundary,
                    boundary_flag: boundary > 0.01 * trace,
                    audit: None,
                };
                res.audit = Some(minimizer_audit(&res, config)?);
                return Ok(res);
            }
            if energy.total_free > prev_energy {
                increases += 1;
                if increases >= 5 {
                    alpha = (alpha * 0.5).max(1.0 / 16.0);
                    increases = 0;
                }
            } else {
                increases = 0;
            }
        }
        prev_energy = energy.total_free;

        if iter == config.max_iter {
            let boundary = boundary_charge(&gamma_new);
            let trace = gamma_new.trace();
            return Ok(ScfResult {
                gamma: gamma_new,
                orbitals: filling.orbitals,
                mu: filling.mu,
                energy,
                residual,
                iterations: iter,
                status: ScfStatus::MaxIterations,
                converged: false,
                energy_history: history,
                boundary_charge: boundary,
                boundary_flag: boundary > 0.01 * trace,
                audit: None,
            });
        }
        if gamma.trace() == 0.0 && gamma.blocks.iter().all(|b| b.amax() == 0.0) {
            // Starting from γ = 0 the bare filling is taken in full.
            gamma = gamma_new;
            h = h_new;
        } else {
            gamma = gamma.mix(&gamma_new, alpha)?;
            h = h.mix(&h_new, alpha);
        }
    }
    unreachable!("loop returns on its last iteration")
}

/// Minimizes the free energy at fixed trace `config.q`.
pub fn scf_minimize(config: &ScfConfig) -> Result<ScfResult> {
    if config.q.is_none() {
        return Err(Error::InvalidParameter("constrained problem needs a charge"));
    }
    run(config)
}

/// Minimizes the free energy without a trace constraint (`μ = 0`).
pub fn scf_global(config: &ScfConfig) -> Result<ScfResult> {
    let mut c = config.clone();
    c.q = None;
    run(&c)
}

/// Checks the properties every minimizer has.
pub fn minimizer_audit(result: &ScfResult, config: &ScfConfig) -> Result<MinimizerAudit> {
    if !result.converged {
        return Err(Error::Unconverged);
    }
    let gamma = &result.gamma;
    let grid = &gamma.grid;
    let q = gamma.trace();
    let h = hamiltonian(gamma, config)?;
    let nl = gamma.blocks.len();

    let spectra: Vec<Vec<f64>> = (0..nl).map(|l| h.eigen_below(l, 0.0).values).collect();
    let residual = if config.q == Some(0.0) {
        gamma.blocks.iter().map(|b| b.norm()).fold(0.0, f64::max)
    } else {
        let f = fill(&h, config)?;
        gamma_from_orbitals(grid, &f.orbitals)?.max_block_distance(gamma)?
    };

    let lieb_value = h.radial_moment(gamma);

    let mut eigenvalue_checks = Vec::new();
    let mut eigenvalue_bound_ok = true;
    for j in 1..=3usize {
        let bound = -(config.z - q) * (config.z - q) / (4.0 * (j * j) as f64);
        match spectra[0].get(j - 1) {
            Some(&e) => {
                eigenvalue_bound_ok &= e <= bound + EIGENVALUE_BOUND_TOL;
                eigenvalue_checks.push((j, e, bound));
            }
            None => {
                if q < config.z {
                    eigenvalue_bound_ok = false;
                }
            }
        }
    }

    let t = config.t;
    let weighted = |levels: &[Vec<f64>]| -> f64 {
        levels
            .iter()
            .enumerate()
            .map(|(l, ev)| (2 * l + 1) as f64 * ev.iter().map(|&e| config.spec.occupation(e / t)).sum::<f64>())
            .sum()
    };
    let s_h = weighted(&spectra);
    let bare: Vec<Vec<f64>> = (0..nl)
        .map(|l| bare_hamiltonian(grid, l, config.z).eigenvalues_below(0.0))
        .collect();
    let s_bare = weighted(&bare);

    Ok(MinimizerAudit {
        selfconsistency_residual: residual,
        lieb_value,
        lieb_ok: lieb_value <= LIEB_TOL,
        eigenvalue_checks,
        eigenvalue_bound_ok,
        qmaxlin_chain: [q, s_h, s_bare],
        qmaxlin_chain_ok: q <= s_h + CHAIN_TOL && s_h <= s_bare + CHAIN_TOL,
        energy_negative_ok: q == 0.0 || result.energy.total_free < 0.0,
    })
}

/// One point of an `I(q)` sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub q: f64,
    pub energy: f64,
    pub converged: bool,
    pub mu: f64,
    /// Charge unreachable, or bound only by the box wall.
    pub binding_flag: bool,
    pub status: ScfStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// `I(q_{k+1}) ≤ I(q_k) + 10·tol_energy` throughout.
    pub monotone: bool,
    /// Largest `q` up to which `I` decreases strictly at every step.
    pub strict_decrease_up_to: Option<f64>,
    pub q_max_lin: QMax,
    /// `min(q_max_lin, 2Z + 1)`.
    pub ceiling: f64,
}

/// Minimizes at a single charge and condenses the result into a row.
pub fn sweep_point(config: &ScfConfig, q: f64) -> Result<SweepRow> {
    let mut c = config.clone();
    c.q = Some(q);
    let res = scf_minimize(&c)?;
    Ok(SweepRow {
        q,
        energy: res.energy.total_free,
        converged: res.converged,
        mu: res.mu,
        binding_flag: res.status == ScfStatus::UnreachableCharge || res.boundary_flag,
        status: res.status,
    })
}

/// Monotonicity summary of computed rows, sorted by `q`.
pub fn summarize_sweep(config: &ScfConfig, mut rows: Vec<SweepRow>) -> SweepTable {
    rows.sort_by(|a, b| a.q.total_cmp(&b.q));
    let slack = 10.0 * config.tol_energy;
    let monotone = rows.windows(2).all(|w| w[1].energy <= w[0].energy + slack);
    let mut strict_decrease_up_to = None;
    for w in rows.windows(2) {
        if w[1].converged && w[1].energy < w[0].energy - slack {
            strict_decrease_up_to = Some(w[1].q);
        } else {
            break;
        }
    }
    let qml = q_max_lin(&config.spec, config.z, config.t);
    SweepTable {
        rows,
        monotone,
        strict_decrease_up_to,
        q_max_lin: qml,
        ceiling: qml.value().min(2.0 * config.z + 1.0),
    }
}

/// `I(q)` on an increasing list of charges, sequentially.
pub fn charge_sweep(config: &ScfConfig, q_list: &[f64]) -> Result<SweepTable> {
    if q_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("charges must be strictly increasing"));
    }
    let rows = q_list.iter().map(|&q| sweep_point(config, q)).collect::<Result<Vec<_>>>()?;
    Ok(summarize_sweep(config, rows))
}
