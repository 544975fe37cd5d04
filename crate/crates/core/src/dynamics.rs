//! Mean-field von Neumann dynamics `i dγ/dt = [H_γ, γ]`.
//!
//! States are carried as occupied orbitals: per channel, complex columns
//! `ψ_a` with fixed occupations `n_a`, so that `Γ_ℓ = Σ_a n_a ψ_a ψ_a*`.
//! Each step conjugates `γ` by the unitary `exp(−i dt H_mid)`, which leaves
//! the occupations untouched; trace and `tr β(γ)` are then conserved by
//! construction. `H_mid = ½(H[γ_n] + H[γ_{n+1}])` is the mean field at the
//! midpoint, since `H` is affine in `γ`, and is found by fixed-point
//! iteration.
//!
//! `H` is applied without forming matrices: the kinetic part is tridiagonal,
//! Hartree and nuclear parts are diagonal, and the multipole kernels
//! `r_<^L/r_>^{L+1}` are semiseparable, so every exchange product costs
//! `O(n)` per orbital pair. The exponential is evaluated on a block Krylov
//! space `V` as `I − VV* + V exp(−i dt V*HV) V*`, which is exactly unitary.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::energy::{EnergyBreakdown, ExchangeTable};
use crate::entropy::EntropySpec;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, symmetric_eigen, Tridiagonal};
use crate::radial::{hartree_potential, kinetic_matrix, nuclear_potential, RadialDensity, RadialGrid};
use crate::scf::ScfResult;

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

/// Occupied orbitals of one angular channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    pub occupations: Vec<f64>,
    /// `n × r` complex orbitals as columns.
    pub orbitals: DMatrix<C>,
}

/// `γ` as occupied orbitals per channel `ℓ = 0..=l_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitalState {
    pub grid: RadialGrid,
    pub channels: Vec<ChannelState>,
}

impl OrbitalState {
    /// The occupied orbitals of an SCF result.
    pub fn from_scf(result: &ScfResult) -> Self {
        Self {
            grid: result.gamma.grid.clone(),
            channels: result
                .orbitals
                .iter()
                .map(|o| ChannelState {
                    occupations: o.occupations.clone(),
                    orbitals: o.vectors.map(|v| C::new(v, 0.0)),
                })
                .collect(),
        }
    }

    pub fn l_max(&self) -> usize {
        self.channels.len() - 1
    }

    /// Dense `Γ_ℓ = Σ_a n_a ψ_a ψ_a*`.
    pub fn block(&self, l: usize) -> DMatrix<C> {
        let ch = &self.channels[l];
        let mut scaled = ch.orbitals.clone();
        for (k, &n) in ch.occupations.iter().enumerate() {
            scaled.column_mut(k).scale_mut(n);
        }
        scaled * ch.orbitals.adjoint()
    }

    /// Nonzero spectrum of each block: eigenvalues of `N^{1/2} G N^{1/2}`
    /// with `G` the Gram matrix of the orbitals.
    pub fn spectra(&self) -> Vec<Vec<f64>> {
        self.channels
            .iter()
            .map(|ch| {
                let r = ch.occupations.len();
                if r == 0 {
                    return Vec::new();
                }
                let g = ch.orbitals.adjoint() * &ch.orbitals;
                let s: Vec<f64> = ch.occupations.iter().map(|n| libm::sqrt(*n)).collect();
                let m = DMatrix::from_fn(r, r, |i, j| g[(i, j)] * (s[i] * s[j]));
                let m = (&m + m.adjoint()) * C::new(0.5, 0.0);
                hermitian_eigen(m).0
            })
            .collect()
    }

    /// `Σ_ℓ (2ℓ+1) tr Γ_ℓ`.
    pub fn trace(&self) -> f64 {
        self.channels
            .iter()
            .enumerate()
            .map(|(l, ch)| {
                (2 * l + 1) as f64
                    * ch.occupations
                        .iter()
                        .enumerate()
                        .map(|(k, n)| n * ch.orbitals.column(k).norm_squared())
                        .sum::<f64>()
            })
            .sum()
    }

    /// `tr β(γ)` from the block spectra.
    pub fn entropy_trace(&self, spec: &EntropySpec) -> f64 {
        self.spectra()
            .iter()
            .enumerate()
            .map(|(l, ev)| {
                (2 * l + 1) as f64 * ev.iter().map(|&v| spec.beta_unchecked(v.clamp(0.0, 1.0))).sum::<f64>()
            })
            .sum()
    }

    /// Line density `ρ_i = (1/h) Σ_ℓ (2ℓ+1) Σ_a n_a |ψ_a(i)|²`.
    fn rho_line(&self) -> Vec<f64> {
        let n = self.grid.len();
        let mut rho = vec![0.0; n];
        for (l, ch) in self.channels.iter().enumerate() {
            let w = (2 * l + 1) as f64 / self.grid.h;
            for (k, &occ) in ch.occupations.iter().enumerate() {
                let col = ch.orbitals.column(k);
                for i in 0..n {
                    rho[i] += w * occ * col[i].norm_sqr();
                }
            }
        }
        rho
    }
}

/// Precomputed ratios for the two sweeps of a multipole kernel.
#[derive(Debug, Clone)]
struct MultipoleSweeps {
    /// `(r_{i−1}/r_i)^{L+1}` for `i ≥ 1`.
    fwd: Vec<f64>,
    /// `(r_i/r_{i+1})^L` for `i < n−1`.
    bwd: Vec<f64>,
}

impl MultipoleSweeps {
    fn new(r: &[f64], big_l: usize) -> Self {
        let n = r.len();
        Self {
            fwd: (0..n)
                .map(|i| if i == 0 { 0.0 } else { libm::pow(r[i - 1] / r[i], (big_l + 1) as f64) })
                .collect(),
            bwd: (0..n)
                .map(|i| if i + 1 < n { libm::pow(r[i] / r[i + 1], big_l as f64) } else { 0.0 })
                .collect(),
        }
    }

    /// `out_i += scale · Σ_j w_L(r_i, r_j) f_j` with `w_L = r_<^L/r_>^{L+1}`.
    fn apply_add(&self, r: &[f64], f: &[C], scale: C, out: &mut [C]) {
        let n = r.len();
        let mut a = ZERO;
        let mut y = vec![ZERO; n];
        for i in 0..n {
            a = a * self.fwd[i] + f[i] / r[i];
            y[i] = a;
        }
        let mut b = ZERO;
        for i in (0..n.saturating_sub(1)).rev() {
            b = (b + f[i + 1] / r[i + 1]) * self.bwd[i];
            y[i] += b;
        }
        for i in 0..n {
            out[i] += scale * y[i];
        }
    }
}

/// One exchange contribution `coeff · ψ (w_L ∘ ψ*)` to `K_ℓ`.
#[derive(Debug, Clone)]
struct ExchangeTerm {
    coeff: f64,
    big_l: usize,
    orbital: DVector<C>,
}

/// The mean field of a weighted combination of orbital states, applied
/// matrix-free.
#[derive(Debug, Clone)]
struct MeanField {
    r: Vec<f64>,
    kinetic: Vec<Tridiagonal>,
    /// `−Z/r + V_H`.
    potential: Vec<f64>,
    hartree: Vec<f64>,
    exchange: Vec<Vec<ExchangeTerm>>,
    sweeps: Vec<MultipoleSweeps>,
}

impl MeanField {
    fn new(z: f64, states: &[(f64, &OrbitalState)]) -> Self {
        let base = states[0].1;
        let grid = &base.grid;
        let nl = base.channels.len();
        let table = ExchangeTable::new(nl - 1);
        let n = grid.len();
        let mut hartree = vec![0.0; n];
        for &(w, s) in states {
            let rho = RadialDensity {
                grid: grid.clone(),
                rho_line: s.rho_line(),
            };
            let v = hartree_potential(grid, &rho).expect("same grid");
            hartree.iter_mut().zip(&v).for_each(|(a, b)| *a += w * b);
        }
        let nuc = nuclear_potential(grid, z);
        let mut exchange = vec![Vec::new(); nl];
        for (l, terms) in exchange.iter_mut().enumerate() {
            for lp in 0..nl {
                for (big_l, c) in table.multipoles(l, lp) {
                    for &(w, s) in states {
                        let ch = &s.channels[lp];
                        for (k, &occ) in ch.occupations.iter().enumerate() {
                            terms.push(ExchangeTerm {
                                coeff: w * c * occ,
                                big_l,
                                orbital: ch.orbitals.column(k).into_owned(),
                            });
                        }
                    }
                }
            }
        }
        Self {
            r: grid.r.clone(),
            kinetic: (0..nl).map(|l| kinetic_matrix(grid, l)).collect(),
            potential: nuc.iter().zip(&hartree).map(|(a, b)| a + b).collect(),
            hartree,
            exchange,
            sweeps: (0..2 * nl - 1).map(|big_l| MultipoleSweeps::new(&grid.r, big_l)).collect(),
        }
    }

    /// `K_ℓ x`.
    fn exchange_apply(&self, l: usize, x: &[C]) -> Vec<C> {
        let n = x.len();
        let mut out = vec![ZERO; n];
        let mut f = vec![ZERO; n];
        let mut y = vec![ZERO; n];
        for term in &self.exchange[l] {
            for j in 0..n {
                f[j] = term.orbital[j].conj() * x[j];
                y[j] = ZERO;
            }
            self.sweeps[term.big_l].apply_add(&self.r, &f, C::new(term.coeff, 0.0), &mut y);
            for i in 0..n {
                out[i] += term.orbital[i] * y[i];
            }
        }
        out
    }

    /// `T_ℓ x`.
    fn kinetic_apply(&self, l: usize, x: &[C]) -> Vec<C> {
        let t = &self.kinetic[l];
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut s = x[i] * t.diag[i];
                if i > 0 {
                    s += x[i - 1] * t.off[i - 1];
                }
                if i + 1 < n {
                    s += x[i + 1] * t.off[i];
                }
                s
            })
            .collect()
    }

    /// `H_ℓ X` column by column.
    fn apply(&self, l: usize, x: &DMatrix<C>) -> DMatrix<C> {
        let n = x.nrows();
        let mut out = DMatrix::zeros(n, x.ncols());
        for k in 0..x.ncols() {
            let col: Vec<C> = x.column(k).iter().copied().collect();
            let kin = self.kinetic_apply(l, &col);
            let ex = self.exchange_apply(l, &col);
            for i in 0..n {
                out[(i, k)] =kin[i] + col[i] * self.potential[i] - ex[i];
            }
        }
        out
    }
}

/// `E^HF` of an orbital state.
pub fn hf_energy_of_state(state: &OrbitalState, z: f64) -> EnergyBreakdown {
    let field = MeanField::new(z, &[(1.0, state)]);
    let grid = &state.grid;
    let n = grid.len();
    let mut kinetic = 0.0;
    let mut nuclear = 0.0;
    let mut exchange = 0.0;
    for (l, ch) in state.channels.iter().enumerate() {
        let w = (2 * l + 1) as f64;
        for (k, &occ) in ch.occupations.iter().enumerate() {
            let col: Vec<C> = ch.orbitals.column(k).iter().copied().collect();
            let tx = field.kinetic_apply(l, &col);
            let kx = field.exchange_apply(l, &col);
            let mut kin = 0.0;
            let mut nuc = 0.0;
            let mut ex = 0.0;
            for i in 0..n {
                kin += (col[i].conj() * tx[i]).re;
                nuc -= z * col[i].norm_sqr() / grid.r[i];
                ex += (col[i].conj() * kx[i]).re;
            }
            kinetic += w * occ * kin;
            nuclear += w * occ * nuc;
            exchange += 0.5 * w * occ * ex;
        }
    }
    let rho = state.rho_line();
    let direct = 0.5 * grid.h * rho.iter().zip(&field.hartree).map(|(a, b)| a * b).sum::<f64>();
    let total_hf = kinetic + nuclear + direct - exchange;
    EnergyBreakdown {
        kinetic,
        nuclear,
        direct,
        exchange,
        entropy_term: 0.0,
        total_hf,
        total_free: total_hf,
    }
}

/// Integrator parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    /// Fixed-point iterations for the midpoint field after the predictor.
    pub corrector_iterations: usize,
    /// Target accuracy of each Krylov exponential, relative to the orbitals.
    pub krylov_tol: f64,
    pub max_krylov_blocks: usize,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            corrector_iterations: 3,
            krylov_tol: 1e-13,
            max_krylov_blocks: 60,
        }
    }
}

/// Appends the components of `candidates` orthogonal to `basis`, dropping
/// those that vanish. Returns the number appended.
fn extend_orthonormal(basis: &mut Vec<DVector<C>>, candidates: &DMatrix<C>) -> usize {
    let before = basis.len();
    for k in 0..candidates.ncols() {
        let mut v = candidates.column(k).into_owned();
        let norm0 = v.norm();
        if norm0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for b in basis.iter() {
                let d = b.dotc(&v);
                v.axpy(-d, b, C::new(1.0, 0.0));
            }
        }
        let nv = v.norm();
        if nv > 1e-12 * norm0 {
            basis.push(v / C::new(nv, 0.0));
        }
    }
    basis.len() - before
}

/// `exp(−i dt H_p)` for Hermitian `H_p`.
fn exp_hermitian(hp: &DMatrix<C>, dt: f64) -> DMatrix<C> {
    let (vals, vecs) = hermitian_eigen(hp.clone());
    let mut scaled = vecs.clone();
    for (k, &lambda) in vals.iter().enumerate() {
        let phase = C::new(libm::cos(dt * lambda), -libm::sin(dt * lambda));
        scaled.column_mut(k).iter_mut().for_each(|x| *x *= phase);
    }
    scaled * vecs.adjoint()
}

fn columns_matrix(cols: &[DVector<C>], n: usize) -> DMatrix<C> {
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(cols)
    }
}

/// `W ψ` with `W = I − VV* + V exp(−i dt V*HV) V*` on a block Krylov space.
fn krylov_propagate(
    apply: &dyn Fn(&DMatrix<C>) -> DMatrix<C>,
    psi: &DMatrix<C>,
    dt: f64,
    cfg: &StepConfig,
) -> Result<DMatrix<C>> {
    let n = psi.nrows();
    if psi.ncols() == 0 || dt == 0.0 {
        return Ok(psi.clone());
    }
    let scale = psi.norm().max(f64::MIN_POSITIVE);
    let mut basis: Vec<DVector<C>> = Vec::new();
    let mut hv: Vec<DVector<C>> = Vec::new();
    let mut fresh = extend_orthonormal(&mut basis, psi);
    let mut hp = DMatrix::<C>::zeros(0, 0);
    let mut blocks = 0;
    loop {
        blocks += 1;
        let m_old = hv.len();
        let block = columns_matrix(&basis[m_old..m_old + fresh], n);
        let hb = apply(&block);
        for k in 0..hb.ncols() {
            hv.push(hb.column(k).into_owned());
        }
        let m = hv.len();
        // Grow the projected matrix by the new columns and rows.
        let mut grown = DMatrix::<C>::zeros(m, m);
        grown.view_mut((0, 0), (m_old, m_old)).copy_from(&hp);
        for j in m_old..m {
            for i in 0..m {
                grown[(i, j)] = basis[i].dotc(&hv[j]);
            }
        }
        for i in m_old..m {
            for j in 0..m_old {
                grown[(i, j)] = grown[(j, i)].conj();
            }
        }
        hp = (&grown + grown.adjoint()) * C::new(0.5, 0.0);

        fresh = extend_orthonormal(&mut basis, &hb);
        let vm = columns_matrix(&basis[..m], n);
        let c = vm.adjoint() * psi;
        let e = exp_hermitian(&hp, dt) * &c;
        let err = if fresh == 0 {
            0.0
        } else {
            // Coupling of the new directions to the projected space.
            let vnew = columns_matrix(&basis[m..], n);
            let hvm = columns_matrix(&hv, n);
            let s = vnew.adjoint() * hvm;
            libm::fabs(dt) * (s * &e).norm()
        };
        if err <= cfg.krylov_tol * scale {
            basis.truncate(m);
            return Ok(psi - &vm * &c + vm * e);
        }
        if blocks >= cfg.max_krylov_blocks {
            return Err(Error::KrylovStalled(blocks));
        }
    }
}

/// One self-consistent midpoint step of length `dt` (either sign).
pub fn propagate_step(state: &OrbitalState, dt: f64, z: f64, cfg: &StepConfig) -> Result<OrbitalState> {
    let nl = state.channels.len();
    let evolve_with = |field: &MeanField| -> Result<OrbitalState> {
        let mut channels = Vec::with_capacity(nl);
        for (l, ch) in state.channels.iter().enumerate() {
            let apply = |x: &DMatrix<C>| field.apply(l, x);
            channels.push(ChannelState {
                occupations: ch.occupations.clone(),
                orbitals: krylov_propagate(&apply, &ch.orbitals, dt, cfg)?,
            });
        }
        Ok(OrbitalState {
            grid: state.grid.clone(),
            channels,
        })
    };
    let mut next = evolve_with(&MeanField::new(z, &[(1.0, state)]))?;
    let mut last_change = f64::INFINITY;
    let scale = state.channels.iter().map(|c| c.orbitals.norm()).fold(0.0, f64::max).max(1.0);
    for _ in 0..cfg.corrector_iterations {
        let field = MeanField::new(z, &[(0.5, state), (0.5, &next)]);
        let candidate = evolve_with(&field)?;
        let change = candidate
            .channels
            .iter()
            .zip(&next.channels)
            .map(|(a, b)| (&a.orbitals - &b.orbitals).norm())
            .fold(0.0, f64::max);
        next = candidate;
        if change <= 1e-15 * scale {
            break;
        }
        if change > last_change && change > 1e-10 * scale {
            return Err(Error::StepDiverged(dt));
        }
        last_change = change;
    }
    Ok(next)
}

/// `Σ_ℓ (2ℓ+1)[tr|Δ_ℓ| + tr(T_ℓ |Δ_ℓ|)]` with `Δ = γ − γ_ref`.
pub fn h_distance(a: &OrbitalState, b: &OrbitalState) -> Result<f64> {
    if a.grid != b.grid || a.channels.len() != b.channels.len() {
        return Err(Error::GridMismatch);
    }
    let n = a.grid.len();
    let mut total = 0.0;
    for (l, (ca, cb)) in a.channels.iter().zip(&b.channels).enumerate() {
        let ra = ca.occupations.len();
        let rb = cb.occupations.len();
        let k = ra + rb;
        if k == 0 {
            continue;
        }
        let mut stacked = DMatrix::<C>::zeros(n, k);
        stacked.view_mut((0, 0), (n, ra)).copy_from(&ca.orbitals);
        stacked.view_mut((0, ra), (n, rb)).copy_from(&cb.orbitals);
        let qr = stacked.qr();
        let q = qr.q();
        let r = qr.r();
        let kk = r.nrows();
        // Δ = Q D Q* with D = R_a N_a R_a* − R_b N_b R_b*.
        let mut d = DMatrix::<C>::zeros(kk, kk);
        for (cols, occ, sign) in [(0..ra, &ca.occupations, 1.0), (ra..k, &cb.occupations, -1.0)] {
            for (idx, col) in cols.enumerate() {
                let rc = r.column(col);
                d += (&rc * rc.adjoint()) * C::new(sign * occ[idx], 0.0);
            }
        }
        let d = (&d + d.adjoint()) * C::new(0.5, 0.0);
        let (vals, vecs) = hermitian_eigen(d);
        let mut abs_d = DMatrix::<C>::zeros(kk, kk);
        for (i, &v) in vals.iter().enumerate() {
            let u = vecs.column(i);
            abs_d += (&u * u.adjoint()) * C::new(libm::fabs(v), 0.0);
        }
        let t = kinetic_matrix(&a.grid, l);
        let mut tq = DMatrix::<C>::zeros(n, kk);
        for c in 0..kk {
            for i in 0..n {
                let mut s = q[(i, c)] * t.diag[i];
                if i > 0 {
                    s += q[(i - 1, c)] * t.off[i - 1];
                }
                if i + 1 < n {
                    s += q[(i + 1, c)] * t.off[i];
                }
                tq[(i, c)] = s;
            }
        }
        let qtq = q.adjoint() * tq;
        let kinetic_part = (qtq * &abs_d).trace().re;
        let trace_part: f64 = vals.iter().map(|v| libm::fabs(*v)).sum();
        total += (2 * l + 1) as f64 * (trace_part + kinetic_part);
    }
    Ok(total)
}

/// Output options for [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    /// Record every `stride`-th step (and always the first and last).
    pub stride: usize,
    /// Store the full state in each sample.
    pub keep_states: bool,
    pub step: StepConfig,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            stride: 1,
            keep_states: false,
            step: StepConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub trace: f64,
    pub hf_energy: f64,
    pub entropy_trace: f64,
    /// Distance to the reference state, when one is given.
    pub dist: Option<f64>,
    pub state: Option<OrbitalState>,
}

/// Propagates `n_steps` steps of length `dt` from `initial`.
pub fn evolve(
    initial: &OrbitalState,
    dt: f64,
    n_steps: usize,
    z: f64,
    spec: &EntropySpec,
    reference: Option<&OrbitalState>,
    options: &EvolveOptions,
) -> Result<Vec<TrajectorySample>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter("time step must be positive"));
    }
    let stride = options.stride.max(1);
    let sample = |t: f64, s: &OrbitalState| -> Result<TrajectorySample> {
        Ok(TrajectorySample {
            t,
            trace: s.trace(),
            hf_energy: hf_energy_of_state(s, z).total_hf,
            entropy_trace: s.entropy_trace(spec),
            dist: reference.map(|r| h_distance(s, r)).transpose()?,
            state: options.keep_states.then(|| s.clone()),
        })
    };
    let mut out = vec![sample(0.0, initial)?];
    let mut state = initial.clone();
    for step in 1..=n_steps {
        state = propagate_step(&state, dt, z, &options.step)?;
        if step % stride == 0 || step == n_steps {
            out.push(sample(step as f64 * dt, &state)?);
        }
    }
    Ok(out)
}

/// `Ψ ↦ exp(−iηA_ℓ)Ψ` with `A_ℓ` a random Hermitian matrix of unit norm
/// supported on the `subspace` lowest eigenvectors of `H_ℓ` at the
/// minimizer.
pub fn perturb(
    state: &OrbitalState,
    result: &ScfResult,
    z: f64,
    eta: f64,
    subspace: usize,
    seed: u64,
) -> Result<OrbitalState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = crate::energy::mean_field_hamiltonian(&result.gamma, z)?;
    let n = state.grid.len();
    let mut channels = Vec::with_capacity(state.channels.len());
    for (l, ch) in state.channels.iter().enumerate() {
        let k = subspace.min(n);
        let (_, vecs) = symmetric_eigen(h.block(l));
        let p = vecs.columns(0, k).map(|v| C::new(v, 0.0));
        let b = DMatrix::from_fn(k, k, |_, _| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let b = (&b + b.adjoint()) * C::new(0.5, 0.0);
        let (vals, _) = hermitian_eigen(b.clone());
        let norm = vals.iter().fold(0.0f64, |a, v| a.max(libm::fabs(*v)));
        let b = if norm > 0.0 { b / C::new(norm, 0.0) } else { b };
        let u = exp_hermitian(&b, eta);
        let c = p.adjoint() * &ch.orbitals;
        let rotated = &ch.orbitals - &p * &c + &p * (u * c);
        channels.push(ChannelState {
            occupations: ch.occupations.clone(),
            orbitals: rotated,
        });
    }
    Ok(OrbitalState {
        grid: state.grid.clone(),
        channels,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub eta: f64,
    pub sup_dist: f64,
    pub initial_dist: f64,
    pub samples: Vec<TrajectorySample>,
}

/// Perturbed-minimizer run: distance to the minimizer over `[0, horizon]`.
#[allow(clippy::too_many_arguments)]
pub fn stability_experiment(
    minimizer: &ScfResult,
    spec: &EntropySpec,
    z: f64,
    eta: f64,
    horizon: f64,
    dt: f64,
    seed: u64,
    options: &EvolveOptions,
) -> Result<StabilityReport> {
    if !minimizer.converged {
        return Err(Error::Unconverged);
    }
    if !(eta >= 0.0) || !(horizon >= 0.0) {
        return Err(Error::InvalidParameter("eta and horizon must be nonnegative"));
    }
    let reference = OrbitalState::from_scf(minimizer);
    let initial = if eta == 0.0 {
        reference.clone()
    } else {
        perturb(&reference, minimizer, z, eta, PERTURBATION_SUBSPACE, seed)?
    };
    let n_steps = libm::round(horizon / dt) as usize;
    let samples = evolve(&initial, dt, n_steps, z, spec, Some(&reference), options)?;
    let sup_dist = samples.iter().filter_map(|s| s.dist).fold(0.0, f64::max);
    Ok(StabilityReport {
        eta,
        sup_dist,
        initial_dist: samples[0].dist.unwrap_or(0.0),
        samples,
    })
}

/// Dimension of the low-energy subspace carrying perturbations.
pub const PERTURBATION_SUBSPACE: usize = 12;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{hf_energy, mean_field_hamiltonian};
    use crate::scf::{scf_minimize, ScfConfig};

    fn minimizer() -> ScfResult {
        let spec = EntropySpec::power(2.0).unwrap();
        let mut c = ScfConfig::new(spec, 1.0, 1.0, Some(0.1));
        c.n_points = 120;
        c.r_max = 40.0;
        c.l_max = 1;
        c.tol_gamma = 1e-12;
        c.tol_energy = 1e-14;
        scf_minimize(&c).unwrap()
    }

    fn block_distance(a: &OrbitalState, b: &OrbitalState) -> f64 {
        (0..a.channels.len()).map(|l| (a.block(l) - b.block(l)).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn matrix_free_field_matches_dense_hamiltonian() {
        let r = minimizer();
        let s = OrbitalState::from_scf(&r);
        let dense = mean_field_hamiltonian(&r.gamma, 1.0).unwrap();
        let field = MeanField::new(1.0, &[(1.0, &s)]);
        let n = s.grid.len();
        let x = DMatrix::from_fn(n, 2, |i, j| C::new(libm::sin((i * (j + 2)) as f64), libm::cos(i as f64)));
        for l in 0..=1 {
            let h = dense.block(l).map(|v| C::new(v, 0.0));
            let diff = (field.apply(l, &x) - &h * &x).norm() / (h * &x).norm();
            assert!(diff < 1e-13, "l={l}: {diff:e}");
        }
        let e = hf_energy(&r.gamma, 1.0).unwrap();
        let eo = hf_energy_of_state(&s, 1.0);
        assert!((e.total_hf - eo.total_hf).abs() < 1e-14);
        assert!((e.exchange - eo.exchange).abs() < 1e-14);
    }

    #[test]
    fn h_distance_matches_dense_evaluation() {
        let r = minimizer();
        let s = OrbitalState::from_scf(&r);
        let p = perturb(&s, &r, 1.0, 0.3, 8, 11).unwrap();
        let mut expected = 0.0;
        for l in 0..=1 {
            let d = p.block(l) - s.block(l);
            let (vals, vecs) = hermitian_eigen(d);
            let t = kinetic_matrix(&s.grid, l).to_dense().map(|v| C::new(v, 0.0));
            let mut abs_d = DMatrix::<C>::zeros(vals.len(), vals.len());
            for (k, v) in vals.iter().enumerate() {
                let u = vecs.column(k);
                abs_d += (&u * u.adjoint()) * C::new(v.abs(), 0.0);
            }
            let tr_abs: f64 = vals.iter().map(|v| v.abs()).sum();
            expected += (2 * l + 1) as f64 * (tr_abs + (t * abs_d).trace().re);
        }
        let got = h_distance(&p, &s).unwrap();
        assert!(expected > 1e-3);
        assert!((got - expected).abs() < 1e-10 * expected, "{got} vs {expected}");
        assert!(h_distance(&s, &s).unwrap() < 1e-12);
    }

    #[test]
    fn empty_state_stays_empty() {
        let grid = RadialGrid::new(50, 20.0).unwrap();
        let empty = ChannelState {
            occupations: Vec::new(),
            orbitals: DMatrix::zeros(50, 0),
        };
        let s = OrbitalState {
            grid,
            channels: vec![empty.clone(), empty],
        };
        let next = propagate_step(&s, 0.01, 1.0, &StepConfig::default()).unwrap();
        assert_eq!(next, s);
        assert_eq!(next.trace(), 0.0);
    }

    #[test]
    fn minimizer_is_stationary() {
        let r = minimizer();
        let s = OrbitalState::from_scf(&r);
        let mut cur = s.clone();
        for _ in 0..100 {
            cur = propagate_step(&cur, 0.01, 1.0, &StepConfig::default()).unwrap();
        }
        assert!(h_distance(&cur, &s).unwrap() < 1e-9);
    }

    #[test]
    fn step_then_reverse_step_returns() {
        let r = minimizer();
        let s = OrbitalState::from_scf(&r);
        let p = perturb(&s, &r, 1.0, 0.5, 8, 3).unwrap();
        let cfg = StepConfig::default();
        let fwd = propagate_step(&p, 0.05, 1.0, &cfg).unwrap();
        assert!(block_distance(&fwd, &p) > 1e-6);
        let back = propagate_step(&fwd, -0.05, 1.0, &cfg).unwrap();
        assert!(block_distance(&back, &p) < 1e-9);
    }

    #[test]
    fn spectrum_is_preserved() {
        let r = minimizer();
        let s = OrbitalState::from_scf(&r);
        let p = perturb(&s, &r, 1.0, 0.5, 8, 5).unwrap();
        let mut cur = p.clone();
        for _ in 0..20 {
            cur = propagate_step(&cur, 0.05, 1.0, &StepConfig::default()).unwrap();
        }
        for (a, b) in cur.spectra().iter().zip(p.spectra()) {
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
        let spec = EntropySpec::power(2.0).unwrap();
        assert!((cur.trace() - p.trace()).abs() < 1e-13);
        assert!((cur.entropy_trace(&spec) - p.entropy_trace(&spec)).abs() < 1e-13);
    }

    #[test]
    fn krylov_stall_is_reported() {
        let r = minimizer();
        let s = OrbitalState::from_scf(&r);
        let cfg = StepConfig {
            max_krylov_blocks: 2,
            ..StepConfig::default()
        };
        let p = perturb(&s, &r, 1.0, 0.5, 8, 5).unwrap();
        assert!(matches!(propagate_step(&p, 5.0, 1.0, &cfg), Err(Error::KrylovStalled(2))));
    }
}
