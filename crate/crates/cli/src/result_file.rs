//! JSON form of a minimization result.
//!
//! The file carries the run configuration, the energies and audits for
//! inspection, and the occupied orbitals so that `evolve` and `stability`
//! can rebuild the state without re-running the solver.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use fermitherm_core::{
    ChannelOrbitals, DensityMatrix, EnergyBreakdown, EntropySpec, MinimizerAudit, RadialGrid, ScfConfig, ScfResult,
    ScfStatus,
};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub m: f64,
    #[serde(rename = "Z")]
    pub z: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub q: Option<f64>,
    pub n: usize,
    pub rmax: f64,
    pub lmax: usize,
    pub alpha: f64,
    pub tol_gamma: f64,
    pub tol_energy: f64,
    pub max_iter: usize,
    pub interactions: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Energies {
    pub kinetic: f64,
    pub nuclear: f64,
    pub direct: f64,
    pub exchange: f64,
    pub entropy_term: f64,
    pub total_hf: f64,
    pub total_free: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub all_pass: bool,
    pub selfconsistency_residual: f64,
    pub lieb_value: f64,
    pub lieb_ok: bool,
    /// `[j, ε_j, bound]` rows.
    pub eigenvalue_checks: Vec<(usize, f64, f64)>,
    pub eigenvalue_bound_ok: bool,
    pub qmaxlin_chain: [f64; 3],
    pub qmaxlin_chain_ok: bool,
    pub energy_negative_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub l: usize,
    pub energies: Vec<f64>,
    pub occupations: Vec<f64>,
    /// Orbitals stored column by column, `n` values each.
    pub vectors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub format_version: u32,
    pub config: RunRecord,
    pub status: String,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
    /// `null` when no level is occupied.
    pub mu: Option<f64>,
    pub energy: Energies,
    pub boundary_charge: f64,
    pub boundary_flag: bool,
    pub audit: Option<AuditRecord>,
    pub channels: Vec<ChannelRecord>,
}

fn status_str(s: ScfStatus) -> &'static str {
    match s {
        ScfStatus::Converged => "converged",
        ScfStatus::MaxIterations => "max_iterations",
        ScfStatus::UnreachableCharge => "unreachable_charge",
    }
}

fn parse_status(s: &str) -> Result<ScfStatus, String> {
    match s {
        "converged" => Ok(ScfStatus::Converged),
        "max_iterations" => Ok(ScfStatus::MaxIterations),
        "unreachable_charge" => Ok(ScfStatus::UnreachableCharge),
        other => Err(format!("unknown status {other:?}")),
    }
}

impl ResultFile {
    pub fn new(c: &ScfConfig, r: &ScfResult) -> Self {
        let e = &r.energy;
        Self {
            format_version: FORMAT_VERSION,
            config: RunRecord {
                m: c.spec.m,
                z: c.z,
                t: c.t,
                q: c.q,
                n: c.n_points,
                rmax: c.r_max,
                lmax: c.l_max,
                alpha: c.alpha,
                tol_gamma: c.tol_gamma,
                tol_energy: c.tol_energy,
                max_iter: c.max_iter,
                interactions: c.interactions,
            },
            status: status_str(r.status).into(),
            converged: r.converged,
            iterations: r.iterations,
            residual: r.residual,
            mu: r.mu.is_finite().then_some(r.mu),
            energy: Energies {
                kinetic: e.kinetic,
                nuclear: e.nuclear,
                direct: e.direct,
                exchange: e.exchange,
                entropy_term: e.entropy_term,
                total_hf: e.total_hf,
                total_free: e.total_free,
            },
            boundary_charge: r.boundary_charge,
            boundary_flag: r.boundary_flag,
            audit: r.audit.as_ref().map(|a| AuditRecord {
                all_pass: a.all_pass(),
                selfconsistency_residual: a.selfconsistency_residual,
                lieb_value: a.lieb_value,
                lieb_ok: a.lieb_ok,
                eigenvalue_checks: a.eigenvalue_checks.clone(),
                eigenvalue_bound_ok: a.eigenvalue_bound_ok,
                qmaxlin_chain: a.qmaxlin_chain,
                qmaxlin_chain_ok: a.qmaxlin_chain_ok,
                energy_negative_ok: a.energy_negative_ok,
            }),
            channels: r
                .orbitals
                .iter()
                .enumerate()
                .map(|(l, o)| ChannelRecord {
                    l,
                    energies: o.energies.clone(),
                    occupations: o.occupations.clone(),
                    vectors: o.vectors.as_slice().to_vec(),
                })
                .collect(),
        }
    }

    pub fn scf_config(&self) -> Result<ScfConfig, String> {
        let c = &self.config;
        let spec = EntropySpec::power(c.m).map_err(|e| e.to_string())?;
        let mut out = ScfConfig::new(spec, c.z, c.t, c.q);
        out.n_points = c.n;
        out.r_max = c.rmax;
        out.l_max = c.lmax;
        out.alpha = c.alpha;
        out.tol_gamma = c.tol_gamma;
        out.tol_energy = c.tol_energy;
        out.max_iter = c.max_iter;
        out.interactions = c.interactions;
        Ok(out)
    }

    /// Rebuilds the solver result; `γ` is reassembled from the orbitals.
    pub fn scf_result(&self) -> Result<ScfResult, String> {
        if self.format_version != FORMAT_VERSION {
            return Err(format!("unsupported result format version {}", self.format_version));
        }
        let grid = RadialGrid::new(self.config.n, self.config.rmax).map_err(|e| e.to_string())?;
        let n = grid.len();
        if self.channels.len() != self.config.lmax + 1 {
            return Err(format!("expected {} channels, found {}", self.config.lmax + 1, self.channels.len()));
        }
        let mut orbitals = Vec::with_capacity(self.channels.len());
        let mut blocks = Vec::with_capacity(self.channels.len());
        for (l, ch) in self.channels.iter().enumerate() {
            let k = ch.occupations.len();
            if ch.l != l || ch.vectors.len() != n * k || ch.energies.len() != k {
                return Err(format!("channel {l} has inconsistent sizes"));
            }
            let v = DMatrix::from_column_slice(n, k, &ch.vectors);
            let weighted = DMatrix::from_fn(n, k, |i, j| v[(i, j)] * ch.occupations[j]);
            blocks.push(&weighted * v.transpose());
            orbitals.push(ChannelOrbitals {
                energies: ch.energies.clone(),
                occupations: ch.occupations.clone(),
                vectors: v,
            });
        }
        let gamma = DensityMatrix::new(&grid, blocks).map_err(|e| e.to_string())?;
        let e = &self.energy;
        Ok(ScfResult {
            gamma,
            orbitals,
            mu: self.mu.unwrap_or(f64::NEG_INFINITY),
            energy: EnergyBreakdown {
                kinetic: e.kinetic,
                nuclear: e.nuclear,
                direct: e.direct,
                exchange: e.exchange,
                entropy_term: e.entropy_term,
                total_hf: e.total_hf,
                total_free: e.total_free,
            },
            residual: self.residual,
            iterations: self.iterations,
            status: parse_status(&self.status)?,
            converged: self.converged,
            energy_history: Vec::new(),
            boundary_charge: self.boundary_charge,
            boundary_flag: self.boundary_flag,
            audit: self.audit.as_ref().map(|a| MinimizerAudit {
                selfconsistency_residual: a.selfconsistency_residual,
                lieb_value: a.lieb_value,
                lieb_ok: a.lieb_ok,
                eigenvalue_checks: a.eigenvalue_checks.clone(),
                eigenvalue_bound_ok: a.eigenvalue_bound_ok,
                qmaxlin_chain: a.qmaxlin_chain,
                qmaxlin_chain_ok: a.qmaxlin_chain_ok,
                energy_negative_ok: a.energy_negative_ok,
            }),
        })
    }
}
