//! Hartree-Fock free-energy minimization with generalized entropies.
//!
//! The crate minimizes `E_HF(γ) + T·tr β(γ)` over fermionic density
//! matrices restricted to rotation-invariant states on a uniform radial grid,
//! provides exact level-sum results for the non-interacting (linear) model,
//! and propagates the mean-field von Neumann equation `i dγ/dt = [H_γ, γ]`.
//!
//! Everything here is `no_std` + `alloc`; file formats and the command line
//! live in the `fermitherm` crate.
//!
//! Units: the one-body operator is `−Δ − Z/|x|` (no factor ½), so hydrogen
//! levels are `−Z²/(4j²)` with multiplicity `j²`.

#![no_std]

extern crate alloc;

pub mod dynamics;
pub mod energy;
pub mod entropy;
mod error;
pub mod linalg;
pub mod linear;
pub mod radial;
pub mod scf;
pub mod series;
pub mod wigner;

pub use dynamics::{
    evolve, h_distance, hf_energy_of_state, perturb, propagate_step, stability_experiment, ChannelState,
    EvolveOptions, OrbitalState, StabilityReport, StepConfig, TrajectorySample, PERTURBATION_SUBSPACE,
};
pub use energy::{
    free_energy, hf_energy, inequality_audit, linear_free_energy, mean_field_hamiltonian,
    EnergyBreakdown, InequalityAudit, MeanFieldHamiltonian,
};
pub use entropy::{A4Report, A4Status, EntropyFamily, EntropySpec};
pub use error::{Error, Result};
pub use linear::{
    guaranteed_existence_qmax, hydrogen_level, linear_ground_free_energy, linear_report, mu_of_q,
    q_max_lin, q_of_mu, regime_classify, HydrogenLevel, LinearReport, QMax, Regime,
};
pub use radial::{
    density_from_gamma, hartree_potential, kinetic_matrix, multipole_kernel, DensityMatrix,
    RadialDensity, RadialGrid,
};
pub use scf::{
    charge_sweep, minimizer_audit, occupations_from_levels, scf_global, scf_minimize, summarize_sweep,
    sweep_point, ChannelOrbitals, LevelFilling, MinimizerAudit, ScfConfig, ScfResult, ScfStatus, SweepRow,
    SweepTable,
};
pub use series::SeriesSum;
