use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fermitherm_core::{EntropySpec, ScfConfig};

#[derive(Debug, Parser)]
#[command(name = "fermitherm", version, about = "Hartree-Fock free energies with generalized entropies")]
pub struct Cli {
    /// JSON file whose keys supply default values for the command's flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Level-sum check and the occupation / Legendre-transform table.
    #[command(args_override_self = true)]
    Entropy(EntropyArgs),
    /// Thresholds and ground free energy of the non-interacting model.
    #[command(args_override_self = true)]
    Linear(LinearArgs),
    /// Self-consistent minimization; writes the result as JSON.
    #[command(args_override_self = true)]
    Minimize(MinimizeArgs),
    /// Minimal free energy as a function of the charge.
    #[command(args_override_self = true)]
    Sweep(SweepArgs),
    /// Time evolution of a stored minimizer, optionally perturbed.
    #[command(args_override_self = true)]
    Evolve(EvolveArgs),
    /// Perturb-and-evolve runs for several perturbation sizes.
    #[command(args_override_self = true)]
    Stability(StabilityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Entropy exponent, β(ν) = ν^m.
    #[arg(long)]
    pub m: f64,
    /// Nuclear charge.
    #[arg(long = "Z", alias = "z")]
    pub z: f64,
    /// Temperature.
    #[arg(long = "T", alias = "t")]
    pub t: f64,
}

impl ModelArgs {
    pub fn spec(&self) -> Result<EntropySpec, String> {
        if !(self.z > 0.0) || !self.z.is_finite() {
            return Err(format!("--Z must be positive, got {}", self.z));
        }
        if !(self.t > 0.0) || !self.t.is_finite() {
            return Err(format!("--T must be positive, got {}", self.t));
        }
        EntropySpec::power(self.m).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct EntropyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// λ values as `start,end,count`.
    #[arg(long, default_value = "-5,1,61", allow_hyphen_values = true)]
    pub lambda_grid: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct LinearArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Number of interior grid points.
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    /// Box radius; 60/Z when absent.
    #[arg(long)]
    pub rmax: Option<f64>,
    /// Largest angular momentum channel.
    #[arg(long, default_value_t = 3)]
    pub lmax: usize,
    /// Mixing parameter in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Convergence tolerance on the density matrix and the energy.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    /// Drop the Hartree and exchange terms.
    #[arg(long)]
    pub non_interacting: bool,
}

impl SolverArgs {
    pub fn scf_config(&self, model: &ModelArgs, q: Option<f64>) -> Result<ScfConfig, String> {
        let mut c = ScfConfig::new(model.spec()?, model.z, model.t, q);
        c.n_points = self.n;
        c.r_max = self.rmax.unwrap_or(60.0 / model.z);
        c.l_max = self.lmax;
        c.alpha = self.alpha;
        c.tol_gamma = self.tol;
        c.tol_energy = self.tol;
        c.max_iter = self.max_iter;
        c.interactions = !self.non_interacting;
        if self.n == 0 {
            return Err("--n must be positive".into());
        }
        if !(c.r_max > 0.0) || !c.r_max.is_finite() {
            return Err(format!("--rmax must be positive, got {}", c.r_max));
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Args)]
pub struct MinimizeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Trace constraint; the unconstrained problem when absent.
    #[arg(long)]
    pub q: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// JSON result file; standard output when absent.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// CSV file with columns r, rho_line, V_H.
    #[arg(long, value_name = "FILE")]
    pub density: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub q_from: f64,
    #[arg(long)]
    pub q_to: f64,
    #[arg(long)]
    pub q_steps: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DynamicsArgs {
    /// Result file written by `minimize`.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 10.0)]
    pub horizon: f64,
    /// Record every stride-th step.
    #[arg(long, default_value_t = 100)]
    pub stride: usize,
    /// Seed of the random perturbation.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl DynamicsArgs {
    pub fn validate(&self) -> Result<usize, String> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(format!("--dt must be positive, got {}", self.dt));
        }
        if !(self.horizon >= 0.0) || !self.horizon.is_finite() {
            return Err(format!("--horizon must be nonnegative, got {}", self.horizon));
        }
        if self.stride == 0 {
            return Err("--stride must be positive".into());
        }
        Ok((self.horizon / self.dt).round() as usize)
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub dynamics: DynamicsArgs,
    /// Size of the initial perturbation.
    #[arg(long, default_value_t = 0.0)]
    pub eta: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub dynamics: DynamicsArgs,
    /// Comma-separated perturbation sizes.
    #[arg(long, default_value = "0.001,0.01")]
    pub eta_list: String,
    /// Directory receiving one trajectory CSV per perturbation size.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn parse_list(s: &str, flag: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| format!("{flag}: cannot parse {x:?} as a number")))
        .collect()
}
