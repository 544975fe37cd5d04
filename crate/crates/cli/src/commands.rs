use std::fs;
use std::path::Path;

use anyhow::Context;
use rayon::prelude::*;

use fermitherm_core::{
    density_from_gamma, evolve, hartree_potential, linear_report, perturb, scf_global, scf_minimize,
    stability_experiment, summarize_sweep, sweep_point, Error, EvolveOptions, OrbitalState, QMax, ScfResult,
    ScfStatus, TrajectorySample, PERTURBATION_SUBSPACE,
};

use crate::args::{
    parse_list, DynamicsArgs, EntropyArgs, EvolveArgs, LinearArgs, MinimizeArgs, StabilityArgs, SweepArgs,
};
use crate::output::{emit, json_text, num, Cell, Table};
use crate::result_file::ResultFile;

/// A failed command and its exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Regime(String),
    Audit(String),
    Convergence(String),
    Io(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) | Failure::Io(_) => 1,
            Failure::Regime(_) => 2,
            Failure::Audit(_) => 3,
            Failure::Convergence(_) => 4,
        }
    }

    pub fn message(&self) -> String {
        match self {
            Failure::Usage(s) | Failure::Regime(s) | Failure::Audit(s) | Failure::Convergence(s) => s.clone(),
            Failure::Io(e) => format!("{e:#}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::UnboundedModel => Failure::Regime(msg),
            Error::Unconverged
            | Error::StepDiverged(_)
            | Error::KrylovStalled(_)
            | Error::UnreachableCharge { .. }
            | Error::PrecisionLimit(_) => Failure::Convergence(msg),
            _ => Failure::Usage(msg),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Io(e)
    }
}

pub type Outcome = Result<(), Failure>;

fn usage<T>(r: Result<T, String>) -> Result<T, Failure> {
    r.map_err(Failure::Usage)
}

pub fn entropy(a: &EntropyArgs) -> Outcome {
    let spec = usage(a.model.spec())?;
    let grid = usage(parse_list(&a.lambda_grid, "--lambda-grid"))?;
    let [start, end, count] = grid[..] else {
        return Err(Failure::Usage("--lambda-grid expects start,end,count".into()));
    };
    if count < 1.0 || count.fract() != 0.0 || !(start <= end) {
        return Err(Failure::Usage("--lambda-grid needs start ≤ end and a positive integer count".into()));
    }
    let count = count as usize;
    let a4 = spec.validate_a4(a.model.z, a.model.t);

    let mut table = Table::new(&["lambda", "g", "beta_star"]);
    for k in 0..count {
        let lambda = if count == 1 {
            start
        } else {
            start + (end - start) * k as f64 / (count - 1) as f64
        };
        table.push(vec![
            Cell::Num(lambda),
            Cell::Num(spec.occupation(lambda)),
            Cell::Num(spec.beta_star(lambda)),
        ]);
    }
    table.footer.push(("a4_converges", Cell::Bool(a4.converges)));
    table.footer.push(("a4_value", Cell::Num(a4.value)));
    table.footer.push(("a4_tail_bound", Cell::Num(a4.tail_bound)));
    emit(a.output.out.as_deref(), &table.render(a.output.format))?;

    if a4.converges {
        eprintln!("A4 converges, value ≈ {:.6} (tail bound {:.1e})", a4.value, a4.tail_bound);
        Ok(())
    } else {
        Err(Failure::Regime("A4 diverges".into()))
    }
}

pub fn linear(a: &LinearArgs) -> Outcome {
    let spec = usage(a.model.spec())?;
    let r = linear_report(&spec, a.model.z, a.model.t);
    let (f_min, tail) = match r.ground_free_energy {
        Some(s) => (s.value, s.tail_bound),
        None if r.regime == fermitherm_core::Regime::Unbounded => (f64::NEG_INFINITY, 0.0),
        None => (f64::NAN, f64::NAN),
    };
    let q_max = match r.q_max_lin {
        QMax::Finite { value, .. } => value,
        QMax::Infinite => f64::INFINITY,
    };
    let mut table = Table::new(&["m", "Z", "T", "regime", "q_max_lin", "F_min", "tail", "q_guaranteed"]);
    table.push(vec![
        Cell::Num(a.model.m),
        Cell::Num(a.model.z),
        Cell::Num(a.model.t),
        Cell::Text(r.regime.as_str().into()),
        Cell::Num(q_max),
        Cell::Num(f_min),
        Cell::Num(tail),
        Cell::Num(r.q_guaranteed),
    ]);
    emit(a.output.out.as_deref(), &table.render(a.output.format))?;
    Ok(())
}

fn run_scf(config: &fermitherm_core::ScfConfig) -> Result<ScfResult, Failure> {
    config.validate()?;
    let r = if config.q.is_some() {
        scf_minimize(config)?
    } else {
        scf_global(config)?
    };
    Ok(r)
}

pub fn minimize(a: &MinimizeArgs) -> Outcome {
    let config = usage(a.solver.scf_config(&a.model, a.q))?;
    let r = run_scf(&config)?;
    let file = ResultFile::new(&config, &r);
    let text = json_text(&serde_json::to_value(&file).context("cannot encode result")?);
    emit(a.out.as_deref(), &text)?;
    if let Some(path) = &a.density {
        let rho = density_from_gamma(&r.gamma);
        let v = hartree_potential(&r.gamma.grid, &rho)?;
        let mut t = Table::new(&["r", "rho_line", "V_H"]);
        for i in 0..rho.rho_line.len() {
            t.push(vec![Cell::Num(r.gamma.grid.r[i]), Cell::Num(rho.rho_line[i]), Cell::Num(v[i])]);
        }
        emit(Some(path), &t.to_csv())?;
    }
    eprintln!(
        "status {}, {} iterations, residual {:.3e}, free energy {:.12}, mu {}",
        file.status,
        r.iterations,
        r.residual,
        r.energy.total_free,
        num(r.mu)
    );
    match (&r.audit, r.converged) {
        (_, false) => Err(Failure::Convergence(format!("no convergence: {}", file.status))),
        (Some(audit), true) if audit.all_pass() => Ok(()),
        (Some(_), true) => Err(Failure::Audit("converged, but the minimizer audit failed".into())),
        (None, true) => Err(Failure::Audit("converged without an audit".into())),
    }
}

pub fn sweep(a: &SweepArgs) -> Outcome {
    let config = usage(a.solver.scf_config(&a.model, Some(a.q_from)))?;
    config.validate()?;
    if !(a.q_from >= 0.0) || !(a.q_to >= a.q_from) || a.q_steps == 0 {
        return Err(Failure::Usage("sweep needs 0 ≤ q-from ≤ q-to and q-steps ≥ 1".into()));
    }
    let qs: Vec<f64> = (0..a.q_steps)
        .map(|k| {
            if a.q_steps == 1 {
                a.q_from
            } else {
                a.q_from + (a.q_to - a.q_from) * k as f64 / (a.q_steps - 1) as f64
            }
        })
        .collect();
    let rows = qs
        .par_iter()
        .map(|&q| sweep_point(&config, q))
        .collect::<Result<Vec<_>, _>>()?;
    let summary = summarize_sweep(&config, rows);

    let mut table = Table::new(&["q", "I", "mu", "converged", "binding_flag"]);
    for r in &summary.rows {
        table.push(vec![
            Cell::Num(r.q),
            Cell::Num(r.energy),
            Cell::Num(r.mu),
            Cell::Bool(r.converged),
            Cell::Bool(r.binding_flag),
        ]);
    }
    table.footer.push(("q_max_lin", Cell::Num(summary.q_max_lin.value())));
    table.footer.push(("charge_bound", Cell::Num(2.0 * config.z + 1.0)));
    table.footer.push(("ceiling", Cell::Num(summary.ceiling)));
    table.footer.push(("monotone", Cell::Bool(summary.monotone)));
    emit(a.output.out.as_deref(), &table.render(a.output.format))?;

    let stalled: Vec<_> = summary.rows.iter().filter(|r| r.status == ScfStatus::MaxIterations).map(|r| r.q).collect();
    if stalled.is_empty() {
        Ok(())
    } else {
        Err(Failure::Convergence(format!("no convergence at q = {stalled:?}")))
    }
}

fn load_minimizer(a: &DynamicsArgs) -> Result<(fermitherm_core::ScfConfig, ScfResult), Failure> {
    let text = fs::read_to_string(&a.input)
        .map_err(|e| Failure::Convergence(format!("cannot read {}: {e}", a.input.display())))?;
    let file: ResultFile = serde_json::from_str(&text)
        .map_err(|e| Failure::Convergence(format!("{} is not a result file: {e}", a.input.display())))?;
    let config = file.scf_config().map_err(Failure::Convergence)?;
    let result = file.scf_result().map_err(Failure::Convergence)?;
    if !result.converged {
        return Err(Failure::Convergence(format!("{} holds an unconverged state", a.input.display())));
    }
    Ok((config, result))
}

fn trajectory_table(samples: &[TrajectorySample]) -> Table {
    let mut t = Table::new(&["t", "trace", "E_hf", "entropy_trace", "dist"]);
    for s in samples {
        t.push(vec![
            Cell::Num(s.t),
            Cell::Num(s.trace),
            Cell::Num(s.hf_energy),
            Cell::Num(s.entropy_trace),
            Cell::Num(s.dist.unwrap_or(f64::NAN)),
        ]);
    }
    t
}

pub fn evolve_cmd(a: &EvolveArgs) -> Outcome {
    let n_steps = usage(a.dynamics.validate())?;
    if !(a.eta >= 0.0) || !a.eta.is_finite() {
        return Err(Failure::Usage(format!("--eta must be nonnegative, got {}", a.eta)));
    }
    let (config, result) = load_minimizer(&a.dynamics)?;
    let reference = OrbitalState::from_scf(&result);
    let initial = if a.eta == 0.0 {
        reference.clone()
    } else {
        perturb(&reference, &result, config.z, a.eta, PERTURBATION_SUBSPACE, a.dynamics.seed)?
    };
    let options = EvolveOptions {
        stride: a.dynamics.stride,
        ..EvolveOptions::default()
    };
    let samples = evolve(&initial, a.dynamics.dt, n_steps, config.z, &config.spec, Some(&reference), &options)?;
    emit(a.output.out.as_deref(), &trajectory_table(&samples).render(a.output.format))?;
    Ok(())
}

pub fn stability(a: &StabilityArgs) -> Outcome {
    let _ = usage(a.dynamics.validate())?;
    let etas = usage(parse_list(&a.eta_list, "--eta-list"))?;
    if etas.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
        return Err(Failure::Usage("--eta-list values must be nonnegative".into()));
    }
    let (config, result) = load_minimizer(&a.dynamics)?;
    let options = EvolveOptions {
        stride: a.dynamics.stride,
        ..EvolveOptions::default()
    };
    let d = &a.dynamics;
    let reports = etas
        .par_iter()
        .map(|&eta| stability_experiment(&result, &config.spec, config.z, eta, d.horizon, d.dt, d.seed, &options))
        .collect::<Result<Vec<_>, _>>()?;

    fs::create_dir_all(&a.out_dir).with_context(|| format!("cannot create {}", a.out_dir.display()))?;
    let mut summary = Table::new(&["eta", "sup_dist", "initial_dist", "file"]);
    for r in &reports {
        let name = format!("trajectory_eta_{}.csv", r.eta);
        write_file(&a.out_dir.join(&name), &trajectory_table(&r.samples).to_csv())?;
        summary.push(vec![Cell::Num(r.eta), Cell::Num(r.sup_dist), Cell::Num(r.initial_dist), Cell::Text(name)]);
    }
    emit(a.output.out.as_deref(), &summary.render(a.output.format))?;
    Ok(())
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}
