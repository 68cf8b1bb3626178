//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::info;

use crate::analysis::{convergence_study, ginzburg_landau_energy, restriction_check, StudyKind, StudySpec};
use crate::config::{OutputFormat, RunConfig, StudyName};
use crate::discretization::{interval_average_control, Data, TimeGrid};
use crate::error::{Error, Result};
use crate::io;
use crate::mesh::Mesh;
use crate::optimizer::{optimize, project_box};
use crate::spectral::spectral_series;
use crate::state::{Forcing, Problem, StateSolution};

#[derive(Debug, Parser)]
#[command(name = "acctl", version, about = "Optimal control of the Allen-Cahn equation with dG(0)/P1 finite elements")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Configuration file (`section.key = value` lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Override a configuration entry, e.g. `--set problem.epsilon=0.25`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads for independent solves (overrides `run.threads`).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Forward state solve.
    Solve,
    /// State followed by the adjoint.
    Adjoint,
    /// Projected gradient optimization.
    Optimize,
    /// Principal eigenvalue series of the state.
    Spectrum,
    /// Convergence study.
    Converge,
    /// Mesh and step restriction report.
    Check,
    /// Ginzburg-Landau energy per slab.
    Energy,
}

pub fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::parse(&fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    for o in &cli.overrides {
        cfg.set(o)?;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::domain("--threads must be at least 1"));
        }
        cfg.threads = t;
    }
    Ok(cfg)
}

/// Runs one command; returns the human-readable summary lines.
pub fn run(cli: &Cli) -> Result<Vec<String>> {
    let cfg = load_config(cli)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::domain(format!("cannot build thread pool: {e}")))?;
    pool.install(|| execute(cli.command, &cfg))
}

fn problem_from(cfg: &RunConfig) -> Result<Problem> {
    let mesh = Mesh::uniform(cfg.nx, cfg.ny, cfg.rect)?;
    let grid = TimeGrid::uniform(cfg.problem.t_final, cfg.steps)?;
    Problem::new(mesh, grid, cfg.problem.clone())
}

fn forward(problem: &Problem, cfg: &RunConfig) -> Result<StateSolution> {
    let zero_source = cfg.source.trim() == "zero";
    let zero_control = cfg.control.trim() == "zero";
    match (zero_source, zero_control) {
        (true, true) => problem.solve_state(&Forcing::Zero),
        (true, false) => {
            let u = control_field(problem, cfg);
            problem.solve_state(&Forcing::Control(&u))
        }
        _ => {
            let (s, c) = (cfg.source_data(), cfg.control_data());
            let sum = Data::function(move |t, x| eval_fn(&s, t, x) + eval_fn(&c, t, x));
            problem.solve_state(&Forcing::Function(&sum))
        }
    }
}

fn eval_fn(d: &Data, t: f64, x: crate::mesh::Point) -> f64 {
    match d {
        Data::Function(f) => f(t, x),
        Data::Nodal(_) => unreachable!("registry data are closed-form"),
    }
}

fn control_field(problem: &Problem, cfg: &RunConfig) -> crate::discretization::ControlField {
    let c = cfg.control_data();
    interval_average_control(problem.grid(), problem.mesh(), |t, x| eval_fn(&c, t, x))
}

fn prepare_out(cfg: &RunConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.out_dir)?;
    Ok(&cfg.out_dir)
}

fn execute(command: Command, cfg: &RunConfig) -> Result<Vec<String>> {
    let mut summary = Vec::new();
    match command {
        Command::Check => {
            let k = cfg.check_k.unwrap_or(cfg.problem.t_final / cfg.steps as f64);
            let h = match cfg.check_h {
                Some(h) => h,
                None => Mesh::uniform(cfg.nx, cfg.ny, cfg.rect)?.h(),
            };
            let report = restriction_check(k, h, cfg.problem.epsilon, cfg.check_r, cfg.check_d, cfg.check_c0)?;
            for c in report.conditions() {
                summary.push(format!(
                    "{}: lhs {:.6e} rhs {:.6e} ratio {:.6e} {}",
                    c.name,
                    c.lhs,
                    c.rhs,
                    c.ratio,
                    if c.pass { "pass" } else { "fail" }
                ));
            }
            if cfg.writes(OutputFormat::Csv) {
                let dir = prepare_out(cfg)?;
                io::restriction_csv(&report).write(&dir.join("check.csv"))?;
            }
        }
        Command::Converge => {
            let kind = match cfg.study {
                StudyName::Manufactured => StudyKind::Manufactured,
                StudyName::Heat => StudyKind::Heat,
                StudyName::Control => StudyKind::ControlSelfConvergence {
                    tol: cfg.opt_tol,
                    max_iter: cfg.opt_max_iter,
                },
            };
            let spec = StudySpec {
                kind,
                config: cfg.problem.clone(),
                rect: cfg.rect,
                base_nx: cfg.nx,
                base_steps: cfg.steps,
                levels: cfg.levels,
                coupling: cfg.coupling,
                parallel: cfg.threads > 1,
            };
            let table = convergence_study(&spec)?;
            let min_rows = if cfg.study == StudyName::Control { 2 } else { 3 };
            let slopes = table.slopes_with_min_rows(min_rows)?;
            for (name, s) in table.norms.iter().zip(&slopes) {
                summary.push(format!("slope {name}: {s:.4}"));
            }
            if cfg.writes(OutputFormat::Csv) {
                let dir = prepare_out(cfg)?;
                io::rate_table_csv(&table).write(&dir.join("rates.csv"))?;
            }
        }
        Command::Solve | Command::Energy | Command::Spectrum => {
            let problem = problem_from(cfg)?;
            let state = forward(&problem, cfg)?;
            let y = &state.y;
            summary.push(format!(
                "state: {} slabs, {} Newton iterations, max residual {:.3e}",
                y.n_slabs(),
                state.report.total_iterations(),
                state.report.max_residual()
            ));
            let dir = prepare_out(cfg)?;
            match command {
                Command::Solve => {
                    if cfg.writes(OutputFormat::Csv) {
                        io::field_csv(y).write(&dir.join("state.csv"))?;
                        let mut csv = io::Csv::new(&["slab", "iterations", "residual", "damping"]);
                        for n in 0..y.n_slabs() {
                            csv.row(vec![
                                n.to_string(),
                                state.report.iterations[n].to_string(),
                                io::fmt_f64(state.report.residuals[n]),
                                state.report.damping_activations[n].to_string(),
                            ]);
                        }
                        csv.write(&dir.join("newton.csv"))?;
                    }
                    if cfg.writes(OutputFormat::Vtk) {
                        io::write_vtk_series(dir, "state", problem.mesh(), "y", y)?;
                    }
                }
                Command::Energy => {
                    let eps = cfg.problem.epsilon;
                    let mut times = vec![0.0];
                    let mut values = vec![ginzburg_landau_energy(problem.space(), eps, problem.initial_state())];
                    for n in 0..y.n_slabs() {
                        times.push(problem.grid().nodes()[n + 1]);
                        values.push(ginzburg_landau_energy(problem.space(), eps, y.slab(n)));
                    }
                    let increases = values.windows(2).filter(|w| w[1] > w[0]).count();
                    summary.push(format!(
                        "energy: {:.10e} -> {:.10e}, {increases} increasing step(s)",
                        values[0],
                        values[values.len() - 1]
                    ));
                    if cfg.writes(OutputFormat::Csv) {
                        io::series_csv("energy", &times, &values).write(&dir.join("energy.csv"))?;
                    }
                }
                Command::Spectrum => {
                    let series = spectral_series(problem.space(), &cfg.problem, y, cfg.eig_tol, true)?;
                    let (lo, hi) = series
                        .lambda
                        .iter()
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &l| (a.min(l), b.max(l)));
                    summary.push(format!("lambda range [{lo:.6e}, {hi:.6e}]"));
                    if cfg.writes(OutputFormat::Csv) {
                        io::spectral_csv(&series).write(&dir.join("spectrum.csv"))?;
                    }
                }
                _ => unreachable!(),
            }
        }
        Command::Adjoint => {
            let problem = problem_from(cfg)?;
            let state = forward(&problem, cfg)?;
            let phi = problem.solve_adjoint(&state.y)?;
            summary.push(format!("adjoint: {} slabs, max |phi| {:.6e}", phi.n_slabs(), phi.max_abs()));
            let dir = prepare_out(cfg)?;
            if cfg.writes(OutputFormat::Csv) {
                io::field_csv(&state.y).write(&dir.join("state.csv"))?;
                io::field_csv(&phi).write(&dir.join("adjoint.csv"))?;
            }
            if cfg.writes(OutputFormat::Vtk) {
                io::write_vtk_series(dir, "state", problem.mesh(), "y", &state.y)?;
                io::write_vtk_series(dir, "adjoint", problem.mesh(), "phi", &phi)?;
            }
        }
        Command::Optimize => {
            let problem = problem_from(cfg)?;
            let u0 = project_box(&control_field(&problem, cfg), cfg.problem.bounds);
            let out = optimize(&problem, &u0, cfg.opt_tol, cfg.opt_max_iter)?;
            info!("optimization finished: {:?}", out.report.termination);
            summary.push(format!(
                "optimize: {} iterations, J = {:.12e}, residual {:.3e} ({:?})",
                out.report.iterations(),
                out.cost,
                out.report.last_residual(),
                out.report.termination
            ));
            let dir = prepare_out(cfg)?;
            if cfg.writes(OutputFormat::Csv) {
                io::control_csv(&out.u).write(&dir.join("control.csv"))?;
                io::field_csv(&out.y).write(&dir.join("state.csv"))?;
                io::field_csv(&out.phi).write(&dir.join("adjoint.csv"))?;
                io::optimize_history_csv(&out.report).write(&dir.join("history.csv"))?;
            }
            if cfg.writes(OutputFormat::Vtk) {
                io::write_vtk_series(dir, "state", problem.mesh(), "y", &out.y)?;
                io::write_vtk_series(dir, "adjoint", problem.mesh(), "phi", &out.phi)?;
                io::write_control_vtk_series(dir, "control", problem.mesh(), &out.u)?;
            }
        }
    }
    Ok(summary)
}

/// Process entry point: prints the summary or a categorized error and
/// returns the exit status.
pub fn main_with(cli: Cli) -> i32 {
    match run(&cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            0
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            e.exit_code()
        }
    }
}
