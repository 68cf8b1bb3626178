//! Projected gradient descent with Armijo backtracking.

use log::info;

use crate::assembly;
use crate::discretization::{Bounds, ControlField, DgField};
use crate::error::{Error, Result};
use crate::objective::{eval_cost, eval_gradient};
use crate::state::{Forcing, Problem};

const ARMIJO_C: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 30;

/// Entrywise clamp onto `[lower, upper]`; the result is flagged admissible.
pub fn project_box(u: &ControlField, bounds: Bounds) -> ControlField {
    let mut out = u.clone();
    out.map_in_place(|_, _, v| bounds.clamp(v));
    out.flag_admissible(bounds);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// `||u - P(-phi/mu)|| <= tol`.
    ProjectionFormula,
    /// `||u - P(u - g)|| <= tol`.
    ProjectedGradient,
    MaxIterations,
    LineSearchStalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub cost: f64,
    /// Accepted step length; zero for the final (terminating) record.
    pub step: f64,
    pub projected_gradient: f64,
    pub projection_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeReport {
    pub history: Vec<IterationRecord>,
    pub termination: Termination,
}

impl OptimizeReport {
    /// Number of accepted gradient steps.
    pub fn iterations(&self) -> usize {
        self.history.len().saturating_sub(1)
    }

    /// Smaller of the two stationarity measures at the last recorded iterate.
    pub fn last_residual(&self) -> f64 {
        self.history
            .last()
            .map_or(f64::INFINITY, |r| r.projected_gradient.min(r.projection_residual))
    }

    pub fn costs(&self) -> Vec<f64> {
        self.history.iter().map(|r| r.cost).collect()
    }
}

#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub u: ControlField,
    pub y: DgField,
    pub phi: DgField,
    pub gradient: ControlField,
    pub cost: f64,
    pub report: OptimizeReport,
}

/// `P_[a,b](-mean(phi)/mu)` cellwise.
pub fn projection_formula(problem: &Problem, phi: &DgField) -> Result<ControlField> {
    problem.check_field(phi, "adjoint")?;
    let c = problem.config();
    let slabs = (0..phi.n_slabs())
        .map(|n| {
            assembly::cell_means(problem.mesh(), phi.slab(n))
                .into_iter()
                .map(|p| c.bounds.clamp(-p / c.mu))
                .collect()
        })
        .collect();
    let mut u = ControlField::from_slabs(problem.grid(), slabs)?;
    u.flag_admissible(c.bounds);
    Ok(u)
}

struct Iterate {
    u: ControlField,
    y: DgField,
    phi: DgField,
    g: ControlField,
    cost: f64,
}

fn evaluate(problem: &Problem, u: ControlField) -> Result<Iterate> {
    let y = problem.solve_state(&Forcing::Control(&u))?.y;
    let cost = eval_cost(problem, &y, &u)?;
    let phi = problem.solve_adjoint(&y)?;
    let g = eval_gradient(problem, &u, &phi)?;
    Ok(Iterate { u, y, phi, g, cost })
}

fn distance(a: &ControlField, b: &ControlField, areas: &[f64]) -> f64 {
    a.axpy(-1.0, b).norm(areas)
}

/// Minimizes `J_sigma` over admissible piecewise constant controls from `u0`.
///
/// The first trial step of every iteration is a Barzilai-Borwein step capped
/// at `1/mu` (exactly `1/mu` on the first iteration); Armijo backtracking
/// then enforces monotone descent.
pub fn optimize(problem: &Problem, u0: &ControlField, tol: f64, max_iter: usize) -> Result<OptimizeOutcome> {
    let c = problem.config();
    let bounds = c.bounds;
    u0.check_compatible(problem.grid(), problem.mesh().n_triangles())?;
    if !u0.is_within(bounds) {
        return Err(Error::domain("initial control violates the box constraints"));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("optimizer tolerance must be positive"));
    }
    let areas = problem.space().areas();
    let max_step = 1.0 / c.mu;

    let mut u_start = u0.clone();
    u_start.flag_admissible(bounds);
    let mut it = evaluate(problem, u_start)?;
    let mut history = Vec::new();
    let mut previous: Option<(ControlField, ControlField)> = None;

    loop {
        let pf = distance(&it.u, &projection_formula(problem, &it.phi)?, areas);
        let pg = distance(&it.u, &project_box(&it.u.axpy(-1.0, &it.g), bounds), areas);
        history.push(IterationRecord {
            cost: it.cost,
            step: 0.0,
            projected_gradient: pg,
            projection_residual: pf,
        });
        let termination = if pf <= tol {
            Some(Termination::ProjectionFormula)
        } else if pg <= tol {
            Some(Termination::ProjectedGradient)
        } else {
            None
        };
        if let Some(termination) = termination {
            info!(
                "optimizer converged after {} iterations: J = {:.10e}, residual {:.3e}",
                history.len() - 1,
                it.cost,
                pf.min(pg)
            );
            return Ok(OptimizeOutcome {
                u: it.u,
                y: it.y,
                phi: it.phi,
                gradient: it.g,
                cost: it.cost,
                report: OptimizeReport { history, termination },
            });
        }
        if history.len() > max_iter {
            return Err(Error::NotConverged(Box::new(OptimizeReport {
                history,
                termination: Termination::MaxIterations,
            })));
        }

        let mut step = match &previous {
            Some((du, dg)) => {
                let sy = du.inner(dg, areas);
                let ss = du.inner(du, areas);
                if sy > 0.0 {
                    (ss / sy).min(max_step)
                } else {
                    max_step
                }
            }
            None => max_step,
        };
        let mut accepted = None;
        for _ in 0..=MAX_BACKTRACKS {
            let trial_u = project_box(&it.u.axpy(-step, &it.g), bounds);
            let d = trial_u.axpy(-1.0, &it.u);
            let slope = it.g.inner(&d, areas);
            let trial = evaluate(problem, trial_u)?;
            if trial.cost <= it.cost + ARMIJO_C * slope {
                accepted = Some((trial, d));
                break;
            }
            step *= BACKTRACK;
        }
        match accepted {
            Some((trial, du)) => {
                let dg = trial.g.axpy(-1.0, &it.g);
                if let Some(last) = history.last_mut() {
                    last.step = step;
                }
                log::debug!("iteration {}: J = {:.12e}, step {step:.3e}, pf {pf:.3e}", history.len(), trial.cost);
                previous = Some((du, dg));
                it = trial;
            }
            None => {
                return Err(Error::Stalled(Box::new(OptimizeReport {
                    history,
                    termination: Termination::LineSearchStalled,
                })));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{Data, ProblemConfig, TimeGrid};
    use crate::mesh::{Mesh, Point, Rect};
    use crate::objective::{critical_cone_classify, default_activity_tol, Activity};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn sine(x: Point) -> f64 {
        (PI * x[0]).sin() * (PI * x[1]).sin()
    }

    fn tracking_problem(bounds: (f64, f64)) -> Problem {
        let config = ProblemConfig {
            epsilon: 0.25,
            mu: 1e-2,
            gamma: 0.5,
            bounds: Bounds::new(bounds.0, bounds.1).unwrap(),
            t_final: 0.25,
            yd: Data::function(|_, x| 0.5 * sine(x)),
            y_omega: Data::function(|_, x| 0.5 * sine(x)),
            newton_tol: 1e-12,
            cg_tol: 1e-12,
            ..ProblemConfig::default()
        };
        Problem::uniform(Mesh::uniform(4, 4, Rect::UNIT).unwrap(), 8, config).unwrap()
    }

    #[test]
    fn projection_examples() {
        let grid = TimeGrid::uniform(1.0, 1).unwrap();
        let b = Bounds::new(-1.0, 1.0).unwrap();
        let u = ControlField::from_slabs(&grid, vec![vec![0.5, 5.0, -3.0, -1.0]]).unwrap();
        let p = project_box(&u, b);
        assert_eq!(p.slab(0), &[0.5, 1.0, -1.0, -1.0]);
        assert_eq!(p.admissible_bounds(), Some(b));
        assert_eq!(project_box(&p, b), p);
    }

    #[test]
    fn fixed_point_terminates_immediately() {
        // A large Tikhonov weight makes the projection-formula map a contraction.
        let base = tracking_problem((-100.0, 100.0));
        let config = ProblemConfig {
            mu: 1.0,
            ..base.config().clone()
        };
        let p = Problem::uniform(base.mesh().clone(), 8, config).unwrap();
        // Run the projection-formula iteration to its fixed point first.
        let mut u = p.zero_control();
        for _ in 0..60 {
            let y = p.solve_state(&Forcing::Control(&u)).unwrap().y;
            let phi = p.solve_adjoint(&y).unwrap();
            u = projection_formula(&p, &phi).unwrap();
        }
        let out = optimize(&p, &u, 1e-8, 5).unwrap();
        assert!(out.report.iterations() <= 1, "{:?}", out.report.termination);
    }

    #[test]
    fn tikhonov_sanity_returns_zero_control() {
        let base = tracking_problem((-1.0, 1.0));
        let y = base.solve_state(&Forcing::Zero).unwrap().y;
        let grid = base.grid().clone();
        let slabs = y.slabs().to_vec();
        let mesh = base.mesh().clone();
        let yd = Data::function(move |t, x| {
            let n = grid.slab_index(t).unwrap();
            let tri = mesh.locate(x).unwrap();
            crate::assembly::eval_nodal(&mesh, &slabs[n], tri, mesh.barycentric(tri, x))
        });
        // The target is evaluated exactly at interior Gauss times, so it is slab-constant.
        let config = ProblemConfig {
            gamma: 0.0,
            yd,
            ..base.config().clone()
        };
        let p = Problem::uniform(base.mesh().clone(), 8, config).unwrap();
        let out = optimize(&p, &p.zero_control(), 1e-8, 10).unwrap();
        assert!(out.u.norm(p.space().areas()) <= 1e-8);
    }

    #[test]
    fn descent_admissibility_and_optimality() {
        let p = tracking_problem((-0.5, 1.0));
        let b = p.config().bounds;
        let out = optimize(&p, &p.zero_control(), 1e-9, 500).unwrap();
        let costs = out.report.costs();
        assert!(costs.windows(2).all(|w| w[1] < w[0]), "{costs:?}");
        assert!(out.u.is_within(b));

        let areas = p.space().areas();
        let tol = 1e-9;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let mut w = p.zero_control();
            w.map_in_place(|_, _, _| rng.gen_range(b.lower..=b.upper));
            let d = w.axpy(-1.0, &out.u);
            let vi = out.gradient.inner(&d, areas);
            assert!(vi >= -tol * d.norm(areas) - 1e-12, "{vi}");
        }

        // Bang-bang structure: positive gradient entries sit on the lower bound.
        let band = 1e-6;
        for (u, g) in out.u.values().zip(out.gradient.values()) {
            if g > band {
                assert!((u - b.lower).abs() < 1e-6, "u {u}, g {g}");
            } else if g < -band {
                assert!((u - b.upper).abs() < 1e-6, "u {u}, g {g}");
            }
        }
        let labels = critical_cone_classify(&out.u, &out.gradient, b, default_activity_tol(&out.gradient)).unwrap();
        assert!(labels.iter().flatten().any(|l| *l == Activity::StronglyUpper || *l == Activity::UpperActive));
    }

    #[test]
    fn inadmissible_start_is_rejected() {
        let p = tracking_problem((-1.0, 1.0));
        let u = ControlField::constant(p.grid(), p.mesh().n_triangles(), 3.0);
        assert!(matches!(optimize(&p, &u, 1e-8, 10), Err(Error::Domain(_))));
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let p = tracking_problem((-2.0, 2.0));
        match optimize(&p, &p.zero_control(), 1e-14, 1) {
            Err(Error::NotConverged(report)) => {
                assert_eq!(report.termination, Termination::MaxIterations);
                assert!(report.iterations() >= 1);
            }
            other => panic!("expected non-convergence, got {:?}", other.map(|o| o.report)),
        }
    }
}
