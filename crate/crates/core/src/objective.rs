//! Discrete cost, its gradient through the adjoint, and second-derivative
//! quadratic forms.

use crate::assembly;
use crate::discretization::{Bounds, ControlField, DgField};
use crate::error::{Error, Result};
use crate::sparse::dot;
use crate::state::{Forcing, Problem};

/// Tracking over time, terminal tracking and Tikhonov term of `J_sigma(u)` for the state `y = y_sigma(u)`.
pub fn eval_cost(problem: &Problem, y: &DgField, u: &ControlField) -> Result<f64> {
    problem.check_field(y, "state")?;
    u.check_compatible(problem.grid(), problem.mesh().n_triangles())?;
    let m = problem.space().mass();
    let grid = problem.grid();
    let mut tracking = 0.0;
    for n in 0..grid.n_slabs() {
        let k = grid.step(n);
        let yn = y.slab(n);
        // int_{J_n} ||y_n - y_d(t)||^2 expanded: y_n is constant on the slab.
        tracking += k * m.quadratic_form(yn, yn) - 2.0 * dot(yn, problem.yd_load(n)) + problem.yd_square(n);
    }
    let e: Vec<f64> = y
        .last()
        .iter()
        .zip(problem.terminal_target())
        .map(|(a, b)| a - b)
        .collect();
    let terminal = m.quadratic_form(&e, &e);
    let areas = problem.space().areas();
    let c = problem.config();
    Ok(0.5 * tracking + 0.5 * c.gamma * terminal + 0.5 * c.mu * u.inner(u, areas))
}

/// Riesz representative of `J'_sigma(u)` in the piecewise constant control
/// space: cell means of `phi_sigma` plus `mu u`.
pub fn eval_gradient(problem: &Problem, u: &ControlField, phi: &DgField) -> Result<ControlField> {
    problem.check_field(phi, "adjoint")?;
    u.check_compatible(problem.grid(), problem.mesh().n_triangles())?;
    let mu = problem.config().mu;
    let slabs = (0..u.n_slabs())
        .map(|n| {
            assembly::cell_means(problem.mesh(), phi.slab(n))
                .into_iter()
                .zip(u.slab(n))
                .map(|(p, u)| p + mu * u)
                .collect()
        })
        .collect();
    ControlField::from_slabs(problem.grid(), slabs)
}

/// `J'_sigma(u) v` through the linearized state `z = G'_sigma(u) v`,
/// independently of the adjoint.
pub fn eval_derivative_linearized(problem: &Problem, y: &DgField, u: &ControlField, v: &ControlField) -> Result<f64> {
    let z = problem.solve_linearized(y, &Forcing::Control(v))?;
    let m = problem.space().mass();
    let grid = problem.grid();
    let mut total = 0.0;
    for n in 0..grid.n_slabs() {
        let k = grid.step(n);
        total += k * m.quadratic_form(y.slab(n), z.slab(n)) - dot(z.slab(n), problem.yd_load(n));
    }
    let e: Vec<f64> = y
        .last()
        .iter()
        .zip(problem.terminal_target())
        .map(|(a, b)| a - b)
        .collect();
    let c = problem.config();
    total += c.gamma * m.quadratic_form(&e, z.last());
    total += c.mu * u.inner(v, problem.space().areas());
    Ok(total)
}

/// `J''_sigma(u) v^2 = int int z^2 + gamma ||z_N||^2 + mu ||v||^2 - 6 eps^-2 int int y z^2 phi`.
pub fn eval_hessian_quadratic(problem: &Problem, y: &DgField, phi: &DgField, v: &ControlField) -> Result<f64> {
    problem.check_field(phi, "adjoint")?;
    let z = problem.solve_linearized(y, &Forcing::Control(v))?;
    let m = problem.space().mass();
    let grid = problem.grid();
    let c = problem.config();
    let reaction = c.reaction();
    let mut tracking = 0.0;
    let mut coupling = 0.0;
    for n in 0..grid.n_slabs() {
        let k = grid.step(n);
        let zn = z.slab(n);
        tracking += k * m.quadratic_form(zn, zn);
        if reaction != 0.0 {
            let q = assembly::weighted_square_load(problem.mesh(), y.slab(n), zn);
            coupling += k * dot(&q, phi.slab(n));
        }
    }
    let terminal = m.quadratic_form(z.last(), z.last());
    Ok(tracking + c.gamma * terminal + c.mu * v.inner(v, problem.space().areas()) - 6.0 * reaction * coupling)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activity {
    Inactive,
    LowerActive,
    UpperActive,
    /// Active at the lower bound with a nonvanishing multiplier.
    StronglyLower,
    /// Active at the upper bound with a nonvanishing multiplier.
    StronglyUpper,
}

impl Activity {
    /// Directions in the critical cone must vanish here.
    pub fn is_strongly_active(self) -> bool {
        matches!(self, Activity::StronglyLower | Activity::StronglyUpper)
    }
}

/// Labels each `(slab, cell)` for the critical cone: active where `u` sits on
/// a bound (exact equality after clamping), strongly active where `|g| > tol` too.
pub fn critical_cone_classify(u: &ControlField, g: &ControlField, bounds: Bounds, tol: f64) -> Result<Vec<Vec<Activity>>> {
    if u.n_slabs() != g.n_slabs() || u.n_cells() != g.n_cells() {
        return Err(Error::domain("control and gradient shapes differ"));
    }
    Ok(u
        .slabs()
        .iter()
        .zip(g.slabs())
        .map(|(us, gs)| {
            us.iter()
                .zip(gs)
                .map(|(&u, &g)| {
                    let strong = g.abs() > tol;
                    if u == bounds.lower {
                        if strong {
                            Activity::StronglyLower
                        } else {
                            Activity::LowerActive
                        }
                    } else if u == bounds.upper {
                        if strong {
                            Activity::StronglyUpper
                        } else {
                            Activity::UpperActive
                        }
                    } else {
                        Activity::Inactive
                    }
                })
                .collect()
        })
        .collect())
}

/// Default strong-activity threshold: `1e-8` times the largest gradient entry.
pub fn default_activity_tol(g: &ControlField) -> f64 {
    1e-8 * g.values().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE)
}
