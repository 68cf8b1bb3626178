//! Space-time error norms, energy diagnostics, restriction checks and the
//! convergence-study harness.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use crate::assembly::{self, FemSpace};
use crate::discretization::{ControlField, Data, DgField, ProblemConfig};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point, Rect};
use crate::optimizer::optimize;
use crate::quadrature::{gauss_legendre_unit, QuadratureRule};
use crate::state::{Forcing, Problem};

/// Least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub linf_l2: f64,
    pub l2_l2: f64,
    /// Full H1 norm (L2 plus gradient) in space, L2 in time.
    pub l2_h1: f64,
    pub l4_l4: f64,
}

/// Closed-form space-time function with its spatial gradient.
pub struct ExactField<'a> {
    pub value: &'a (dyn Fn(f64, Point) -> f64 + Sync),
    pub gradient: &'a (dyn Fn(f64, Point) -> [f64; 2] + Sync),
}

pub enum Reference<'a> {
    Discrete(&'a DgField),
    Exact(&'a ExactField<'a>),
}

/// Norms of `a - b` over `Omega_T`.
///
/// Discrete differences are integrated exactly slab by slab; against a
/// closed-form field each slab uses four Gauss points in time and the
/// degree-8 rule in space, and the L-infinity-in-time norm is sampled at
/// those points and at both slab endpoints.
pub fn error_norms(space: &FemSpace, a: &DgField, b: Reference<'_>) -> Result<ErrorNorms> {
    space.check_nodal(a.slab(0), "field")?;
    let grid = a.grid();
    let mesh = space.mesh();
    match b {
        Reference::Discrete(b) => {
            let e = a.difference(b)?;
            let rule = QuadratureRule::degree4();
            let (mut sup, mut l2, mut h1, mut l4) = (0.0f64, 0.0, 0.0, 0.0);
            for n in 0..grid.n_slabs() {
                let k = grid.step(n);
                let en = e.slab(n);
                let m = space.mass().quadratic_form(en, en);
                let s = space.stiffness().quadratic_form(en, en);
                let q = assembly::integrate(mesh, &rule, |t, p, _| assembly::eval_nodal(mesh, en, t, p).powi(4));
                sup = sup.max(m);
                l2 += k * m;
                h1 += k * (m + s);
                l4 += k * q;
            }
            Ok(ErrorNorms {
                linf_l2: sup.sqrt(),
                l2_l2: l2.sqrt(),
                l2_h1: h1.sqrt(),
                l4_l4: l4.powf(0.25),
            })
        }
        Reference::Exact(exact) => {
            let rule = QuadratureRule::degree8();
            let time_rule = gauss_legendre_unit(4);
            let slab_terms: Vec<[f64; 4]> = (0..grid.n_slabs())
                .into_par_iter()
                .map(|n| {
                    let (t0, t1) = grid.slab_bounds(n);
                    let k = t1 - t0;
                    let an = a.slab(n);
                    let moments = |t: f64| -> [f64; 3] {
                        let mut m = [0.0; 3];
                        for tri in 0..mesh.n_triangles() {
                            let area = mesh.area(tri);
                            let ga = assembly::grad_nodal(mesh, an, tri);
                            for (p, w) in rule.iter() {
                                let x = mesh.map_point(tri, p);
                                let d = assembly::eval_nodal(mesh, an, tri, p) - (exact.value)(t, x);
                                let gb = (exact.gradient)(t, x);
                                let gx = ga[0] - gb[0];
                                let gy = ga[1] - gb[1];
                                m[0] += w * area * d * d;
                                m[1] += w * area * (gx * gx + gy * gy);
                                m[2] += w * area * d.powi(4);
                            }
                        }
                        m
                    };
                    let mut acc = [0.0f64; 4];
                    for &(s, w) in &time_rule {
                        let m = moments(t0 + s * k);
                        acc[0] = acc[0].max(m[0]);
                        acc[1] += w * k * m[0];
                        acc[2] += w * k * (m[0] + m[1]);
                        acc[3] += w * k * m[2];
                    }
                    // The dG(0) value is the right limit at t0 and the value at t1.
                    for t in [t0, t1] {
                        acc[0] = acc[0].max(moments(t)[0]);
                    }
                    acc
                })
                .collect();
            let mut out = [0.0f64; 4];
            for s in slab_terms {
                out[0] = out[0].max(s[0]);
                out[1] += s[1];
                out[2] += s[2];
                out[3] += s[3];
            }
            Ok(ErrorNorms {
                linf_l2: out[0].sqrt(),
                l2_l2: out[1].sqrt(),
                l2_h1: out[2].sqrt(),
                l4_l4: out[3].powf(0.25),
            })
        }
    }
}

/// `E(y) = int 1/2 |grad y|^2 + (y^2 - 1)^2 / (4 eps^2)`; exact for P1 `y`.
pub fn ginzburg_landau_energy(space: &FemSpace, epsilon: f64, y: &[f64]) -> f64 {
    let mesh = space.mesh();
    let gradient = 0.5 * space.stiffness().quadratic_form(y, y);
    let well = assembly::integrate(mesh, &QuadratureRule::degree4(), |t, p, _| {
        let v = assembly::eval_nodal(mesh, y, t, p);
        (v * v - 1.0).powi(2)
    });
    gradient + well / (4.0 * epsilon * epsilon)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestrictionCondition {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs / lhs`: at least 1 when the condition holds.
    pub ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestrictionReport {
    pub mesh_condition: RestrictionCondition,
    pub step_condition: RestrictionCondition,
}

impl RestrictionReport {
    pub fn conditions(&self) -> [&RestrictionCondition; 2] {
        [&self.mesh_condition, &self.step_condition]
    }
}

/// Advisory check of `sqrt(k) + h <= eps^(2+r)` (d = 2) or
/// `sqrt(k) + h <= eps^(3+4r/3)` (d = 3), and of `k <= 3 C_0 eps^2 / 2`,
/// all with unit constants.
pub fn restriction_check(k: f64, h: f64, epsilon: f64, r: u32, d: u32, c0: f64) -> Result<RestrictionReport> {
    if !(k > 0.0 && h > 0.0 && epsilon > 0.0 && c0 > 0.0) {
        return Err(Error::domain("restriction check needs positive k, h, eps and C_0"));
    }
    if !(r == 1 || r == 2) {
        return Err(Error::domain(format!("regularity index r must be 1 or 2, got {r}")));
    }
    let exponent = match d {
        2 => 2.0 + r as f64,
        3 => 3.0 + 4.0 * r as f64 / 3.0,
        _ => return Err(Error::domain(format!("dimension must be 2 or 3, got {d}"))),
    };
    let condition = |name, lhs: f64, rhs: f64| RestrictionCondition {
        name,
        lhs,
        rhs,
        ratio: rhs / lhs,
        pass: lhs <= rhs,
    };
    Ok(RestrictionReport {
        mesh_condition: condition("sqrt(k)+h <= eps^p", k.sqrt() + h, epsilon.powf(exponent)),
        step_condition: condition("k <= 3*C0*eps^2/2", k, 1.5 * c0 * epsilon * epsilon),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub h: f64,
    pub k: f64,
    pub errors: Vec<f64>,
}

/// Errors per refinement level and their fitted log-log slopes in `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub norms: Vec<String>,
    pub rows: Vec<RateRow>,
}

impl RateTable {
    pub fn new(norms: &[&str]) -> Self {
        RateTable {
            norms: norms.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Inserts a row keeping rows sorted by decreasing `h`.
    pub fn push(&mut self, row: RateRow) -> Result<()> {
        if row.errors.len() != self.norms.len() {
            return Err(Error::domain("rate row has the wrong number of norms"));
        }
        let pos = self.rows.partition_point(|r| r.h > row.h);
        self.rows.insert(pos, row);
        Ok(())
    }

    /// Fitted slopes; requires at least three rows.
    pub fn slopes(&self) -> Result<Vec<f64>> {
        self.slopes_with_min_rows(3)
    }

    /// Fitted slopes with an explicit minimum row count (at least two).
    pub fn slopes_with_min_rows(&self, min_rows: usize) -> Result<Vec<f64>> {
        let min_rows = min_rows.max(2);
        if self.rows.len() < min_rows {
            return Err(Error::domain(format!(
                "slope fitting needs at least {min_rows} rows, table has {}",
                self.rows.len()
            )));
        }
        let xs: Vec<f64> = self.rows.iter().map(|r| r.h.ln()).collect();
        Ok((0..self.norms.len())
            .map(|j| {
                let ys: Vec<f64> = self.rows.iter().map(|r| r.errors[j].ln()).collect();
                least_squares_slope(&xs, &ys)
            })
            .collect())
    }

    pub fn column(&self, norm: &str) -> Option<Vec<f64>> {
        let j = self.norms.iter().position(|n| n == norm)?;
        Some(self.rows.iter().map(|r| r.errors[j]).collect())
    }
}

/// Smooth exact solution together with the source that produces it.
#[derive(Clone)]
pub struct ManufacturedSolution {
    pub value: Arc<dyn Fn(f64, Point) -> f64 + Send + Sync>,
    pub gradient: Arc<dyn Fn(f64, Point) -> [f64; 2] + Send + Sync>,
    pub source: Arc<dyn Fn(f64, Point) -> f64 + Send + Sync>,
    /// Whether the reaction term is part of the equation.
    pub nonlinear: bool,
}

impl ManufacturedSolution {
    /// `y* = e^-t sin(pi x) sin(pi y)` with the forced Allen-Cahn source.
    pub fn allen_cahn(epsilon: f64) -> Self {
        let c = epsilon.powi(-2);
        ManufacturedSolution {
            value: Arc::new(|t, x| (-t).exp() * (PI * x[0]).sin() * (PI * x[1]).sin()),
            gradient: Arc::new(|t, x| {
                let a = (-t).exp() * PI;
                [a * (PI * x[0]).cos() * (PI * x[1]).sin(), a * (PI * x[0]).sin() * (PI * x[1]).cos()]
            }),
            source: Arc::new(move |t, x| {
                let y = (-t).exp() * (PI * x[0]).sin() * (PI * x[1]).sin();
                (2.0 * PI * PI - 1.0) * y + c * (y * y * y - y)
            }),
            nonlinear: true,
        }
    }

    /// `e^(-2 pi^2 t) sin(pi x) sin(pi y)`: unforced heat equation.
    pub fn heat() -> Self {
        let decay = 2.0 * PI * PI;
        ManufacturedSolution {
            value: Arc::new(move |t, x| (-decay * t).exp() * (PI * x[0]).sin() * (PI * x[1]).sin()),
            gradient: Arc::new(move |t, x| {
                let a = (-decay * t).exp() * PI;
                [a * (PI * x[0]).cos() * (PI * x[1]).sin(), a * (PI * x[0]).sin() * (PI * x[1]).cos()]
            }),
            source: Arc::new(|_, _| 0.0),
            nonlinear: false,
        }
    }

    pub fn initial_data(&self) -> Data {
        let v = self.value.clone();
        Data::function(move |_, x| v(0.0, x))
    }

    pub fn source_data(&self) -> Data {
        Data::Function(self.source.clone())
    }

    pub fn value_fn(&self) -> Arc<dyn Fn(f64, Point) -> f64 + Send + Sync> {
        self.value.clone()
    }

    pub fn gradient_fn(&self) -> Arc<dyn Fn(f64, Point) -> [f64; 2] + Send + Sync> {
        self.gradient.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// `k ~ h`: steps double with each refinement.
    Linear,
    /// `k ~ h^2`: steps quadruple with each refinement.
    Quadratic,
}

impl Coupling {
    pub fn step_factor(self) -> usize {
        match self {
            Coupling::Linear => 2,
            Coupling::Quadratic => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StudyKind {
    /// Forced Allen-Cahn with known solution `e^-t sin sin`.
    Manufactured,
    /// Heat equation (reaction off) with known solution.
    Heat,
    /// Distance between optimal controls on successive levels.
    ControlSelfConvergence { tol: f64, max_iter: usize },
}

#[derive(Debug, Clone)]
pub struct StudySpec {
    pub kind: StudyKind,
    pub config: ProblemConfig,
    pub rect: Rect,
    pub base_nx: usize,
    pub base_steps: usize,
    pub levels: usize,
    pub coupling: Coupling,
    pub parallel: bool,
}

impl StudySpec {
    fn level(&self, l: usize) -> Result<(Mesh, usize)> {
        let n = self.base_nx << l;
        let mesh = Mesh::uniform(n, n, self.rect)?;
        Ok((mesh, self.base_steps * self.coupling.step_factor().pow(l as u32)))
    }
}

fn map_levels<T: Send>(parallel: bool, levels: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    if parallel {
        (0..levels).into_par_iter().map(f).collect()
    } else {
        (0..levels).map(f).collect()
    }
}

/// Runs the study over `levels` refinements and fills a rate table.
///
/// Known-solution studies report L-infinity(L2), L2(L2), L2(H1) and L4(L4)
/// errors; the self-convergence study reports the L2 distance between the
/// optimal controls of consecutive levels, tabulated at the coarser `h`.
pub fn convergence_study(spec: &StudySpec) -> Result<RateTable> {
    if spec.levels < 2 || spec.base_nx == 0 || spec.base_steps == 0 {
        return Err(Error::domain("a study needs at least two levels and nonzero base sizes"));
    }
    match spec.kind {
        StudyKind::Manufactured | StudyKind::Heat => {
            let ms = if spec.kind == StudyKind::Heat {
                ManufacturedSolution::heat()
            } else {
                ManufacturedSolution::allen_cahn(spec.config.epsilon)
            };
            let config = ProblemConfig {
                nonlinear: ms.nonlinear,
                y0: ms.initial_data(),
                ..spec.config.clone()
            };
            let rows = map_levels(spec.parallel, spec.levels, |l| {
                let (mesh, steps) = spec.level(l)?;
                let problem = Problem::uniform(mesh, steps, config.clone())?;
                let source = ms.source_data();
                let y = problem.solve_state(&Forcing::Function(&source))?.y;
                let value = ms.value_fn();
                let gradient = ms.gradient_fn();
                let exact = ExactField {
                    value: &*value,
                    gradient: &*gradient,
                };
                let e = error_norms(problem.space(), &y, Reference::Exact(&exact))?;
                Ok(RateRow {
                    h: problem.mesh().h(),
                    k: problem.grid().max_step(),
                    errors: vec![e.linf_l2, e.l2_l2, e.l2_h1, e.l4_l4],
                })
            })?;
            let mut table = RateTable::new(&["linf_l2", "l2_l2", "l2_h1", "l4_l4"]);
            for r in rows {
                table.push(r)?;
            }
            Ok(table)
        }
        StudyKind::ControlSelfConvergence { tol, max_iter } => {
            let solutions = map_levels(spec.parallel, spec.levels, |l| {
                let (mesh, steps) = spec.level(l)?;
                let problem = Problem::uniform(mesh, steps, spec.config.clone())?;
                let out = optimize(&problem, &problem.zero_control(), tol, max_iter)?;
                Ok((problem, out.u))
            })?;
            let mut table = RateTable::new(&["control_l2"]);
            for pair in solutions.windows(2) {
                let (coarse, uc) = &pair[0];
                let (fine, uf) = &pair[1];
                let d = control_distance(coarse.mesh(), uc, fine.mesh(), uf)?;
                table.push(RateRow {
                    h: coarse.mesh().h(),
                    k: coarse.grid().max_step(),
                    errors: vec![d],
                })?;
            }
            Ok(table)
        }
    }
}

/// Transfers a piecewise constant control to a nested finer mesh and time
/// grid by evaluating it at fine cell centroids and slab midpoints.
pub fn inject_control(coarse_mesh: &Mesh, u: &ControlField, fine_mesh: &Mesh, fine_grid: &crate::discretization::TimeGrid) -> Result<ControlField> {
    let cells: Vec<usize> = (0..fine_mesh.n_triangles())
        .map(|t| {
            coarse_mesh
                .locate(fine_mesh.centroid(t))
                .ok_or_else(|| Error::domain("fine mesh is not contained in the coarse mesh"))
        })
        .collect::<Result<_>>()?;
    let slabs = (0..fine_grid.n_slabs())
        .map(|n| {
            let (a, b) = fine_grid.slab_bounds(n);
            let cn = u
                .grid()
                .slab_index(0.5 * (a + b))
                .ok_or_else(|| Error::domain("fine time grid exceeds the coarse horizon"))?;
            Ok(cells.iter().map(|&c| u.get(cn, c)).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    ControlField::from_slabs(fine_grid, slabs)
}

/// `||u_coarse - u_fine||_{L2(Omega_T)}`, exact for nested discretizations.
pub fn control_distance(coarse_mesh: &Mesh, uc: &ControlField, fine_mesh: &Mesh, uf: &ControlField) -> Result<f64> {
    let injected = inject_control(coarse_mesh, uc, fine_mesh, uf.grid())?;
    let areas: Vec<f64> = (0..fine_mesh.n_triangles()).map(|t| fine_mesh.area(t)).collect();
    Ok(injected.axpy(-1.0, uf).norm(&areas))
}
