//! Time grids, the dG(0)-in-time/P1-in-space field type, piecewise constant
//! controls, problem data and the projections between them.

use std::fmt;
use std::sync::Arc;

use crate::assembly::{self, FemSpace};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::quadrature::{gauss_legendre_unit, QuadratureRule};
use crate::sparse::{cg_solve, CgOptions};

const PROJECTION_CG: CgOptions = CgOptions {
    tol: 1e-13,
    max_iter: 20_000,
};

/// Partition `0 = t_0 < t_1 < ... < t_N = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<f64>,
}

impl TimeGrid {
    pub fn uniform(t_final: f64, n: usize) -> Result<Self> {
        if n == 0 || !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::domain(format!("uniform time grid needs T > 0 and N >= 1 (got T={t_final}, N={n})")));
        }
        let mut nodes: Vec<f64> = (0..=n).map(|i| t_final * i as f64 / n as f64).collect();
        nodes[n] = t_final;
        Ok(TimeGrid { nodes })
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes[0] != 0.0 {
            return Err(Error::domain("time grid must start at 0 and contain at least one interval"));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) || !nodes.iter().all(|t| t.is_finite()) {
            return Err(Error::domain("time grid nodes must be finite and strictly increasing"));
        }
        Ok(TimeGrid { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of intervals `N`.
    pub fn n_slabs(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn t_final(&self) -> f64 {
        *self.nodes.last().expect("non-empty")
    }

    /// `k_n` for the 0-based slab index `n` (interval `(t_n, t_{n+1}]`).
    pub fn step(&self, n: usize) -> f64 {
        self.nodes[n + 1] - self.nodes[n]
    }

    pub fn steps(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// `k = max k_n`.
    pub fn max_step(&self) -> f64 {
        self.steps().into_iter().fold(0.0, f64::max)
    }

    /// Smallest `C_0` with `k <= C_0 k_n` for every `n` (1 for uniform grids).
    pub fn quasi_uniformity(&self) -> f64 {
        let steps = self.steps();
        let min = steps.iter().copied().fold(f64::INFINITY, f64::min);
        self.max_step() / min
    }

    pub fn slab_bounds(&self, n: usize) -> (f64, f64) {
        (self.nodes[n], self.nodes[n + 1])
    }

    /// 0-based slab holding time `t` under left continuity: `t` in
    /// `(t_{n-1}, t_n]` maps to slab `n-1`; `t = 0` maps to the first slab.
    pub fn slab_index(&self, t: f64) -> Option<usize> {
        if t < 0.0 || t > self.t_final() {
            return None;
        }
        if t == 0.0 {
            return Some(0);
        }
        // First node >= t.
        let pos = self.nodes.partition_point(|&s| s < t);
        Some(pos - 1)
    }

    /// Time points and weights (summing to `k_n`) of an `n`-point Gauss rule on slab `slab`.
    pub fn gauss_points(&self, slab: usize, points: usize) -> Vec<(f64, f64)> {
        let (a, b) = self.slab_bounds(slab);
        gauss_legendre_unit(points)
            .into_iter()
            .map(|(s, w)| (a + s * (b - a), w * (b - a)))
            .collect()
    }

    /// True when both grids describe the same partition.
    pub fn same_as(&self, other: &TimeGrid) -> bool {
        self.nodes == other.nodes
    }
}

/// Field that is constant in time on every slab and P1 in space.
///
/// Slab `n` (0-based) holds the nodal values on `(t_n, t_{n+1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DgField {
    grid: TimeGrid,
    slabs: Vec<Vec<f64>>,
}

impl DgField {
    pub fn zeros(grid: &TimeGrid, n_nodes: usize) -> Self {
        DgField {
            grid: grid.clone(),
            slabs: vec![vec![0.0; n_nodes]; grid.n_slabs()],
        }
    }

    pub fn from_slabs(grid: &TimeGrid, slabs: Vec<Vec<f64>>) -> Result<Self> {
        if slabs.len() != grid.n_slabs() {
            return Err(Error::domain(format!(
                "field has {} slabs but the grid has {} intervals",
                slabs.len(),
                grid.n_slabs()
            )));
        }
        if let Some(first) = slabs.first() {
            if slabs.iter().any(|s| s.len() != first.len()) {
                return Err(Error::domain("slabs of a field must have equal length"));
            }
        }
        Ok(DgField {
            grid: grid.clone(),
            slabs,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_slabs(&self) -> usize {
        self.slabs.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.slabs.first().map_or(0, Vec::len)
    }

    pub fn slab(&self, n: usize) -> &[f64] {
        &self.slabs[n]
    }

    pub fn slabs(&self) -> &[Vec<f64>] {
        &self.slabs
    }

    pub fn last(&self) -> &[f64] {
        self.slabs.last().expect("at least one slab")
    }

    /// Left-continuous evaluation of the nodal values at time `t`.
    pub fn at_time(&self, t: f64) -> Option<&[f64]> {
        self.grid.slab_index(t).map(|n| self.slab(n))
    }

    pub fn scaled(&self, alpha: f64) -> DgField {
        DgField {
            grid: self.grid.clone(),
            slabs: self
                .slabs
                .iter()
                .map(|s| s.iter().map(|v| alpha * v).collect())
                .collect(),
        }
    }

    /// `self - other`.
    pub fn difference(&self, other: &DgField) -> Result<DgField> {
        if !self.grid.same_as(&other.grid) || self.n_nodes() != other.n_nodes() {
            return Err(Error::domain("fields live on different grids"));
        }
        Ok(DgField {
            grid: self.grid.clone(),
            slabs: self
                .slabs
                .iter()
                .zip(&other.slabs)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.slabs
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// True when every boundary value is exactly zero.
    pub fn satisfies_dirichlet(&self, mesh: &Mesh) -> bool {
        self.slabs.iter().all(|s| {
            s.iter()
                .zip(mesh.boundary_mask())
                .all(|(v, &b)| !b || *v == 0.0)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower <= upper) {
            return Err(Error::domain(format!("control bounds need u_a <= u_b (got {lower}, {upper})")));
        }
        Ok(Bounds { lower, upper })
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.max(self.lower).min(self.upper)
    }
}

/// Piecewise constant control: one value per (slab, triangle).
#[derive(Debug, Clone, PartialEq)]
pub struct ControlField {
    grid: TimeGrid,
    slabs: Vec<Vec<f64>>,
    admissible: Option<Bounds>,
}

impl ControlField {
    pub fn constant(grid: &TimeGrid, n_cells: usize, value: f64) -> Self {
        ControlField {
            grid: grid.clone(),
            slabs: vec![vec![value; n_cells]; grid.n_slabs()],
            admissible: None,
        }
    }

    pub fn zeros(grid: &TimeGrid, n_cells: usize) -> Self {
        Self::constant(grid, n_cells, 0.0)
    }

    pub fn from_slabs(grid: &TimeGrid, slabs: Vec<Vec<f64>>) -> Result<Self> {
        if slabs.len() != grid.n_slabs() {
            return Err(Error::domain(format!(
                "control has {} slabs but the grid has {} intervals",
                slabs.len(),
                grid.n_slabs()
            )));
        }
        if let Some(first) = slabs.first() {
            if slabs.iter().any(|s| s.len() != first.len()) {
                return Err(Error::domain("control slabs must have equal length"));
            }
        }
        Ok(ControlField {
            grid: grid.clone(),
            slabs,
            admissible: None,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_slabs(&self) -> usize {
        self.slabs.len()
    }

    pub fn n_cells(&self) -> usize {
        self.slabs.first().map_or(0, Vec::len)
    }

    pub fn slab(&self, n: usize) -> &[f64] {
        &self.slabs[n]
    }

    pub fn slabs(&self) -> &[Vec<f64>] {
        &self.slabs
    }

    pub fn get(&self, n: usize, cell: usize) -> f64 {
        self.slabs[n][cell]
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.slabs.iter().flatten().copied()
    }

    /// Bounds the field is flagged admissible for, if any.
    pub fn admissible_bounds(&self) -> Option<Bounds> {
        self.admissible
    }

    pub fn is_within(&self, bounds: Bounds) -> bool {
        self.values().all(|v| bounds.contains(v))
    }

    /// Flags the field admissible when every entry lies in `bounds`.
    pub fn flag_admissible(&mut self, bounds: Bounds) -> bool {
        self.admissible = self.is_within(bounds).then_some(bounds);
        self.admissible.is_some()
    }

    fn revalidate(&mut self) {
        if let Some(b) = self.admissible {
            if !self.is_within(b) {
                self.admissible = None;
            }
        }
    }

    pub fn set(&mut self, n: usize, cell: usize, value: f64) {
        self.slabs[n][cell] = value;
        self.revalidate();
    }

    pub fn map_in_place(&mut self, mut f: impl FnMut(usize, usize, f64) -> f64) {
        for (n, slab) in self.slabs.iter_mut().enumerate() {
            for (c, v) in slab.iter_mut().enumerate() {
                *v = f(n, c, *v);
            }
        }
        self.revalidate();
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &ControlField) -> ControlField {
        let mut out = self.clone();
        out.map_in_place(|n, c, v| v + alpha * other.slabs[n][c]);
        out
    }

    pub fn scaled(&self, alpha: f64) -> ControlField {
        let mut out = self.clone();
        out.map_in_place(|_, _, v| alpha * v);
        out
    }

    /// `sum_n sum_tau k_n |tau| a b`: the L2(Omega_T) inner product.
    pub fn inner(&self, other: &ControlField, areas: &[f64]) -> f64 {
        (0..self.n_slabs())
            .map(|n| {
                let k = self.grid.step(n);
                k * self.slabs[n]
                    .iter()
                    .zip(&other.slabs[n])
                    .zip(areas)
                    .map(|((a, b), w)| w * a * b)
                    .sum::<f64>()
            })
            .sum()
    }

    pub fn norm(&self, areas: &[f64]) -> f64 {
        self.inner(self, areas).sqrt()
    }

    pub fn check_compatible(&self, grid: &TimeGrid, n_cells: usize) -> Result<()> {
        if !self.grid.same_as(grid) || self.n_cells() != n_cells {
            return Err(Error::domain("control field does not match the mesh/time grid"));
        }
        Ok(())
    }
}

/// Given data `y_0`, `y_d`, `y_Omega` or a right-hand side: a closed-form
/// evaluator of `(t, x)` or a nodal grid read as its P1 interpolant.
#[derive(Clone)]
pub enum Data {
    Function(Arc<dyn Fn(f64, Point) -> f64 + Send + Sync>),
    Nodal(Vec<f64>),
}

impl Data {
    pub fn function(f: impl Fn(f64, Point) -> f64 + Send + Sync + 'static) -> Self {
        Data::Function(Arc::new(f))
    }

    pub fn zero() -> Self {
        Data::function(|_, _| 0.0)
    }

    pub fn constant(c: f64) -> Self {
        Data::function(move |_, _| c)
    }

    /// Value at a quadrature point of triangle `t` (barycentric `bary`, Cartesian `x`).
    pub fn eval(&self, mesh: &Mesh, t: usize, bary: [f64; 3], x: Point, time: f64) -> f64 {
        match self {
            Data::Function(f) => f(time, x),
            Data::Nodal(v) => assembly::eval_nodal(mesh, v, t, bary),
        }
    }

    pub fn validate_for(&self, mesh: &Mesh) -> Result<()> {
        match self {
            Data::Nodal(v) if v.len() != mesh.n_vertices() => Err(Error::domain(format!(
                "nodal data has {} values, mesh has {} vertices",
                v.len(),
                mesh.n_vertices()
            ))),
            _ => Ok(()),
        }
    }

    /// `(self(t), phi_i)` with the given rule.
    pub fn load(&self, mesh: &Mesh, rule: &QuadratureRule, time: f64) -> Vec<f64> {
        assembly::load_with_rule(mesh, rule, |t, p, x| self.eval(mesh, t, p, x, time))
    }
}

impl fmt::Debug for Data {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Data::Function(_) => f.write_str("Data::Function(..)"),
            Data::Nodal(v) => write!(f, "Data::Nodal({} values)", v.len()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProblemConfig {
    /// Interface width.
    pub epsilon: f64,
    /// Tikhonov weight.
    pub mu: f64,
    /// Terminal tracking weight.
    pub gamma: f64,
    pub bounds: Bounds,
    pub t_final: f64,
    pub y0: Data,
    pub yd: Data,
    pub y_omega: Data,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    /// Include the `eps^-2 (y^3 - y)` reaction; off gives the heat equation.
    pub nonlinear: bool,
    /// Experimental row-sum lumping in the state solver.
    pub mass_lumping: bool,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            epsilon: 0.5,
            mu: 1e-2,
            gamma: 0.0,
            bounds: Bounds {
                lower: -1.0,
                upper: 1.0,
            },
            t_final: 0.5,
            y0: Data::zero(),
            yd: Data::zero(),
            y_omega: Data::zero(),
            newton_tol: 1e-10,
            newton_max_iter: 30,
            cg_tol: 1e-10,
            cg_max_iter: 10_000,
            nonlinear: true,
            mass_lumping: false,
        }
    }
}

impl ProblemConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::domain(msg)) };
        check(self.epsilon > 0.0 && self.epsilon.is_finite(), "epsilon must be positive")?;
        check(self.mu > 0.0 && self.mu.is_finite(), "mu must be positive")?;
        check(self.gamma >= 0.0 && self.gamma.is_finite(), "gamma must be non-negative")?;
        check(self.bounds.lower <= self.bounds.upper, "control bounds need u_a <= u_b")?;
        check(self.t_final > 0.0 && self.t_final.is_finite(), "T must be positive")?;
        check(self.newton_tol > 0.0, "newton_tol must be positive")?;
        check(self.cg_tol > 0.0, "cg_tol must be positive")?;
        check(self.newton_max_iter > 0 && self.cg_max_iter > 0, "iteration limits must be positive")
    }

    /// Coefficient of the reaction term, zero when the nonlinearity is switched off.
    pub fn reaction(&self) -> f64 {
        if self.nonlinear {
            self.epsilon.powi(-2)
        } else {
            0.0
        }
    }

    pub fn cg_options(&self) -> CgOptions {
        CgOptions {
            tol: self.cg_tol,
            max_iter: self.cg_max_iter,
        }
    }
}

fn solve_mass(space: &FemSpace, rhs: &[f64], interior_only: bool) -> Result<Vec<f64>> {
    if interior_only {
        let b = space.gather(rhs);
        let x = cg_solve(space.mass_interior(), &b, &PROJECTION_CG)?.x;
        Ok(space.scatter(&x))
    } else {
        Ok(cg_solve(space.mass(), rhs, &PROJECTION_CG)?.x)
    }
}

fn data_load(space: &FemSpace, data: &Data, time: f64) -> Result<Vec<f64>> {
    data.validate_for(space.mesh())?;
    Ok(match data {
        Data::Nodal(v) => space.mass().spmv(v)?,
        Data::Function(_) => data.load(space.mesh(), &QuadratureRule::degree4(), time),
    })
}

/// L2 projection onto the full P1 space: `(P_h f, w) = (f, w)` for all P1 `w`.
pub fn l2_project_space(space: &FemSpace, f: impl Fn(Point) -> f64) -> Result<Vec<f64>> {
    let rhs = assembly::load_with_rule(space.mesh(), &QuadratureRule::degree4(), |_, _, x| f(x));
    solve_mass(space, &rhs, false)
}

/// L2 projection onto P1 functions vanishing on the boundary.
pub fn l2_project_dirichlet(space: &FemSpace, f: impl Fn(Point) -> f64) -> Result<Vec<f64>> {
    let rhs = assembly::load_with_rule(space.mesh(), &QuadratureRule::degree4(), |_, _, x| f(x));
    solve_mass(space, &rhs, true)
}

/// Dirichlet L2 projection of `data(time)`.
pub fn project_data(space: &FemSpace, data: &Data, time: f64) -> Result<Vec<f64>> {
    let rhs = data_load(space, data, time)?;
    solve_mass(space, &rhs, true)
}

/// Cell/interval means `u_{n,tau} = (1/(k_n |tau|)) int_{J_n} int_tau f`.
pub fn interval_average_control(
    grid: &TimeGrid,
    mesh: &Mesh,
    f: impl Fn(f64, Point) -> f64,
) -> ControlField {
    let rule = QuadratureRule::degree4();
    let slabs = (0..grid.n_slabs())
        .map(|n| {
            let k = grid.step(n);
            let times = grid.gauss_points(n, 3);
            (0..mesh.n_triangles())
                .map(|t| {
                    let mut s = 0.0;
                    for &(time, wt) in &times {
                        for (p, w) in rule.iter() {
                            s += wt * w * f(time, mesh.map_point(t, p));
                        }
                    }
                    s / k
                })
                .collect()
        })
        .collect();
    ControlField::from_slabs(grid, slabs).expect("shape matches grid")
}

/// `(P_sigma y)_n = P_h y(t_n)`: right-endpoint sampling.
pub fn p_sigma_project(space: &FemSpace, grid: &TimeGrid, y: impl Fn(f64, Point) -> f64) -> Result<DgField> {
    let slabs = (0..grid.n_slabs())
        .map(|n| {
            let t = grid.nodes()[n + 1];
            l2_project_dirichlet(space, |x| y(t, x))
        })
        .collect::<Result<Vec<_>>>()?;
    DgField::from_slabs(grid, slabs)
}

/// `(R_sigma y)_n = P_h y(t_{n-1})`: left-endpoint sampling for backward problems.
pub fn r_sigma_project(space: &FemSpace, grid: &TimeGrid, y: impl Fn(f64, Point) -> f64) -> Result<DgField> {
    let slabs = (0..grid.n_slabs())
        .map(|n| {
            let t = grid.nodes()[n];
            l2_project_dirichlet(space, |x| y(t, x))
        })
        .collect::<Result<Vec<_>>>()?;
    DgField::from_slabs(grid, slabs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Rect;
    use std::f64::consts::PI;

    fn space(n: usize) -> FemSpace {
        FemSpace::new(Mesh::uniform(n, n, Rect::UNIT).unwrap())
    }

    #[test]
    fn uniform_grid_properties() {
        let g = TimeGrid::uniform(0.5, 4).unwrap();
        assert_eq!(g.n_slabs(), 4);
        assert_eq!(g.t_final(), 0.5);
        assert!((g.max_step() - 0.125).abs() < 1e-15);
        assert!((g.quasi_uniformity() - 1.0).abs() < 1e-12);
        assert!(TimeGrid::uniform(0.0, 3).is_err());
        assert!(TimeGrid::from_nodes(vec![0.0, 0.2, 0.2, 1.0]).is_err());
    }

    #[test]
    fn nonuniform_grid_quasi_uniformity() {
        let g = TimeGrid::from_nodes(vec![0.0, 0.1, 0.4, 0.5]).unwrap();
        assert!((g.quasi_uniformity() - 3.0).abs() < 1e-12);
        for (n, &k) in g.steps().iter().enumerate() {
            assert!(g.max_step() <= g.quasi_uniformity() * k + 1e-15, "slab {n}");
        }
    }

    #[test]
    fn left_continuous_evaluation() {
        let g = TimeGrid::uniform(1.0, 4).unwrap();
        let f = DgField::from_slabs(&g, (0..4).map(|n| vec![n as f64]).collect()).unwrap();
        assert_eq!(f.at_time(0.25).unwrap(), &[0.0]);
        assert_eq!(f.at_time(0.26).unwrap(), &[1.0]);
        assert_eq!(f.at_time(0.5).unwrap(), &[1.0]);
        assert_eq!(f.at_time(1.0).unwrap(), &[3.0]);
        assert_eq!(f.at_time(0.0).unwrap(), &[0.0]);
        assert!(f.at_time(1.5).is_none());
    }

    #[test]
    fn dg_field_shape_checks() {
        let g = TimeGrid::uniform(1.0, 3).unwrap();
        assert!(DgField::from_slabs(&g, vec![vec![0.0; 2]; 2]).is_err());
        assert!(DgField::from_slabs(&g, vec![vec![0.0; 2], vec![0.0; 3], vec![0.0; 2]]).is_err());
    }

    #[test]
    fn admissibility_is_revalidated() {
        let g = TimeGrid::uniform(1.0, 2).unwrap();
        let b = Bounds::new(-1.0, 1.0).unwrap();
        let mut u = ControlField::constant(&g, 3, 0.5);
        assert!(u.flag_admissible(b));
        u.set(1, 2, 0.9);
        assert_eq!(u.admissible_bounds(), Some(b));
        u.set(0, 0, 1.5);
        assert_eq!(u.admissible_bounds(), None);
        assert!(Bounds::new(1.0, -1.0).is_err());
    }

    #[test]
    fn projection_reproduces_p1_functions() {
        let s = space(4);
        let f = |p: Point| 1.0 + 2.0 * p[0] - 0.5 * p[1];
        let c = l2_project_space(&s, f).unwrap();
        for (v, p) in c.iter().zip(s.mesh().vertices()) {
            assert!((v - f(*p)).abs() < 1e-10);
        }
        let ones = l2_project_space(&s, |_| 1.0).unwrap();
        assert!(ones.iter().all(|v| (v - 1.0).abs() < 1e-10));
    }

    #[test]
    fn projection_is_idempotent() {
        let s = space(5);
        let c = l2_project_space(&s, |p| (3.0 * p[0]).sin() * p[1]).unwrap();
        let again = solve_mass(&s, &s.mass().spmv(&c).unwrap(), false).unwrap();
        for (a, b) in c.iter().zip(&again) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn interval_average_examples() {
        let g = TimeGrid::uniform(1.0, 4).unwrap();
        let m = Mesh::uniform(2, 2, Rect::UNIT).unwrap();
        let c = interval_average_control(&g, &m, |_, _| 2.5);
        assert!(c.values().all(|v| (v - 2.5).abs() < 1e-14));
        let t = interval_average_control(&g, &m, |t, _| t);
        for n in 0..4 {
            let (a, b) = g.slab_bounds(n);
            assert!(t.slab(n).iter().all(|v| (v - 0.5 * (a + b)).abs() < 1e-14));
        }
        let x = interval_average_control(&g, &m, |_, p| p[0]);
        for cell in 0..m.n_triangles() {
            assert!((x.get(2, cell) - m.centroid(cell)[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn sigma_projections_sample_endpoints() {
        let s = space(4);
        let g = TimeGrid::uniform(1.0, 3).unwrap();
        let shape = |p: Point| (PI * p[0]).sin() * (PI * p[1]).sin();
        let base = l2_project_dirichlet(&s, shape).unwrap();
        let p = p_sigma_project(&s, &g, |t, x| t * shape(x)).unwrap();
        let r = r_sigma_project(&s, &g, |t, x| t * shape(x)).unwrap();
        for n in 0..3 {
            let (a, b) = g.slab_bounds(n);
            for i in 0..base.len() {
                assert!((p.slab(n)[i] - b * base[i]).abs() < 1e-12);
                assert!((r.slab(n)[i] - a * base[i]).abs() < 1e-12);
            }
        }
        let pc = p_sigma_project(&s, &g, |_, x| shape(x)).unwrap();
        let rc = r_sigma_project(&s, &g, |_, x| shape(x)).unwrap();
        assert_eq!(pc.slabs(), rc.slabs());
        assert!(p.satisfies_dirichlet(s.mesh()));
    }
}
