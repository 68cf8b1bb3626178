//! Forward solvers: the nonlinear dG(0) state scheme and its first and
//! second linearizations.

use log::debug;

use crate::assembly::{self, FemSpace};
use crate::discretization::{project_data, ControlField, Data, DgField, ProblemConfig, TimeGrid};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::quadrature::QuadratureRule;
use crate::sparse::{cg_solve_from, dot, CsrMatrix};

const MAX_HALVINGS: usize = 8;
const TIME_GAUSS_POINTS: usize = 2;

/// Discretized control problem: mesh operators, time grid, data and the
/// precomputed time integrals of the tracking target.
#[derive(Debug, Clone)]
pub struct Problem {
    space: FemSpace,
    grid: TimeGrid,
    config: ProblemConfig,
    y0: Vec<f64>,
    y_omega: Vec<f64>,
    /// `int_{J_n} (y_d(t), phi_i) dt` per slab.
    yd_loads: Vec<Vec<f64>>,
    /// `int_{J_n} ||y_d(t)||^2 dt` per slab.
    yd_squares: Vec<f64>,
    lumped: CsrMatrix,
}

impl Problem {
    pub fn new(mesh: Mesh, grid: TimeGrid, config: ProblemConfig) -> Result<Self> {
        config.validate()?;
        let t = config.t_final;
        if (grid.t_final() - t).abs() > 1e-12 * t {
            return Err(Error::domain(format!(
                "time grid ends at {} but the configured horizon is {t}",
                grid.t_final()
            )));
        }
        let space = FemSpace::new(mesh);
        let y0 = project_data(&space, &config.y0, 0.0)?;
        let y_omega = project_data(&space, &config.y_omega, t)?;
        config.yd.validate_for(space.mesh())?;

        let rule = QuadratureRule::degree8();
        let mut yd_loads = Vec::with_capacity(grid.n_slabs());
        let mut yd_squares = Vec::with_capacity(grid.n_slabs());
        for n in 0..grid.n_slabs() {
            let mut load = vec![0.0; space.mesh().n_vertices()];
            let mut sq = 0.0;
            for (time, w) in grid.gauss_points(n, TIME_GAUSS_POINTS) {
                match &config.yd {
                    Data::Nodal(v) => {
                        let mv = space.mass().spmv(v)?;
                        sq += w * dot(v, &mv);
                        load.iter_mut().zip(&mv).for_each(|(l, m)| *l += w * m);
                    }
                    data => {
                        let l = data.load(space.mesh(), &rule, time);
                        load.iter_mut().zip(&l).for_each(|(a, b)| *a += w * b);
                        sq += w * assembly::integrate(space.mesh(), &rule, |tr, p, x| {
                            let v = data.eval(space.mesh(), tr, p, x, time);
                            v * v
                        });
                    }
                }
            }
            yd_loads.push(load);
            yd_squares.push(sq);
        }
        let lumped = assembly::lumped_mass(space.mesh());
        Ok(Problem {
            space,
            grid,
            config,
            y0,
            y_omega,
            yd_loads,
            yd_squares,
            lumped,
        })
    }

    /// Uniform grid with `steps` intervals over the configured horizon.
    pub fn uniform(mesh: Mesh, steps: usize, config: ProblemConfig) -> Result<Self> {
        let grid = TimeGrid::uniform(config.t_final, steps)?;
        Problem::new(mesh, grid, config)
    }

    pub fn space(&self) -> &FemSpace {
        &self.space
    }

    pub fn mesh(&self) -> &Mesh {
        self.space.mesh()
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn config(&self) -> &ProblemConfig {
        &self.config
    }

    /// `y_{0,h}`: Dirichlet L2 projection of the initial value.
    pub fn initial_state(&self) -> &[f64] {
        &self.y0
    }

    /// `y_{Omega,h}`: Dirichlet L2 projection of the terminal target.
    pub fn terminal_target(&self) -> &[f64] {
        &self.y_omega
    }

    pub(crate) fn yd_load(&self, n: usize) -> &[f64] {
        &self.yd_loads[n]
    }

    pub(crate) fn yd_square(&self, n: usize) -> f64 {
        self.yd_squares[n]
    }

    pub fn zero_control(&self) -> ControlField {
        ControlField::zeros(&self.grid, self.mesh().n_triangles())
    }

    pub fn zero_field(&self) -> DgField {
        DgField::zeros(&self.grid, self.mesh().n_vertices())
    }

    pub(crate) fn check_field(&self, f: &DgField, what: &str) -> Result<()> {
        if !f.grid().same_as(&self.grid) || f.n_nodes() != self.mesh().n_vertices() {
            return Err(Error::domain(format!("{what} does not live on the problem's mesh and time grid")));
        }
        Ok(())
    }

    fn require_consistent_mass(&self, what: &str) -> Result<()> {
        if self.config.mass_lumping {
            return Err(Error::domain(format!(
                "{what} requires the consistent mass matrix; mass lumping is only supported by the forward solve"
            )));
        }
        Ok(())
    }

    /// `(1/k_n) int_{J_n} (f(t), phi_i) dt`.
    pub(crate) fn forcing_load(&self, forcing: &Forcing<'_>, n: usize) -> Vec<f64> {
        let mesh = self.mesh();
        match forcing {
            Forcing::Zero => vec![0.0; mesh.n_vertices()],
            Forcing::Control(u) => assembly::control_pairing(mesh, u.slab(n)),
            Forcing::Function(data) => {
                let rule = QuadratureRule::degree4();
                let k = self.grid.step(n);
                let mut out = vec![0.0; mesh.n_vertices()];
                for (time, w) in self.grid.gauss_points(n, TIME_GAUSS_POINTS) {
                    let l = data.load(mesh, &rule, time);
                    out.iter_mut().zip(&l).for_each(|(a, b)| *a += w / k * b);
                }
                out
            }
        }
    }

    fn check_forcing(&self, forcing: &Forcing<'_>) -> Result<()> {
        match forcing {
            Forcing::Control(u) => u.check_compatible(&self.grid, self.mesh().n_triangles()),
            Forcing::Function(d) => d.validate_for(self.mesh()),
            Forcing::Zero => Ok(()),
        }
    }

    /// `M/k + A + eps^-2 (J(y) - M)` on interior unknowns: the Jacobian of a
    /// state step, and the operator of every linearized and adjoint step.
    pub(crate) fn step_operator(&self, k: f64, y: &[f64]) -> Result<CsrMatrix> {
        let c = self.config.reaction();
        let (mass, jac) = if self.config.mass_lumping {
            (&self.lumped, assembly::cubic_jacobian_lumped(self.mesh(), y))
        } else {
            (self.space.mass(), assembly::cubic_jacobian(self.mesh(), y))
        };
        let full = if c == 0.0 {
            CsrMatrix::linear_combination(&[(1.0 / k, mass), (1.0, self.space.stiffness())])?
        } else {
            CsrMatrix::linear_combination(&[(1.0 / k - c, mass), (1.0, self.space.stiffness()), (c, &jac)])?
        };
        Ok(self.space.restrict(&full))
    }

    /// Solves an interior system warm-started from `guess` (full nodal), returning a full nodal field.
    fn solve_interior(&self, op: &CsrMatrix, rhs_full: &[f64], guess: &[f64], slab: usize) -> Result<Vec<f64>> {
        let b = self.space.gather(rhs_full);
        let x0 = self.space.gather(guess);
        let out = cg_solve_from(op, &b, x0, &self.config.cg_options()).map_err(|e| e.on_slab(slab))?;
        Ok(self.space.scatter(&out.x))
    }
}

/// Right-hand side of the state or linearized equation.
#[derive(Debug, Clone, Copy)]
pub enum Forcing<'a> {
    Zero,
    /// Piecewise constant control.
    Control(&'a ControlField),
    /// Time-dependent function, integrated per slab with two Gauss points.
    Function(&'a Data),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NewtonReport {
    pub iterations: Vec<usize>,
    pub residuals: Vec<f64>,
    pub damping_activations: Vec<usize>,
}

impl NewtonReport {
    pub fn total_iterations(&self) -> usize {
        self.iterations.iter().sum()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct StateSolution {
    pub y: DgField,
    pub report: NewtonReport,
}

impl Problem {
    /// Mass-weighted dual norm `sqrt(sum r_i^2 / M_ii)` over interior rows.
    fn dual_norm(&self, r_interior: &[f64], mass_diag: &[f64]) -> f64 {
        r_interior
            .iter()
            .zip(mass_diag)
            .map(|(r, m)| r * r / m)
            .sum::<f64>()
            .sqrt()
    }

    fn state_residual(&self, k: f64, y: &[f64], y_prev: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        let c = self.config.reaction();
        let (mass, cubic) = if self.config.mass_lumping {
            (&self.lumped, assembly::cubic_load_lumped(self.mesh(), y))
        } else {
            (self.space.mass(), assembly::cubic_load(self.mesh(), y))
        };
        let diff: Vec<f64> = y.iter().zip(y_prev).map(|(a, p)| a - p).collect();
        let m_diff = mass.spmv(&diff)?;
        let m_y = mass.spmv(y)?;
        let a_y = self.space.stiffness().spmv(y)?;
        let full: Vec<f64> = (0..y.len())
            .map(|i| m_diff[i] / k + a_y[i] + c * (cubic[i] - m_y[i]) - b[i])
            .collect();
        Ok(self.space.gather(&full))
    }

    /// Forward dG(0) sweep with a damped Newton solve per slab.
    pub fn solve_state(&self, forcing: &Forcing<'_>) -> Result<StateSolution> {
        self.check_forcing(forcing)?;
        let mass_diag = if self.config.mass_lumping {
            self.space.gather(&self.lumped.diagonal())
        } else {
            self.space.mass_interior().diagonal()
        };
        let tol = self.config.newton_tol;
        let mut report = NewtonReport::default();
        let mut slabs = Vec::with_capacity(self.grid.n_slabs());
        let mut y_prev = self.y0.clone();
        for n in 0..self.grid.n_slabs() {
            let k = self.grid.step(n);
            let b = self.forcing_load(forcing, n);
            let mut y = y_prev.clone();
            let mut r = self.state_residual(k, &y, &y_prev, &b)?;
            let mut res = self.dual_norm(&r, &mass_diag);
            let mut history = vec![res];
            let mut iterations = 0;
            let mut damped = 0;
            while res > tol {
                if iterations == self.config.newton_max_iter {
                    return Err(Error::Newton { slab: n, history });
                }
                iterations += 1;
                let jac = self.step_operator(k, &y)?;
                let neg_r: Vec<f64> = r.iter().map(|v| -v).collect();
                let delta = cg_solve_from(&jac, &neg_r, vec![0.0; neg_r.len()], &self.config.cg_options())
                    .map_err(|e| e.on_slab(n))?
                    .x;
                let mut step = 1.0;
                let mut halvings = 0;
                let (trial, trial_r, trial_res) = loop {
                    let mut cand = y.clone();
                    for (&g, d) in self.space.interior().iter().zip(&delta) {
                        cand[g] += step * d;
                    }
                    let cr = self.state_residual(k, &cand, &y_prev, &b)?;
                    let cres = self.dual_norm(&cr, &mass_diag);
                    if cres < res || halvings == MAX_HALVINGS {
                        break (cand, cr, cres);
                    }
                    step *= 0.5;
                    halvings += 1;
                };
                if halvings > 0 {
                    damped += 1;
                }
                if !trial_res.is_finite() {
                    history.push(trial_res);
                    return Err(Error::Newton { slab: n, history });
                }
                y = trial;
                r = trial_r;
                res = trial_res;
                history.push(res);
            }
            debug!("slab {n}: {iterations} Newton iterations, residual {res:.3e}");
            report.iterations.push(iterations);
            report.residuals.push(res);
            report.damping_activations.push(damped);
            y_prev = y.clone();
            slabs.push(y);
        }
        Ok(StateSolution {
            y: DgField::from_slabs(&self.grid, slabs)?,
            report,
        })
    }

    /// `z_sigma = G'_sigma(u) v`: the linearized scheme about `y` with zero initial value.
    pub fn solve_linearized(&self, y: &DgField, v: &Forcing<'_>) -> Result<DgField> {
        self.require_consistent_mass("the linearized solve")?;
        self.check_field(y, "state")?;
        self.check_forcing(v)?;
        let mut slabs: Vec<Vec<f64>> = Vec::with_capacity(self.grid.n_slabs());
        let mut z_prev = vec![0.0; self.mesh().n_vertices()];
        for n in 0..self.grid.n_slabs() {
            let k = self.grid.step(n);
            let op = self.step_operator(k, y.slab(n))?;
            let mz = self.space.mass().spmv(&z_prev)?;
            let b = self.forcing_load(v, n);
            let rhs: Vec<f64> = mz.iter().zip(&b).map(|(m, b)| m / k + b).collect();
            let z = self.solve_interior(&op, &rhs, &z_prev, n)?;
            z_prev = z.clone();
            slabs.push(z);
        }
        DgField::from_slabs(&self.grid, slabs)
    }

    /// Second linearization: same operator, right-hand side `-6 eps^-2 (y z^2, phi_i)`.
    pub fn solve_second_linearized(&self, y: &DgField, z: &DgField) -> Result<DgField> {
        self.require_consistent_mass("the second linearized solve")?;
        self.check_field(y, "state")?;
        self.check_field(z, "linearized state")?;
        let c = self.config.reaction();
        let mut slabs: Vec<Vec<f64>> = Vec::with_capacity(self.grid.n_slabs());
        let mut w_prev = vec![0.0; self.mesh().n_vertices()];
        for n in 0..self.grid.n_slabs() {
            let k = self.grid.step(n);
            let op = self.step_operator(k, y.slab(n))?;
            let mw = self.space.mass().spmv(&w_prev)?;
            let q = assembly::weighted_square_load(self.mesh(), y.slab(n), z.slab(n));
            let rhs: Vec<f64> = mw.iter().zip(&q).map(|(m, q)| m / k - 6.0 * c * q).collect();
            let w = self.solve_interior(&op, &rhs, &w_prev, n)?;
            w_prev = w.clone();
            slabs.push(w);
        }
        DgField::from_slabs(&self.grid, slabs)
    }

    /// Backward sweep for the discrete adjoint. Slab `n` of the result is
    /// `phi_sigma(t_n)`, the value attached to the interval `(t_n, t_{n+1}]`.
    pub fn solve_adjoint(&self, y: &DgField) -> Result<DgField> {
        self.require_consistent_mass("the adjoint solve")?;
        self.check_field(y, "state")?;
        let gamma = self.config.gamma;
        let mut next: Vec<f64> = y
            .last()
            .iter()
            .zip(&self.y_omega)
            .map(|(a, b)| gamma * (a - b))
            .collect();
        let mut slabs = vec![Vec::new(); self.grid.n_slabs()];
        for n in (0..self.grid.n_slabs()).rev() {
            let k = self.grid.step(n);
            let op = self.step_operator(k, y.slab(n))?;
            let combo: Vec<f64> = next.iter().zip(y.slab(n)).map(|(p, y)| p / k + y).collect();
            let m_combo = self.space.mass().spmv(&combo)?;
            let rhs: Vec<f64> = m_combo
                .iter()
                .zip(&self.yd_loads[n])
                .map(|(m, d)| m - d / k)
                .collect();
            let phi = self.solve_interior(&op, &rhs, &next, n)?;
            next = phi.clone();
            slabs[n] = phi;
        }
        DgField::from_slabs(&self.grid, slabs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{error_norms, least_squares_slope, ExactField, ManufacturedSolution, Reference};
    use crate::mesh::Rect;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn unit(n: usize) -> Mesh {
        Mesh::uniform(n, n, Rect::UNIT).unwrap()
    }

    fn base_config() -> ProblemConfig {
        ProblemConfig {
            epsilon: 0.5,
            t_final: 0.5,
            newton_tol: 1e-12,
            cg_tol: 1e-13,
            ..ProblemConfig::default()
        }
    }

    fn random_control(p: &Problem, rng: &mut ChaCha8Rng, amp: f64) -> ControlField {
        let mut u = p.zero_control();
        u.map_in_place(|_, _, _| rng.gen_range(-amp..amp));
        u
    }

    fn l2_sup(p: &Problem, f: &DgField) -> f64 {
        f.slabs()
            .iter()
            .map(|s| p.space().mass().quadratic_form(s, s).sqrt())
            .fold(0.0, f64::max)
    }

    #[test]
    fn zero_data_gives_zero_state() {
        let p = Problem::uniform(unit(4), 4, base_config()).unwrap();
        let s = p.solve_state(&Forcing::Zero).unwrap();
        assert_eq!(s.y.max_abs(), 0.0);
        assert!(s.report.iterations.iter().all(|&i| i == 0));
    }

    #[test]
    fn single_dof_matches_bisection() {
        // nx = ny = 2 leaves only the centre vertex free.
        let config = ProblemConfig {
            epsilon: 1.0,
            t_final: 0.3,
            newton_tol: 1e-13,
            cg_tol: 1e-14,
            ..ProblemConfig::default()
        };
        let p = Problem::uniform(unit(2), 1, config).unwrap();
        assert_eq!(p.space().n_interior(), 1);
        let c = p.mesh().interior_vertices()[0];
        let mut u = p.zero_control();
        u.map_in_place(|_, _, _| 4.0);
        let y = p.solve_state(&Forcing::Control(&u)).unwrap().y.slab(0)[c];

        // Scalar oracle: y = s * hat_c, residual in closed form.
        let m = p.space().mass().get(c, c);
        let a = p.space().stiffness().get(c, c);
        let mut hat = vec![0.0; p.mesh().n_vertices()];
        hat[c] = 1.0;
        let q = assembly::cubic_load(p.mesh(), &hat)[c];
        let b = assembly::control_pairing(p.mesh(), u.slab(0))[c];
        let k = 0.3;
        let f = |s: f64| m * s / k + a * s + (q * s * s * s - m * s) - b;
        let (mut lo, mut hi) = (-10.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((y - 0.5 * (lo + hi)).abs() < 1e-10, "{y} vs {}", 0.5 * (lo + hi));
    }

    #[test]
    fn newton_residuals_meet_tolerance_and_boundary_is_clamped() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let config = ProblemConfig {
            y0: Data::function(|_, x| 0.8 * (PI * x[0]).sin() * (PI * x[1]).sin()),
            ..base_config()
        };
        let p = Problem::uniform(unit(6), 5, config).unwrap();
        let u = random_control(&p, &mut rng, 5.0);
        let s = p.solve_state(&Forcing::Control(&u)).unwrap();
        assert!(s.report.max_residual() <= p.config().newton_tol);
        assert!(s.y.satisfies_dirichlet(p.mesh()));
    }

    #[test]
    fn newton_failure_reports_slab() {
        let config = ProblemConfig {
            newton_max_iter: 1,
            newton_tol: 1e-15,
            ..base_config()
        };
        let p = Problem::uniform(unit(4), 3, config).unwrap();
        let u = ControlField::constant(p.grid(), p.mesh().n_triangles(), 50.0);
        match p.solve_state(&Forcing::Control(&u)) {
            Err(Error::Newton { slab, history }) => {
                assert_eq!(slab, 0);
                assert!(history.len() >= 2);
            }
            other => panic!("expected Newton failure, got {other:?}"),
        }
    }

    #[test]
    fn linearized_solve_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = Problem::uniform(unit(4), 4, base_config()).unwrap();
        let u = random_control(&p, &mut rng, 3.0);
        let y = p.solve_state(&Forcing::Control(&u)).unwrap().y;
        let zero = p.solve_linearized(&y, &Forcing::Zero).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
        let v = random_control(&p, &mut rng, 1.0);
        let z = p.solve_linearized(&y, &Forcing::Control(&v)).unwrap();
        let z3 = p.solve_linearized(&y, &Forcing::Control(&v.scaled(3.0))).unwrap();
        assert!(z3.difference(&z.scaled(3.0)).unwrap().max_abs() < 1e-10 * z3.max_abs().max(1.0));
        let w = p.solve_second_linearized(&y, &z).unwrap();
        let w3 = p.solve_second_linearized(&y, &z3).unwrap();
        assert!(w3.difference(&w.scaled(9.0)).unwrap().max_abs() < 1e-9 * w3.max_abs().max(1.0));
        let wz = p.solve_second_linearized(&y, &zero).unwrap();
        assert_eq!(wz.max_abs(), 0.0);
    }

    #[test]
    fn finite_differences_match_linearizations() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let config = ProblemConfig {
            y0: Data::function(|_, x| 0.5 * (PI * x[0]).sin() * (PI * x[1]).sin()),
            ..base_config()
        };
        let p = Problem::uniform(unit(4), 4, config).unwrap();
        let u = random_control(&p, &mut rng, 3.0);
        let v = random_control(&p, &mut rng, 2.0);
        let y = p.solve_state(&Forcing::Control(&u)).unwrap().y;
        let z = p.solve_linearized(&y, &Forcing::Control(&v)).unwrap();
        let w = p.solve_second_linearized(&y, &z).unwrap();

        let steps = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];
        let mut first = Vec::new();
        for &s in &steps {
            let yp = p.solve_state(&Forcing::Control(&u.axpy(s, &v))).unwrap().y;
            let fd = yp.difference(&y).unwrap().scaled(1.0 / s);
            first.push(l2_sup(&p, &fd.difference(&z).unwrap()));
        }
        let logs: Vec<f64> = steps.iter().map(|s| s.ln()).collect();
        let s1 = least_squares_slope(&logs, &first.iter().map(|e| e.ln()).collect::<Vec<_>>());
        assert!((s1 - 1.0).abs() <= 0.15, "first-order slope {s1}: {first:?}");

        // The symmetric second difference is accurate to O(s^2), so the steps
        // must be large enough for truncation to dominate round-off.
        let big = [0.4, 0.2, 0.1, 0.05];
        let mut second = Vec::new();
        for &s in &big {
            let yp = p.solve_state(&Forcing::Control(&u.axpy(s, &v))).unwrap().y;
            let ym = p.solve_state(&Forcing::Control(&u.axpy(-s, &v))).unwrap().y;
            let sd = yp
                .difference(&y.scaled(2.0))
                .unwrap()
                .difference(&ym.scaled(-1.0))
                .unwrap()
                .scaled(1.0 / (s * s));
            second.push(l2_sup(&p, &sd.difference(&w).unwrap()));
        }
        let logs: Vec<f64> = big.iter().map(|s| s.ln()).collect();
        let s2 = least_squares_slope(&logs, &second.iter().map(|e| e.ln()).collect::<Vec<_>>());
        assert!(s2 >= 0.85, "second-difference slope {s2}: {second:?}");
    }

    #[test]
    fn manufactured_solution_converges_quadratically() {
        let ms = ManufacturedSolution::allen_cahn(0.5);
        let mut errs = Vec::new();
        let mut hs = Vec::new();
        for (l, nx) in [4usize, 8, 16].into_iter().enumerate() {
            let config = ProblemConfig {
                y0: ms.initial_data(),
                ..base_config()
            };
            let p = Problem::uniform(unit(nx), 4 * 4usize.pow(l as u32), config).unwrap();
            let src = ms.source_data();
            let y = p.solve_state(&Forcing::Function(&src)).unwrap().y;
            let value = ms.value_fn();
            let grad = ms.gradient_fn();
            let exact = ExactField {
                value: &*value,
                gradient: &*grad,
            };
            let e = error_norms(p.space(), &y, Reference::Exact(&exact)).unwrap();
            errs.push(e.l2_l2);
            hs.push(p.mesh().h());
        }
        let slope = least_squares_slope(
            &hs.iter().map(|h| h.ln()).collect::<Vec<_>>(),
            &errs.iter().map(|e| e.ln()).collect::<Vec<_>>(),
        );
        assert!(slope > 1.8, "slope {slope}, errors {errs:?}");
    }

    #[test]
    fn energy_decreases_without_control() {
        let eps = 0.25;
        let config = ProblemConfig {
            epsilon: eps,
            t_final: 16.0 * eps * eps / 2.0,
            y0: Data::function(|_, x| 0.9 * (PI * x[0]).sin() * (PI * x[1]).sin()),
            ..base_config()
        };
        let p = Problem::uniform(unit(8), 16, config).unwrap();
        let y = p.solve_state(&Forcing::Zero).unwrap().y;
        let e0 = crate::analysis::ginzburg_landau_energy(p.space(), eps, p.initial_state());
        let mut prev = e0;
        for n in 0..y.n_slabs() {
            let e = crate::analysis::ginzburg_landau_energy(p.space(), eps, y.slab(n));
            assert!(e <= prev + 1e-12, "slab {n}: {e} > {prev}");
            prev = e;
        }
    }

    #[test]
    fn stability_quantity_is_bounded() {
        let eps = 0.5;
        let config = ProblemConfig {
            y0: Data::function(|_, x| (PI * x[0]).sin() * (PI * x[1]).sin()),
            ..base_config()
        };
        let p = Problem::uniform(unit(8), 8, config).unwrap();
        let y = p.solve_state(&Forcing::Zero).unwrap().y;
        let mut sup: f64 = 0.0;
        let mut grad = 0.0;
        for n in 0..y.n_slabs() {
            let s = y.slab(n);
            sup = sup.max(p.space().mass().quadratic_form(s, s));
            grad += p.grid().step(n) * p.space().stiffness().quadratic_form(s, s);
        }
        let q = sup + 2.0 * eps * eps * grad;
        let y0 = p.initial_state();
        let q0 = p.space().mass().quadratic_form(y0, y0);
        assert!(q.is_finite() && q <= 2.0 * q0 + 1.0, "{q} vs {q0}");
    }

    #[test]
    fn heat_mode_matches_exact_decay() {
        let config = ProblemConfig {
            nonlinear: false,
            y0: Data::function(|_, x| (PI * x[0]).sin() * (PI * x[1]).sin()),
            t_final: 0.1,
            ..base_config()
        };
        let p = Problem::uniform(unit(16), 64, config).unwrap();
        let y = p.solve_state(&Forcing::Zero).unwrap().y;
        let value = |t: f64, x: crate::mesh::Point| (-2.0 * PI * PI * t).exp() * (PI * x[0]).sin() * (PI * x[1]).sin();
        let grad = |t: f64, x: crate::mesh::Point| {
            let d = (-2.0 * PI * PI * t).exp() * PI;
            [d * (PI * x[0]).cos() * (PI * x[1]).sin(), d * (PI * x[0]).sin() * (PI * x[1]).cos()]
        };
        let exact = ExactField {
            value: &value,
            gradient: &grad,
        };
        let e = error_norms(p.space(), &y, Reference::Exact(&exact)).unwrap();
        assert!(e.linf_l2 < 0.02, "{e:?}");
    }

    #[test]
    fn lumped_mass_rejected_for_derivatives() {
        let config = ProblemConfig {
            mass_lumping: true,
            ..base_config()
        };
        let p = Problem::uniform(unit(4), 2, config).unwrap();
        let y = p.solve_state(&Forcing::Zero).unwrap().y;
        assert!(matches!(p.solve_adjoint(&y), Err(Error::Domain(_))));
        assert!(matches!(p.solve_linearized(&y, &Forcing::Zero), Err(Error::Domain(_))));
    }

    #[test]
    fn mismatched_grid_rejected() {
        let config = base_config();
        assert!(Problem::new(unit(2), TimeGrid::uniform(1.0, 2).unwrap(), config).is_err());
    }
}
