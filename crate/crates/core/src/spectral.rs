//! Principal eigenvalue of the linearized Allen-Cahn operator about a frozen state.

use crate::assembly::{self, FemSpace};
use crate::discretization::{DgField, ProblemConfig};
use crate::error::{Error, Result};
use crate::sparse::{cg_solve_from, dot, norm2, CgOptions, CsrMatrix};

const MAX_INVERSE_ITERATIONS: usize = 2000;

#[derive(Debug, Clone)]
pub struct EigenPair {
    /// Smallest eigenvalue of the pencil (`-lambda_h`).
    pub value: f64,
    /// Interior coefficients, normalized so that `v^T M v = 1`.
    pub vector: Vec<f64>,
    /// `||K v - rho M v|| / ||K v||`.
    pub residual: f64,
    pub iterations: usize,
}

/// Smallest eigenpair of `K v = rho M v` by inverse iteration on
/// `K + shift M`, which must be positive definite.
pub fn smallest_pencil_eigenpair(
    k: &CsrMatrix,
    m: &CsrMatrix,
    shift: f64,
    tol: f64,
    start: Option<&[f64]>,
) -> Result<EigenPair> {
    let n = k.n();
    if m.n() != n {
        return Err(Error::domain("pencil matrices differ in size"));
    }
    if n == 0 {
        return Err(Error::domain("eigenproblem has no unknowns"));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("eigen tolerance must be positive"));
    }
    let shifted = CsrMatrix::linear_combination(&[(1.0, k), (shift, m)])?;
    let inner = CgOptions {
        tol: (tol * 1e-3).max(1e-14),
        max_iter: 20 * n + 100,
    };
    let m_normalize = |v: &mut Vec<f64>| -> Result<()> {
        let s = m.quadratic_form(v, v).sqrt();
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Eigen {
                iterations: 0,
                residual: f64::NAN,
            });
        }
        v.iter_mut().for_each(|x| *x /= s);
        Ok(())
    };
    let mut v: Vec<f64> = match start {
        Some(s) if s.len() == n && norm2(s) > 0.0 => s.to_vec(),
        Some(s) if s.len() != n => return Err(Error::domain("start vector has the wrong length")),
        _ => vec![1.0; n],
    };
    m_normalize(&mut v)?;
    let mut residual = f64::INFINITY;
    for it in 0..=MAX_INVERSE_ITERATIONS {
        let kv = k.spmv(&v)?;
        let mv = m.spmv(&v)?;
        let rho = dot(&v, &kv);
        let r: Vec<f64> = kv.iter().zip(&mv).map(|(a, b)| a - rho * b).collect();
        residual = norm2(&r) / norm2(&kv).max(f64::MIN_POSITIVE);
        if residual <= tol {
            return Ok(EigenPair {
                value: rho,
                vector: v,
                residual,
                iterations: it,
            });
        }
        if it == MAX_INVERSE_ITERATIONS {
            break;
        }
        let mut w = cg_solve_from(&shifted, &mv, v.clone(), &inner)
            .map_err(|_| Error::Eigen {
                iterations: it,
                residual,
            })?
            .x;
        m_normalize(&mut w)?;
        v = w;
    }
    Err(Error::Eigen {
        iterations: MAX_INVERSE_ITERATIONS,
        residual,
    })
}

/// `K = A + eps^-2 (J(y) - M)` on interior unknowns.
pub fn linearized_operator(space: &FemSpace, config: &ProblemConfig, y: &[f64]) -> Result<CsrMatrix> {
    space.check_nodal(y, "frozen state")?;
    let c = config.reaction();
    let jac = assembly::cubic_jacobian(space.mesh(), y);
    let full = CsrMatrix::linear_combination(&[(1.0, space.stiffness()), (c, &jac), (-c, space.mass())])?;
    Ok(space.restrict(&full))
}

/// `-lambda_h` for the frozen state `y` (full nodal values).
pub fn principal_eigenvalue(space: &FemSpace, config: &ProblemConfig, y: &[f64], tol: f64) -> Result<EigenPair> {
    principal_eigenvalue_from(space, config, y, tol, None)
}

fn principal_eigenvalue_from(
    space: &FemSpace,
    config: &ProblemConfig,
    y: &[f64],
    tol: f64,
    start: Option<&[f64]>,
) -> Result<EigenPair> {
    let k = linearized_operator(space, config, y)?;
    // F' >= -1 bounds K below by -eps^-2 M, so this shift makes K + shift M definite.
    let shift = config.reaction() + 1.0;
    smallest_pencil_eigenpair(&k, space.mass_interior(), shift, tol, start)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSeries {
    /// Right endpoint of each slab.
    pub times: Vec<f64>,
    /// `lambda_n = -(smallest eigenvalue)` per slab.
    pub lambda: Vec<f64>,
    pub rayleigh: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// Principal eigenvalue per slab of `y`, warm-starting each solve from the
/// previous eigenvector.
pub fn spectral_series(space: &FemSpace, config: &ProblemConfig, y: &DgField, tol: f64, warm: bool) -> Result<SpectralSeries> {
    let grid = y.grid();
    let mut out = SpectralSeries {
        times: Vec::new(),
        lambda: Vec::new(),
        rayleigh: Vec::new(),
        residuals: Vec::new(),
    };
    let mut previous: Option<Vec<f64>> = None;
    for n in 0..y.n_slabs() {
        let start = if warm { previous.as_deref() } else { None };
        let pair = principal_eigenvalue_from(space, config, y.slab(n), tol, start)?;
        out.times.push(grid.nodes()[n + 1]);
        out.lambda.push(-pair.value);
        out.rayleigh.push(pair.value);
        out.residuals.push(pair.residual);
        previous = Some(pair.vector);
    }
    Ok(out)
}
