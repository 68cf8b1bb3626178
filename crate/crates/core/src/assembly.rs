//! P1 finite element assembly of the linear, cubic and control forms.

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::quadrature::QuadratureRule;
use crate::sparse::CsrMatrix;

fn scatter_local<F>(mesh: &Mesh, mut local: F) -> CsrMatrix
where
    F: FnMut(usize) -> [[f64; 3]; 3],
{
    let mut triplets = Vec::with_capacity(9 * mesh.n_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let k = local(t);
        for a in 0..3 {
            for b in 0..3 {
                triplets.push((tri[a], tri[b], k[a][b]));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.n_vertices(), &triplets, true).expect("mesh indices in range")
}

/// Consistent mass matrix `M_ij = (phi_i, phi_j)`.
pub fn mass(mesh: &Mesh) -> CsrMatrix {
    scatter_local(mesh, |t| {
        let a = mesh.area(t) / 12.0;
        [[2.0 * a, a, a], [a, 2.0 * a, a], [a, a, 2.0 * a]]
    })
}

/// Row-sum lumped mass; experimental, not used by the default solvers.
pub fn lumped_mass(mesh: &Mesh) -> CsrMatrix {
    let mut diag = vec![0.0; mesh.n_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let a = mesh.area(t) / 3.0;
        for &v in tri {
            diag[v] += a;
        }
    }
    CsrMatrix::from_diagonal(&diag)
}

/// Stiffness matrix `A_ij = (grad phi_i, grad phi_j)`.
pub fn stiffness(mesh: &Mesh) -> CsrMatrix {
    scatter_local(mesh, |t| {
        let g = mesh.hat_gradients(t);
        let area = mesh.area(t);
        let mut k = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                k[a][b] = area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
            }
        }
        k
    })
}

fn local_values(y: &[f64], tri: &[usize; 3]) -> [f64; 3] {
    [y[tri[0]], y[tri[1]], y[tri[2]]]
}

fn eval_p1(vals: [f64; 3], bary: [f64; 3]) -> f64 {
    vals[0] * bary[0] + vals[1] * bary[1] + vals[2] * bary[2]
}

fn check_len(mesh: &Mesh, y: &[f64]) {
    assert_eq!(y.len(), mesh.n_vertices(), "nodal array length must equal the vertex count");
}

/// `N(y)_i = (y^3, phi_i)`, exact for P1 `y`.
pub fn cubic_load(mesh: &Mesh, y: &[f64]) -> Vec<f64> {
    check_len(mesh, y);
    let rule = QuadratureRule::degree4();
    let mut out = vec![0.0; mesh.n_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let vals = local_values(y, tri);
        let area = mesh.area(t);
        for (p, w) in rule.iter() {
            let yq = eval_p1(vals, p);
            let c = w * area * yq * yq * yq;
            for a in 0..3 {
                out[tri[a]] += c * p[a];
            }
        }
    }
    out
}

/// Nodal-quadrature variant of [`cubic_load`], paired with [`lumped_mass`].
pub fn cubic_load_lumped(mesh: &Mesh, y: &[f64]) -> Vec<f64> {
    check_len(mesh, y);
    let lumped = lumped_mass(mesh).diagonal();
    y.iter().zip(lumped).map(|(v, m)| m * v * v * v).collect()
}

/// `J(y)_ij = (3 y^2 phi_j, phi_i)`, the derivative of [`cubic_load`].
pub fn cubic_jacobian(mesh: &Mesh, y: &[f64]) -> CsrMatrix {
    check_len(mesh, y);
    let rule = QuadratureRule::degree4();
    scatter_local(mesh, |t| {
        let tri = &mesh.triangles()[t];
        let vals = local_values(y, tri);
        let area = mesh.area(t);
        let mut k = [[0.0; 3]; 3];
        for (p, w) in rule.iter() {
            let yq = eval_p1(vals, p);
            let c = 3.0 * w * area * yq * yq;
            for a in 0..3 {
                for b in 0..3 {
                    k[a][b] += c * p[a] * p[b];
                }
            }
        }
        k
    })
}

/// Derivative of [`cubic_load_lumped`].
pub fn cubic_jacobian_lumped(mesh: &Mesh, y: &[f64]) -> CsrMatrix {
    check_len(mesh, y);
    let lumped = lumped_mass(mesh).diagonal();
    let diag: Vec<f64> = y.iter().zip(lumped).map(|(v, m)| 3.0 * m * v * v).collect();
    CsrMatrix::from_diagonal(&diag)
}

/// `(y z^2, phi_i)` for nodal `y`, `z`; right-hand side of the second variation.
pub fn weighted_square_load(mesh: &Mesh, y: &[f64], z: &[f64]) -> Vec<f64> {
    check_len(mesh, y);
    check_len(mesh, z);
    let rule = QuadratureRule::degree4();
    let mut out = vec![0.0; mesh.n_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let (yv, zv) = (local_values(y, tri), local_values(z, tri));
        let area = mesh.area(t);
        for (p, w) in rule.iter() {
            let zq = eval_p1(zv, p);
            let c = w * area * eval_p1(yv, p) * zq * zq;
            for a in 0..3 {
                out[tri[a]] += c * p[a];
            }
        }
    }
    out
}

/// `b_i = (f, phi_i)` with the three-point degree-2 rule.
pub fn load(mesh: &Mesh, f: impl Fn(Point) -> f64) -> Vec<f64> {
    load_with_rule(mesh, &QuadratureRule::degree2(), |_, _, x| f(x))
}

/// `b_i = (f, phi_i)`; `f` receives the triangle index, barycentric and
/// Cartesian coordinates of each quadrature point.
pub fn load_with_rule(
    mesh: &Mesh,
    rule: &QuadratureRule,
    f: impl Fn(usize, [f64; 3], Point) -> f64,
) -> Vec<f64> {
    let mut out = vec![0.0; mesh.n_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.area(t);
        for (p, w) in rule.iter() {
            let c = w * area * f(t, p, mesh.map_point(t, p));
            for a in 0..3 {
                out[tri[a]] += c * p[a];
            }
        }
    }
    out
}

/// `integral over Omega of f`, element by element with `rule`.
pub fn integrate(mesh: &Mesh, rule: &QuadratureRule, f: impl Fn(usize, [f64; 3], Point) -> f64) -> f64 {
    let mut total = 0.0;
    for t in 0..mesh.n_triangles() {
        let area = mesh.area(t);
        let s: f64 = rule.iter().map(|(p, w)| w * f(t, p, mesh.map_point(t, p))).sum();
        total += area * s;
    }
    total
}

/// Value of a nodal P1 field on triangle `t` at barycentric point `bary`.
pub fn eval_nodal(mesh: &Mesh, y: &[f64], t: usize, bary: [f64; 3]) -> f64 {
    eval_p1(local_values(y, &mesh.triangles()[t]), bary)
}

/// Gradient of a nodal P1 field on triangle `t`.
pub fn grad_nodal(mesh: &Mesh, y: &[f64], t: usize) -> [f64; 2] {
    let g = mesh.hat_gradients(t);
    let v = local_values(y, &mesh.triangles()[t]);
    [
        v[0] * g[0][0] + v[1] * g[1][0] + v[2] * g[2][0],
        v[0] * g[0][1] + v[1] * g[1][1] + v[2] * g[2][1],
    ]
}

/// `(u, phi_i)` for a per-element constant `u`; exact.
pub fn control_pairing(mesh: &Mesh, cell_values: &[f64]) -> Vec<f64> {
    assert_eq!(cell_values.len(), mesh.n_triangles());
    let mut out = vec![0.0; mesh.n_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let c = cell_values[t] * mesh.area(t) / 3.0;
        for &v in tri {
            out[v] += c;
        }
    }
    out
}

/// Element means of a nodal P1 field (the adjoint of [`control_pairing`] up to areas).
pub fn cell_means(mesh: &Mesh, y: &[f64]) -> Vec<f64> {
    check_len(mesh, y);
    mesh.triangles()
        .iter()
        .map(|tri| (y[tri[0]] + y[tri[1]] + y[tri[2]]) / 3.0)
        .collect()
}

/// Mesh together with its global operators and the Dirichlet (interior) numbering.
///
/// All linear systems are posed on interior degrees of freedom; boundary
/// values of H^1_0 fields are identically zero.
#[derive(Debug, Clone)]
pub struct FemSpace {
    mesh: Mesh,
    mass: CsrMatrix,
    stiffness: CsrMatrix,
    interior: Vec<usize>,
    local: Vec<Option<usize>>,
    mass_interior: CsrMatrix,
    stiffness_interior: CsrMatrix,
    areas: Vec<f64>,
}

impl FemSpace {
    pub fn new(mesh: Mesh) -> Self {
        let mass = mass(&mesh);
        let stiffness = stiffness(&mesh);
        let interior = mesh.interior_vertices();
        let mut local = vec![None; mesh.n_vertices()];
        for (l, &g) in interior.iter().enumerate() {
            local[g] = Some(l);
        }
        let mass_interior = mass.submatrix(&interior, &local);
        let stiffness_interior = stiffness.submatrix(&interior, &local);
        let areas = (0..mesh.n_triangles()).map(|t| mesh.area(t)).collect();
        FemSpace {
            mesh,
            mass,
            stiffness,
            interior,
            local,
            mass_interior,
            stiffness_interior,
            areas,
        }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn mass_interior(&self) -> &CsrMatrix {
        &self.mass_interior
    }

    pub fn stiffness_interior(&self) -> &CsrMatrix {
        &self.stiffness_interior
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn restrict(&self, m: &CsrMatrix) -> CsrMatrix {
        m.submatrix(&self.interior, &self.local)
    }

    pub fn gather(&self, full: &[f64]) -> Vec<f64> {
        self.interior.iter().map(|&g| full[g]).collect()
    }

    pub fn scatter(&self, interior: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.mesh.n_vertices()];
        for (&g, &v) in self.interior.iter().zip(interior) {
            full[g] = v;
        }
        full
    }

    pub fn check_nodal(&self, y: &[f64], what: &str) -> Result<()> {
        if y.len() != self.mesh.n_vertices() {
            return Err(Error::domain(format!(
                "{what}: expected {} nodal values, got {}",
                self.mesh.n_vertices(),
                y.len()
            )));
        }
        Ok(())
    }
}
