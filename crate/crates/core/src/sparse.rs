//! Compressed-row sparse matrices and Jacobi-preconditioned conjugate gradients.

use crate::error::{Error, Result};

/// Entries with magnitude below this are dropped on finalization.
pub const DROP_THRESHOLD: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl CsrMatrix {
    /// Assembles from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)], symmetric: bool) -> Result<Self> {
        let mut counts = vec![0usize; n + 1];
        for &(i, j, _) in triplets {
            if i >= n || j >= n {
                return Err(Error::domain(format!("triplet ({i}, {j}) outside a {n}x{n} matrix")));
            }
            counts[i + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(i, j, v) in triplets {
            cols[next[i]] = j;
            vals[next[i]] = v;
            next[i] += 1;
        }
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_offsets.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for i in 0..n {
            row.clear();
            row.extend((counts[i]..counts[i + 1]).map(|p| (cols[p], vals[p])));
            row.sort_by_key(|&(j, _)| j);
            let mut p = 0;
            while p < row.len() {
                let j = row[p].0;
                let mut sum = 0.0;
                while p < row.len() && row[p].0 == j {
                    sum += row[p].1;
                    p += 1;
                }
                if sum.abs() >= DROP_THRESHOLD {
                    col_indices.push(j);
                    values.push(sum);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(CsrMatrix {
            n,
            row_offsets,
            col_indices,
            values,
            symmetric,
        })
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
            symmetric: true,
        }
    }

    pub fn zeros(n: usize) -> Self {
        CsrMatrix {
            n,
            row_offsets: vec![0; n + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
            symmetric: true,
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let triplets: Vec<_> = diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(diag.len(), &triplets, true).expect("indices in range")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_symmetric_flagged(&self) -> bool {
        self.symmetric
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        match self.col_indices[range.clone()].binary_search(&j) {
            Ok(p) => self.values[range.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.n || y.len() != self.n {
            return Err(Error::domain(format!(
                "spmv dimension mismatch: matrix {}, x {}, y {}",
                self.n,
                x.len(),
                y.len()
            )));
        }
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
        Ok(())
    }

    /// `x^T A y`.
    pub fn quadratic_form(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.n)
            .map(|i| x[i] * self.row(i).map(|(j, v)| v * y[j]).sum::<f64>())
            .sum()
    }

    pub fn scaled(&self, alpha: f64) -> CsrMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out.drop_small();
        out
    }

    /// `sum_k c_k A_k` for matrices of equal dimension (patterns may differ).
    pub fn linear_combination(terms: &[(f64, &CsrMatrix)]) -> Result<CsrMatrix> {
        let n = terms
            .first()
            .map(|(_, a)| a.n)
            .ok_or_else(|| Error::domain("empty linear combination"))?;
        if terms.iter().any(|(_, a)| a.n != n) {
            return Err(Error::domain("linear combination of matrices with different sizes"));
        }
        let symmetric = terms.iter().all(|(_, a)| a.symmetric);
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        let mut acc = vec![0.0; n];
        let mut touched = vec![false; n];
        let mut cols: Vec<usize> = Vec::new();
        row_offsets.push(0);
        for i in 0..n {
            cols.clear();
            for &(c, a) in terms {
                for (j, v) in a.row(i) {
                    if !touched[j] {
                        touched[j] = true;
                        cols.push(j);
                    }
                    acc[j] += c * v;
                }
            }
            cols.sort_unstable();
            for &j in &cols {
                if acc[j].abs() >= DROP_THRESHOLD {
                    col_indices.push(j);
                    values.push(acc[j]);
                }
                acc[j] = 0.0;
                touched[j] = false;
            }
            row_offsets.push(col_indices.len());
        }
        Ok(CsrMatrix {
            n,
            row_offsets,
            col_indices,
            values,
            symmetric,
        })
    }

    /// Principal submatrix on `keep` (sorted global indices); `local[g]` maps
    /// global to local indices.
    pub fn submatrix(&self, keep: &[usize], local: &[Option<usize>]) -> CsrMatrix {
        let mut row_offsets = Vec::with_capacity(keep.len() + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for &g in keep {
            for (j, v) in self.row(g) {
                if let Some(lj) = local[j] {
                    col_indices.push(lj);
                    values.push(v);
                }
            }
            row_offsets.push(col_indices.len());
        }
        CsrMatrix {
            n: keep.len(),
            row_offsets,
            col_indices,
            values,
            symmetric: self.symmetric,
        }
    }

    fn drop_small(&mut self) {
        let mut row_offsets = Vec::with_capacity(self.n + 1);
        let mut cols = Vec::with_capacity(self.values.len());
        let mut vals = Vec::with_capacity(self.values.len());
        row_offsets.push(0);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if v.abs() >= DROP_THRESHOLD {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_offsets.push(cols.len());
        }
        self.row_offsets = row_offsets;
        self.col_indices = cols;
        self.values = vals;
    }

    /// Largest relative asymmetry `|a_ij - a_ji| / max|a|`.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct CgOptions {
    /// Relative residual target `||Ax - b|| <= tol ||b||`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final relative residual.
    pub residual: f64,
    /// `1/2 x^T A x - b^T x` at every iterate; equals `1/2 ||x - x*||_A^2` up to a constant.
    pub energy_history: Vec<f64>,
}

pub fn cg_solve(a: &CsrMatrix, b: &[f64], opts: &CgOptions) -> Result<CgOutcome> {
    cg_solve_from(a, b, vec![0.0; b.len()], opts)
}

/// Jacobi-preconditioned CG starting from `x0`.
pub fn cg_solve_from(a: &CsrMatrix, b: &[f64], x0: Vec<f64>, opts: &CgOptions) -> Result<CgOutcome> {
    let n = a.n();
    if b.len() != n || x0.len() != n {
        return Err(Error::domain(format!(
            "cg dimension mismatch: matrix {n}, rhs {}, guess {}",
            b.len(),
            x0.len()
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::domain("cg tolerance must be positive"));
    }
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
            energy_history: vec![0.0],
        });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut x = x0;
    let mut r = a.spmv(&x)?;
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    let energy = |x: &[f64], r: &[f64]| -0.5 * x.iter().zip(b).zip(r).map(|((xi, bi), ri)| xi * (bi + ri)).sum::<f64>();
    let mut energy_history = vec![energy(&x, &r)];
    let mut res = norm2(&r) / b_norm;
    if res <= opts.tol {
        return Ok(CgOutcome {
            x,
            iterations: 0,
            residual: res,
            energy_history,
        });
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=opts.max_iter {
        a.spmv_into(&p, &mut ap)?;
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            // Breakdown: the operator is not positive definite along p.
            return Err(Error::LinearSolver {
                iterations: it,
                residual: res,
                slab: None,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        energy_history.push(energy(&x, &r));
        res = norm2(&r) / b_norm;
        if res <= opts.tol {
            return Ok(CgOutcome {
                x,
                iterations: it,
                residual: res,
                energy_history,
            });
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::LinearSolver {
        iterations: opts.max_iter,
        residual: res,
        slab: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn laplace_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, &t, true).unwrap()
    }

    #[test]
    fn spmv_trivial_cases() {
        let x = [1.5, -2.0, 3.25];
        assert_eq!(CsrMatrix::identity(3).spmv(&x).unwrap(), x.to_vec());
        assert_eq!(CsrMatrix::zeros(3).spmv(&x).unwrap(), vec![0.0; 3]);
        let a = CsrMatrix::from_triplets(2, &[(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0)], true).unwrap();
        assert_eq!(a.spmv(&[1.0, 1.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn spmv_rejects_wrong_length() {
        assert!(matches!(CsrMatrix::identity(3).spmv(&[1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn triplets_are_sorted_merged_and_pruned() {
        let a = CsrMatrix::from_triplets(2, &[(0, 1, 1.0), (0, 0, 3.0), (0, 1, -1.0), (1, 1, 2.0), (1, 0, 1e-320)], false).unwrap();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.col_indices(), &[0, 1]);
        for i in 0..a.n() {
            let cols = &a.col_indices()[a.row_offsets()[i]..a.row_offsets()[i + 1]];
            assert!(cols.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn cg_identity_is_one_step() {
        let b = vec![1.0, -2.0, 0.5, 4.0];
        let out = cg_solve(&CsrMatrix::identity(4), &b, &CgOptions::default()).unwrap();
        assert!(out.iterations <= 1);
        assert_eq!(out.x, b);
    }

    #[test]
    fn cg_zero_rhs() {
        let out = cg_solve(&laplace_1d(5), &[0.0; 5], &CgOptions::default()).unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.x, vec![0.0; 5]);
    }

    #[test]
    fn cg_tridiagonal_three() {
        let out = cg_solve(&laplace_1d(3), &[1.0, 1.0, 1.0], &CgOptions::default()).unwrap();
        for (x, e) in out.x.iter().zip([1.5, 2.0, 1.5]) {
            assert!((x - e).abs() < 1e-12);
        }
    }

    #[test]
    fn cg_reports_non_convergence() {
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let err = cg_solve(&laplace_1d(50), &b, &CgOptions { tol: 1e-14, max_iter: 3 }).unwrap_err();
        match err {
            Error::LinearSolver { iterations, residual, .. } => {
                assert_eq!(iterations, 3);
                assert!(residual > 1e-14);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cg_energy_is_monotone() {
        let n = 40;
        let b: Vec<f64> = (0..n).map(|i| ((i * 7 % 11) as f64) - 5.0).collect();
        let out = cg_solve(&laplace_1d(n), &b, &CgOptions { tol: 1e-12, max_iter: 500 }).unwrap();
        assert!(out.energy_history.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0)));
        let r = laplace_1d(n).spmv(&out.x).unwrap();
        let res: f64 = r.iter().zip(&b).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(res <= 1e-12 * norm2(&b));
    }

    #[test]
    fn linear_combination_and_submatrix() {
        let a = laplace_1d(4);
        let i = CsrMatrix::identity(4);
        let c = CsrMatrix::linear_combination(&[(1.0, &a), (-2.0, &i)]).unwrap();
        assert_eq!(c.get(0, 0), 0.0);
        assert_eq!(c.nnz(), 6);
        let keep = [1, 2];
        let local = [None, Some(0), Some(1), None];
        let s = a.submatrix(&keep, &local);
        assert_eq!(s.n(), 2);
        assert_eq!(s.get(0, 0), 2.0);
        assert_eq!(s.get(0, 1), -1.0);
    }

    proptest! {
        #[test]
        fn symmetric_spmv_is_self_adjoint(x in prop::collection::vec(-10.0f64..10.0, 12), y in prop::collection::vec(-10.0f64..10.0, 12)) {
            let a = laplace_1d(12);
            let ax = a.spmv(&x).unwrap();
            let ay = a.spmv(&y).unwrap();
            let lhs = dot(&ax, &y);
            let rhs = dot(&x, &ay);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs().max(rhs.abs())));
        }
    }
}
