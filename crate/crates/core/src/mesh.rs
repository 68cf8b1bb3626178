//! Structured conforming triangulations of an axis-aligned rectangle.
//!
//! Every cell of an `nx x ny` grid is split along the diagonal from its
//! lower-left to its upper-right corner. Vertices are numbered row-major and
//! every triangle is stored counterclockwise.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect {
        x0: 0.0,
        y0: 0.0,
        x1: 1.0,
        y1: 1.0,
    };

    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        let r = Rect { x0, y0, x1, y1 };
        r.validate()?;
        Ok(r)
    }

    fn validate(&self) -> Result<()> {
        let finite = [self.x0, self.y0, self.x1, self.y1]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x1 <= self.x0 || self.y1 <= self.y0 {
            return Err(Error::domain(format!(
                "degenerate rectangle ({}, {}) x ({}, {})",
                self.x0, self.x1, self.y0, self.y1
            )));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    fn on_border(&self, p: Point) -> bool {
        let tol = 1e-12 * (self.x1 - self.x0).abs().max((self.y1 - self.y0).abs());
        (p[0] - self.x0).abs() <= tol
            || (p[0] - self.x1).abs() <= tol
            || (p[1] - self.y0).abs() <= tol
            || (p[1] - self.y1).abs() <= tol
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    h: f64,
    rect: Rect,
}

impl Mesh {
    /// Uniform `nx x ny` cell grid, two right triangles per cell.
    pub fn uniform(nx: usize, ny: usize, rect: Rect) -> Result<Self> {
        rect.validate()?;
        if nx == 0 || ny == 0 {
            return Err(Error::domain(format!("mesh needs nx, ny >= 1 (got {nx}, {ny})")));
        }
        let dx = (rect.x1 - rect.x0) / nx as f64;
        let dy = (rect.y1 - rect.y0) / ny as f64;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                // Pin the far edges to the rectangle exactly.
                let x = if i == nx { rect.x1 } else { rect.x0 + i as f64 * dx };
                let y = if j == ny { rect.y1 } else { rect.y0 + j as f64 * dy };
                vertices.push([x, y]);
            }
        }
        let idx = |i: usize, j: usize| j * (nx + 1) + i;
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (v00, v10, v11, v01) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
        Ok(Self::from_parts(vertices, triangles, rect))
    }

    fn from_parts(vertices: Vec<Point>, triangles: Vec<[usize; 3]>, rect: Rect) -> Self {
        let boundary = vertices.iter().map(|&p| rect.on_border(p)).collect();
        let mut mesh = Mesh {
            vertices,
            triangles,
            boundary,
            h: 0.0,
            rect,
        };
        mesh.h = (0..mesh.n_triangles())
            .map(|t| mesh.diameter(t))
            .fold(0.0, f64::max);
        mesh
    }

    /// Red refinement: every triangle is split into four through its edge midpoints.
    pub fn refine_uniform(&self) -> Mesh {
        let mut vertices = self.vertices.clone();
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                let (pa, pb) = (vertices[a], vertices[b]);
                vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                vertices.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            triangles.push([a, ab, ca]);
            triangles.push([ab, b, bc]);
            triangles.push([ca, bc, c]);
            triangles.push([ab, bc, ca]);
        }
        Self::from_parts(vertices, triangles, self.rect)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Maximum element diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn rect(&self) -> Rect {
        self.rect
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Signed area, positive for counterclockwise triangles.
    pub fn signed_area(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.corners(t);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    pub fn area(&self, t: usize) -> f64 {
        self.signed_area(t).abs()
    }

    fn edge_lengths(&self, t: usize) -> [f64; 3] {
        let [p0, p1, p2] = self.corners(t);
        let len = |a: Point, b: Point| (a[0] - b[0]).hypot(a[1] - b[1]);
        [len(p1, p2), len(p2, p0), len(p0, p1)]
    }

    /// Longest edge of triangle `t`.
    pub fn diameter(&self, t: usize) -> f64 {
        self.edge_lengths(t).into_iter().fold(0.0, f64::max)
    }

    /// Ratio of the diameter to the inscribed-circle diameter.
    pub fn shape_ratio(&self, t: usize) -> f64 {
        let e = self.edge_lengths(t);
        let perimeter: f64 = e.iter().sum();
        let inscribed = 4.0 * self.area(t) / perimeter;
        self.diameter(t) / inscribed
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [p0, p1, p2] = self.corners(t);
        [(p0[0] + p1[0] + p2[0]) / 3.0, (p0[1] + p1[1] + p2[1]) / 3.0]
    }

    /// Cartesian point for barycentric coordinates on triangle `t`.
    pub fn map_point(&self, t: usize, bary: [f64; 3]) -> Point {
        let [p0, p1, p2] = self.corners(t);
        [
            bary[0] * p0[0] + bary[1] * p1[0] + bary[2] * p2[0],
            bary[0] * p0[1] + bary[1] * p1[1] + bary[2] * p2[1],
        ]
    }

    /// Gradients of the three barycentric (hat) functions on triangle `t`.
    pub fn hat_gradients(&self, t: usize) -> [[f64; 2]; 3] {
        let [p0, p1, p2] = self.corners(t);
        let two_a = 2.0 * self.signed_area(t);
        [
            [(p1[1] - p2[1]) / two_a, (p2[0] - p1[0]) / two_a],
            [(p2[1] - p0[1]) / two_a, (p0[0] - p2[0]) / two_a],
            [(p0[1] - p1[1]) / two_a, (p1[0] - p0[0]) / two_a],
        ]
    }

    /// Barycentric coordinates of `p` with respect to triangle `t`.
    pub fn barycentric(&self, t: usize, p: Point) -> [f64; 3] {
        let [p0, p1, p2] = self.corners(t);
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let l1 = ((p[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p[1] - p0[1])) / det;
        let l2 = ((p1[0] - p0[0]) * (p[1] - p0[1]) - (p[0] - p0[0]) * (p1[1] - p0[1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Index of a triangle containing `p` (closed triangles, brute force).
    pub fn locate(&self, p: Point) -> Option<usize> {
        let tol = -1e-12;
        (0..self.n_triangles()).find(|&t| self.barycentric(t, p).iter().all(|&l| l >= tol))
    }

    /// Indices of vertices not on the boundary, in increasing order.
    pub fn interior_vertices(&self) -> Vec<usize> {
        (0..self.n_vertices()).filter(|&v| !self.boundary[v]).collect()
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        self.vertices.iter().map(|&p| f(p)).collect()
    }

    /// Number of triangles sharing each undirected edge.
    pub fn edge_multiplicities(&self) -> HashMap<(usize, usize), usize> {
        let mut counts = HashMap::new();
        for &[a, b, c] in &self.triangles {
            for (u, v) in [(a, b), (b, c), (c, a)] {
                *counts.entry((u.min(v), u.max(v))).or_insert(0) += 1;
            }
        }
        counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_grid() {
        let m = Mesh::uniform(1, 1, Rect::UNIT).unwrap();
        assert_eq!(m.n_triangles(), 2);
        assert_eq!(m.n_vertices(), 4);
        assert!(m.boundary_mask().iter().all(|&b| b));
    }

    #[test]
    fn two_by_two_counts() {
        let m = Mesh::uniform(2, 2, Rect::UNIT).unwrap();
        assert_eq!(m.n_triangles(), 8);
        assert_eq!(m.n_vertices(), 9);
        assert_eq!(m.boundary_mask().iter().filter(|&&b| b).count(), 8);
        assert_eq!(m.interior_vertices(), vec![4]);
    }

    #[test]
    fn mesh_size_is_cell_diagonal() {
        let m = Mesh::uniform(4, 4, Rect::UNIT).unwrap();
        assert!((m.h() - 2f64.sqrt() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(Mesh::uniform(2, 2, Rect { x0: 0.0, y0: 0.0, x1: 0.0, y1: 1.0 }).is_err());
        assert!(Rect::new(1.0, 0.0, 0.5, 1.0).is_err());
        assert!(Mesh::uniform(0, 3, Rect::UNIT).is_err());
    }

    #[test]
    fn triangles_are_counterclockwise_and_conforming() {
        let m = Mesh::uniform(3, 5, Rect::new(-1.0, 0.0, 2.0, 0.5).unwrap()).unwrap().refine_uniform();
        assert!((0..m.n_triangles()).all(|t| m.signed_area(t) > 0.0));
        let edges = m.edge_multiplicities();
        for (&(a, b), &count) in &edges {
            let (pa, pb, r) = (m.vertices()[a], m.vertices()[b], m.rect());
            let same_side = |coord: usize, value: f64| pa[coord] == value && pb[coord] == value;
            let on_border =
                same_side(0, r.x0) || same_side(0, r.x1) || same_side(1, r.y0) || same_side(1, r.y1);
            assert_eq!(count, if on_border { 1 } else { 2 }, "edge {a}-{b}");
        }
    }

    #[test]
    fn refinement_counts_and_halving() {
        let m = Mesh::uniform(1, 1, Rect::UNIT).unwrap();
        let r = m.refine_uniform();
        assert_eq!(r.n_triangles(), 8);
        assert_eq!(r.n_vertices(), 9);
        assert!((m.h() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(r.h(), m.h() / 2.0);
    }

    #[test]
    fn refine_twice_matches_uniform_grid() {
        let twice = Mesh::uniform(1, 1, Rect::UNIT).unwrap().refine_uniform().refine_uniform();
        let direct = Mesh::uniform(4, 4, Rect::UNIT).unwrap();
        let key = |p: &Point| ((p[0] * 1e9).round() as i64, (p[1] * 1e9).round() as i64);
        let mut a: Vec<_> = twice.vertices().iter().map(key).collect();
        let mut b: Vec<_> = direct.vertices().iter().map(key).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        // The element sets coincide as well, not only the vertex clouds.
        let tri_key = |m: &Mesh, t: usize| {
            let mut c: Vec<_> = m.corners(t).iter().map(key).collect();
            c.sort();
            c
        };
        let mut ta: Vec<_> = (0..twice.n_triangles()).map(|t| tri_key(&twice, t)).collect();
        let mut tb: Vec<_> = (0..direct.n_triangles()).map(|t| tri_key(&direct, t)).collect();
        ta.sort();
        tb.sort();
        assert_eq!(ta, tb);
    }

    #[test]
    fn refinement_keeps_boundary_and_adds_midpoints_only() {
        let m = Mesh::uniform(2, 3, Rect::UNIT).unwrap();
        let r = m.refine_uniform();
        assert_eq!(&r.vertices()[..m.n_vertices()], m.vertices());
        assert_eq!(&r.boundary_mask()[..m.n_vertices()], m.boundary_mask());
    }

    #[test]
    fn areas_sum_to_rectangle() {
        let rect = Rect::new(0.5, -1.0, 2.0, 1.5).unwrap();
        let m = Mesh::uniform(7, 3, rect).unwrap().refine_uniform();
        let total: f64 = (0..m.n_triangles()).map(|t| m.area(t)).sum();
        assert!((total - rect.area()).abs() <= 1e-12 * rect.area());
    }

    #[test]
    fn uniform_grid_has_constant_shape_ratio() {
        let m = Mesh::uniform(4, 4, Rect::UNIT).unwrap().refine_uniform();
        let r0 = m.shape_ratio(0);
        assert!((0..m.n_triangles()).all(|t| (m.shape_ratio(t) - r0).abs() < 1e-12));
    }

    #[test]
    fn hat_gradients_sum_to_zero() {
        let m = Mesh::uniform(2, 2, Rect::UNIT).unwrap();
        for t in 0..m.n_triangles() {
            let g = m.hat_gradients(t);
            assert!((g[0][0] + g[1][0] + g[2][0]).abs() < 1e-14);
            assert!((g[0][1] + g[1][1] + g[2][1]).abs() < 1e-14);
        }
    }

    #[test]
    fn locate_and_barycentric_round_trip() {
        let m = Mesh::uniform(3, 3, Rect::UNIT).unwrap();
        let p = [0.41, 0.77];
        let t = m.locate(p).unwrap();
        let b = m.barycentric(t, p);
        let q = m.map_point(t, b);
        assert!((q[0] - p[0]).abs() < 1e-14 && (q[1] - p[1]).abs() < 1e-14);
    }
}
