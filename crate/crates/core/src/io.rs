//! CSV (RFC 4180, 17 significant digits) and legacy ASCII VTK writers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::analysis::{RateTable, RestrictionReport};
use crate::discretization::{ControlField, DgField};
use crate::error::Result;
use crate::mesh::Mesh;
use crate::optimizer::OptimizeReport;
use crate::spectral::SpectralSeries;

/// Round-trippable decimal form with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn escape(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// In-memory CSV document; lines end with CRLF.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut csv = Csv {
            text: String::new(),
            columns: header.len(),
        };
        csv.raw_row(header.iter().map(|s| s.to_string()));
        csv
    }

    fn raw_row(&mut self, fields: impl IntoIterator<Item = String>) {
        let line: Vec<String> = fields.into_iter().map(|f| escape(&f)).collect();
        debug_assert_eq!(line.len(), self.columns);
        self.text.push_str(&line.join(","));
        self.text.push_str("\r\n");
    }

    pub fn row(&mut self, fields: Vec<String>) {
        self.raw_row(fields);
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, &self.text)?;
        Ok(())
    }
}

/// One row per slab: index, slab endpoints, then one column per vertex.
pub fn field_csv(field: &DgField) -> Csv {
    let nodes: Vec<String> = (0..field.n_nodes()).map(|i| format!("v{i}")).collect();
    let mut header = vec!["slab", "t_start", "t_end"];
    header.extend(nodes.iter().map(String::as_str));
    let mut csv = Csv::new(&header);
    for n in 0..field.n_slabs() {
        let (a, b) = field.grid().slab_bounds(n);
        let mut row = vec![n.to_string(), fmt_f64(a), fmt_f64(b)];
        row.extend(field.slab(n).iter().map(|&v| fmt_f64(v)));
        csv.row(row);
    }
    csv
}

/// One row per slab, one column per triangle.
pub fn control_csv(u: &ControlField) -> Csv {
    let cells: Vec<String> = (0..u.n_cells()).map(|i| format!("c{i}")).collect();
    let mut header = vec!["slab", "t_start", "t_end"];
    header.extend(cells.iter().map(String::as_str));
    let mut csv = Csv::new(&header);
    for n in 0..u.n_slabs() {
        let (a, b) = u.grid().slab_bounds(n);
        let mut row = vec![n.to_string(), fmt_f64(a), fmt_f64(b)];
        row.extend(u.slab(n).iter().map(|&v| fmt_f64(v)));
        csv.row(row);
    }
    csv
}

pub fn rate_table_csv(table: &RateTable) -> Csv {
    let mut header = vec!["h", "k"];
    header.extend(table.norms.iter().map(String::as_str));
    let mut csv = Csv::new(&header);
    for r in &table.rows {
        let mut row = vec![fmt_f64(r.h), fmt_f64(r.k)];
        row.extend(r.errors.iter().map(|&e| fmt_f64(e)));
        csv.row(row);
    }
    csv
}

pub fn spectral_csv(series: &SpectralSeries) -> Csv {
    let mut csv = Csv::new(&["t", "lambda", "rayleigh", "residual"]);
    for i in 0..series.times.len() {
        csv.row(vec![
            fmt_f64(series.times[i]),
            fmt_f64(series.lambda[i]),
            fmt_f64(series.rayleigh[i]),
            fmt_f64(series.residuals[i]),
        ]);
    }
    csv
}

pub fn optimize_history_csv(report: &OptimizeReport) -> Csv {
    let mut csv = Csv::new(&["iteration", "cost", "step", "projected_gradient", "projection_residual"]);
    for (i, r) in report.history.iter().enumerate() {
        csv.row(vec![
            i.to_string(),
            fmt_f64(r.cost),
            fmt_f64(r.step),
            fmt_f64(r.projected_gradient),
            fmt_f64(r.projection_residual),
        ]);
    }
    csv
}

pub fn series_csv(name: &str, times: &[f64], values: &[f64]) -> Csv {
    let mut csv = Csv::new(&["t", name]);
    for (t, v) in times.iter().zip(values) {
        csv.row(vec![fmt_f64(*t), fmt_f64(*v)]);
    }
    csv
}

pub fn restriction_csv(report: &RestrictionReport) -> Csv {
    let mut csv = Csv::new(&["condition", "lhs", "rhs", "ratio", "pass"]);
    for c in report.conditions() {
        csv.row(vec![
            c.name.to_string(),
            fmt_f64(c.lhs),
            fmt_f64(c.rhs),
            fmt_f64(c.ratio),
            c.pass.to_string(),
        ]);
    }
    csv
}

/// Legacy VTK 3.0 unstructured grid with point and cell scalars.
pub fn vtk_document(mesh: &Mesh, title: &str, point_data: &[(&str, &[f64])], cell_data: &[(&str, &[f64])]) -> String {
    let mut s = String::new();
    let nv = mesh.n_vertices();
    let nt = mesh.n_triangles();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "{}", title.replace('\n', " "));
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {nv} double");
    for p in mesh.vertices() {
        let _ = writeln!(s, "{} {} 0", fmt_f64(p[0]), fmt_f64(p[1]));
    }
    let _ = writeln!(s, "CELLS {nt} {}", 4 * nt);
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        let _ = writeln!(s, "5");
    }
    if !point_data.is_empty() {
        let _ = writeln!(s, "POINT_DATA {nv}");
        for (name, values) in point_data {
            assert_eq!(values.len(), nv, "point data length");
            let _ = writeln!(s, "SCALARS {name} double 1");
            let _ = writeln!(s, "LOOKUP_TABLE default");
            for v in values.iter() {
                let _ = writeln!(s, "{}", fmt_f64(*v));
            }
        }
    }
    if !cell_data.is_empty() {
        let _ = writeln!(s, "CELL_DATA {nt}");
        for (name, values) in cell_data {
            assert_eq!(values.len(), nt, "cell data length");
            let _ = writeln!(s, "SCALARS {name} double 1");
            let _ = writeln!(s, "LOOKUP_TABLE default");
            for v in values.iter() {
                let _ = writeln!(s, "{}", fmt_f64(*v));
            }
        }
    }
    s
}

/// One VTK file per slab, `{prefix}_{n:04}.vtk`.
pub fn write_vtk_series(dir: &Path, prefix: &str, mesh: &Mesh, name: &str, field: &DgField) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::with_capacity(field.n_slabs());
    for n in 0..field.n_slabs() {
        let path = dir.join(format!("{prefix}_{n:04}.vtk"));
        let t = field.grid().slab_bounds(n).1;
        let doc = vtk_document(mesh, &format!("{name} at t = {}", fmt_f64(t)), &[(name, field.slab(n))], &[]);
        fs::write(&path, doc)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Per-slab VTK files of a piecewise constant control as cell data.
pub fn write_control_vtk_series(dir: &Path, prefix: &str, mesh: &Mesh, u: &ControlField) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::with_capacity(u.n_slabs());
    for n in 0..u.n_slabs() {
        let path = dir.join(format!("{prefix}_{n:04}.vtk"));
        let t = u.grid().slab_bounds(n).1;
        let doc = vtk_document(mesh, &format!("control at t = {}", fmt_f64(t)), &[], &[("u", u.slab(n))]);
        fs::write(&path, doc)?;
        paths.push(path);
    }
    Ok(paths)
}
