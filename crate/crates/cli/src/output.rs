use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use bangbang::mesh::{signed_area, Point};
use bangbang::signum::{split_element, tie_broken, ElementSplit};
use bangbang::{IterationRecord, NodalField, TriangularMesh};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Sub-cells smaller than this fraction of their element are dropped from
/// the export; they arise when a vertex value is (tie-broken) zero.
const SLIVER_FRACTION: f64 = 1e-12;

/// One row of `table.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub nodes: usize,
    pub iters: usize,
    pub facts: usize,
    pub solves: usize,
    /// Wall time in seconds, rounded to four decimals.
    pub time_s: f64,
    pub converged: bool,
}

impl TableRow {
    pub fn rounded_time(seconds: f64) -> f64 {
        (seconds * 1e4).round() / 1e4
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let path = path.to_path_buf();
    match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::Io { path, source },
        other => CliError::Io {
            path,
            source: std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{other:?}")),
        },
    }
}

/// Writes `nodes,iters,facts,solves,time_s,converged` with one row per level.
pub fn write_table_csv(rows: &[TableRow], path: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["nodes", "iters", "facts", "solves", "time_s", "converged"])
        .map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.write_record([
            r.nodes.to_string(),
            r.iters.to_string(),
            r.facts.to_string(),
            r.solves.to_string(),
            format!("{:.4}", r.time_s),
            r.converged.to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(io_error(path))
}

pub fn read_table_csv(path: &Path) -> Result<Vec<TableRow>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize()
        .collect::<Result<Vec<TableRow>, _>>()
        .map_err(|e| csv_error(path, e))
}

fn optional(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.12e}")).unwrap_or_default()
}

/// Per-iteration log of one run.
pub fn write_trace_csv(trace: &[IterationRecord], path: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record([
        "iteration",
        "residual",
        "merit",
        "radius",
        "step",
        "accepted",
        "boundary_hit",
        "cg_iterations",
        "pred",
        "ared",
        "solves",
        "factorizations",
    ])
    .map_err(|e| csv_error(path, e))?;
    for t in trace {
        w.write_record([
            t.iteration.to_string(),
            format!("{:.12e}", t.residual),
            format!("{:.12e}", t.merit),
            optional(t.radius),
            format!("{:.12e}", t.step),
            t.accepted.to_string(),
            t.boundary_hit.to_string(),
            t.cg_iterations.to_string(),
            optional(t.pred),
            optional(t.ared),
            t.solves.to_string(),
            t.factorizations.to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(io_error(path))
}

/// Triangles of the control `u_b sign(w_h)`: uncut elements as they are, cut
/// elements split along the zero level set.
pub fn control_cells(mesh: &TriangularMesh, w: &NodalField, u_b: f64) -> (Vec<Point>, Vec<f64>, Vec<[usize; 3]>, Vec<f64>) {
    let mut points: Vec<Point> = mesh.nodes().to_vec();
    let mut point_w: Vec<f64> = w.values().to_vec();
    let mut cells = Vec::new();
    let mut control = Vec::new();
    let wt = tie_broken(w.values());
    for e in 0..mesh.num_elements() {
        let tri = mesh.element(e);
        match split_element(mesh, &wt, e) {
            ElementSplit::Uncut { sign } => {
                cells.push(tri);
                control.push(sign * u_b);
            }
            ElementSplit::Cut {
                lone, lone_sign, p, q, ..
            } => {
                let (l, j, k) = (tri[lone], tri[(lone + 1) % 3], tri[(lone + 2) % 3]);
                let ip = points.len();
                points.push(p);
                points.push(q);
                point_w.extend([0.0, 0.0]);
                let iq = ip + 1;
                let min_area = SLIVER_FRACTION * mesh.element_area(e);
                for (cell, sign) in [
                    ([l, ip, iq], lone_sign),
                    ([ip, j, k], -lone_sign),
                    ([ip, k, iq], -lone_sign),
                ] {
                    let area = signed_area(points[cell[0]], points[cell[1]], points[cell[2]]).abs();
                    if area > min_area {
                        cells.push(cell);
                        control.push(sign * u_b);
                    }
                }
            }
        }
    }
    (points, point_w, cells, control)
}

/// Legacy ASCII VTK unstructured grid with cell data `control` and point data `w`.
pub fn export_control_field(mesh: &TriangularMesh, w: &NodalField, u_b: f64, path: &Path) -> Result<(), CliError> {
    mesh.check_field(w).map_err(|e| CliError::Config(e.to_string()))?;
    let (points, point_w, cells, control) = control_cells(mesh, w, u_b);
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\nbang-bang control\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", points.len());
    for p in &points {
        let _ = writeln!(s, "{:.17e} {:.17e} 0", p[0], p[1]);
    }
    let _ = writeln!(s, "CELLS {} {}", cells.len(), 4 * cells.len());
    for c in &cells {
        let _ = writeln!(s, "3 {} {} {}", c[0], c[1], c[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {}", cells.len());
    for _ in &cells {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "CELL_DATA {}\nSCALARS control double 1\nLOOKUP_TABLE default", cells.len());
    for c in &control {
        let _ = writeln!(s, "{c:.17e}");
    }
    let _ = writeln!(s, "POINT_DATA {}\nSCALARS w double 1\nLOOKUP_TABLE default", points.len());
    for v in &point_w {
        let _ = writeln!(s, "{v:.17e}");
    }
    let file = File::create(path).map_err(io_error(path))?;
    let mut out = BufWriter::new(file);
    out.write_all(s.as_bytes()).map_err(io_error(path))?;
    out.flush().map_err(io_error(path))
}
