//! Legacy VTK and CSV writers. Every floating-point value is written with
//! 17 significant digits so that files round-trip exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::mac_grid::{CellScalarField, FaceVectorField, Padded};
use crate::solid_fem::SolidMesh;

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, text)?;
    Ok(())
}

/// Row-major `i,j,value` rows of the interior of a padded array.
pub fn padded_csv(values: &Padded) -> String {
    let mut s = String::from("i,j,value\n");
    for j in 0..values.ny() {
        for i in 0..values.nx() {
            let _ = writeln!(s, "{i},{j},{}", num(values.get(i, j)));
        }
    }
    s
}

pub fn write_cell_csv(path: &Path, field: &CellScalarField) -> Result<()> {
    write(path, &padded_csv(&field.values))
}

/// Writes `<stem>_x.csv` and `<stem>_y.csv` next to each other.
pub fn write_face_csv(dir: &Path, stem: &str, field: &FaceVectorField) -> Result<[std::path::PathBuf; 2]> {
    let px = dir.join(format!("{stem}_x.csv"));
    let py = dir.join(format!("{stem}_y.csv"));
    write(&px, &padded_csv(field.comp(0)))?;
    write(&py, &padded_csv(field.comp(1)))?;
    Ok([px, py])
}

/// Structured-points file with named cell scalars and, optionally, the
/// face velocity averaged to cell centres.
pub fn structured_points_vtk(
    title: &str,
    scalars: &[(&str, &CellScalarField)],
    velocity: Option<&FaceVectorField>,
) -> String {
    let grid = scalars
        .first()
        .map(|s| s.1.grid)
        .or(velocity.map(|u| u.grid))
        .expect("at least one field");
    let (nx, ny) = (grid.nx(), grid.ny());
    let h = grid.h();
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET STRUCTURED_POINTS");
    let _ = writeln!(s, "DIMENSIONS {} {} 1", nx + 1, ny + 1);
    let _ = writeln!(s, "ORIGIN {} {} 0", num(grid.lower[0]), num(grid.lower[1]));
    let _ = writeln!(s, "SPACING {} {} 1", num(h), num(h));
    let _ = writeln!(s, "CELL_DATA {}", nx * ny);
    for (name, f) in scalars {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for j in 0..ny {
            for i in 0..nx {
                let _ = writeln!(s, "{}", num(f.get(i, j)));
            }
        }
    }
    if let Some(u) = velocity {
        let _ = writeln!(s, "VECTORS velocity double");
        for j in 0..ny {
            for i in 0..nx {
                let ux = 0.5 * (u.comp(0).get(i, j) + u.comp(0).get(i + 1, j));
                let uy = 0.5 * (u.comp(1).get(i, j) + u.comp(1).get(i, j + 1));
                let _ = writeln!(s, "{} {} 0", num(ux), num(uy));
            }
        }
    }
    s
}

pub fn write_structured_vtk(
    path: &Path,
    title: &str,
    scalars: &[(&str, &CellScalarField)],
    velocity: Option<&FaceVectorField>,
) -> Result<()> {
    write(path, &structured_points_vtk(title, scalars, velocity))
}

/// Unstructured quadrilateral grid in the current configuration, with
/// nodal scalars, the displacement and per-element scalars.
pub fn unstructured_grid_vtk(
    title: &str,
    mesh: &SolidMesh,
    point_scalars: &[(&str, &[f64])],
    cell_scalars: &[(&str, &[f64])],
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", mesh.num_nodes());
    for x in &mesh.current {
        let _ = writeln!(s, "{} {} 0", num(x[0]), num(x[1]));
    }
    let ne = mesh.num_elements();
    let _ = writeln!(s, "CELLS {} {}", ne, 5 * ne);
    for e in &mesh.elements {
        let _ = writeln!(s, "4 {} {} {} {}", e[0], e[1], e[2], e[3]);
    }
    let _ = writeln!(s, "CELL_TYPES {ne}");
    for _ in 0..ne {
        let _ = writeln!(s, "9");
    }
    let _ = writeln!(s, "POINT_DATA {}", mesh.num_nodes());
    for (name, v) in point_scalars {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for x in *v {
            let _ = writeln!(s, "{}", num(*x));
        }
    }
    let _ = writeln!(s, "VECTORS displacement double");
    for (x, xr) in mesh.current.iter().zip(&mesh.reference) {
        let d = if mesh.period.iter().any(|p| p.is_some()) { x * 0.0 } else { x - xr };
        let _ = writeln!(s, "{} {} 0", num(d[0]), num(d[1]));
    }
    if !cell_scalars.is_empty() {
        let _ = writeln!(s, "CELL_DATA {ne}");
        for (name, v) in cell_scalars {
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for x in *v {
                let _ = writeln!(s, "{}", num(*x));
            }
        }
    }
    s
}

pub fn write_mesh_vtk(
    path: &Path,
    title: &str,
    mesh: &SolidMesh,
    point_scalars: &[(&str, &[f64])],
    cell_scalars: &[(&str, &[f64])],
) -> Result<()> {
    write(path, &unstructured_grid_vtk(title, mesh, point_scalars, cell_scalars))
}

/// Plain CSV with a header and rows of numbers.
pub fn write_table(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    let mut s = format!("{header}\n");
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| num(*v)).collect();
        let _ = writeln!(s, "{}", line.join(","));
    }
    write(path, &s)
}

/// Writes pre-formatted lines under a header.
pub fn write_lines(path: &Path, header: &str, lines: &[String]) -> Result<()> {
    let mut s = format!("{header}\n");
    for l in lines {
        s.push_str(l);
        s.push('\n');
    }
    write(path, &s)
}
