//! Legacy ASCII VTK output (`DATASET UNSTRUCTURED_GRID`, triangles).

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use super::Mesh;
use crate::error::{FdlmError, Result};

/// VTK cell type id of a linear triangle.
pub const VTK_TRIANGLE: u8 = 5;

/// A named scalar field attached to points or cells.
#[derive(Debug, Clone, Copy)]
pub struct Field<'a> {
    pub name: &'a str,
    pub values: &'a [f64],
}

impl<'a> Field<'a> {
    pub fn new(name: &'a str, values: &'a [f64]) -> Self {
        Self { name, values }
    }
}

/// Renders a mesh with optional point and cell data.
pub fn to_vtk_string(
    mesh: &Mesh,
    title: &str,
    point_data: &[Field<'_>],
    cell_data: &[Field<'_>],
) -> Result<String> {
    for f in point_data {
        if f.values.len() != mesh.num_vertices() {
            return Err(FdlmError::invalid(format!(
                "point field {} has {} values for {} vertices",
                f.name,
                f.values.len(),
                mesh.num_vertices()
            )));
        }
    }
    for f in cell_data {
        if f.values.len() != mesh.num_cells() {
            return Err(FdlmError::invalid(format!(
                "cell field {} has {} values for {} cells",
                f.name,
                f.values.len(),
                mesh.num_cells()
            )));
        }
    }
    let mut s = String::new();
    let title = title.replace('\n', " ");
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "{title}");
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", mesh.num_vertices());
    for p in mesh.vertices() {
        let _ = writeln!(s, "{:.17e} {:.17e} 0", p.x, p.y);
    }
    let nc = mesh.num_cells();
    let _ = writeln!(s, "CELLS {} {}", nc, 4 * nc);
    for c in mesh.cells() {
        let _ = writeln!(s, "3 {} {} {}", c[0], c[1], c[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nc}");
    for _ in 0..nc {
        let _ = writeln!(s, "{VTK_TRIANGLE}");
    }
    write_fields(&mut s, "POINT_DATA", mesh.num_vertices(), point_data);
    write_fields(&mut s, "CELL_DATA", nc, cell_data);
    Ok(s)
}

fn write_fields(s: &mut String, section: &str, n: usize, fields: &[Field<'_>]) {
    if fields.is_empty() {
        return;
    }
    let _ = writeln!(s, "{section} {n}");
    for f in fields {
        let name: String = f
            .name
            .chars()
            .map(|c| if c.is_whitespace() { '_' } else { c })
            .collect();
        let _ = writeln!(s, "SCALARS {name} double 1");
        let _ = writeln!(s, "LOOKUP_TABLE default");
        for v in f.values {
            let _ = writeln!(s, "{v:.17e}");
        }
    }
}

pub fn write_vtk(
    path: impl AsRef<Path>,
    mesh: &Mesh,
    title: &str,
    point_data: &[Field<'_>],
    cell_data: &[Field<'_>],
) -> Result<()> {
    let text = to_vtk_string(mesh, title, point_data, cell_data)?;
    let mut file = std::fs::File::create(path)?;
    file.write_all(text.as_bytes())?;
    Ok(())
}
