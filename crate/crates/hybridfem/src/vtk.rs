//! VTK legacy ASCII export of the mapped geometry and solution fields.
//!
//! Tetrahedra are written as 10-node quadratic cells (so the curved junction
//! geometry is visible), hexahedra as 8-node tri-linear cells. Points are the
//! mesh vertices followed by one point per tetrahedron edge node.

use std::fmt::Write as _;
use std::path::Path;

use crate::geometry::Mappings;
use crate::mesh::HybridMesh;
use crate::spaces::{DofSystem, SpaceKind};

const VTK_QUADRATIC_TETRA: u8 = 24;
const VTK_HEXAHEDRON: u8 = 12;

/// VTK orders quadratic tet edge nodes as (01, 12, 02, 03, 13, 23); ours are
/// lexicographic (01, 02, 03, 12, 13, 23).
const EDGE_PERM: [usize; 6] = [0, 3, 1, 2, 4, 5];

fn mesh_points_and_cells(mesh: &HybridMesh, mappings: &Mappings) -> (String, String, String, usize) {
    let edge_index: Vec<(&(usize, usize), &[f64; 3])> = mappings.edge_nodes.iter().collect();
    let edge_pos: std::collections::BTreeMap<(usize, usize), usize> = edge_index
        .iter()
        .enumerate()
        .map(|(i, (k, _))| (**k, mesh.n_vertices() + i))
        .collect();

    let n_points = mesh.n_vertices() + edge_index.len();
    let mut points = String::new();
    let _ = writeln!(points, "POINTS {} double", n_points);
    for v in &mesh.vertices {
        let _ = writeln!(points, "{} {} {}", v[0], v[1], v[2]);
    }
    for (_, node) in &edge_index {
        let _ = writeln!(points, "{} {} {}", node[0], node[1], node[2]);
    }

    let n_cells = mesh.n_cells();
    let total_ids = mesh.tets.len() * 11 + mesh.hexes.len() * 9;
    let mut cells = String::new();
    let _ = writeln!(cells, "CELLS {} {}", n_cells, total_ids);
    for tet in &mesh.tets {
        let mut ids = Vec::with_capacity(10);
        ids.extend(tet.iter().copied());
        for &e in &EDGE_PERM {
            let [i, j] = crate::refelem::TET_EDGES[e];
            ids.push(edge_pos[&crate::mesh::edge_key(tet[i], tet[j])]);
        }
        let _ = writeln!(
            cells,
            "10 {}",
            ids.iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        );
    }
    for hex in &mesh.hexes {
        let _ = writeln!(
            cells,
            "8 {}",
            hex.iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        );
    }

    let mut types = String::new();
    let _ = writeln!(types, "CELL_TYPES {}", n_cells);
    for _ in &mesh.tets {
        let _ = writeln!(types, "{}", VTK_QUADRATIC_TETRA);
    }
    for _ in &mesh.hexes {
        let _ = writeln!(types, "{}", VTK_HEXAHEDRON);
    }
    (points, cells, types, n_points)
}

fn header(title: &str) -> String {
    format!("# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
}

/// Write the mapped mesh geometry without fields.
pub fn write_mesh_vtk(path: &Path, mesh: &HybridMesh, mappings: &Mappings) -> std::io::Result<()> {
    let (points, cells, types, _) = mesh_points_and_cells(mesh, mappings);
    std::fs::write(path, format!("{}{points}{cells}{types}", header("hybridfem mesh")))
}

/// Write the solution sampled at every point: vertex values at vertex points
/// and midpoint values at edge-node points (the raw expansion of the
/// solution, which Lagrange-interpolates both). For the midpoint-bearing
/// space `Hyb12` (and `DHyb12`) an extra `midpoint_dof` array isolates the
/// raw edge values.
pub fn write_solution_vtk(
    path: &Path,
    mesh: &HybridMesh,
    mappings: &Mappings,
    dofs: &DofSystem,
    solution: &[f64],
    n_components: usize,
) -> std::io::Result<()> {
    let (points, cells, types, n_points) = mesh_points_and_cells(mesh, mappings);
    let raw: Vec<Vec<f64>> = (0..n_components)
        .map(|c| dofs.expand(&solution[c * dofs.n_free..(c + 1) * dofs.n_free]))
        .collect();
    let mut data = String::new();
    let _ = writeln!(data, "POINT_DATA {}", n_points);
    if n_components == 1 {
        let _ = writeln!(data, "SCALARS u double 1");
        let _ = writeln!(data, "LOOKUP_TABLE default");
        for v in raw[0].iter().take(n_points) {
            let _ = writeln!(data, "{}", v);
        }
    } else {
        let _ = writeln!(data, "VECTORS u double");
        for p in 0..n_points {
            let _ = writeln!(data, "{} {} {}", raw[0][p], raw[1][p], raw[2][p]);
        }
    }
    if matches!(dofs.space, SpaceKind::Hyb12 | SpaceKind::DHyb12) {
        if n_components == 1 {
            let _ = writeln!(data, "SCALARS midpoint_dof double 1");
            let _ = writeln!(data, "LOOKUP_TABLE default");
            for p in 0..n_points {
                let v = if p < mesh.n_vertices() { 0.0 } else { raw[0][p] };
                let _ = writeln!(data, "{}", v);
            }
        } else {
            let _ = writeln!(data, "VECTORS midpoint_dof double");
            for p in 0..n_points {
                if p < mesh.n_vertices() {
                    let _ = writeln!(data, "0 0 0");
                } else {
                    let _ = writeln!(data, "{} {} {}", raw[0][p], raw[1][p], raw[2][p]);
                }
            }
        }
    }
    std::fs::write(
        path,
        format!("{}{points}{cells}{types}{data}", header("hybridfem solution")),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mappings, MappingMode};
    use crate::mesh::{build_interfaces, samples};
    use crate::spaces::build_space;

    #[test]
    fn mesh_export_has_quadratic_tets_and_hexes() {
        let mesh = samples::fig3b(0.2);
        let ifaces = build_interfaces(&mesh).unwrap();
        let maps = build_mappings(&mesh, &ifaces, MappingMode::Quadratic).unwrap();
        let dir = std::env::temp_dir().join("hybridfem_vtk_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("mesh.vtk");
        write_mesh_vtk(&path, &mesh, &maps).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0"));
        // 9 vertices + 9 edge nodes.
        assert!(text.contains("POINTS 18 double"));
        assert!(text.contains("CELLS 3"));
        let types: Vec<&str> = text
            .lines()
            .skip_while(|l| !l.starts_with("CELL_TYPES"))
            .skip(1)
            .take(3)
            .collect();
        assert_eq!(types, vec!["24", "24", "12"]);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn solution_export_carries_point_data() {
        let mesh = samples::fig3b(0.1);
        let ifaces = build_interfaces(&mesh).unwrap();
        let maps = build_mappings(&mesh, &ifaces, MappingMode::Quadratic).unwrap();
        let dofs = build_space(&mesh, &maps, &ifaces, crate::spaces::SpaceKind::Hyb12).unwrap();
        let solution: Vec<f64> = (0..dofs.n_free).map(|i| i as f64).collect();
        let dir = std::env::temp_dir().join("hybridfem_vtk_test2");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("solution.vtk");
        write_solution_vtk(&path, &mesh, &maps, &dofs, &solution, 1).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("POINT_DATA 18"));
        assert!(text.contains("SCALARS u double 1"));
        assert!(text.contains("SCALARS midpoint_dof double 1"));
        std::fs::remove_dir_all(&dir).ok();
    }
}
