//! Plain-text OBJ and ASCII PLY output.

use std::fmt::Write as _;
use std::path::Path;

use adaptive_hash_core::mesh::TriangleMesh;

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Ply,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("obj") => Ok(Self::Obj),
            Some("ply") => Ok(Self::Ply),
            _ => Err(CliError::Usage(format!("{}: mesh file must end in .obj or .ply", path.display()))),
        }
    }
}

pub fn to_obj(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {} {} {}", v[0], v[1], v[2]);
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    s
}

pub fn to_ply(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    s.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(s, "element vertex {}", mesh.vertices.len());
    s.push_str("property double x\nproperty double y\nproperty double z\n");
    let _ = writeln!(s, "element face {}", mesh.triangles.len());
    s.push_str("property list uchar int vertex_indices\nend_header\n");
    for v in &mesh.vertices {
        let _ = writeln!(s, "{} {} {}", v[0], v[1], v[2]);
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    s
}

pub fn write(mesh: &TriangleMesh, path: &Path) -> Result<()> {
    mesh.validate()?;
    let text = match MeshFormat::from_path(path)? {
        MeshFormat::Obj => to_obj(mesh),
        MeshFormat::Ply => to_ply(mesh),
    };
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> TriangleMesh {
        TriangleMesh {
            vertices: vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            triangles: vec![[0, 1, 2]],
        }
    }

    #[test]
    fn obj_round_trips_through_a_minimal_parser() {
        let text = to_obj(&triangle());
        let mut verts = Vec::new();
        let mut faces = Vec::new();
        for line in text.lines() {
            let mut it = line.split_whitespace();
            match it.next() {
                Some("v") => verts.push(it.map(|t| t.parse::<f64>().unwrap()).collect::<Vec<_>>()),
                Some("f") => faces.push(it.map(|t| t.parse::<u32>().unwrap() - 1).collect::<Vec<_>>()),
                _ => panic!("{line}"),
            }
        }
        let m = triangle();
        assert_eq!(verts, m.vertices.iter().map(|v| v.to_vec()).collect::<Vec<_>>());
        assert_eq!(faces, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn empty_meshes_are_valid_files() {
        let empty = TriangleMesh::default();
        assert_eq!(to_obj(&empty), "");
        let ply = to_ply(&empty);
        assert!(ply.contains("element vertex 0\n") && ply.contains("element face 0\n"));
        assert!(ply.ends_with("end_header\n"));
    }

    #[test]
    fn ply_header_counts_match() {
        let ply = to_ply(&triangle());
        assert!(ply.contains("element vertex 3\n") && ply.contains("element face 1\n"));
        assert!(ply.ends_with("3 0 1 2\n"));
        assert_eq!(to_ply(&triangle()), ply);
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(MeshFormat::from_path(Path::new("a/b.OBJ")).unwrap(), MeshFormat::Obj);
        assert_eq!(MeshFormat::from_path(Path::new("m.ply")).unwrap(), MeshFormat::Ply);
        assert!(MeshFormat::from_path(Path::new("m.stl")).is_err());
    }
}
