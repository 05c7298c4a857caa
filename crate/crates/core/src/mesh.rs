//! Plain-text triangle meshes.
//!
//! Format: one record per line, `v x y z` for a vertex, `f i j k` for a
//! triangle with 1-based vertex indices, optional `vn x y z` per-vertex
//! normals (in vertex order), `#` starts a comment.

use std::path::Path;

use crate::aabb::Aabb;
use crate::error::{Error, Result};
use crate::math::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub positions: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub faces: Vec<[u32; 3]>,
    pub aabb: Aabb,
}

impl TriangleMesh {
    pub fn from_parts(positions: Vec<Vec3>, faces: Vec<[u32; 3]>) -> Self {
        let normals = vertex_normals(&positions, &faces);
        let aabb = Aabb::from_points(&positions);
        TriangleMesh {
            positions,
            normals,
            faces,
            aabb,
        }
    }

    pub fn triangle(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [
            self.positions[a as usize],
            self.positions[b as usize],
            self.positions[c as usize],
        ]
    }

    pub fn face_normal(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.triangle(f);
        (b - a).cross(c - a).normalize()
    }

    /// Copy with every vertex scaled, rotated about +z, then translated.
    pub fn transformed(&self, scale: f64, rotation_deg: f64, offset: Vec3) -> TriangleMesh {
        let positions: Vec<Vec3> = self
            .positions
            .iter()
            .map(|p| (*p * scale).rotate_z(rotation_deg) + offset)
            .collect();
        let normals = self.normals.iter().map(|n| n.rotate_z(rotation_deg)).collect();
        let aabb = Aabb::from_points(&positions);
        TriangleMesh {
            positions,
            normals,
            faces: self.faces.clone(),
            aabb,
        }
    }
}

/// Area-weighted vertex normals; vertices with no (non-degenerate) faces get +z.
fn vertex_normals(positions: &[Vec3], faces: &[[u32; 3]]) -> Vec<Vec3> {
    let mut acc = vec![Vec3::ZERO; positions.len()];
    for f in faces {
        let [a, b, c] = f.map(|i| positions[i as usize]);
        let n = (b - a).cross(c - a);
        for &i in f {
            acc[i as usize] += n;
        }
    }
    acc.into_iter()
        .map(|n| n.try_normalize().unwrap_or(Vec3::Z))
        .collect()
}

pub fn parse_mesh(text: &str, origin: &Path) -> Result<TriangleMesh> {
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    };
    let mut positions = Vec::new();
    let mut normals = Vec::new();
    let mut faces = Vec::new();
    let mut face_lines = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let tag = parts.next().unwrap_or_default();
        let rest: Vec<&str> = parts.collect();
        match tag {
            "v" | "vn" => {
                if rest.len() != 3 {
                    return Err(err(line_no, format!("`{tag}` needs 3 coordinates, got {}", rest.len())));
                }
                let mut xyz = [0.0; 3];
                for (k, s) in rest.iter().enumerate() {
                    xyz[k] = s
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| err(line_no, format!("bad number `{s}`")))?;
                }
                if tag == "v" {
                    positions.push(Vec3::from(xyz));
                } else {
                    normals.push(Vec3::from(xyz));
                }
            }
            "f" => {
                if rest.len() != 3 {
                    return Err(err(line_no, format!("face needs 3 indices, got {}", rest.len())));
                }
                let mut ijk = [0u32; 3];
                for (k, s) in rest.iter().enumerate() {
                    let i: u32 = s
                        .parse()
                        .map_err(|_| err(line_no, format!("bad index `{s}`")))?;
                    if i == 0 {
                        return Err(err(line_no, "indices are 1-based".into()));
                    }
                    ijk[k] = i - 1;
                }
                faces.push(ijk);
                face_lines.push(line_no);
            }
            other => return Err(err(line_no, format!("unknown record `{other}`"))),
        }
    }

    if positions.is_empty() || faces.is_empty() {
        return Err(err(0, "mesh has no vertices or no faces".into()));
    }
    for (f, &line_no) in faces.iter().zip(&face_lines) {
        if let Some(&bad) = f.iter().find(|&&i| i as usize >= positions.len()) {
            return Err(err(
                line_no,
                format!("index {} exceeds vertex count {}", bad + 1, positions.len()),
            ));
        }
    }

    let mut mesh = TriangleMesh::from_parts(positions, faces);
    if !normals.is_empty() {
        if normals.len() != mesh.positions.len() {
            return Err(err(
                0,
                format!(
                    "{} normals for {} vertices",
                    normals.len(),
                    mesh.positions.len()
                ),
            ));
        }
        mesh.normals = normals
            .into_iter()
            .map(|n| n.try_normalize().unwrap_or(Vec3::Z))
            .collect();
    }
    Ok(mesh)
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::GeometryLoad {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    parse_mesh(&text, path)
}

/// Meshes shipped with the crate, by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("tetrahedron", include_str!("../assets/meshes/tetrahedron.mesh")),
    ("octahedron", include_str!("../assets/meshes/octahedron.mesh")),
    ("icosphere", include_str!("../assets/meshes/icosphere.mesh")),
    ("cone", include_str!("../assets/meshes/cone.mesh")),
    ("cylinder", include_str!("../assets/meshes/cylinder.mesh")),
    ("torus", include_str!("../assets/meshes/torus.mesh")),
    ("pyramid", include_str!("../assets/meshes/pyramid.mesh")),
    ("prism", include_str!("../assets/meshes/prism.mesh")),
    ("mug", include_str!("../assets/meshes/mug.mesh")),
    ("stool", include_str!("../assets/meshes/stool.mesh")),
];

pub fn bundled(name: &str) -> Result<TriangleMesh> {
    let (_, text) = BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::GeometryLoad {
            path: format!("bundled:{name}").into(),
            msg: "no such bundled mesh".into(),
        })?;
    parse_mesh(text, Path::new(&format!("bundled:{name}")))
}
