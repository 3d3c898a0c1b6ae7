//! Molecular geometry: triangulated dielectric boundaries, per-panel
//! quantities for the boundary element discretization, and solute point
//! charges.
//!
//! Meshes come from MSMS `.vert`/`.face` files or from the synthetic
//! [`icosphere`] generator; charges come from PQR files. Everything built
//! here is immutable afterwards and safe to share across threads.

mod icosphere;
mod msms;
mod pqr;
mod replicate;
mod vec3;

pub use icosphere::icosphere;
pub use msms::{load_msms, write_msms};
pub use pqr::{load_pqr, write_pqr};
pub use replicate::replicate_grid;
pub use vec3::{Mat3, Vec3};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("triangle {index} references vertex {vertex} but mesh has {n_vertices} vertices")]
    IndexOutOfRange {
        index: usize,
        vertex: usize,
        n_vertices: usize,
    },
    #[error("triangle {index} is degenerate (area {area:.3e} below threshold {threshold:.3e})")]
    DegenerateTriangle {
        index: usize,
        area: f64,
        threshold: f64,
    },
    #[error("subdivision level {0} out of range (0..=8)")]
    SubdivisionOutOfRange(u32),
    #[error(
        "grid spacing {spacing} too small: copies may intersect; minimum safe spacing is {min_spacing}"
    )]
    SpacingTooSmall { spacing: f64, min_spacing: f64 },
    #[error("dielectric constants must be positive and distinct (got {eps_in}, {eps_out})")]
    BadDielectric { eps_in: f64, eps_out: f64 },
}

/// Triangulated closed surface. Triangle indices are 0-based; the winding of
/// each triangle determines the outward normal of the derived panel.
#[derive(Debug, Clone, Default)]
pub struct SurfaceMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    /// Per-vertex normals when the source file carried them.
    pub vertex_normals: Option<Vec<Vec3>>,
}

impl SurfaceMesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Signed volume enclosed by the surface (positive for outward winding).
    pub fn signed_volume(&self) -> f64 {
        let mut six_v = 0.0;
        for t in &self.triangles {
            let a = self.vertices[t[0]];
            let b = self.vertices[t[1]];
            let c = self.vertices[t[2]];
            six_v += a.dot(b.cross(c));
        }
        six_v / 6.0
    }

    /// Reverse the winding of every triangle, flipping all panel normals.
    pub fn flip_winding(&mut self) {
        for t in &mut self.triangles {
            t.swap(1, 2);
        }
    }

    /// Axis-aligned bounding box, `None` for an empty mesh.
    pub fn bounding_box(&self) -> Option<(Vec3, Vec3)> {
        let first = *self.vertices.first()?;
        let mut lo = first;
        let mut hi = first;
        for &v in &self.vertices[1..] {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Some((lo, hi))
    }

    /// Winding number of the surface around `point` (sum of signed solid
    /// angles over 4π). Near 1 for interior points of a closed outward-wound
    /// surface, near 0 for exterior points. Diagnostic only: the solver does
    /// not reject exterior charges.
    pub fn winding_number(&self, point: Vec3) -> f64 {
        let mut total = 0.0;
        for t in &self.triangles {
            let a = self.vertices[t[0]] - point;
            let b = self.vertices[t[1]] - point;
            let c = self.vertices[t[2]] - point;
            let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
            let numerator = a.dot(b.cross(c));
            let denominator =
                la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
            total += 2.0 * numerator.atan2(denominator);
        }
        total / (4.0 * std::f64::consts::PI)
    }
}

/// Per-panel collocation data derived from a mesh: one quadrature point at
/// the triangle centroid, the outward unit normal from the triangle winding,
/// and the flat-triangle area.
#[derive(Debug, Clone, Default)]
pub struct PanelSet {
    pub centroids: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub areas: Vec<f64>,
}

impl PanelSet {
    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }
}

/// Solute point charges with positions in Å, charges in elementary charge
/// units, and radii kept as metadata.
#[derive(Debug, Clone, Default)]
pub struct ChargeSet {
    pub positions: Vec<Vec3>,
    pub charges: Vec<f64>,
    pub radii: Vec<f64>,
}

impl ChargeSet {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn total_charge(&self) -> f64 {
        self.charges.iter().sum()
    }
}

/// Interior and exterior relative permittivities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DielectricModel {
    pub eps_in: f64,
    pub eps_out: f64,
}

impl DielectricModel {
    pub fn new(eps_in: f64, eps_out: f64) -> Result<Self, GeomError> {
        if !(eps_in > 0.0) || !(eps_out > 0.0) || eps_in == eps_out {
            return Err(GeomError::BadDielectric { eps_in, eps_out });
        }
        Ok(DielectricModel { eps_in, eps_out })
    }
}

/// A complete solute description: boundary mesh, derived panels, point
/// charges, and the two-dielectric model.
#[derive(Debug, Clone)]
pub struct MolecularSystem {
    pub mesh: SurfaceMesh,
    pub panels: PanelSet,
    pub charges: ChargeSet,
    pub dielectric: DielectricModel,
}

impl MolecularSystem {
    pub fn new(
        mesh: SurfaceMesh,
        charges: ChargeSet,
        dielectric: DielectricModel,
    ) -> Result<Self, GeomError> {
        let panels = derive_panels(&mesh)?;
        Ok(MolecularSystem { mesh, panels, charges, dielectric })
    }
}

/// Derive centroid, outward unit normal, and area for every triangle.
///
/// The normal orientation follows the triangle winding. A triangle whose
/// area falls below `1e-14` times the squared bounding-box diagonal is
/// rejected as degenerate.
pub fn derive_panels(mesh: &SurfaceMesh) -> Result<PanelSet, GeomError> {
    let n = mesh.n_triangles();
    let mut panels = PanelSet {
        centroids: Vec::with_capacity(n),
        normals: Vec::with_capacity(n),
        areas: Vec::with_capacity(n),
    };
    let scale = match mesh.bounding_box() {
        Some((lo, hi)) => (hi - lo).norm(),
        None => 0.0,
    };
    let threshold = 1e-14 * scale * scale;

    for (index, t) in mesh.triangles.iter().enumerate() {
        for &v in t {
            if v >= mesh.n_vertices() {
                return Err(GeomError::IndexOutOfRange {
                    index,
                    vertex: v,
                    n_vertices: mesh.n_vertices(),
                });
            }
        }
        let a = mesh.vertices[t[0]];
        let b = mesh.vertices[t[1]];
        let c = mesh.vertices[t[2]];
        let cross = (b - a).cross(c - a);
        let area = 0.5 * cross.norm();
        if area <= threshold {
            return Err(GeomError::DegenerateTriangle { index, area, threshold });
        }
        panels.centroids.push((a + b + c) / 3.0);
        panels.normals.push(cross / (2.0 * area));
        panels.areas.push(area);
    }
    Ok(panels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_triangle_mesh() -> SurfaceMesh {
        SurfaceMesh {
            vertices: vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            triangles: vec![[0, 1, 2]],
            vertex_normals: None,
        }
    }

    #[test]
    fn panel_of_unit_triangle() {
        let panels = derive_panels(&unit_triangle_mesh()).unwrap();
        let c = panels.centroids[0];
        assert_relative_eq!(c.x, 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(c.y, 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(panels.areas[0], 0.5, epsilon = 1e-15);
        let n = panels.normals[0];
        assert_relative_eq!(n.z, 1.0, epsilon = 1e-15);
        assert_relative_eq!(n.norm(), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn degenerate_triangle_is_rejected() {
        let mut mesh = unit_triangle_mesh();
        mesh.vertices[2] = Vec3::new(2.0, 0.0, 0.0); // collinear
        let err = derive_panels(&mesh).unwrap_err();
        assert!(matches!(err, GeomError::DegenerateTriangle { index: 0, .. }));
    }

    #[test]
    fn out_of_range_index_is_rejected() {
        let mut mesh = unit_triangle_mesh();
        mesh.triangles[0][2] = 7;
        let err = derive_panels(&mesh).unwrap_err();
        assert!(matches!(err, GeomError::IndexOutOfRange { vertex: 7, .. }));
    }

    #[test]
    fn flip_winding_negates_signed_volume() {
        let mut mesh = icosphere(1.0, 2).unwrap();
        let v = mesh.signed_volume();
        assert!(v > 0.0);
        mesh.flip_winding();
        assert_relative_eq!(mesh.signed_volume(), -v, epsilon = 1e-12);
    }

    #[test]
    fn winding_number_classifies_interior_and_exterior() {
        let mesh = icosphere(1.0, 2).unwrap();
        assert_relative_eq!(mesh.winding_number(Vec3::ZERO), 1.0, epsilon = 1e-9);
        assert_relative_eq!(
            mesh.winding_number(Vec3::new(3.0, 0.0, 0.0)),
            0.0,
            epsilon = 1e-9
        );
    }
}
