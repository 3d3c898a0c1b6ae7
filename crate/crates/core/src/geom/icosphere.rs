//! Subdivided-icosahedron sphere meshes, used as validation geometry for the
//! closed-form sphere energies.

use std::collections::HashMap;

use super::{GeomError, SurfaceMesh, Vec3};

/// Build a sphere mesh of the given radius by subdividing a regular
/// icosahedron `subdivisions` times (20·4^k faces) and projecting every
/// vertex onto the sphere. Winding is outward; vertex normals are radial.
pub fn icosphere(radius: f64, subdivisions: u32) -> Result<SurfaceMesh, GeomError> {
    if subdivisions > 8 {
        return Err(GeomError::SubdivisionOutOfRange(subdivisions));
    }

    let t = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalized().unwrap() * radius)
    .collect();

    let mut triangles: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(triangles.len() * 4);
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                let m = ((vertices[a] + vertices[b]) * 0.5).normalized().unwrap() * radius;
                vertices.push(m);
                vertices.len() - 1
            })
        };
        for &[a, b, c] in &triangles {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        triangles = next;
    }

    let vertex_normals = Some(
        vertices
            .iter()
            .map(|v| v.normalized().unwrap())
            .collect(),
    );
    Ok(SurfaceMesh { vertices, triangles, vertex_normals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::derive_panels;
    use approx::assert_relative_eq;
    use std::collections::HashSet;

    #[test]
    fn subdiv_zero_is_an_icosahedron() {
        let mesh = icosphere(1.0, 0).unwrap();
        assert_eq!(mesh.n_vertices(), 12);
        assert_eq!(mesh.n_triangles(), 20);
    }

    #[test]
    fn face_count_quadruples_per_level() {
        for k in 0..=4 {
            let mesh = icosphere(1.0, k).unwrap();
            assert_eq!(mesh.n_triangles(), 20 * 4usize.pow(k));
        }
    }

    #[test]
    fn euler_characteristic_is_two() {
        for k in 0..=4 {
            let mesh = icosphere(2.0, k).unwrap();
            let v = mesh.n_vertices() as i64;
            let f = mesh.n_triangles() as i64;
            let mut edges: HashSet<(usize, usize)> = HashSet::new();
            for t in &mesh.triangles {
                for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                    edges.insert((a.min(b), a.max(b)));
                }
            }
            assert_eq!(v - edges.len() as i64 + f, 2);
        }
    }

    #[test]
    fn winding_is_outward() {
        let mesh = icosphere(1.0, 1).unwrap();
        let panels = derive_panels(&mesh).unwrap();
        for (c, n) in panels.centroids.iter().zip(&panels.normals) {
            assert!(c.dot(*n) > 0.0, "normal not outward at centroid {c:?}");
        }
        assert!(mesh.signed_volume() > 0.0);
    }

    #[test]
    fn total_area_approaches_sphere_area() {
        let radius = 1.7;
        let mesh = icosphere(radius, 4).unwrap();
        let panels = derive_panels(&mesh).unwrap();
        let exact = 4.0 * std::f64::consts::PI * radius * radius;
        assert_relative_eq!(panels.total_area(), exact, max_relative = 5e-3);
    }

    #[test]
    fn subdivision_out_of_range_is_rejected() {
        assert!(matches!(
            icosphere(1.0, 9),
            Err(GeomError::SubdivisionOutOfRange(9))
        ));
    }
}
