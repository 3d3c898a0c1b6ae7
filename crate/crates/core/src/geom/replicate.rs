//! Grid replication of a molecular system with independent random rigid
//! rotations per copy, for building large synthetic solution-like inputs.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use super::{ChargeSet, GeomError, Mat3, MolecularSystem, SurfaceMesh, Vec3};

/// Uniform f64 in [0, 1) from the raw 64-bit stream. Kept explicit (top 53
/// bits) so replicated geometry is bit-identical across platforms and
/// independent of distribution changes in the rand ecosystem.
fn unit_f64(rng: &mut ChaCha20Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform random rotation via Shoemake quaternion sampling: with
/// u1,u2,u3 ~ U[0,1), the quaternion
/// (sqrt(1-u1)·sin 2πu2, sqrt(1-u1)·cos 2πu2, sqrt(u1)·sin 2πu3, sqrt(u1)·cos 2πu3)
/// is uniform on SO(3).
fn random_rotation(rng: &mut ChaCha20Rng) -> Mat3 {
    use std::f64::consts::TAU;
    let u1 = unit_f64(rng);
    let u2 = unit_f64(rng);
    let u3 = unit_f64(rng);
    let (s1, c1) = ((1.0 - u1).sqrt(), u1.sqrt());
    let x = s1 * (TAU * u2).sin();
    let y = s1 * (TAU * u2).cos();
    let z = c1 * (TAU * u3).sin();
    let w = c1 * (TAU * u3).cos();
    Mat3::from_unit_quaternion(w, x, y, z)
}

/// Replicate `system` on an nx×ny×nz Cartesian grid with the given spacing.
///
/// Each copy gets an independent uniformly random rotation about the source
/// bounding-box center, drawn from a ChaCha20 stream seeded with `seed`;
/// charges rotate and translate with their copy. Output is deterministic for
/// a fixed seed. Fails when the spacing is no larger than the bounding-sphere
/// diameter of the source mesh (copies could intersect).
pub fn replicate_grid(
    system: &MolecularSystem,
    nx: usize,
    ny: usize,
    nz: usize,
    spacing: f64,
    seed: u64,
) -> Result<MolecularSystem, GeomError> {
    let (lo, hi) = system.mesh.bounding_box().unwrap_or((Vec3::ZERO, Vec3::ZERO));
    let center = (lo + hi) * 0.5;
    let radius = system
        .mesh
        .vertices
        .iter()
        .map(|v| (*v - center).norm())
        .fold(0.0, f64::max);
    let min_spacing = 2.0 * radius;
    if spacing <= min_spacing {
        return Err(GeomError::SpacingTooSmall { spacing, min_spacing });
    }

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let n_copies = nx * ny * nz;
    let nv = system.mesh.n_vertices();

    let mut mesh = SurfaceMesh {
        vertices: Vec::with_capacity(nv * n_copies),
        triangles: Vec::with_capacity(system.mesh.n_triangles() * n_copies),
        vertex_normals: system
            .mesh
            .vertex_normals
            .as_ref()
            .map(|ns| Vec::with_capacity(ns.len() * n_copies)),
    };
    let mut charges = ChargeSet::default();

    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                let rot = random_rotation(&mut rng);
                let shift = Vec3::new(
                    i as f64 * spacing,
                    j as f64 * spacing,
                    k as f64 * spacing,
                );
                let base = mesh.vertices.len();
                for v in &system.mesh.vertices {
                    mesh.vertices.push(rot.apply(*v - center) + shift);
                }
                if let (Some(out), Some(src)) =
                    (mesh.vertex_normals.as_mut(), system.mesh.vertex_normals.as_ref())
                {
                    for n in src {
                        out.push(rot.apply(*n));
                    }
                }
                for t in &system.mesh.triangles {
                    mesh.triangles.push([t[0] + base, t[1] + base, t[2] + base]);
                }
                for c in 0..system.charges.len() {
                    charges
                        .positions
                        .push(rot.apply(system.charges.positions[c] - center) + shift);
                    charges.charges.push(system.charges.charges[c]);
                    charges.radii.push(system.charges.radii[c]);
                }
            }
        }
    }

    MolecularSystem::new(mesh, charges, system.dielectric)
}
