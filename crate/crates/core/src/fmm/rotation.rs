//! Rotation-accelerated multipole-to-local translation.
//!
//! A general M2L costs O(p⁴). Rotating the expansion so the translation
//! vector lies on the +z axis reduces the translation itself to O(p³)
//! (coefficients couple only within equal m), and the two rotations are
//! O(p³) as well. Rotations act degree-by-degree; we build the per-degree
//! rotation matrices in the real orthonormal spherical-harmonic basis with
//! the Ivanic–Ruedenberg recurrence, then conjugate by the diagonal
//! normalization maps between that basis and the factorial-normalized
//! complex coefficients.

use crate::geom::Vec3;
use num_complex::Complex64;

use super::harmonics::{coeff_len, factorial_table, idx};

/// Stack-buffer capacity for per-degree real vectors (2·30 + 1).
const MAX_REAL_DIM: usize = 61;

/// Per-degree real rotation matrices for degrees 0..=p, plus the diagonal
/// normalization scales for converting multipole/local coefficient tables
/// into the real basis and back.
#[derive(Debug, Clone)]
pub struct Rotation {
    pub order: usize,
    /// blocks[l] is (2l+1)×(2l+1), row-major, indices offset by l.
    blocks: Vec<Vec<f64>>,
    /// eta[idx(l,m)] = sqrt((l−m)!(l+m)!)
    eta: Vec<f64>,
}

impl Rotation {
    /// Rotation matrices for the map r ↦ Q r.
    pub fn new(q: &[[f64; 3]; 3], order: usize) -> Rotation {
        let mut blocks: Vec<Vec<f64>> = Vec::with_capacity(order + 1);
        blocks.push(vec![1.0]);
        if order >= 1 {
            // degree-1 real harmonics ordered (y, z, x): entry (a, b) is the
            // coefficient of Z_b in Z_a ∘ Q, i.e. Z_a(Q r̂) = Σ_b G_ab Z_b(r̂).
            let r1 = vec![
                q[1][1], q[1][2], q[1][0], // row a = -1 (function y)
                q[2][1], q[2][2], q[2][0], // row a = 0  (function z)
                q[0][1], q[0][2], q[0][0], // row a = +1 (function x)
            ];
            blocks.push(r1);
            for l in 2..=order {
                let next = recur(l, &blocks[1], &blocks[l - 1]);
                blocks.push(next);
            }
        }

        let fact = factorial_table(2 * order);
        let mut eta = vec![0.0; coeff_len(order)];
        for l in 0..=order {
            for m in 0..=l {
                eta[idx(l, m)] = (fact[l - m] * fact[l + m]).sqrt();
            }
        }
        Rotation { order, blocks, eta }
    }

    /// Rotation aligning unit vector `u` with +z (any such rotation works;
    /// the azimuthal freedom cancels between the forward and inverse
    /// applications).
    pub fn aligning_with_z(u: Vec3, order: usize) -> Rotation {
        let w = u;
        // pick the axis least aligned with u to build a stable triad
        let seed = if u.x.abs() <= u.y.abs() && u.x.abs() <= u.z.abs() {
            Vec3::new(1.0, 0.0, 0.0)
        } else if u.y.abs() <= u.z.abs() {
            Vec3::new(0.0, 1.0, 0.0)
        } else {
            Vec3::new(0.0, 0.0, 1.0)
        };
        let e1 = (seed - w * seed.dot(w)).normalized().expect("u is unit");
        let e2 = w.cross(e1);
        let q = [[e1.x, e1.y, e1.z], [e2.x, e2.y, e2.z], [w.x, w.y, w.z]];
        Rotation::new(&q, order)
    }

    #[inline]
    fn block(&self, l: usize) -> &[f64] {
        &self.blocks[l]
    }

    /// Apply per-degree blocks (or their transposes, i.e. the inverse
    /// rotation) to a vector in the real basis, one degree at a time.
    fn apply_block(&self, l: usize, input: &[f64], output: &mut [f64], inverse: bool) {
        let dim = 2 * l + 1;
        let b = self.block(l);
        if inverse {
            // transpose product with contiguous row access
            output[..dim].fill(0.0);
            for (c, &ic) in input.iter().enumerate().take(dim) {
                let row = &b[c * dim..(c + 1) * dim];
                for (o, &bi) in output.iter_mut().zip(row) {
                    *o += bi * ic;
                }
            }
        } else {
            for (a, out) in output.iter_mut().enumerate().take(dim) {
                let row = &b[a * dim..(a + 1) * dim];
                let mut acc = 0.0;
                for (bi, ic) in row.iter().zip(input.iter()) {
                    acc += bi * ic;
                }
                *out = acc;
            }
        }
    }

    /// Rotate a multipole coefficient table: the result represents the same
    /// field in coordinates w̃ = Q w.
    pub fn rotate_multipole(&self, coeffs: &[Complex64], out: &mut [Complex64]) {
        self.rotate(coeffs, out, false, false);
    }

    /// Inverse of [`rotate_multipole`].
    pub fn rotate_multipole_inverse(&self, coeffs: &[Complex64], out: &mut [Complex64]) {
        self.rotate(coeffs, out, false, true);
    }

    /// Rotate a local coefficient table (same frame map as the multipole
    /// rotation, different normalization diagonal).
    pub fn rotate_local(&self, coeffs: &[Complex64], out: &mut [Complex64]) {
        self.rotate(coeffs, out, true, false);
    }

    /// Inverse of [`rotate_local`].
    pub fn rotate_local_inverse(&self, coeffs: &[Complex64], out: &mut [Complex64]) {
        self.rotate(coeffs, out, true, true);
    }

    fn rotate(&self, coeffs: &[Complex64], out: &mut [Complex64], local: bool, inverse: bool) {
        let p = self.order;
        debug_assert!(2 * p + 1 <= MAX_REAL_DIM);
        let mut real_in = [0.0; MAX_REAL_DIM];
        let mut real_out = [0.0; MAX_REAL_DIM];
        let sqrt2 = std::f64::consts::SQRT_2;
        for l in 0..=p {
            // complex (m >= 0) -> real basis vector of length 2l+1
            let eta0 = self.eta[idx(l, 0)];
            real_in[l] = if local {
                coeffs[idx(l, 0)].re / eta0
            } else {
                coeffs[idx(l, 0)].re * eta0
            };
            for m in 1..=l {
                let c = coeffs[idx(l, m)];
                let eta = self.eta[idx(l, m)];
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                if local {
                    let s = sign * sqrt2 / eta;
                    real_in[l + m] = s * c.re;
                    real_in[l - m] = s * c.im;
                } else {
                    let s = sign * sqrt2 * eta;
                    real_in[l + m] = s * c.re;
                    real_in[l - m] = -s * c.im;
                }
            }

            self.apply_block(l, &real_in[..2 * l + 1], &mut real_out[..2 * l + 1], inverse);

            // real basis -> complex (m >= 0)
            out[idx(l, 0)] = Complex64::new(
                if local {
                    real_out[l] * eta0
                } else {
                    real_out[l] / eta0
                },
                0.0,
            );
            for m in 1..=l {
                let eta = self.eta[idx(l, m)];
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                out[idx(l, m)] = if local {
                    let s = sign * eta / sqrt2;
                    Complex64::new(s * real_out[l + m], s * real_out[l - m])
                } else {
                    let s = sign / (sqrt2 * eta);
                    Complex64::new(s * real_out[l + m], -s * real_out[l - m])
                };
            }
        }
    }
}

/// Ivanic–Ruedenberg recurrence: the degree-l real rotation matrix from the
/// degree-1 and degree-(l−1) matrices.
fn recur(l: usize, r1: &[f64], prev: &[f64]) -> Vec<f64> {
    let li = l as i64;
    let dim = 2 * l + 1;
    let mut out = vec![0.0; dim * dim];

    let prev_dim = dim - 2;
    let prev_at = |a: i64, b: i64| -> f64 {
        if a.abs() > li - 1 || b.abs() > li - 1 {
            0.0
        } else {
            prev[((a + li - 1) as usize) * prev_dim + (b + li - 1) as usize]
        }
    };
    let r1_at = |i: i64, j: i64| -> f64 { r1[((i + 1) as usize) * 3 + (j + 1) as usize] };

    let p_fn = |i: i64, a: i64, b: i64| -> f64 {
        if b == li {
            r1_at(i, 1) * prev_at(a, li - 1) - r1_at(i, -1) * prev_at(a, -li + 1)
        } else if b == -li {
            r1_at(i, 1) * prev_at(a, -li + 1) + r1_at(i, -1) * prev_at(a, li - 1)
        } else {
            r1_at(i, 0) * prev_at(a, b)
        }
    };

    for a in -li..=li {
        for b in -li..=li {
            let denom = if b.abs() == li {
                (2 * li) * (2 * li - 1)
            } else {
                (li + b) * (li - b)
            } as f64;

            let u = (((li + a) * (li - a)) as f64 / denom).sqrt();
            let v = 0.5
                * ((1.0 + if a == 0 { 1.0 } else { 0.0 })
                    * ((li + a.abs() - 1) * (li + a.abs())) as f64
                    / denom)
                    .sqrt()
                * (1.0 - 2.0 * if a == 0 { 1.0 } else { 0.0 });
            let w = -0.5
                * (((li - a.abs() - 1) * (li - a.abs())) as f64 / denom).sqrt()
                * (1.0 - if a == 0 { 1.0 } else { 0.0 });

            let mut entry = 0.0;
            if u != 0.0 {
                entry += u * p_fn(0, a, b);
            }
            if v != 0.0 {
                let vt = if a == 0 {
                    p_fn(1, 1, b) + p_fn(-1, -1, b)
                } else if a > 0 {
                    let d1: f64 = if a == 1 { 1.0 } else { 0.0 };
                    p_fn(1, a - 1, b) * (1.0 + d1).sqrt() - p_fn(-1, -a + 1, b) * (1.0 - d1)
                } else {
                    let d1: f64 = if a == -1 { 1.0 } else { 0.0 };
                    p_fn(1, a + 1, b) * (1.0 - d1) + p_fn(-1, -a - 1, b) * (1.0 + d1).sqrt()
                };
                entry += v * vt;
            }
            if w != 0.0 {
                let wt = if a > 0 {
                    p_fn(1, a + 1, b) + p_fn(-1, -a - 1, b)
                } else {
                    p_fn(1, a - 1, b) - p_fn(-1, -a + 1, b)
                };
                entry += w * wt;
            }
            out[((a + li) as usize) * dim + (b + li) as usize] = entry;
        }
    }
    out
}

/// Axial multipole-to-local translation by distance `t` along +z:
/// L_n^m = (−1)^{n+m} Σ_j conj(M_j^m) (n+j)!/t^{n+j+1}.
pub fn m2l_axial(
    source: &[Complex64],
    t: f64,
    p: usize,
    fact: &[f64],
    out: &mut [Complex64],
) {
    let inv_t = 1.0 / t;
    // scaled[k] = k!/t^{k+1}
    let mut scaled = [0.0; MAX_REAL_DIM];
    let mut acc = inv_t;
    for (k, s) in scaled.iter_mut().enumerate().take(2 * p + 1) {
        *s = fact[k] * acc;
        acc *= inv_t;
    }
    for n in 0..=p {
        for m in 0..=n {
            let sign = if (n + m) % 2 == 0 { 1.0 } else { -1.0 };
            let mut re = 0.0;
            let mut im = 0.0;
            for j in m..=p {
                let s = source[idx(j, m)];
                let f = scaled[n + j];
                re += s.re * f;
                im -= s.im * f;
            }
            out[idx(n, m)] = Complex64::new(sign * re, sign * im);
        }
    }
}

/// Full rotation-accelerated M2L: rotate so the translation vector is
/// axial, translate, rotate back. `rot` must be the rotation aligning
/// `shift.normalized()` with +z, `t = |shift|`.
pub fn m2l_rotated(
    source: &[Complex64],
    rot: &Rotation,
    t: f64,
    p: usize,
    fact: &[f64],
    scratch_a: &mut [Complex64],
    scratch_b: &mut [Complex64],
    out: &mut [Complex64],
) {
    rot.rotate_multipole(source, scratch_a);
    m2l_axial(scratch_a, t, p, fact, scratch_b);
    rot.rotate_local_inverse(scratch_b, scratch_a);
    for (o, v) in out.iter_mut().zip(scratch_a.iter()) {
        *o += v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fmm::expansion::{Expansion, ExpansionKind};
    use crate::fmm::harmonics::get_sym;
    use crate::fmm::operators::{l2p, m2l, m2p, p2m};
    use approx::assert_relative_eq;
    use rand_chacha::ChaCha20Rng;
    use rand_core::{RngCore, SeedableRng};

    fn rand_unit(rng: &mut ChaCha20Rng) -> f64 {
        (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn rand_vec(rng: &mut ChaCha20Rng, scale: f64) -> Vec3 {
        Vec3::new(
            rand_unit(rng) - 0.5,
            rand_unit(rng) - 0.5,
            rand_unit(rng) - 0.5,
        ) * (2.0 * scale)
    }

    fn random_rotation_matrix(rng: &mut ChaCha20Rng) -> [[f64; 3]; 3] {
        let u1 = rand_unit(rng);
        let u2 = rand_unit(rng);
        let u3 = rand_unit(rng);
        let (s1, c1) = ((1.0 - u1).sqrt(), u1.sqrt());
        use std::f64::consts::TAU;
        let m = crate::geom::Mat3::from_unit_quaternion(
            c1 * (TAU * u3).cos(),
            s1 * (TAU * u2).sin(),
            s1 * (TAU * u2).cos(),
            c1 * (TAU * u3).sin(),
        );
        m.rows
    }

    fn apply(q: &[[f64; 3]; 3], v: Vec3) -> Vec3 {
        Vec3::new(
            q[0][0] * v.x + q[0][1] * v.y + q[0][2] * v.z,
            q[1][0] * v.x + q[1][1] * v.y + q[1][2] * v.z,
            q[2][0] * v.x + q[2][1] * v.y + q[2][2] * v.z,
        )
    }

    /// Real orthonormal-convention spherical harmonics (up to the common
    /// per-degree constant), evaluated directly; the oracle for the
    /// rotation blocks.
    fn real_sh(l: usize, a: i64, v: Vec3) -> f64 {
        let r = v.norm();
        let ct = v.z / r;
        let phi = v.y.atan2(v.x);
        let m = a.unsigned_abs() as usize;
        // unnormalized P_l^m without Condon-Shortley
        let somx2 = (1.0 - ct * ct).max(0.0).sqrt();
        let mut pmm = 1.0;
        for k in 1..=m {
            pmm *= (2.0 * k as f64 - 1.0) * somx2;
        }
        let plm = if l == m {
            pmm
        } else {
            let mut pmmp1 = ct * (2.0 * m as f64 + 1.0) * pmm;
            if l == m + 1 {
                pmmp1
            } else {
                for k in (m + 2)..=l {
                    let p = (ct * (2.0 * k as f64 - 1.0) * pmmp1
                        - (k as f64 + m as f64 - 1.0) * pmm)
                        / (k as f64 - m as f64);
                    pmm = pmmp1;
                    pmmp1 = p;
                }
                pmmp1
            }
        };
        let fact = factorial_table(2 * l);
        let lam = (fact[l - m] / fact[l + m]).sqrt();
        if a == 0 {
            lam * plm
        } else if a > 0 {
            std::f64::consts::SQRT_2 * lam * plm * (m as f64 * phi).cos()
        } else {
            std::f64::consts::SQRT_2 * lam * plm * (m as f64 * phi).sin()
        }
    }

    #[test]
    fn blocks_rotate_real_harmonics() {
        let p = 8;
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        for _ in 0..5 {
            let q = random_rotation_matrix(&mut rng);
            let rot = Rotation::new(&q, p);
            let v = rand_vec(&mut rng, 1.0).normalized().unwrap();
            // the defining property of the blocks: Z_a(Q v) = Σ_b G_ab Z_b(v)
            let v_rot = apply(&q, v);
            for l in 0..=p {
                let dim = 2 * l + 1;
                for a in -(l as i64)..=(l as i64) {
                    let lhs = real_sh(l, a, v_rot);
                    let mut rhs = 0.0;
                    for b in -(l as i64)..=(l as i64) {
                        rhs += rot.blocks[l]
                            [((a + l as i64) as usize) * dim + (b + l as i64) as usize]
                            * real_sh(l, b, v);
                    }
                    assert!(
                        (lhs - rhs).abs() < 1e-10,
                        "degree {l} a {a}: {lhs} vs {rhs}"
                    );
                }
            }
        }
    }

    #[test]
    fn blocks_are_orthogonal() {
        let mut rng = ChaCha20Rng::seed_from_u64(22);
        let q = random_rotation_matrix(&mut rng);
        let rot = Rotation::new(&q, 10);
        for l in 0..=10usize {
            let dim = 2 * l + 1;
            let b = rot.block(l);
            for i in 0..dim {
                for j in 0..dim {
                    let mut dot = 0.0;
                    for k in 0..dim {
                        dot += b[i * dim + k] * b[j * dim + k];
                    }
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - expect).abs() < 1e-12, "degree {l} ({i},{j}): {dot}");
                }
            }
        }
    }

    #[test]
    fn rotated_multipole_represents_rotated_field() {
        let p = 10;
        let mut rng = ChaCha20Rng::seed_from_u64(23);
        let pos: Vec<Vec3> = (0..40).map(|_| rand_vec(&mut rng, 0.4)).collect();
        let w: Vec<f64> = (0..40).map(|_| rand_unit(&mut rng) * 2.0 - 1.0).collect();
        let m = p2m(&pos, &w, Vec3::ZERO, p);

        let q = random_rotation_matrix(&mut rng);
        let rot = Rotation::new(&q, p);
        let mut rotated = vec![Complex64::default(); coeff_len(p)];
        rot.rotate_multipole(&m.coeffs, &mut rotated);
        let m_rot = Expansion {
            order: p,
            center: Vec3::ZERO,
            kind: ExpansionKind::Multipole,
            coeffs: rotated.clone(),
        };

        for _ in 0..10 {
            let y = rand_vec(&mut rng, 1.0).normalized().unwrap() * 3.0;
            let phi_plain = m2p(&m, y);
            let phi_rot = m2p(&m_rot, apply(&q, y));
            assert_relative_eq!(phi_rot, phi_plain, max_relative = 1e-12);
        }

        // inverse rotation restores the original coefficients
        let mut back = vec![Complex64::default(); coeff_len(p)];
        rot.rotate_multipole_inverse(&rotated, &mut back);
        for (a, b) in back.iter().zip(&m.coeffs) {
            assert!((a - b).norm() <= 1e-12 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn rotated_local_represents_rotated_field() {
        let p = 9;
        let mut rng = ChaCha20Rng::seed_from_u64(24);
        let pos: Vec<Vec3> = (0..30).map(|_| rand_vec(&mut rng, 0.4)).collect();
        let w: Vec<f64> = (0..30).map(|_| rand_unit(&mut rng) * 2.0 - 1.0).collect();
        let m = p2m(&pos, &w, Vec3::ZERO, p);
        let center = Vec3::new(3.0, -1.0, 2.0);
        let l = m2l(&m, center);

        let q = random_rotation_matrix(&mut rng);
        let rot = Rotation::new(&q, p);
        let mut rotated = vec![Complex64::default(); coeff_len(p)];
        rot.rotate_local(&l.coeffs, &mut rotated);

        // the rotated-local expansion, evaluated about the rotated center in
        // rotated coordinates, must give the same potential
        for _ in 0..10 {
            let dy = rand_vec(&mut rng, 0.2);
            let (phi_plain, _) = l2p(&l, center + dy);
            let l_rot = Expansion {
                order: p,
                center: apply(&q, center),
                kind: ExpansionKind::Local,
                coeffs: rotated.clone(),
            };
            let (phi_rot, _) = l2p(&l_rot, apply(&q, center + dy));
            assert_relative_eq!(phi_rot, phi_plain, max_relative = 1e-11);
        }
    }

    #[test]
    fn axial_translation_matches_general_m2l() {
        let p = 10;
        let fact = factorial_table(2 * p + 1);
        let mut rng = ChaCha20Rng::seed_from_u64(25);
        let pos: Vec<Vec3> = (0..30).map(|_| rand_vec(&mut rng, 0.4)).collect();
        let w: Vec<f64> = (0..30).map(|_| rand_unit(&mut rng) * 2.0 - 1.0).collect();
        let m = p2m(&pos, &w, Vec3::ZERO, p);

        let t = 3.7;
        let general = m2l(&m, Vec3::new(0.0, 0.0, t));
        let mut axial = vec![Complex64::default(); coeff_len(p)];
        m2l_axial(&m.coeffs, t, p, &fact, &mut axial);
        for n in 0..=p {
            for mm in 0..=n {
                let a = axial[idx(n, mm)];
                let g = general.coeffs[idx(n, mm)];
                assert!(
                    (a - g).norm() <= 1e-11 * (1.0 + g.norm()),
                    "axial mismatch at ({n},{mm}): {a} vs {g}"
                );
            }
        }
    }

    /// The cross-validation the sweep relies on: the rotation-accelerated
    /// path agrees coefficient-wise with the plain translation.
    #[test]
    fn rotated_m2l_matches_plain_m2l() {
        let p = 12;
        let fact = factorial_table(2 * p + 1);
        let mut rng = ChaCha20Rng::seed_from_u64(26);
        for _ in 0..8 {
            let pos: Vec<Vec3> = (0..25).map(|_| rand_vec(&mut rng, 0.4)).collect();
            let w: Vec<f64> = (0..25).map(|_| rand_unit(&mut rng) * 2.0 - 1.0).collect();
            let m = p2m(&pos, &w, Vec3::ZERO, p);

            let shift = rand_vec(&mut rng, 1.0).normalized().unwrap() * (2.5 + rand_unit(&mut rng));
            let plain = m2l(&m, shift);

            let rot = Rotation::aligning_with_z(shift.normalized().unwrap(), p);
            let mut out = vec![Complex64::default(); coeff_len(p)];
            let mut sa = vec![Complex64::default(); coeff_len(p)];
            let mut sb = vec![Complex64::default(); coeff_len(p)];
            m2l_rotated(&m.coeffs, &rot, shift.norm(), p, &fact, &mut sa, &mut sb, &mut out);

            let scale = plain
                .coeffs
                .iter()
                .map(|c| c.norm())
                .fold(0.0f64, f64::max);
            for (a, b) in out.iter().zip(&plain.coeffs) {
                assert!(
                    (a - b).norm() <= 1e-12 * scale,
                    "rotated vs plain: {a} vs {b} (scale {scale})"
                );
            }
        }
    }

    #[test]
    fn symmetry_is_preserved_by_rotation() {
        // rotated tables must stay valid conjugate-symmetric tables:
        // m = 0 entries real
        let p = 6;
        let mut rng = ChaCha20Rng::seed_from_u64(27);
        let pos: Vec<Vec3> = (0..10).map(|_| rand_vec(&mut rng, 0.4)).collect();
        let w: Vec<f64> = (0..10).map(|_| rand_unit(&mut rng)).collect();
        let m = p2m(&pos, &w, Vec3::ZERO, p);
        let q = random_rotation_matrix(&mut rng);
        let rot = Rotation::new(&q, p);
        let mut rotated = vec![Complex64::default(); coeff_len(p)];
        rot.rotate_multipole(&m.coeffs, &mut rotated);
        for n in 0..=p {
            assert!(rotated[idx(n, 0)].im.abs() < 1e-12);
            // spot check symmetry usage compiles with get_sym
            let _ = get_sym(&rotated, n, -(n as i64));
        }
    }
}
