//! The six multipole operators on triangular coefficient tables.
//!
//! Expansions here represent plain Σ cᵢ/|r − xᵢ| sums; the 1/(4π) kernel
//! normalization is applied once at field-assembly level by the callers.

use crate::geom::Vec3;
use num_complex::Complex64;

use super::expansion::{Expansion, ExpansionKind};
use super::harmonics::{coeff_len, get_sym, idx, regular, singular};

/// Multipole coefficients of point sources about `center`:
/// M_n^m = Σ_i w_i conj(R_n^m(x_i − center)).
pub fn p2m(positions: &[Vec3], weights: &[f64], center: Vec3, order: usize) -> Expansion {
    let mut e = Expansion::zero(order, center, ExpansionKind::Multipole);
    let mut reg = vec![Complex64::default(); coeff_len(order)];
    for (x, w) in positions.iter().zip(weights) {
        p2m_into(*x, *w, center, order, &mut reg, &mut e.coeffs);
    }
    e
}

pub(super) fn p2m_into(
    x: Vec3,
    w: f64,
    center: Vec3,
    order: usize,
    scratch: &mut [Complex64],
    out: &mut [Complex64],
) {
    regular(x - center, order, scratch);
    for (o, r) in out.iter_mut().zip(scratch.iter()) {
        *o += r.conj() * w;
    }
}

/// Re-center a multipole expansion (exact for coefficients up to the order):
/// M_n^m(parent) = Σ_{j,k} conj(R_j^k(c_child − c_parent)) M_{n−j}^{m−k}(child).
pub fn m2m(child: &Expansion, parent_center: Vec3) -> Expansion {
    debug_assert_eq!(child.kind, ExpansionKind::Multipole);
    let p = child.order;
    let mut out = Expansion::zero(p, parent_center, ExpansionKind::Multipole);
    let mut reg = vec![Complex64::default(); coeff_len(p)];
    regular(child.center - parent_center, p, &mut reg);
    m2m_into(&child.coeffs, &reg, p, &mut out.coeffs);
    out
}

pub(super) fn m2m_into(
    child: &[Complex64],
    shift_regular: &[Complex64],
    p: usize,
    out: &mut [Complex64],
) {
    for n in 0..=p {
        for m in 0..=n {
            let mut acc = Complex64::default();
            for j in 0..=n {
                let rem = n - j;
                for k in -(j as i64)..=(j as i64) {
                    let mk = m as i64 - k;
                    if mk.unsigned_abs() as usize > rem {
                        continue;
                    }
                    acc += get_sym(shift_regular, j, k).conj() * get_sym(child, rem, mk);
                }
            }
            out[idx(n, m)] += acc;
        }
    }
}

/// Convert a multipole expansion into a local expansion about
/// `target_center` (the O(p⁴) translation):
/// L_n^m = (−1)^n Σ_{j,k} M_j^k S_{n+j}^{m+k}(c_target − c_source).
pub fn m2l(source: &Expansion, target_center: Vec3) -> Expansion {
    debug_assert_eq!(source.kind, ExpansionKind::Multipole);
    let p = source.order;
    let mut out = Expansion::zero(p, target_center, ExpansionKind::Local);
    let mut sing = vec![Complex64::default(); coeff_len(2 * p)];
    singular(target_center - source.center, 2 * p, &mut sing);
    m2l_into(&source.coeffs, &sing, p, &mut out.coeffs);
    out
}

pub(super) fn m2l_into(
    source: &[Complex64],
    shift_singular: &[Complex64],
    p: usize,
    out: &mut [Complex64],
) {
    for n in 0..=p {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        for m in 0..=n {
            let mut acc = Complex64::default();
            for j in 0..=p {
                for k in -(j as i64)..=(j as i64) {
                    let mk = m as i64 + k;
                    debug_assert!(mk.unsigned_abs() as usize <= n + j);
                    acc += get_sym(source, j, k) * get_sym(shift_singular, n + j, mk);
                }
            }
            out[idx(n, m)] += acc * sign;
        }
    }
}

/// Re-center a local expansion onto a child center (exact up to the order):
/// L_j^k(child) = Σ_{n≥j,m} L_n^m(parent) conj(R_{n−j}^{m−k}(c_child − c_parent)).
pub fn l2l(parent: &Expansion, child_center: Vec3) -> Expansion {
    debug_assert_eq!(parent.kind, ExpansionKind::Local);
    let p = parent.order;
    let mut out = Expansion::zero(p, child_center, ExpansionKind::Local);
    let mut reg = vec![Complex64::default(); coeff_len(p)];
    regular(child_center - parent.center, p, &mut reg);
    l2l_into(&parent.coeffs, &reg, p, &mut out.coeffs);
    out
}

pub(super) fn l2l_into(
    parent: &[Complex64],
    shift_regular: &[Complex64],
    p: usize,
    out: &mut [Complex64],
) {
    for j in 0..=p {
        for k in 0..=j {
            let mut acc = Complex64::default();
            for n in j..=p {
                let rem = n - j;
                for m in -(n as i64)..=(n as i64) {
                    let mk = m - k as i64;
                    if mk.unsigned_abs() as usize > rem {
                        continue;
                    }
                    acc += get_sym(parent, n, m) * get_sym(shift_regular, rem, mk).conj();
                }
            }
            out[idx(j, k)] += acc;
        }
    }
}

/// Evaluate a local expansion and its gradient at `y`:
/// φ(y) = Σ_{n,m} L_n^m conj(R_n^m(y − center)), ∇φ by the closed-form
/// derivatives of R.
pub fn l2p(local: &Expansion, y: Vec3) -> (f64, Vec3) {
    debug_assert_eq!(local.kind, ExpansionKind::Local);
    let p = local.order;
    let mut reg = vec![Complex64::default(); coeff_len(p)];
    regular(y - local.center, p, &mut reg);
    l2p_from_table(&local.coeffs, &reg, p)
}

pub(super) fn l2p_from_table(coeffs: &[Complex64], reg: &[Complex64], p: usize) -> (f64, Vec3) {
    let mut pot = 0.0;
    let mut grad = Vec3::ZERO;
    for n in 0..=p {
        for m in 0..=n {
            let l = coeffs[idx(n, m)];
            let weight = if m == 0 { 1.0 } else { 2.0 };

            pot += weight * (l * reg[idx(n, m)].conj()).re;

            if n > 0 {
                let up = if m + 1 <= n - 1 {
                    reg[idx(n - 1, m + 1)]
                } else {
                    Complex64::default()
                };
                let dn = if (m as i64 - 1).unsigned_abs() as usize <= n - 1 {
                    get_sym(reg, n - 1, m as i64 - 1)
                } else {
                    Complex64::default()
                };
                let zc = if m <= n - 1 {
                    reg[idx(n - 1, m)]
                } else {
                    Complex64::default()
                };
                let dx = (up - dn) * 0.5;
                let dy = (up + dn) * Complex64::new(0.0, -0.5);
                grad.x += weight * (l * dx.conj()).re;
                grad.y += weight * (l * dy.conj()).re;
                grad.z += weight * (l * zc.conj()).re;
            }
        }
    }
    (pot, grad)
}

/// Evaluate a multipole expansion at a far point (test and diagnostic path):
/// φ(y) = Σ_{n,m} M_n^m S_n^m(y − center).
pub fn m2p(multipole: &Expansion, y: Vec3) -> f64 {
    debug_assert_eq!(multipole.kind, ExpansionKind::Multipole);
    let p = multipole.order;
    let mut sing = vec![Complex64::default(); coeff_len(p)];
    singular(y - multipole.center, p, &mut sing);
    let mut pot = 0.0;
    for n in 0..=p {
        pot += (multipole.coeffs[idx(n, 0)] * sing[idx(n, 0)]).re;
        for m in 1..=n {
            pot += 2.0 * (multipole.coeffs[idx(n, m)] * sing[idx(n, m)]).re;
        }
    }
    pot
}

/// Raw 1/r pairwise accumulation (no 4π): adds Σ w_i/|y−x_i| and its
/// gradient into per-target slots. `skip` lets shared-set callers exclude
/// the diagonal; returns Err on a zero distance that is not skipped.
pub(super) fn p2p_raw(
    src_pos: &[Vec3],
    src_w: &[f64],
    tgt_pos: &[Vec3],
    pot: &mut [f64],
    grad: &mut [Vec3],
    mut skip: impl FnMut(usize, usize) -> bool,
) -> Result<(), (usize, usize)> {
    for (t, &y) in tgt_pos.iter().enumerate() {
        let mut acc_p = 0.0;
        let mut acc_g = Vec3::ZERO;
        for (s, (&x, &w)) in src_pos.iter().zip(src_w).enumerate() {
            let d = y - x;
            let r2 = d.norm_sq();
            if r2 == 0.0 {
                if skip(s, t) {
                    continue;
                }
                return Err((s, t));
            }
            let inv_r = 1.0 / r2.sqrt();
            let inv_r3 = inv_r / r2;
            acc_p += w * inv_r;
            acc_g += d * (-w * inv_r3);
        }
        pot[t] += acc_p;
        grad[t] += acc_g;
    }
    Ok(())
}
