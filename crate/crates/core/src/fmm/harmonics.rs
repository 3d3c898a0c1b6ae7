//! Complex solid harmonics in the factorial normalization
//!
//!   R_n^m(r) = P_n^m(cos θ) e^{imφ} r^n / (n+m)!
//!   S_n^m(r) = (n−m)! P_n^m(cos θ) e^{imφ} / r^{n+1}
//!
//! with the Condon–Shortley phase inside P_n^m. Both families satisfy the
//! conjugate symmetry F_n^{-m} = (−1)^m conj(F_n^m), so only m ≥ 0 is stored
//! (triangular layout, (p+1)(p+2)/2 entries). With these normalizations the
//! kernel expands as
//!
//!   1/|y − x| = Σ_{n,m} conj(R_n^m(x)) S_n^m(y)        (|y| > |x|)
//!
//! and the translation identities used by the multipole operators carry no
//! extra prefactors:
//!
//!   R_n^m(a+b) = Σ_{j,k} R_j^k(a) R_{n−j}^{m−k}(b)
//!   S_n^m(a+b) = Σ_{j,k} (−1)^j conj(R_j^k(a)) S_{n+j}^{m+k}(b)   (|b| > |a|)
//!
//! Cartesian derivatives close within the family:
//!
//!   ∂z R_n^m = R_{n−1}^m,   (∂x ± i∂y) R_n^m = ±R_{n−1}^{m±1}.

use crate::geom::Vec3;
use num_complex::Complex64;

/// Number of stored (m ≥ 0) coefficients for truncation order `p`.
pub const fn coeff_len(p: usize) -> usize {
    (p + 1) * (p + 2) / 2
}

/// Triangular index of (n, m) with 0 ≤ m ≤ n.
#[inline]
pub const fn idx(n: usize, m: usize) -> usize {
    n * (n + 1) / 2 + m
}

/// Entry (n, m) of a conjugate-symmetric triangular table, any sign of m.
#[inline]
pub fn get_sym(table: &[Complex64], n: usize, m: i64) -> Complex64 {
    let am = m.unsigned_abs() as usize;
    debug_assert!(am <= n);
    let v = table[idx(n, am)];
    if m >= 0 {
        v
    } else if am % 2 == 0 {
        v.conj()
    } else {
        -v.conj()
    }
}

/// Factorials 0! ..= max! as f64.
pub fn factorial_table(max: usize) -> Vec<f64> {
    let mut f = Vec::with_capacity(max + 1);
    f.push(1.0);
    for k in 1..=max {
        f.push(f[k - 1] * k as f64);
    }
    f
}

/// Fill `out` with R_n^m(v) for 0 ≤ m ≤ n ≤ p.
pub fn regular(v: Vec3, p: usize, out: &mut [Complex64]) {
    debug_assert_eq!(out.len(), coeff_len(p));
    let xi = Complex64::new(v.x, v.y);
    let z = v.z;
    let r2 = v.norm_sq();

    out[idx(0, 0)] = Complex64::new(1.0, 0.0);
    for m in 0..=p {
        if m > 0 {
            out[idx(m, m)] = out[idx(m - 1, m - 1)] * xi * (-0.5 / m as f64);
        }
        if m + 1 <= p {
            out[idx(m + 1, m)] = out[idx(m, m)] * z;
        }
        for n in (m + 2)..=p {
            let nf = n as f64;
            let mf = m as f64;
            out[idx(n, m)] = (out[idx(n - 1, m)] * z * (2.0 * nf - 1.0)
                - out[idx(n - 2, m)] * r2)
                / ((nf + mf) * (nf - mf));
        }
    }
}

/// Fill `out` with S_n^m(v) for 0 ≤ m ≤ n ≤ p. `v` must be nonzero.
pub fn singular(v: Vec3, p: usize, out: &mut [Complex64]) {
    debug_assert_eq!(out.len(), coeff_len(p));
    let xi = Complex64::new(v.x, v.y);
    let z = v.z;
    let r2 = v.norm_sq();
    let inv_r2 = 1.0 / r2;

    out[idx(0, 0)] = Complex64::new(inv_r2.sqrt(), 0.0);
    for m in 0..=p {
        if m > 0 {
            out[idx(m, m)] =
                out[idx(m - 1, m - 1)] * xi * (-(2.0 * m as f64 - 1.0) * inv_r2);
        }
        if m + 1 <= p {
            out[idx(m + 1, m)] = out[idx(m, m)] * z * ((2.0 * m as f64 + 1.0) * inv_r2);
        }
        for n in (m + 2)..=p {
            let nf = n as f64;
            let mf = m as f64;
            out[idx(n, m)] = (out[idx(n - 1, m)] * z * (2.0 * nf - 1.0)
                - out[idx(n - 2, m)] * ((nf - 1.0) * (nf - 1.0) - mf * mf))
                * inv_r2;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand_chacha::ChaCha20Rng;
    use rand_core::{RngCore, SeedableRng};

    fn rand_vec(rng: &mut ChaCha20Rng, scale: f64) -> Vec3 {
        let mut unit = || (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64) - 0.5;
        Vec3::new(unit(), unit(), unit()) * (2.0 * scale)
    }

    /// Associated Legendre P_n^m(x) with Condon–Shortley phase, direct
    /// recurrence — the independent reference for the solid-harmonic tables.
    fn legendre(n: usize, m: usize, x: f64) -> f64 {
        let somx2 = (1.0 - x * x).max(0.0).sqrt();
        let mut pmm = 1.0;
        for k in 1..=m {
            pmm *= -(2.0 * k as f64 - 1.0) * somx2;
        }
        if n == m {
            return pmm;
        }
        let mut pmmp1 = x * (2.0 * m as f64 + 1.0) * pmm;
        if n == m + 1 {
            return pmmp1;
        }
        for k in (m + 2)..=n {
            let p = (x * (2.0 * k as f64 - 1.0) * pmmp1
                - (k as f64 + m as f64 - 1.0) * pmm)
                / (k as f64 - m as f64);
            pmm = pmmp1;
            pmmp1 = p;
        }
        pmmp1
    }

    fn reference_regular(v: Vec3, n: usize, m: usize, fact: &[f64]) -> Complex64 {
        let r = v.norm();
        if r == 0.0 {
            return if n == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        let ct = v.z / r;
        let phi = v.y.atan2(v.x);
        let p = legendre(n, m, ct);
        Complex64::from_polar(1.0, m as f64 * phi) * (p * r.powi(n as i32) / fact[n + m])
    }

    fn reference_singular(v: Vec3, n: usize, m: usize, fact: &[f64]) -> Complex64 {
        let r = v.norm();
        let ct = v.z / r;
        let phi = v.y.atan2(v.x);
        let p = legendre(n, m, ct);
        Complex64::from_polar(1.0, m as f64 * phi) * (fact[n - m] * p / r.powi(n as i32 + 1))
    }

    #[test]
    fn recurrences_match_spherical_reference() {
        let p = 10;
        let fact = factorial_table(2 * p + 1);
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let mut reg = vec![Complex64::default(); coeff_len(p)];
        let mut sing = vec![Complex64::default(); coeff_len(p)];
        for _ in 0..20 {
            let v = rand_vec(&mut rng, 1.5);
            regular(v, p, &mut reg);
            singular(v, p, &mut sing);
            for n in 0..=p {
                for m in 0..=n {
                    let rr = reference_regular(v, n, m, &fact);
                    let rs = reference_singular(v, n, m, &fact);
                    let scale_r = rr.norm().max(1e-30);
                    let scale_s = rs.norm().max(1e-30);
                    assert!(
                        (reg[idx(n, m)] - rr).norm() / scale_r < 1e-10,
                        "R({n},{m}) at {v:?}: {} vs {}",
                        reg[idx(n, m)],
                        rr
                    );
                    assert!(
                        (sing[idx(n, m)] - rs).norm() / scale_s < 1e-10,
                        "S({n},{m}) at {v:?}: {} vs {}",
                        sing[idx(n, m)],
                        rs
                    );
                }
            }
        }
    }

    #[test]
    fn kernel_expansion_converges_to_inverse_distance() {
        let p = 20;
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let mut reg = vec![Complex64::default(); coeff_len(p)];
        let mut sing = vec![Complex64::default(); coeff_len(p)];
        for _ in 0..10 {
            let x = rand_vec(&mut rng, 0.1);
            let mut y = rand_vec(&mut rng, 1.0);
            while y.norm() < 0.8 {
                y = rand_vec(&mut rng, 1.0);
            }
            regular(x, p, &mut reg);
            singular(y, p, &mut sing);
            let mut sum = 0.0;
            for n in 0..=p {
                sum += (reg[idx(n, 0)].conj() * sing[idx(n, 0)]).re;
                for m in 1..=n {
                    sum += 2.0 * (reg[idx(n, m)].conj() * sing[idx(n, m)]).re;
                }
            }
            let exact = 1.0 / (y - x).norm();
            assert_relative_eq!(sum, exact, max_relative = 1e-12);
        }
    }

    #[test]
    fn regular_addition_theorem() {
        let p = 8;
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let mut ra = vec![Complex64::default(); coeff_len(p)];
        let mut rb = vec![Complex64::default(); coeff_len(p)];
        let mut rab = vec![Complex64::default(); coeff_len(p)];
        for _ in 0..10 {
            let a = rand_vec(&mut rng, 0.7);
            let b = rand_vec(&mut rng, 0.9);
            regular(a, p, &mut ra);
            regular(b, p, &mut rb);
            regular(a + b, p, &mut rab);
            for n in 0..=p {
                for m in 0..=n {
                    let mut sum = Complex64::default();
                    for j in 0..=n {
                        for k in -(j as i64)..=(j as i64) {
                            let mk = m as i64 - k;
                            if mk.unsigned_abs() as usize > n - j {
                                continue;
                            }
                            sum += get_sym(&ra, j, k) * get_sym(&rb, n - j, mk);
                        }
                    }
                    let r = rab[idx(n, m)];
                    assert!(
                        (sum - r).norm() <= 1e-11 * r.norm().max(1.0),
                        "R addition failed at ({n},{m}): {sum} vs {r}"
                    );
                }
            }
        }
    }

    #[test]
    fn derivative_identities_hold() {
        let p = 7;
        let h = 1e-6;
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let len = coeff_len(p);
        let (mut c0, mut cx, mut cy, mut cz) = (
            vec![Complex64::default(); len],
            vec![Complex64::default(); len],
            vec![Complex64::default(); len],
            vec![Complex64::default(); len],
        );
        for _ in 0..5 {
            let v = rand_vec(&mut rng, 1.0);
            regular(v, p, &mut c0);
            regular(v + Vec3::new(h, 0.0, 0.0), p, &mut cx);
            regular(v + Vec3::new(0.0, h, 0.0), p, &mut cy);
            regular(v + Vec3::new(0.0, 0.0, h), p, &mut cz);
            for n in 1..=p {
                for m in 0..=n {
                    let dx = (cx[idx(n, m)] - c0[idx(n, m)]) / h;
                    let dy = (cy[idx(n, m)] - c0[idx(n, m)]) / h;
                    let dz = (cz[idx(n, m)] - c0[idx(n, m)]) / h;
                    let up = if m + 1 <= n - 1 {
                        get_sym(&c0, n - 1, m as i64 + 1)
                    } else {
                        Complex64::default()
                    };
                    let dn = if (m as i64 - 1).unsigned_abs() as usize <= n - 1 {
                        get_sym(&c0, n - 1, m as i64 - 1)
                    } else {
                        Complex64::default()
                    };
                    let zc = if m <= n - 1 {
                        c0[idx(n - 1, m)]
                    } else {
                        Complex64::default()
                    };
                    let ax = (up - dn) * 0.5;
                    let ay = (up + dn) * Complex64::new(0.0, -0.5);
                    assert!((dx - ax).norm() < 2e-5 * (1.0 + ax.norm()));
                    assert!((dy - ay).norm() < 2e-5 * (1.0 + ay.norm()));
                    assert!((dz - zc).norm() < 2e-5 * (1.0 + zc.norm()));
                }
            }
        }
    }
}
