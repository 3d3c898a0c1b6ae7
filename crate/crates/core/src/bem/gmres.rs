//! Restarted GMRES for matrix-free operators.
//!
//! The boundary operator is second-kind (identity plus compact), so plain
//! GMRES with a modest restart converges in a handful of iterations and no
//! preconditioner is used.

/// Why the solver returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmresStatus {
    /// Relative residual reached the tolerance.
    Converged,
    /// Iteration budget exhausted; the best iterate is returned.
    MaxIterations,
    /// Arnoldi breakdown (exactly invariant subspace); best iterate returned.
    Breakdown,
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub solution: Vec<f64>,
    /// Relative residual estimate after every inner iteration.
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    pub status: GmresStatus,
}

#[derive(Debug, Clone, Copy)]
pub struct GmresOptions {
    /// Relative residual tolerance (on ‖b − Ax‖/‖b‖).
    pub tolerance: f64,
    pub restart: usize,
    pub max_iterations: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions { tolerance: 1e-5, restart: 30, max_iterations: 200 }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else if a.abs() > b.abs() {
        let t = b / a;
        let c = 1.0 / (1.0 + t * t).sqrt();
        (c, c * t)
    } else {
        let t = a / b;
        let s = 1.0 / (1.0 + t * t).sqrt();
        (s * t, s)
    }
}

/// Solve A x = b with restarted GMRES, zero initial guess. `apply` computes
/// y = A x. Errors from the operator propagate out.
pub fn gmres<E>(
    mut apply: impl FnMut(&[f64]) -> Result<Vec<f64>, E>,
    b: &[f64],
    opts: &GmresOptions,
) -> Result<GmresOutcome, E> {
    let n = b.len();
    let restart = opts.restart.max(1);
    let b_norm = norm(b);
    let mut x = vec![0.0; n];
    let mut history = Vec::new();

    if b_norm == 0.0 {
        return Ok(GmresOutcome {
            solution: x,
            residual_history: history,
            iterations: 0,
            status: GmresStatus::Converged,
        });
    }

    let mut iterations = 0usize;
    loop {
        // r = b - A x
        let ax = apply(&x)?;
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let r_norm = norm(&r);
        if r_norm / b_norm <= opts.tolerance {
            return Ok(GmresOutcome {
                solution: x,
                residual_history: history,
                iterations,
                status: GmresStatus::Converged,
            });
        }
        if iterations >= opts.max_iterations {
            return Ok(GmresOutcome {
                solution: x,
                residual_history: history,
                iterations,
                status: GmresStatus::MaxIterations,
            });
        }

        // Arnoldi with Givens-rotated Hessenberg
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(restart + 1);
        for v in &mut r {
            *v /= r_norm;
        }
        basis.push(r);
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let mut cs = vec![0.0; restart];
        let mut sn = vec![0.0; restart];
        let mut g = vec![0.0; restart + 1];
        g[0] = r_norm;

        let mut k_done = 0;
        let mut breakdown = false;
        for k in 0..restart {
            iterations += 1;
            let mut w = apply(&basis[k])?;
            for (j, vj) in basis.iter().enumerate().take(k + 1) {
                h[j][k] = dot(&w, vj);
                for (wi, vi) in w.iter_mut().zip(vj) {
                    *wi -= h[j][k] * vi;
                }
            }
            h[k + 1][k] = norm(&w);
            if h[k + 1][k] > 0.0 {
                for wi in &mut w {
                    *wi /= h[k + 1][k];
                }
                basis.push(w);
            } else {
                breakdown = true;
            }

            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let (c, s) = givens(h[k][k], h[k + 1][k]);
            cs[k] = c;
            sn[k] = s;
            h[k][k] = c * h[k][k] + s * h[k + 1][k];
            h[k + 1][k] = 0.0;
            let t = c * g[k] + s * g[k + 1];
            g[k + 1] = -s * g[k] + c * g[k + 1];
            g[k] = t;

            k_done = k + 1;
            history.push(g[k_done].abs() / b_norm);
            if g[k_done].abs() / b_norm <= opts.tolerance
                || iterations >= opts.max_iterations
                || breakdown
            {
                break;
            }
        }

        // back substitution and update
        let mut y = vec![0.0; k_done];
        for i in (0..k_done).rev() {
            let mut sum = g[i];
            for (j, yj) in y.iter().enumerate().take(k_done).skip(i + 1) {
                sum -= h[i][j] * yj;
            }
            y[i] = sum / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&basis[j]) {
                *xi += yj * vi;
            }
        }

        if breakdown {
            let ax = apply(&x)?;
            let r_norm = norm(
                &b.iter()
                    .zip(&ax)
                    .map(|(bi, ai)| bi - ai)
                    .collect::<Vec<_>>(),
            );
            let status = if r_norm / b_norm <= opts.tolerance {
                GmresStatus::Converged
            } else {
                GmresStatus::Breakdown
            };
            return Ok(GmresOutcome {
                solution: x,
                residual_history: history,
                iterations,
                status,
            });
        }
    }
}
