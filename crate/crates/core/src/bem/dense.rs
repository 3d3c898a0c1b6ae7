//! Explicit dense assembly of the boundary operators by double loops.
//!
//! Independent of the multipole machinery (no shared evaluation code):
//! these matrices are the oracle the matrix-free applications are checked
//! against, and they feed the spectrum test of the second-kind operator.

use crate::geom::MolecularSystem;

const INV_4PI: f64 = 1.0 / (4.0 * std::f64::consts::PI);

/// Row-major dense matrix.
#[derive(Debug, Clone)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                row.iter().zip(x).map(|(a, b)| a * b).sum()
            })
            .collect()
    }
}

/// B: n_p × n_c map from charge values to the normal field at centroids,
/// B[i][k] = −n_i·(c_i − r_k) / (4π ε_in ‖c_i − r_k‖³).
pub fn assemble_b(system: &MolecularSystem) -> DenseMatrix {
    let panels = &system.panels;
    let charges = &system.charges;
    let mut b = DenseMatrix::zeros(panels.len(), charges.len());
    let inv_eps = 1.0 / system.dielectric.eps_in;
    for i in 0..panels.len() {
        let c = panels.centroids[i];
        let n = panels.normals[i];
        for k in 0..charges.len() {
            let d = c - charges.positions[k];
            let r = d.norm();
            b.set(i, k, -inv_eps * INV_4PI * n.dot(d) / (r * r * r));
        }
    }
    b
}

/// K′: n_p × n_p adjoint double layer with zero diagonal,
/// K′[i][j] = −a_j n_i·(c_i − c_j) / (4π ‖c_i − c_j‖³), K′[i][i] = 0.
pub fn assemble_kprime(system: &MolecularSystem) -> DenseMatrix {
    let panels = &system.panels;
    let np = panels.len();
    let mut k = DenseMatrix::zeros(np, np);
    for i in 0..np {
        let c = panels.centroids[i];
        let n = panels.normals[i];
        for j in 0..np {
            if i == j {
                continue;
            }
            let d = c - panels.centroids[j];
            let r = d.norm();
            k.set(i, j, -panels.areas[j] * INV_4PI * n.dot(d) / (r * r * r));
        }
    }
    k
}

/// A = I − f·K′, the full second-kind system matrix.
pub fn assemble_a(system: &MolecularSystem) -> DenseMatrix {
    let eps = system.dielectric;
    let f = 2.0 * (eps.eps_out - eps.eps_in) / (eps.eps_in + eps.eps_out);
    let mut a = assemble_kprime(system);
    for v in &mut a.data {
        *v *= -f;
    }
    for i in 0..a.rows {
        let v = a.at(i, i) + 1.0;
        a.set(i, i, v);
    }
    a
}

/// C: n_c × n_p Coulomb map from panel densities to charge-site potentials,
/// C[k][j] = a_j / (4π ‖r_k − c_j‖).
pub fn assemble_c(system: &MolecularSystem) -> DenseMatrix {
    let panels = &system.panels;
    let charges = &system.charges;
    let mut c = DenseMatrix::zeros(charges.len(), panels.len());
    for k in 0..charges.len() {
        let r = charges.positions[k];
        for j in 0..panels.len() {
            let d = (r - panels.centroids[j]).norm();
            c.set(k, j, panels.areas[j] * INV_4PI / d);
        }
    }
    c
}
