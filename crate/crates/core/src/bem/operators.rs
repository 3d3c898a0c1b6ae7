//! Matrix-free applications of the boundary operators.
//!
//! One application = one field evaluation. The `Engine` selects the fast
//! multipole path or exact direct summation (the latter is the oracle used
//! by the operator-equivalence tests and is exact to round-off).

use std::cell::RefCell;

use crate::fmm::{
    self, direct_evaluate, evaluate, evaluate_self, FieldResult, FmmConfig, SourceSet,
    SweepTimings, TargetSet,
};
use crate::geom::MolecularSystem;

use super::{BibeeVariant, SolveError};

/// How operator applications evaluate their N-body sums.
#[derive(Debug, Clone)]
pub enum Engine {
    /// Exact O(N²) summation.
    Direct,
    /// Fast multipole evaluation with this configuration.
    Fmm(FmmConfig),
}

/// Shared state for the boundary operators of one molecular system:
/// geometry, dielectric factors, evaluation engine, and accumulated
/// evaluation timings.
pub struct OperatorContext<'a> {
    pub system: &'a MolecularSystem,
    pub engine: Engine,
    /// f = 2(ε_out − ε_in)/(ε_in + ε_out).
    pub f: f64,
    /// ε̂ = 1 − ε_in/ε_out.
    pub eps_hat: f64,
    timings: RefCell<SweepTimings>,
}

impl<'a> OperatorContext<'a> {
    pub fn new(system: &'a MolecularSystem, engine: Engine) -> Self {
        let eps = system.dielectric;
        OperatorContext {
            system,
            engine,
            f: 2.0 * (eps.eps_out - eps.eps_in) / (eps.eps_in + eps.eps_out),
            eps_hat: 1.0 - eps.eps_in / eps.eps_out,
            timings: RefCell::new(SweepTimings::default()),
        }
    }

    /// Evaluation timings accumulated over all operator applications.
    pub fn timings(&self) -> SweepTimings {
        *self.timings.borrow()
    }

    fn eval_distinct(
        &self,
        sources: &SourceSet,
        targets: &TargetSet,
    ) -> Result<FieldResult, fmm::FmmError> {
        match &self.engine {
            Engine::Direct => direct_evaluate(sources, targets, false),
            Engine::Fmm(cfg) => {
                let out = evaluate(sources, targets, cfg)?;
                self.timings.borrow_mut().accumulate(&out.timings);
                Ok(out.field)
            }
        }
    }

    fn eval_shared(
        &self,
        sources: &SourceSet,
        normals: &[crate::geom::Vec3],
    ) -> Result<FieldResult, fmm::FmmError> {
        match &self.engine {
            Engine::Direct => {
                let targets = TargetSet::with_normals(sources.positions.clone(), normals.to_vec());
                direct_evaluate(sources, &targets, true)
            }
            Engine::Fmm(cfg) => {
                let out = evaluate_self(sources, Some(normals), cfg)?;
                self.timings.borrow_mut().accumulate(&out.timings);
                Ok(out.field)
            }
        }
    }

    /// Normal Coulomb field of the solute charges at the panel centroids,
    /// E_n(c_i) = (1/ε_in) Σ_k q_k ∂/∂n_i [1/(4π‖c_i − r_k‖)].
    pub fn apply_b(&self) -> Result<Vec<f64>, SolveError> {
        let sources = SourceSet::new(
            self.system.charges.positions.clone(),
            self.system.charges.charges.clone(),
        );
        let targets = TargetSet::with_normals(
            self.system.panels.centroids.clone(),
            self.system.panels.normals.clone(),
        );
        let field = self.eval_distinct(&sources, &targets)?;
        let inv_eps = 1.0 / self.system.dielectric.eps_in;
        Ok(field
            .normal_derivative
            .expect("targets carry normals")
            .into_iter()
            .map(|d| d * inv_eps)
            .collect())
    }

    /// Principal-value adjoint double layer with one-point quadrature:
    /// (K′σ)(c_i) = Σ_{j≠i} a_j σ_j ∂/∂n_i [1/(4π‖c_i − c_j‖)].
    pub fn apply_kprime(&self, sigma: &[f64]) -> Result<Vec<f64>, SolveError> {
        let panels = &self.system.panels;
        if sigma.len() != panels.len() {
            return Err(SolveError::LengthMismatch {
                what: "sigma",
                got: sigma.len(),
                expected: panels.len(),
            });
        }
        let weights: Vec<f64> = sigma
            .iter()
            .zip(&panels.areas)
            .map(|(s, a)| s * a)
            .collect();
        let sources = SourceSet::new(panels.centroids.clone(), weights);
        let field = self.eval_shared(&sources, &panels.normals)?;
        Ok(field.normal_derivative.expect("targets carry normals"))
    }

    /// The second-kind system operator, (Aσ) = σ − f·(K′σ).
    pub fn apply_a(&self, sigma: &[f64]) -> Result<Vec<f64>, SolveError> {
        let kp = self.apply_kprime(sigma)?;
        Ok(sigma
            .iter()
            .zip(&kp)
            .map(|(s, k)| s - self.f * k)
            .collect())
    }

    /// Diagonal BIBEE solve: σ̂ = f·E_n / (1 − f·s).
    pub fn bibee_sigma(
        &self,
        e_n: &[f64],
        variant: BibeeVariant,
    ) -> Result<Vec<f64>, SolveError> {
        let denom = 1.0 - self.f * variant.scale();
        if denom.abs() < 1e-12 {
            return Err(SolveError::SingularDiagonal { value: denom });
        }
        let scale = self.f / denom;
        Ok(e_n.iter().map(|e| scale * e).collect())
    }

    /// Reaction potential of the induced charge at the solute charge sites,
    /// φ_reac(r_k) = Σ_j a_j σ_j / (4π‖r_k − c_j‖).
    pub fn reaction_potential(&self, sigma: &[f64]) -> Result<Vec<f64>, SolveError> {
        let panels = &self.system.panels;
        if sigma.len() != panels.len() {
            return Err(SolveError::LengthMismatch {
                what: "sigma",
                got: sigma.len(),
                expected: panels.len(),
            });
        }
        if self.system.charges.is_empty() {
            return Ok(Vec::new());
        }
        let weights: Vec<f64> = sigma
            .iter()
            .zip(&panels.areas)
            .map(|(s, a)| s * a)
            .collect();
        let sources = SourceSet::new(panels.centroids.clone(), weights);
        let targets = TargetSet::new(self.system.charges.positions.clone());
        let field = self.eval_distinct(&sources, &targets)?;
        Ok(field.potential)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bem::{BibeeVariant, Method, SolveOptions};
    use crate::geom::{icosphere, ChargeSet, DielectricModel, MolecularSystem, Vec3};
    use approx::assert_relative_eq;

    pub(crate) fn born_system(radius: f64, subdiv: u32, q: f64) -> MolecularSystem {
        let mesh = icosphere(radius, subdiv).unwrap();
        let charges = ChargeSet {
            positions: vec![Vec3::ZERO],
            charges: vec![q],
            radii: vec![radius],
        };
        MolecularSystem::new(mesh, charges, DielectricModel::new(4.0, 80.0).unwrap()).unwrap()
    }

    fn direct_ctx(system: &MolecularSystem) -> OperatorContext<'_> {
        OperatorContext::new(system, Engine::Direct)
    }

    #[test]
    fn dielectric_factors() {
        let sys = born_system(1.0, 1, 1.0);
        let ctx = direct_ctx(&sys);
        // f = 2(80-4)/84, eps_hat = 1 - 4/80
        assert_relative_eq!(ctx.f, 152.0 / 84.0, epsilon = 1e-15);
        assert_relative_eq!(ctx.eps_hat, 0.95, epsilon = 1e-15);
        // the identity that makes the CFA exact on uniform fields
        assert_relative_eq!(ctx.f / (1.0 + ctx.f / 2.0), ctx.eps_hat, epsilon = 1e-14);
    }

    #[test]
    fn apply_b_on_born_sphere_is_uniform() {
        let sys = born_system(1.0, 3, 1.0);
        let ctx = direct_ctx(&sys);
        let e_n = ctx.apply_b().unwrap();
        let expected = -1.0 / (16.0 * std::f64::consts::PI);
        for (i, e) in e_n.iter().enumerate() {
            // the discrete field is -q (n·c)/(4πε|c|³) with the flat-panel
            // normal n and the centroid c slightly inside the sphere
            let c = sys.panels.centroids[i];
            let n = sys.panels.normals[i];
            let r = c.norm();
            let exact = -n.dot(c) / (16.0 * std::f64::consts::PI * r * r * r);
            assert_relative_eq!(e, &exact, max_relative = 1e-12);
            // and the continuum Born field within mesh error
            assert_relative_eq!(e, &expected, max_relative = 2e-2);
        }
    }

    #[test]
    fn apply_b_zero_charges_gives_zeros() {
        let mut sys = born_system(1.0, 1, 1.0);
        sys.charges.charges[0] = 0.0;
        let ctx = direct_ctx(&sys);
        assert!(ctx.apply_b().unwrap().iter().all(|&e| e == 0.0));
    }

    #[test]
    fn apply_b_has_mirror_symmetry() {
        // two mirror charges across z = 0 on a symmetric mesh
        let mesh = icosphere(2.0, 2).unwrap();
        let charges = ChargeSet {
            positions: vec![Vec3::new(0.0, 0.0, 0.5), Vec3::new(0.0, 0.0, -0.5)],
            charges: vec![1.0, 1.0],
            radii: vec![1.0, 1.0],
        };
        let sys =
            MolecularSystem::new(mesh, charges, DielectricModel::new(4.0, 80.0).unwrap()).unwrap();
        let ctx = direct_ctx(&sys);
        let e_n = ctx.apply_b().unwrap();
        // every panel has a mirror partner with equal E_n
        let n = sys.panels.len();
        for i in 0..n {
            let c = sys.panels.centroids[i];
            let mirrored = Vec3::new(c.x, c.y, -c.z);
            let j = (0..n)
                .min_by(|&a, &b| {
                    let da = (sys.panels.centroids[a] - mirrored).norm();
                    let db = (sys.panels.centroids[b] - mirrored).norm();
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap();
            assert_relative_eq!(e_n[i], e_n[j], max_relative = 1e-10);
        }
    }

    #[test]
    fn kprime_constant_density_approaches_minus_half() {
        // exact eigenvalue of the continuum operator on a sphere is −1/2
        let sys = born_system(1.0, 4, 1.0); // 5120 panels
        let ctx = direct_ctx(&sys);
        let sigma = vec![1.0; sys.panels.len()];
        let kp = ctx.apply_kprime(&sigma).unwrap();
        for k in &kp {
            assert_relative_eq!(k, &-0.5, max_relative = 0.02);
        }
    }

    #[test]
    fn kprime_single_panel_is_zero() {
        let mesh = crate::geom::SurfaceMesh {
            vertices: vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            triangles: vec![[0, 1, 2]],
            vertex_normals: None,
        };
        let sys = MolecularSystem::new(
            mesh,
            ChargeSet::default(),
            DielectricModel::new(4.0, 80.0).unwrap(),
        )
        .unwrap();
        let ctx = direct_ctx(&sys);
        let kp = ctx.apply_kprime(&[3.0]).unwrap();
        assert_eq!(kp, vec![0.0]);
    }

    #[test]
    fn apply_a_on_uniform_sigma() {
        // Aσ ≈ (1 + f/2)σ for constant σ on a fine sphere
        let sys = born_system(1.0, 4, 1.0);
        let ctx = direct_ctx(&sys);
        let sigma = vec![0.7; sys.panels.len()];
        let a = ctx.apply_a(&sigma).unwrap();
        let expected = (1.0 + ctx.f / 2.0) * 0.7;
        for v in &a {
            assert_relative_eq!(v, &expected, max_relative = 0.02);
        }
    }

    #[test]
    fn bibee_p_variant_is_identity_diagonal() {
        let sys = born_system(1.0, 1, 1.0);
        let ctx = direct_ctx(&sys);
        let e_n = vec![0.25; sys.panels.len()];
        let sigma = ctx.bibee_sigma(&e_n, BibeeVariant::P).unwrap();
        for s in &sigma {
            assert_relative_eq!(s, &(ctx.f * 0.25), epsilon = 1e-15);
        }
    }

    #[test]
    fn bibee_cfa_equals_eps_hat_times_field() {
        // algebra: f/(1 + f/2) = 1 − ε_in/ε_out
        let sys = born_system(1.0, 2, 1.0);
        let ctx = direct_ctx(&sys);
        let e_n = ctx.apply_b().unwrap();
        let sigma = ctx.bibee_sigma(&e_n, BibeeVariant::Cfa).unwrap();
        for (s, e) in sigma.iter().zip(&e_n) {
            assert_relative_eq!(s, &(ctx.eps_hat * e), epsilon = 1e-14);
        }
    }

    #[test]
    fn reaction_potential_of_uniform_sigma_is_shell_potential() {
        // uniform σ on sphere radius a → φ inside = σ·4πa²/(4πa) = σ·a, with
        // the discrete areas standing in for the exact shell
        let sys = born_system(1.3, 3, 1.0);
        let ctx = direct_ctx(&sys);
        let sigma = vec![2.0; sys.panels.len()];
        let phi = ctx.reaction_potential(&sigma).unwrap();
        // discrete shell: Σ a_j σ/(4π r_j) with r_j = centroid radius;
        // compare against σ·A_total/(4π·r̄) rather than the continuum value
        let exact: f64 = sigma[0]
            * sys
                .panels
                .areas
                .iter()
                .zip(&sys.panels.centroids)
                .map(|(a, c)| a / (4.0 * std::f64::consts::PI * c.norm()))
                .sum::<f64>();
        assert_relative_eq!(phi[0], exact, max_relative = 1e-12);
        // and the continuum value within mesh error
        assert_relative_eq!(phi[0], sigma[0] * 1.3, max_relative = 2e-2);
    }

    #[test]
    fn reaction_potential_zero_sigma_is_zero() {
        let sys = born_system(1.0, 1, 1.0);
        let ctx = direct_ctx(&sys);
        let phi = ctx.reaction_potential(&vec![0.0; sys.panels.len()]).unwrap();
        assert!(phi.iter().all(|&p| p == 0.0));
    }

    /// 320-panel sphere with charges spread through the interior, the
    /// operator-equivalence fixture.
    pub(crate) fn multi_charge_system() -> MolecularSystem {
        use rand_chacha::ChaCha20Rng;
        use rand_core::{RngCore, SeedableRng};
        let mesh = icosphere(1.0, 2).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let mut unit = || (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let mut positions = Vec::new();
        let mut charges = Vec::new();
        while positions.len() < 25 {
            let p = Vec3::new(unit() - 0.5, unit() - 0.5, unit() - 0.5) * 1.4;
            if p.norm() < 0.7 {
                positions.push(p);
                charges.push(unit() * 2.0 - 1.0);
            }
        }
        let n = positions.len();
        MolecularSystem::new(
            mesh,
            ChargeSet { positions, charges, radii: vec![1.0; n] },
            DielectricModel::new(4.0, 80.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn fmm_and_direct_engines_agree() {
        // the operator-equivalence tolerance holds for panel counts ≤ 500
        let sys = multi_charge_system();
        let direct = OperatorContext::new(&sys, Engine::Direct);
        let fast = OperatorContext::new(
            &sys,
            Engine::Fmm(FmmConfig { order: 10, ncrit: 32, ..Default::default() }),
        );
        let sigma: Vec<f64> = (0..sys.panels.len())
            .map(|i| ((i as f64) * 0.37).sin())
            .collect();
        let kd = direct.apply_kprime(&sigma).unwrap();
        let kf = fast.apply_kprime(&sigma).unwrap();
        let err = crate::fmm::relative_l2_error(&kf, &kd);
        assert!(err <= 1e-4, "K' fmm vs direct {err}");

        let bd = direct.apply_b().unwrap();
        let bf = fast.apply_b().unwrap();
        let err = crate::fmm::relative_l2_error(&bf, &bd);
        assert!(err <= 1e-4, "B fmm vs direct {err}");

        let rd = direct.reaction_potential(&sigma).unwrap();
        let rf = fast.reaction_potential(&sigma).unwrap();
        assert_relative_eq!(rf[0], rd[0], max_relative = 1e-4);
    }

    #[test]
    fn solve_rejects_charge_on_centroid() {
        let mesh = icosphere(1.0, 1).unwrap();
        let centroid = {
            let p = crate::geom::derive_panels(&mesh).unwrap();
            p.centroids[0]
        };
        let charges = ChargeSet {
            positions: vec![centroid],
            charges: vec![1.0],
            radii: vec![1.0],
        };
        let sys =
            MolecularSystem::new(mesh, charges, DielectricModel::new(4.0, 80.0).unwrap()).unwrap();
        let err = crate::bem::solve(
            &sys,
            Method::Bibee(BibeeVariant::Cfa),
            &SolveOptions { engine_direct: true, ..Default::default() },
        )
        .unwrap_err();
        assert!(matches!(
            err,
            SolveError::Fmm(crate::fmm::FmmError::CoincidentPoints { .. })
        ));
    }
}
