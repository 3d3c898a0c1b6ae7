//! Boundary-element electrostatics on top of the multipole engine.
//!
//! The discrete problem solved here is the induced-surface-charge equation
//! in strong form,
//!
//!   σ = f · (E_n + K′σ),   f = 2(ε_out − ε_in)/(ε_in + ε_out),
//!
//! where E_n is the normal Coulomb field of the solute charges at the panel
//! centroids (carrying the interior 1/ε_in of the charge source) and K′ is
//! the principal-value adjoint double layer with zero flat-panel self term.
//! This formulation absorbs the one-sided jump of the normal derivative
//! into the (1 − f·K′) system matrix; it is validated against the Born and
//! Kirkwood closed forms rather than trusted: with a constant field on a
//! sphere, K′ has eigenvalue −1/2, the system reduces to (1 + f/2)σ = f·E_n,
//! and the continuum Born energy falls out exactly in the mesh limit.
//!
//! The BIBEE approximations replace K′ by a scaled identity s·I with
//! s ∈ {−1/2 (CFA), 0 (P), +1/2 (LB)}, making the solve diagonal:
//! σ̂ = f·E_n/(1 − f·s).
//!
//! Everything is matrix-free: one operator application is one multipole
//! evaluation (or a direct summation when the dense engine is selected).

pub mod dense;
pub mod gmres;
pub mod kirkwood;
mod operators;
mod report;

pub use gmres::{gmres, GmresOptions, GmresOutcome, GmresStatus};
pub use kirkwood::{born_energy, kirkwood_oracle, KirkwoodResult, KIRKWOOD_HALF_OFFSET_REFERENCE};
pub use operators::{Engine, OperatorContext};
pub use report::{write_sigma_csv, ReportTimings, SolveReport};

use crate::fmm::{FmmConfig, FmmError, SweepTimings};
use crate::geom::MolecularSystem;
use thiserror::Error;

/// Energy conversion: internal units (e²/Å with explicit 1/4π kernels) to
/// kcal/mol, i.e. 4π × 332.0637 kcal·Å/(mol·e²).
pub const KCAL_MOL_PER_INTERNAL: f64 = 4.0 * std::f64::consts::PI * 332.0637;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Fmm(#[from] FmmError),
    #[error("BIBEE diagonal 1 − f·s = {value:.3e} is singular for this dielectric contrast")]
    SingularDiagonal { value: f64 },
    #[error("{what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("binding components disagree on {what}")]
    MismatchedComponents { what: &'static str },
}

/// The BIBEE family: which eigenvalue of the electric-field operator
/// replaces it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BibeeVariant {
    /// Scale −1/2, the Coulomb-field approximation; upper bound on ΔG,
    /// exact for uniform normal boundary fields.
    Cfa,
    /// Scale 0 (plain preconditioner variant).
    P,
    /// Scale +1/2; lower bound on ΔG.
    Lb,
}

impl BibeeVariant {
    pub fn scale(self) -> f64 {
        match self {
            BibeeVariant::Cfa => -0.5,
            BibeeVariant::P => 0.0,
            BibeeVariant::Lb => 0.5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BibeeVariant::Cfa => "cfa",
            BibeeVariant::P => "p",
            BibeeVariant::Lb => "lb",
        }
    }
}

/// Solution method for the induced-charge system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Full second-kind solve via GMRES.
    Bem,
    Bibee(BibeeVariant),
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Bem => "bem",
            Method::Bibee(v) => v.name(),
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        match s {
            "bem" => Some(Method::Bem),
            "cfa" => Some(Method::Bibee(BibeeVariant::Cfa)),
            "p" => Some(Method::Bibee(BibeeVariant::P)),
            "lb" => Some(Method::Bibee(BibeeVariant::Lb)),
            _ => None,
        }
    }
}

/// Induced surface charge density per panel (charge/area).
#[derive(Debug, Clone)]
pub struct SurfaceDensity {
    pub sigma: Vec<f64>,
}

/// Solver parameters.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub gmres: GmresOptions,
    /// Multipole configuration used for every operator application; set
    /// `engine_direct` to bypass the fast path with exact summation.
    pub fmm: FmmConfig,
    pub engine_direct: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            gmres: GmresOptions::default(),
            fmm: FmmConfig::default(),
            engine_direct: false,
        }
    }
}

impl SolveOptions {
    pub fn engine(&self) -> Engine {
        if self.engine_direct {
            Engine::Direct
        } else {
            Engine::Fmm(self.fmm.clone())
        }
    }
}

/// Outcome of one solvation solve.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub method: Method,
    pub sigma: SurfaceDensity,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// ΔG in internal units (e²/Å, explicit-4π convention).
    pub dg_internal: f64,
    pub dg_kcal_mol: f64,
    pub timings: SweepTimings,
    pub n_panels: usize,
    pub n_charges: usize,
    pub eps_in: f64,
    pub eps_out: f64,
    pub order_p: usize,
    pub f: f64,
    pub wall: std::time::Duration,
}

/// ΔG = ½ Σ_k q_k φ_reac(r_k); returns (internal units, kcal/mol).
pub fn solvation_energy(phi_reac: &[f64], charges: &crate::geom::ChargeSet) -> (f64, f64) {
    debug_assert_eq!(phi_reac.len(), charges.len());
    let dg: f64 = 0.5
        * phi_reac
            .iter()
            .zip(&charges.charges)
            .map(|(phi, q)| q * phi)
            .sum::<f64>();
    (dg, dg * KCAL_MOL_PER_INTERNAL)
}

/// Run the full pipeline: normal field → induced charge → reaction
/// potential → energy. A non-converged GMRES is reported in the result,
/// not an error.
pub fn solve(
    system: &MolecularSystem,
    method: Method,
    opts: &SolveOptions,
) -> Result<SolveResult, SolveError> {
    let wall = std::time::Instant::now();
    let ctx = OperatorContext::new(system, opts.engine());
    let n = system.panels.len();

    let e_n = ctx.apply_b()?;
    let rhs: Vec<f64> = e_n.iter().map(|e| ctx.f * e).collect();

    let (sigma, iterations, residual_history, converged) = match method {
        Method::Bem => {
            let out = gmres(|x| ctx.apply_a(x), &rhs, &opts.gmres)?;
            let converged = out.status == GmresStatus::Converged;
            (out.solution, out.iterations, out.residual_history, converged)
        }
        Method::Bibee(variant) => {
            let sigma = ctx.bibee_sigma(&e_n, variant)?;
            (sigma, 0, Vec::new(), true)
        }
    };

    let phi_reac = ctx.reaction_potential(&sigma)?;
    let (dg_internal, dg_kcal_mol) = solvation_energy(&phi_reac, &system.charges);

    Ok(SolveResult {
        method,
        sigma: SurfaceDensity { sigma },
        iterations,
        residual_history,
        converged,
        dg_internal,
        dg_kcal_mol,
        timings: ctx.timings(),
        n_panels: n,
        n_charges: system.charges.len(),
        eps_in: system.dielectric.eps_in,
        eps_out: system.dielectric.eps_out,
        order_p: opts.fmm.order,
        f: ctx.f,
        wall: wall.elapsed(),
    })
}

/// Rigid binding estimate: ΔΔG = ΔG_complex − ΔG_protein − ΔG_ligand.
/// The three solves must share the dielectric model and method.
pub fn binding_energy(
    complex: &SolveResult,
    protein: &SolveResult,
    ligand: &SolveResult,
) -> Result<(f64, f64), SolveError> {
    for other in [protein, ligand] {
        if other.method != complex.method {
            return Err(SolveError::MismatchedComponents { what: "method" });
        }
        if other.eps_in != complex.eps_in || other.eps_out != complex.eps_out {
            return Err(SolveError::MismatchedComponents { what: "dielectric model" });
        }
    }
    let internal = complex.dg_internal - protein.dg_internal - ligand.dg_internal;
    Ok((internal, internal * KCAL_MOL_PER_INTERNAL))
}
