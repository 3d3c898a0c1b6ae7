//! Matrix-free boundary-element electrostatics on a Laplace fast multipole
//! engine.
//!
//! The crate computes electrostatic solvation and rigid binding free
//! energies in the two-dielectric continuum model. The induced surface
//! charge on a triangulated molecular boundary is obtained either exactly,
//! by GMRES on the second-kind boundary integral operator, or approximately
//! through the BIBEE family of diagonal replacements (CFA, P, LB). All
//! operator applications are dense-matrix-free: they are single evaluations
//! of an adaptive-octree fast multipole method for the 1/(4π r) kernel.
//!
//! Module map:
//! - [`geom`]: mesh/charge ingestion (MSMS, PQR), panel derivation,
//!   synthetic spheres, grid replication.
//! - [`tree`]: Morton-keyed adaptive octree and interaction lists.
//! - [`fmm`]: multipole machinery (P2M/M2M/M2L/L2L/L2P/P2P), direct
//!   summation oracle, parallel sweeps.
//! - [`bem`]: boundary operators, BIBEE diagonals, GMRES, energies, and the
//!   analytic sphere oracles.

pub mod bem;
pub mod fmm;
pub mod geom;
pub mod tree;

pub use geom::{
    derive_panels, icosphere, load_msms, load_pqr, replicate_grid, write_msms, write_pqr,
    ChargeSet, DielectricModel, GeomError, Mat3, MolecularSystem, PanelSet, SurfaceMesh, Vec3,
};
