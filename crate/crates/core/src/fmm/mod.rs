//! Fast multipole evaluation of Laplace potentials and gradients,
//!
//!   φ(y_j) = Σ_i c_i / (4π ‖y_j − x_i‖),
//!
//! with an O(N²) direct-summation oracle. The fast path builds an adaptive
//! octree over the union of source and target positions, runs the upward
//! sweep (P2M, M2M), the downward sweep (M2L, L2L), and the evaluation step
//! (L2P plus direct P2P in the near domain). Everything is 64-bit; the
//! truncation order `p` controls accuracy.

mod expansion;
mod harmonics;
mod operators;
mod rotation;
mod sweep;

pub use expansion::{Expansion, ExpansionKind};
pub use harmonics::{coeff_len, factorial_table, get_sym, idx, regular, singular};
pub use operators::{l2l, l2p, m2l, m2m, m2p, p2m};
pub use rotation::{m2l_axial, m2l_rotated, Rotation};

use crate::geom::Vec3;
use crate::tree::TreeError;
use rayon::prelude::*;
use std::time::Duration;
use thiserror::Error;

/// 1/(4π), the kernel normalization.
pub const INV_4PI: f64 = 1.0 / (4.0 * std::f64::consts::PI);

#[derive(Debug, Error)]
pub enum FmmError {
    #[error("expansion order {0} out of range 1..=30")]
    OrderOutOfRange(usize),
    #[error("source {source_index} and target {target_index} coincide")]
    CoincidentPoints { source_index: usize, target_index: usize },
    #[error("target normal {index} is not unit length (|n| = {norm})")]
    NotUnitNormal { index: usize, norm: f64 },
    #[error("{what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Point sources x_i with weights c_i.
#[derive(Debug, Clone, Default)]
pub struct SourceSet {
    pub positions: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl SourceSet {
    pub fn new(positions: Vec<Vec3>, weights: Vec<f64>) -> Self {
        SourceSet { positions, weights }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Evaluation points, with optional unit normals for directional-derivative
/// output.
#[derive(Debug, Clone, Default)]
pub struct TargetSet {
    pub positions: Vec<Vec3>,
    pub normals: Option<Vec<Vec3>>,
}

impl TargetSet {
    pub fn new(positions: Vec<Vec3>) -> Self {
        TargetSet { positions, normals: None }
    }

    pub fn with_normals(positions: Vec<Vec3>, normals: Vec<Vec3>) -> Self {
        TargetSet { positions, normals: Some(normals) }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }
}

/// How multipole-to-local translations are performed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RotationMode {
    /// Rotation acceleration for p ≥ 8, plain translation below.
    #[default]
    Auto,
    On,
    Off,
}

#[derive(Debug, Clone)]
pub struct FmmConfig {
    /// Truncation order p of all expansions (1..=30).
    pub order: usize,
    /// Leaf capacity of the octree.
    pub ncrit: usize,
    pub rotation: RotationMode,
    /// Kept for interface stability: sweeps are organized so that every
    /// accumulation has a fixed order regardless of thread count, so runs
    /// are bit-identical with this flag on or off.
    pub deterministic: bool,
}

impl Default for FmmConfig {
    fn default() -> Self {
        FmmConfig {
            order: 8,
            ncrit: 64,
            rotation: RotationMode::Auto,
            deterministic: true,
        }
    }
}

impl FmmConfig {
    pub fn with_order(order: usize) -> Self {
        FmmConfig { order, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), FmmError> {
        if self.order < 1 || self.order > 30 {
            return Err(FmmError::OrderOutOfRange(self.order));
        }
        if self.ncrit == 0 {
            return Err(TreeError::BadNcrit.into());
        }
        Ok(())
    }

    pub(crate) fn use_rotation(&self) -> bool {
        match self.rotation {
            RotationMode::Auto => self.order >= 8,
            RotationMode::On => true,
            RotationMode::Off => false,
        }
    }
}

/// Potentials and gradients at the targets; the normal derivative is filled
/// exactly when the target set carries normals.
#[derive(Debug, Clone, Default)]
pub struct FieldResult {
    pub potential: Vec<f64>,
    pub gradient: Vec<Vec3>,
    pub normal_derivative: Option<Vec<f64>>,
}

/// Wall-clock breakdown of one evaluation: tree construction, upward sweep
/// (P2M+M2M), downward sweep (M2L+L2L), and evaluation (P2P+L2P).
#[derive(Debug, Clone, Copy, Default)]
pub struct SweepTimings {
    pub tree: Duration,
    pub upward: Duration,
    pub m2l: Duration,
    pub p2p: Duration,
    pub total: Duration,
}

impl SweepTimings {
    pub fn accumulate(&mut self, other: &SweepTimings) {
        self.tree += other.tree;
        self.upward += other.upward;
        self.m2l += other.m2l;
        self.p2p += other.p2p;
        self.total += other.total;
    }
}

/// A field result together with its timing breakdown.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub field: FieldResult,
    pub timings: SweepTimings,
}

fn validate_normals(positions: &[Vec3], normals: &Option<Vec<Vec3>>) -> Result<(), FmmError> {
    if let Some(ns) = normals {
        if ns.len() != positions.len() {
            return Err(FmmError::LengthMismatch {
                what: "target normals",
                got: ns.len(),
                expected: positions.len(),
            });
        }
        for (i, n) in ns.iter().enumerate() {
            let norm = n.norm();
            if (norm - 1.0).abs() > 1e-8 {
                return Err(FmmError::NotUnitNormal { index: i, norm });
            }
        }
    }
    Ok(())
}

fn validate_sources(sources: &SourceSet) -> Result<(), FmmError> {
    if sources.weights.len() != sources.positions.len() {
        return Err(FmmError::LengthMismatch {
            what: "source weights",
            got: sources.weights.len(),
            expected: sources.positions.len(),
        });
    }
    Ok(())
}

/// O(N²) summation of the kernel and its gradient — the accuracy oracle for
/// the fast path. Zero-distance pairs are skipped when `skip_coincident` is
/// set and are an error otherwise.
pub fn direct_evaluate(
    sources: &SourceSet,
    targets: &TargetSet,
    skip_coincident: bool,
) -> Result<FieldResult, FmmError> {
    validate_sources(sources)?;
    validate_normals(&targets.positions, &targets.normals)?;

    let n = targets.len();
    let mut potential = vec![0.0; n];
    let mut gradient = vec![Vec3::ZERO; n];

    potential
        .par_iter_mut()
        .zip(gradient.par_iter_mut())
        .zip(targets.positions.par_iter())
        .enumerate()
        .try_for_each(|(t, ((pot, grad), &y))| {
            let mut acc_p = 0.0;
            let mut acc_g = Vec3::ZERO;
            for (s, (&x, &w)) in sources
                .positions
                .iter()
                .zip(&sources.weights)
                .enumerate()
            {
                let d = y - x;
                let r2 = d.norm_sq();
                if r2 == 0.0 {
                    if skip_coincident {
                        continue;
                    }
                    return Err(FmmError::CoincidentPoints { source_index: s, target_index: t });
                }
                let inv_r = 1.0 / r2.sqrt();
                let inv_r3 = inv_r / r2;
                acc_p += w * inv_r;
                acc_g += d * (-w * inv_r3);
            }
            *pot = acc_p * INV_4PI;
            *grad = acc_g * INV_4PI;
            Ok(())
        })?;

    let normal_derivative = targets
        .normals
        .as_ref()
        .map(|ns| gradient.iter().zip(ns).map(|(g, n)| g.dot(*n)).collect());

    Ok(FieldResult { potential, gradient, normal_derivative })
}

/// Direct near-field contribution of a set of source leaves to one target
/// leaf: the kernel sum with the same 1/(4π) normalization as
/// [`direct_evaluate`]. Self-pairs (same index into a shared point set) are
/// skipped; distinct coincident points are an error naming both indices.
pub fn p2p(
    src_pos: &[Vec3],
    src_weights: &[f64],
    src_indices: &[usize],
    tgt_pos: &[Vec3],
    tgt_indices: &[usize],
    shared_set: bool,
) -> Result<FieldResult, FmmError> {
    let mut potential = vec![0.0; tgt_pos.len()];
    let mut gradient = vec![Vec3::ZERO; tgt_pos.len()];
    operators::p2p_raw(
        src_pos,
        src_weights,
        tgt_pos,
        &mut potential,
        &mut gradient,
        |s, t| shared_set && src_indices[s] == tgt_indices[t],
    )
    .map_err(|(s, t)| FmmError::CoincidentPoints {
        source_index: src_indices[s],
        target_index: tgt_indices[t],
    })?;
    for p in &mut potential {
        *p *= INV_4PI;
    }
    for g in &mut gradient {
        *g = *g * INV_4PI;
    }
    Ok(FieldResult { potential, gradient, normal_derivative: None })
}

/// Fast evaluation with distinct source and target sets. Coincident
/// source/target pairs are an error.
pub fn evaluate(
    sources: &SourceSet,
    targets: &TargetSet,
    config: &FmmConfig,
) -> Result<Evaluation, FmmError> {
    config.validate()?;
    validate_sources(sources)?;
    validate_normals(&targets.positions, &targets.normals)?;
    sweep::run(
        sources,
        &targets.positions,
        targets.normals.as_deref(),
        false,
        config,
    )
}

/// Fast evaluation where the targets are the source points themselves
/// (the N-body case): self-interactions are excluded index-wise.
pub fn evaluate_self(
    sources: &SourceSet,
    normals: Option<&[Vec3]>,
    config: &FmmConfig,
) -> Result<Evaluation, FmmError> {
    config.validate()?;
    validate_sources(sources)?;
    let normals_vec = normals.map(|n| n.to_vec());
    validate_normals(&sources.positions, &normals_vec)?;
    sweep::run(sources, &sources.positions, normals, true, config)
}

/// Relative L² difference between two potential vectors,
/// ‖a − b‖₂ / ‖b‖₂.
pub fn relative_l2_error(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}
