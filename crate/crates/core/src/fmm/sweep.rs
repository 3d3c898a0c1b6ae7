//! The three-phase fast multipole engine: upward sweep, downward sweep,
//! evaluation.
//!
//! Phase contract: within each phase, cells of one level are processed in
//! parallel and each cell's expansion (or each target leaf's output range)
//! is written by exactly one task, in a fixed internal order. Levels are
//! barriers. This makes results bit-identical across runs and thread
//! counts.


use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::geom::Vec3;
use crate::tree::{build_tree, interaction_lists, Tree};

use super::harmonics::{coeff_len, factorial_table, regular, singular};
use super::operators::{l2l_into, l2p_from_table, m2l_into, m2m_into, p2m_into, p2p_raw};
use super::rotation::{m2l_rotated, Rotation};
use super::{Evaluation, FieldResult, FmmConfig, FmmError, SourceSet, SweepTimings, INV_4PI};

/// Contiguous sub-ranges of the tree-ordered source and target sequences
/// owned by each cell.
struct Partition {
    /// Original source index at each tree-ordered source slot.
    src_seq: Vec<u32>,
    /// Original target index at each tree-ordered target slot.
    tgt_seq: Vec<u32>,
    /// Prefix counts over tree positions; cell source range =
    /// src_prefix[range.start]..src_prefix[range.end].
    src_prefix: Vec<u32>,
    tgt_prefix: Vec<u32>,
}

impl Partition {
    fn build(tree: &Tree, n_src: usize, shared: bool) -> Partition {
        let n = tree.order.len();
        let mut src_seq = Vec::with_capacity(n_src);
        let mut tgt_seq = Vec::with_capacity(n - if shared { 0 } else { n_src });
        let mut src_prefix = Vec::with_capacity(n + 1);
        let mut tgt_prefix = Vec::with_capacity(n + 1);
        src_prefix.push(0);
        tgt_prefix.push(0);
        for &u in &tree.order {
            if shared {
                src_seq.push(u as u32);
                tgt_seq.push(u as u32);
            } else if u < n_src {
                src_seq.push(u as u32);
            } else {
                tgt_seq.push((u - n_src) as u32);
            }
            src_prefix.push(src_seq.len() as u32);
            tgt_prefix.push(tgt_seq.len() as u32);
        }
        Partition { src_seq, tgt_seq, src_prefix, tgt_prefix }
    }

    fn src_range(&self, cell: &crate::tree::Cell) -> std::ops::Range<usize> {
        self.src_prefix[cell.range.start] as usize..self.src_prefix[cell.range.end] as usize
    }

    fn tgt_range(&self, cell: &crate::tree::Cell) -> std::ops::Range<usize> {
        self.tgt_prefix[cell.range.start] as usize..self.tgt_prefix[cell.range.end] as usize
    }
}

pub(super) fn run(
    sources: &SourceSet,
    tgt_positions: &[Vec3],
    tgt_normals: Option<&[Vec3]>,
    shared: bool,
    cfg: &FmmConfig,
) -> Result<Evaluation, FmmError> {
    let t_start = Instant::now();
    let n_src = sources.len();
    let n_tgt = tgt_positions.len();
    let p = cfg.order;
    let ncoef = coeff_len(p);

    if n_src == 0 || n_tgt == 0 {
        let field = FieldResult {
            potential: vec![0.0; n_tgt],
            gradient: vec![Vec3::ZERO; n_tgt],
            normal_derivative: tgt_normals.map(|_| vec![0.0; n_tgt]),
        };
        return Ok(Evaluation {
            field,
            timings: SweepTimings { total: t_start.elapsed(), ..Default::default() },
        });
    }

    // ---- tree construction ------------------------------------------------
    let t0 = Instant::now();
    let union: Vec<Vec3>;
    let points: &[Vec3] = if shared {
        &sources.positions
    } else {
        union = sources
            .positions
            .iter()
            .chain(tgt_positions.iter())
            .copied()
            .collect();
        &union
    };
    let tree = build_tree(points, cfg.ncrit)?;
    let lists = interaction_lists(&tree);
    let part = Partition::build(&tree, n_src, shared);

    let src_pos: Vec<Vec3> = part
        .src_seq
        .iter()
        .map(|&i| sources.positions[i as usize])
        .collect();
    let src_w: Vec<f64> = part
        .src_seq
        .iter()
        .map(|&i| sources.weights[i as usize])
        .collect();
    let tgt_pos: Vec<Vec3> = part
        .tgt_seq
        .iter()
        .map(|&i| tgt_positions[i as usize])
        .collect();
    let t_tree = t0.elapsed();

    let n_levels = tree.levels.len();
    let fact = factorial_table(2 * p + 1);

    // per-level expansion buffers, one ncoef slice per cell
    let mut multipoles: Vec<Vec<Complex64>> = tree
        .levels
        .iter()
        .map(|r| vec![Complex64::default(); r.len() * ncoef])
        .collect();
    let mut locals: Vec<Vec<Complex64>> = tree
        .levels
        .iter()
        .map(|r| vec![Complex64::default(); r.len() * ncoef])
        .collect();

    let has_src: Vec<bool> = tree.cells.iter().map(|c| !part.src_range(c).is_empty()).collect();
    let has_tgt: Vec<bool> = tree.cells.iter().map(|c| !part.tgt_range(c).is_empty()).collect();

    // shift tables between a child octant center and its parent center,
    // reused across every cell of a level
    let octant_shift = |child_hw: f64, octant: usize| -> Vec3 {
        Vec3::new(
            if octant & 1 != 0 { child_hw } else { -child_hw },
            if octant & 2 != 0 { child_hw } else { -child_hw },
            if octant & 4 != 0 { child_hw } else { -child_hw },
        )
    };

    // ---- upward sweep: P2M at leaves, M2M level by level -------------------
    let t0 = Instant::now();
    for lev in (0..n_levels).rev() {
        let level_range = tree.levels[lev].clone();
        let (head, tail) = multipoles.split_at_mut(lev + 1);
        let this_buf = &mut head[lev];
        let child_buf = tail.first();
        let child_level_start = tree.levels.get(lev + 1).map(|r| r.start).unwrap_or(0);

        let mut shift_tables = Vec::new();
        if lev + 1 < n_levels {
            let child_hw = tree.root_half_width / (1u64 << (lev + 1)) as f64;
            for o in 0..8 {
                let mut t = vec![Complex64::default(); ncoef];
                regular(octant_shift(child_hw, o), p, &mut t);
                shift_tables.push(t);
            }
        }

        this_buf
            .par_chunks_mut(ncoef)
            .enumerate()
            .for_each_init(
                || vec![Complex64::default(); ncoef],
                |scratch, (li, out)| {
                    let ci = level_range.start + li;
                    if !has_src[ci] {
                        return;
                    }
                    let cell = &tree.cells[ci];
                    if cell.is_leaf() {
                        for s in part.src_range(cell) {
                            p2m_into(src_pos[s], src_w[s], cell.center, p, scratch, out);
                        }
                    } else {
                        let child_buf = child_buf.expect("internal cell has children");
                        for &ch in &cell.children {
                            if !has_src[ch as usize] {
                                continue;
                            }
                            let octant = (tree.cells[ch as usize].key.key & 7) as usize;
                            let local = ch as usize - child_level_start;
                            m2m_into(
                                &child_buf[local * ncoef..(local + 1) * ncoef],
                                &shift_tables[octant],
                                p,
                                out,
                            );
                        }
                    }
                },
            );
    }
    let t_upward = t0.elapsed();

    // ---- downward sweep: M2L + L2L level by level ---------------------------
    let t0 = Instant::now();
    let use_rotation = cfg.use_rotation();

    // Far-list offsets live in {-3..3}³; pack them into a 343-slot lookup.
    // Rotations depend only on the direction class and are shared by all
    // levels; the offset distance is supplied per level.
    let mut rotation_slot = [u16::MAX; 343];
    let mut rotations: Vec<(Rotation, f64)> = Vec::new(); // (rotation, |offset|)
    if use_rotation {
        for (ci, cell) in tree.cells.iter().enumerate() {
            if !has_tgt[ci] {
                continue;
            }
            for &f in &lists.far[ci] {
                if !has_src[f as usize] {
                    continue;
                }
                let d = offset_between(cell.key, tree.cells[f as usize].key);
                let slot = pack_offset(d);
                if rotation_slot[slot] == u16::MAX {
                    let v = Vec3::new(d.0 as f64, d.1 as f64, d.2 as f64);
                    let u = v.normalized().expect("far cells are separated");
                    rotation_slot[slot] = rotations.len() as u16;
                    rotations.push((Rotation::aligning_with_z(u, p), v.norm()));
                }
            }
        }
    }

    for lev in 2..n_levels {
        let level_range = tree.levels[lev].clone();
        let cell_size = 2.0 * tree.root_half_width / (1u64 << lev) as f64;

        // S tables for the plain path, one per distinct offset at this level
        let mut s_slot = [u16::MAX; 343];
        let mut s_tables: Vec<Vec<Complex64>> = Vec::new();
        if !use_rotation {
            for ci in level_range.clone() {
                if !has_tgt[ci] {
                    continue;
                }
                for &f in &lists.far[ci] {
                    if !has_src[f as usize] {
                        continue;
                    }
                    let d = offset_between(tree.cells[ci].key, tree.cells[f as usize].key);
                    let slot = pack_offset(d);
                    if s_slot[slot] == u16::MAX {
                        let shift =
                            Vec3::new(d.0 as f64, d.1 as f64, d.2 as f64) * cell_size;
                        let mut t = vec![Complex64::default(); coeff_len(2 * p)];
                        singular(shift, 2 * p, &mut t);
                        s_slot[slot] = s_tables.len() as u16;
                        s_tables.push(t);
                    }
                }
            }
        }

        let child_hw = tree.root_half_width / (1u64 << lev) as f64;
        let mut l2l_tables = Vec::with_capacity(8);
        for o in 0..8 {
            let mut t = vec![Complex64::default(); ncoef];
            regular(octant_shift(child_hw, o), p, &mut t);
            l2l_tables.push(t);
        }

        let (head, tail) = locals.split_at_mut(lev);
        let parent_buf = &head[lev - 1];
        let this_buf = &mut tail[0];
        let parent_level_start = tree.levels[lev - 1].start;
        let mult = &multipoles;

        this_buf
            .par_chunks_mut(ncoef)
            .enumerate()
            .for_each_init(
                || {
                    (
                        vec![Complex64::default(); ncoef],
                        vec![Complex64::default(); ncoef],
                    )
                },
                |(sa, sb), (li, out)| {
                    let ci = level_range.start + li;
                    if !has_tgt[ci] {
                        return;
                    }
                    let cell = &tree.cells[ci];

                    let parent = cell.parent.expect("level >= 2") as usize;
                    let plocal = parent - parent_level_start;
                    let octant = (cell.key.key & 7) as usize;
                    l2l_into(
                        &parent_buf[plocal * ncoef..(plocal + 1) * ncoef],
                        &l2l_tables[octant],
                        p,
                        out,
                    );

                    for &f in &lists.far[ci] {
                        if !has_src[f as usize] {
                            continue;
                        }
                        let fcell = &tree.cells[f as usize];
                        let flocal = f as usize - level_range.start;
                        let m = &mult[lev][flocal * ncoef..(flocal + 1) * ncoef];
                        let slot = pack_offset(offset_between(cell.key, fcell.key));
                        if use_rotation {
                            let (rot, dist) = &rotations[rotation_slot[slot] as usize];
                            m2l_rotated(m, rot, dist * cell_size, p, &fact, sa, sb, out);
                        } else {
                            m2l_into(m, &s_tables[s_slot[slot] as usize], p, out);
                        }
                    }
                },
            );
    }
    let t_m2l = t0.elapsed();

    // ---- evaluation: L2P + P2P per target leaf ------------------------------
    let t0 = Instant::now();
    let mut pot_sorted = vec![0.0; n_tgt];
    let mut grad_sorted = vec![Vec3::ZERO; n_tgt];

    let mut leaf_ids: Vec<u32> = tree.leaves().collect();
    leaf_ids.sort_by_key(|&l| part.tgt_range(&tree.cells[l as usize]).start);

    let mut pot_slices: Vec<&mut [f64]> = Vec::with_capacity(leaf_ids.len());
    let mut grad_slices: Vec<&mut [Vec3]> = Vec::with_capacity(leaf_ids.len());
    {
        let mut rest_p: &mut [f64] = &mut pot_sorted;
        let mut rest_g: &mut [Vec3] = &mut grad_sorted;
        for &l in &leaf_ids {
            let len = part.tgt_range(&tree.cells[l as usize]).len();
            let (a, b) = rest_p.split_at_mut(len);
            pot_slices.push(a);
            rest_p = b;
            let (a, b) = rest_g.split_at_mut(len);
            grad_slices.push(a);
            rest_g = b;
        }
    }

    let locals_ref = &locals;
    leaf_ids
        .par_iter()
        .zip(pot_slices.into_par_iter().zip(grad_slices.into_par_iter()))
        .try_for_each_init(
            || vec![Complex64::default(); ncoef],
            |scratch, (&leaf, (pot, grad))| -> Result<(), FmmError> {
                let cell = &tree.cells[leaf as usize];
                let trange = part.tgt_range(cell);
                if trange.is_empty() {
                    return Ok(());
                }
                let lev = cell.key.level as usize;
                let local_idx = leaf as usize - tree.levels[lev].start;
                let lcoef = &locals_ref[lev][local_idx * ncoef..(local_idx + 1) * ncoef];

                for (k, t) in trange.clone().enumerate() {
                    regular(tgt_pos[t] - cell.center, p, scratch);
                    let (phi, g) = l2p_from_table(lcoef, scratch, p);
                    pot[k] += phi;
                    grad[k] += g;
                }

                for &partner in &lists.p2p[leaf as usize] {
                    let pcell = &tree.cells[partner as usize];
                    let srange = part.src_range(pcell);
                    if srange.is_empty() {
                        continue;
                    }
                    let sbase = srange.start;
                    let tbase = trange.start;
                    p2p_raw(
                        &src_pos[srange.clone()],
                        &src_w[srange],
                        &tgt_pos[trange.clone()],
                        pot,
                        grad,
                        |s, t| {
                            shared && part.src_seq[sbase + s] == part.tgt_seq[tbase + t]
                        },
                    )
                    .map_err(|(s, t)| FmmError::CoincidentPoints {
                        source_index: part.src_seq[sbase + s] as usize,
                        target_index: part.tgt_seq[tbase + t] as usize,
                    })?;
                }
                Ok(())
            },
        )?;
    let t_p2p = t0.elapsed();

    // ---- assemble in original target order ----------------------------------
    let mut potential = vec![0.0; n_tgt];
    let mut gradient = vec![Vec3::ZERO; n_tgt];
    for (slot, &orig) in part.tgt_seq.iter().enumerate() {
        potential[orig as usize] = pot_sorted[slot] * INV_4PI;
        gradient[orig as usize] = grad_sorted[slot] * INV_4PI;
    }
    let normal_derivative = tgt_normals
        .map(|ns| gradient.iter().zip(ns).map(|(g, n)| g.dot(*n)).collect());

    Ok(Evaluation {
        field: FieldResult { potential, gradient, normal_derivative },
        timings: SweepTimings {
            tree: t_tree,
            upward: t_upward,
            m2l: t_m2l,
            p2p: t_p2p,
            total: t_start.elapsed(),
        },
    })
}

/// Integer cell offset (target − source) between two same-level keys.
fn offset_between(target: crate::tree::MortonKey, source: crate::tree::MortonKey) -> (i64, i64, i64) {
    let (tx, ty, tz) = target.coords();
    let (sx, sy, sz) = source.coords();
    (
        tx as i64 - sx as i64,
        ty as i64 - sy as i64,
        tz as i64 - sz as i64,
    )
}

/// Pack a far-list offset (components in -3..=3) into 0..343.
#[inline]
fn pack_offset(d: (i64, i64, i64)) -> usize {
    debug_assert!(d.0.abs() <= 3 && d.1.abs() <= 3 && d.2.abs() <= 3);
    ((d.0 + 3) + 7 * (d.1 + 3) + 49 * (d.2 + 3)) as usize
}
