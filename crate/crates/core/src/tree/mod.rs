//! Adaptive Morton-keyed octree over a point cloud, plus the neighbor and
//! far-field interaction lists that drive the multipole sweeps.
//!
//! Cells split while they hold more than `ncrit` points, down to a maximum
//! depth of 21 levels; empty octants are never materialized. Points are
//! reordered so every cell owns one contiguous index range.

mod lists;
mod morton;

pub use lists::{interaction_lists, InteractionLists};
pub use morton::{morton_encode, MortonKey, MAX_LEVEL};

use crate::geom::Vec3;
use std::ops::Range;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("cannot build a tree over zero points")]
    Empty,
    #[error("ncrit must be at least 1")]
    BadNcrit,
    #[error("level {level} exceeds the maximum of 21")]
    LevelOutOfRange { level: u8 },
    #[error("{axis} index {index} out of range at level {level}")]
    IndexOutOfRange { axis: &'static str, index: u32, level: u8 },
}

/// One octree cell. `range` indexes into [`Tree::order`].
#[derive(Debug, Clone)]
pub struct Cell {
    pub key: MortonKey,
    pub center: Vec3,
    pub half_width: f64,
    pub range: Range<usize>,
    pub parent: Option<u32>,
    /// Indices of existing (non-empty) children, in octant order.
    pub children: Vec<u32>,
}

impl Cell {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn n_points(&self) -> usize {
        self.range.len()
    }
}

/// The finished hierarchy. Cells are stored grouped by level (root first)
/// and sorted by Morton key within each level.
#[derive(Debug, Clone)]
pub struct Tree {
    pub cells: Vec<Cell>,
    /// Cell index ranges per level; `levels[0]` is the root.
    pub levels: Vec<Range<usize>>,
    /// Permutation from tree position to original point index.
    pub order: Vec<usize>,
    pub root_center: Vec3,
    pub root_half_width: f64,
    pub ncrit: usize,
    /// Number of max-depth leaves left holding more than ncrit points
    /// (coincident-point pathologies).
    pub overfull_leaves: usize,
}

impl Tree {
    pub fn n_points(&self) -> usize {
        self.order.len()
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn root(&self) -> &Cell {
        &self.cells[0]
    }

    /// Indices of all leaf cells.
    pub fn leaves(&self) -> impl Iterator<Item = u32> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_leaf())
            .map(|(i, _)| i as u32)
    }

    /// Find a cell by key via binary search within its level.
    pub fn find(&self, key: MortonKey) -> Option<u32> {
        let range = self.levels.get(key.level as usize)?.clone();
        let slice = &self.cells[range.clone()];
        slice
            .binary_search_by(|c| c.key.key.cmp(&key.key))
            .ok()
            .map(|i| (range.start + i) as u32)
    }

    /// Cell index of the leaf that owns tree position `pos`.
    pub fn leaf_of_position(&self, pos: usize) -> u32 {
        let mut cell = 0u32;
        loop {
            let c = &self.cells[cell as usize];
            if c.is_leaf() {
                return cell;
            }
            let next = c
                .children
                .iter()
                .copied()
                .find(|&ch| self.cells[ch as usize].range.contains(&pos))
                .expect("child ranges partition the parent");
            cell = next;
        }
    }

    /// Debug dump of the cell structure as CSV.
    pub fn cells_csv(&self) -> String {
        let mut out = String::from("cell,level,key,cx,cy,cz,half_width,n_points,is_leaf\n");
        for (i, c) in self.cells.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                i,
                c.key.level,
                c.key.key,
                c.center.x,
                c.center.y,
                c.center.z,
                c.half_width,
                c.n_points(),
                c.is_leaf()
            ));
        }
        out
    }
}

/// Build an adaptive octree. The root cube circumscribes the point bounding
/// box with a 1e-6 relative margin; cells split while they hold more than
/// `ncrit` points and the maximum depth has not been reached.
pub fn build_tree(points: &[Vec3], ncrit: usize) -> Result<Tree, TreeError> {
    if points.is_empty() {
        return Err(TreeError::Empty);
    }
    if ncrit == 0 {
        return Err(TreeError::BadNcrit);
    }

    let mut lo = points[0];
    let mut hi = points[0];
    for &p in &points[1..] {
        lo = lo.min(p);
        hi = hi.max(p);
    }
    let center = (lo + hi) * 0.5;
    let extent = hi - lo;
    let mut half_width = 0.5 * extent.x.max(extent.y).max(extent.z);
    if half_width == 0.0 {
        half_width = 1.0; // all points coincide; any positive cube works
    }
    half_width *= 1.0 + 1e-6;

    let mut order: Vec<usize> = (0..points.len()).collect();
    let mut cells = vec![Cell {
        key: MortonKey::ROOT,
        center,
        half_width,
        range: 0..points.len(),
        parent: None,
        children: Vec::new(),
    }];
    let mut levels = vec![0..1usize];
    let mut overfull = 0usize;

    let mut level_start = 0usize;
    for level in 0..MAX_LEVEL {
        let level_end = cells.len();
        let mut scratch: Vec<usize> = Vec::new();
        for ci in level_start..level_end {
            if cells[ci].n_points() <= ncrit {
                continue;
            }
            let (cell_center, cell_hw, range) = {
                let c = &cells[ci];
                (c.center, c.half_width, c.range.clone())
            };

            // bucket the cell's points into octants
            let mut counts = [0usize; 8];
            for &pi in &order[range.clone()] {
                counts[octant_of(points[pi], cell_center) as usize] += 1;
            }
            let mut offsets = [0usize; 8];
            let mut acc = 0;
            for o in 0..8 {
                offsets[o] = acc;
                acc += counts[o];
            }
            scratch.clear();
            scratch.resize(range.len(), 0);
            let mut cursor = offsets;
            for &pi in &order[range.clone()] {
                let o = octant_of(points[pi], cell_center) as usize;
                scratch[cursor[o]] = pi;
                cursor[o] += 1;
            }
            order[range.clone()].copy_from_slice(&scratch);

            let quarter = cell_hw * 0.5;
            for o in 0..8u8 {
                if counts[o as usize] == 0 {
                    continue;
                }
                let child_center = Vec3::new(
                    cell_center.x + if o & 1 != 0 { quarter } else { -quarter },
                    cell_center.y + if o & 2 != 0 { quarter } else { -quarter },
                    cell_center.z + if o & 4 != 0 { quarter } else { -quarter },
                );
                let start = range.start + offsets[o as usize];
                let child = Cell {
                    key: cells[ci].key.child(o),
                    center: child_center,
                    half_width: quarter,
                    range: start..start + counts[o as usize],
                    parent: Some(ci as u32),
                    children: Vec::new(),
                };
                cells.push(child);
                let idx = (cells.len() - 1) as u32;
                cells[ci].children.push(idx);
            }
        }
        if cells.len() == level_end {
            break; // nothing split at this level
        }
        levels.push(level_end..cells.len());
        level_start = level_end;
        let _ = level; // depth tracked via `levels`
    }

    // max-depth cells that still exceed ncrit
    for c in &cells {
        if c.is_leaf() && c.n_points() > ncrit {
            overfull += 1;
        }
    }

    Ok(Tree {
        cells,
        levels,
        order,
        root_center: center,
        root_half_width: half_width,
        ncrit,
        overfull_leaves: overfull,
    })
}

#[inline]
fn octant_of(p: Vec3, center: Vec3) -> u8 {
    (p.x >= center.x) as u8 | ((p.y >= center.y) as u8) << 1 | ((p.z >= center.z) as u8) << 2
}
