//! Neighbor and far-field interaction lists.
//!
//! The far list of a cell holds the same-level cells that are children of
//! the parent's neighbors yet not adjacent to the cell: the multipole-to-
//! local partner set. Every source/target leaf pair must be accounted for
//! exactly once, either by a far-list entry at exactly one ancestor level or
//! by the direct near-field partner list; `p2p_partners` extends across
//! levels so this holds in adaptive trees where neighboring leaves differ in
//! depth.

use super::{morton_encode, MortonKey, Tree};

#[derive(Debug, Clone)]
pub struct InteractionLists {
    /// Per cell: same-level adjacent cells, including the cell itself.
    pub neighbors: Vec<Vec<u32>>,
    /// Per cell: multipole-to-local partners at the same level.
    pub far: Vec<Vec<u32>>,
    /// Per leaf cell (empty for internal cells): leaf cells whose points
    /// interact directly with this cell's points.
    pub p2p: Vec<Vec<u32>>,
}

/// Same-level cells adjacent to `key` that exist in the tree (incl. self).
fn adjacent_cells(tree: &Tree, key: MortonKey) -> Vec<u32> {
    let (ix, iy, iz) = key.coords();
    let side = 1i64 << key.level;
    let mut out = Vec::new();
    for dz in -1i64..=1 {
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let (nx, ny, nz) = (ix as i64 + dx, iy as i64 + dy, iz as i64 + dz);
                if nx < 0 || ny < 0 || nz < 0 || nx >= side || ny >= side || nz >= side {
                    continue;
                }
                let nkey = morton_encode(nx as u32, ny as u32, nz as u32, key.level)
                    .expect("coords in range");
                if let Some(ci) = tree.find(nkey) {
                    out.push(ci);
                }
            }
        }
    }
    out
}

/// Build all interaction lists for a tree.
pub fn interaction_lists(tree: &Tree) -> InteractionLists {
    let n = tree.cells.len();
    let mut neighbors = vec![Vec::new(); n];
    let mut far = vec![Vec::new(); n];
    let mut p2p = vec![Vec::new(); n];

    for ci in 0..n {
        neighbors[ci] = adjacent_cells(tree, tree.cells[ci].key);
    }

    for ci in 0..n {
        let cell = &tree.cells[ci];
        let Some(parent) = cell.parent else { continue };
        for &pn in &neighbors[parent as usize] {
            for &child in &tree.cells[pn as usize].children {
                let ck = tree.cells[child as usize].key;
                if !cell.key.is_adjacent(ck) {
                    far[ci].push(child);
                }
            }
        }
    }

    // Direct partners of a target leaf A: all leaves in the subtrees of A's
    // same-level neighbors, plus leaf cells among the neighbors of every
    // ancestor of A (coarser leaves adjacent to the ancestor at their own
    // level). Together with the far lists this accounts for every leaf pair
    // exactly once.
    for ci in 0..n {
        if !tree.cells[ci].is_leaf() {
            continue;
        }
        let mut partners = Vec::new();
        for &nb in &neighbors[ci] {
            collect_leaves(tree, nb, &mut partners);
        }
        let mut key = tree.cells[ci].key;
        let mut cell = ci as u32;
        while let Some(parent) = tree.cells[cell as usize].parent {
            key = key.parent();
            for &nb in &neighbors[parent as usize] {
                if tree.cells[nb as usize].is_leaf() {
                    partners.push(nb);
                }
            }
            cell = parent;
        }
        p2p[ci] = partners;
    }

    InteractionLists { neighbors, far, p2p }
}

fn collect_leaves(tree: &Tree, cell: u32, out: &mut Vec<u32>) {
    let c = &tree.cells[cell as usize];
    if c.is_leaf() {
        out.push(cell);
        return;
    }
    for &ch in &c.children {
        collect_leaves(tree, ch, out);
    }
}
