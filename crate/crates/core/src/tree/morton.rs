//! Bit-interleaved Morton keys for octree cells. Within each bit triple the
//! x index occupies the least significant bit, then y, then z.

use super::TreeError;

/// Deepest representable level: 3·21 = 63 key bits in a u64.
pub const MAX_LEVEL: u8 = 21;

/// Octree cell address: `key` holds `3·level` interleaved bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MortonKey {
    pub level: u8,
    pub key: u64,
}

impl MortonKey {
    pub const ROOT: MortonKey = MortonKey { level: 0, key: 0 };

    /// Key of the child in the given octant (0..8).
    pub fn child(self, octant: u8) -> MortonKey {
        debug_assert!(octant < 8);
        MortonKey {
            level: self.level + 1,
            key: self.key << 3 | octant as u64,
        }
    }

    /// Key of the parent cell; the root is its own parent.
    pub fn parent(self) -> MortonKey {
        if self.level == 0 {
            self
        } else {
            MortonKey { level: self.level - 1, key: self.key >> 3 }
        }
    }

    /// Ancestor at the given coarser (or equal) level.
    pub fn ancestor(self, level: u8) -> MortonKey {
        debug_assert!(level <= self.level);
        MortonKey {
            level,
            key: self.key >> (3 * (self.level - level) as u64),
        }
    }

    /// Grid coordinates (ix, iy, iz) at this key's level.
    pub fn coords(self) -> (u32, u32, u32) {
        (
            compact(self.key) as u32,
            compact(self.key >> 1) as u32,
            compact(self.key >> 2) as u32,
        )
    }

    /// Cells at the same level are adjacent when they touch, i.e. all grid
    /// coordinates differ by at most one. A cell is adjacent to itself.
    pub fn is_adjacent(self, other: MortonKey) -> bool {
        debug_assert_eq!(self.level, other.level);
        let (ax, ay, az) = self.coords();
        let (bx, by, bz) = other.coords();
        let d = |a: u32, b: u32| (a as i64 - b as i64).abs();
        d(ax, bx) <= 1 && d(ay, by) <= 1 && d(az, bz) <= 1
    }
}

/// Interleave grid coordinates into a Morton key.
pub fn morton_encode(ix: u32, iy: u32, iz: u32, level: u8) -> Result<MortonKey, TreeError> {
    if level > MAX_LEVEL {
        return Err(TreeError::LevelOutOfRange { level });
    }
    let side = 1u64 << level;
    for (axis, v) in [("x", ix), ("y", iy), ("z", iz)] {
        if v as u64 >= side {
            return Err(TreeError::IndexOutOfRange {
                axis,
                index: v,
                level,
            });
        }
    }
    Ok(MortonKey {
        level,
        key: spread(ix as u64) | spread(iy as u64) << 1 | spread(iz as u64) << 2,
    })
}

/// Insert two zero bits between each of the low 21 bits.
fn spread(mut x: u64) -> u64 {
    x &= 0x1f_ffff;
    x = (x | x << 32) & 0x001f_0000_0000_ffff;
    x = (x | x << 16) & 0x1f_0000_ff00_00ff;
    x = (x | x << 8) & 0x100f_00f0_0f00_f00f;
    x = (x | x << 4) & 0x10c3_0c30_c30c_30c3;
    x = (x | x << 2) & 0x1249_2492_4924_9249;
    x
}

/// Inverse of [`spread`]: gather every third bit.
fn compact(mut x: u64) -> u64 {
    x &= 0x1249_2492_4924_9249;
    x = (x ^ (x >> 2)) & 0x10c3_0c30_c30c_30c3;
    x = (x ^ (x >> 4)) & 0x100f_00f0_0f00_f00f;
    x = (x ^ (x >> 8)) & 0x1f_0000_ff00_00ff;
    x = (x ^ (x >> 16)) & 0x001f_0000_0000_ffff;
    x = (x ^ (x >> 32)) & 0x1f_ffff;
    x
}
