use rand::seq::SliceRandom;

use super::PointCloud;
use crate::error::{Error, Result};
use crate::rng::seeded;

/// Disjoint partition of point indices into `Q` blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    assignment: Vec<usize>,
    blocks: Vec<Vec<usize>>,
}

impl BlockPartition {
    /// Builds a partition from explicit blocks, which must be nonempty,
    /// disjoint, and cover `0..n`.
    pub fn from_blocks(blocks: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        if blocks.is_empty() || blocks.len() > n {
            return Err(Error::InvalidBlockCount { q: blocks.len(), n });
        }
        let mut assignment = vec![usize::MAX; n];
        for (q, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::EmptyBlock);
            }
            for &i in block {
                if i >= n {
                    return Err(Error::InconsistentPartition(format!("index {i} out of range")));
                }
                if assignment[i] != usize::MAX {
                    return Err(Error::InconsistentPartition(format!("index {i} in two blocks")));
                }
                assignment[i] = q;
            }
        }
        if let Some(i) = assignment.iter().position(|&q| q == usize::MAX) {
            return Err(Error::InconsistentPartition(format!("index {i} not assigned")));
        }
        Ok(Self { assignment, blocks })
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn num_points(&self) -> usize {
        self.assignment.len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_of(&self, i: usize) -> usize {
        self.assignment[i]
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    pub fn check_against(&self, cloud: &PointCloud) -> Result<()> {
        if self.num_points() != cloud.len() {
            return Err(Error::InconsistentPartition(format!(
                "partition covers {} points, cloud has {}",
                self.num_points(),
                cloud.len()
            )));
        }
        Ok(())
    }
}

/// Round-robin partition of the cloud into `q` blocks.
///
/// With `shuffle`, the point order is first permuted by a ChaCha8 generator
/// seeded with `seed`. Position `s` of the (possibly permuted) order goes to
/// block `s mod q`, so the `n mod q` leftover points land one each in the
/// lowest-indexed blocks.
pub fn partition(cloud: &PointCloud, q: usize, seed: u64, shuffle: bool) -> Result<BlockPartition> {
    partition_indices(cloud.len(), q, seed, shuffle)
}

pub(crate) fn partition_indices(n: usize, q: usize, seed: u64, shuffle: bool) -> Result<BlockPartition> {
    if q < 1 || q > n {
        return Err(Error::InvalidBlockCount { q, n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    if shuffle {
        order.shuffle(&mut seeded(seed));
    }
    let mut blocks = vec![Vec::with_capacity(n / q + 1); q];
    let mut assignment = vec![0; n];
    for (slot, &i) in order.iter().enumerate() {
        let b = slot % q;
        blocks[b].push(i);
        assignment[i] = b;
    }
    Ok(BlockPartition { assignment, blocks })
}
