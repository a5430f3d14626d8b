//! Binary prefix-sum tree over nonnegative weights with point updates.
//!
//! Every internal node is recomputed from its two children on update rather
//! than patched with a delta, so a zeroed leaf contributes exactly zero no
//! matter how many updates preceded it.

use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct SumTree<T> {
    nodes: Vec<T>,
    leaves: usize,
    len: usize,
}

impl<T: Scalar> SumTree<T> {
    pub fn new(weights: &[T]) -> Self {
        let len = weights.len();
        let leaves = len.next_power_of_two().max(1);
        let mut nodes = vec![T::zero(); 2 * leaves];
        nodes[leaves..leaves + len].copy_from_slice(weights);
        for j in (1..leaves).rev() {
            nodes[j] = nodes[2 * j] + nodes[2 * j + 1];
        }
        Self { nodes, leaves, len }
    }

    pub fn zeros(len: usize) -> Self {
        Self::new(&vec![T::zero(); len])
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn total(&self) -> T {
        self.nodes[1]
    }

    pub fn get(&self, i: usize) -> T {
        self.nodes[self.leaves + i]
    }

    pub fn set(&mut self, i: usize, weight: T) {
        assert!(i < self.len, "leaf {i} out of range");
        let mut j = self.leaves + i;
        self.nodes[j] = weight;
        while j > 1 {
            j /= 2;
            self.nodes[j] = self.nodes[2 * j] + self.nodes[2 * j + 1];
        }
    }

    /// Leaf whose cumulative interval contains `target`, for `target` in
    /// `[0, total)`. Never returns a zero-weight leaf while the total is
    /// positive, even when rounding pushes `target` past a boundary.
    pub fn find(&self, mut target: T) -> usize {
        debug_assert!(self.total() > T::zero(), "find on an empty tree");
        let mut j = 1;
        while j < self.leaves {
            let left = self.nodes[2 * j];
            let right = self.nodes[2 * j + 1];
            if right <= T::zero() || (target < left && left > T::zero()) {
                j *= 2;
            } else {
                target = target - left;
                j = 2 * j + 1;
            }
        }
        j - self.leaves
    }
}
