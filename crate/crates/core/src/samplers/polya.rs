//! Polya urn with integer ball counts per label.

use rand::Rng;

use crate::error::{Error, Result};

/// Fenwick tree over `u64` counts.
#[derive(Clone, Debug)]
struct CountTree {
    tree: Vec<u64>,
}

impl CountTree {
    fn new(counts: &[u64]) -> Self {
        let mut tree = vec![0; counts.len() + 1];
        for i in 1..tree.len() {
            tree[i] += counts[i - 1];
            let parent = i + (i & i.wrapping_neg());
            if parent < tree.len() {
                tree[parent] += tree[i];
            }
        }
        Self { tree }
    }

    fn add(&mut self, i: usize, delta: u64) {
        let mut j = i + 1;
        while j < self.tree.len() {
            self.tree[j] += delta;
            j += j & j.wrapping_neg();
        }
    }

    /// Smallest index whose inclusive prefix sum exceeds `target`.
    fn find(&self, mut target: u64) -> usize {
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}

/// Urn initially holding one ball per label `1..=N`; a drawn label is returned
/// together with `d - 1` extra copies.
#[derive(Clone, Debug)]
pub struct PolyaUrn {
    counts: Vec<u64>,
    tree: CountTree,
    replacement: u64,
    total: u64,
    draws: u64,
}

impl PolyaUrn {
    pub fn new(labels: usize, replacement: u64) -> Result<Self> {
        if labels == 0 {
            return Err(Error::EmptyPopulation);
        }
        if replacement < 1 {
            return Err(Error::InvalidReplacement("d >= 1".into()));
        }
        let counts = vec![1; labels];
        Ok(Self {
            tree: CountTree::new(&counts),
            counts,
            replacement,
            total: labels as u64,
            draws: 0,
        })
    }

    /// Draws one label (1-based) and reinforces it.
    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        let ball = rng.random_range(0..self.total);
        let i = self.tree.find(ball);
        let extra = self.replacement - 1;
        if extra > 0 {
            self.counts[i] += extra;
            self.tree.add(i, extra);
            self.total += extra;
        }
        self.draws += 1;
        i + 1
    }

    /// Probability that the next draw is `label`.
    pub fn next_probability(&self, label: usize) -> f64 {
        self.counts[label - 1] as f64 / self.total as f64
    }

    pub fn count(&self, label: usize) -> u64 {
        self.counts[label - 1]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn replacement(&self) -> u64 {
        self.replacement
    }
}
