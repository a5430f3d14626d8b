//! The three sampling processes: i.i.d. weighted draws, successive sampling
//! without replacement, and Polya-urn sampling.
//!
//! Samplers hold mutable state and are meant to be owned by one thread each;
//! building one from a [`Population`] does not modify the population.

mod alias;
mod polya;
mod sum_tree;

use rand::Rng;

pub use alias::AliasTable;
pub use polya::PolyaUrn;
pub use sum_tree::SumTree;

use crate::error::{Error, Result};
use crate::population::Population;
use crate::rng::RngStreamSpec;
use crate::scalar::Scalar;

/// Draws ids independently with probability equal to their weight.
#[derive(Clone, Debug)]
pub struct WithReplacementSampler<T> {
    table: AliasTable<T>,
}

impl<T: Scalar> WithReplacementSampler<T> {
    pub fn new(pop: &Population<T>) -> Self {
        Self {
            table: AliasTable::new(pop.weights()),
        }
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.table.sample(rng) + 1
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<usize> {
        (0..n).map(|_| self.draw(rng)).collect()
    }

    pub fn table(&self) -> &AliasTable<T> {
        &self.table
    }
}

/// Successive sampling: each draw is proportional to the weights of the items
/// not drawn yet.
#[derive(Clone, Debug)]
pub struct SuccessiveSampler<T> {
    tree: SumTree<T>,
    remaining: usize,
}

impl<T: Scalar> SuccessiveSampler<T> {
    pub fn new(pop: &Population<T>) -> Self {
        Self {
            tree: SumTree::new(pop.weights()),
            remaining: pop.len(),
        }
    }

    pub fn remaining(&self) -> usize {
        self.remaining
    }

    /// Weight still in the urn.
    pub fn remaining_mass(&self) -> T {
        self.tree.total()
    }

    /// Draws and removes one id; `None` once the population is exhausted.
    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<usize> {
        if self.remaining == 0 {
            return None;
        }
        let target = T::unit(rng) * self.tree.total();
        let i = self.tree.find(target);
        self.tree.set(i, T::zero());
        self.remaining -= 1;
        Some(i + 1)
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, n: usize, rng: &mut R) -> Result<Vec<usize>> {
        if n > self.remaining {
            return Err(Error::SampleTooLarge {
                n,
                population: self.remaining,
            });
        }
        Ok((0..n).map_while(|_| self.draw(rng)).collect())
    }
}

/// `n` i.i.d. weighted draws `(J_1, ..., J_n)`.
pub fn draw_with_replacement<T: Scalar>(
    pop: &Population<T>,
    n: usize,
    rng: RngStreamSpec,
) -> Vec<usize> {
    WithReplacementSampler::new(pop).sample(n, &mut rng.rng())
}

/// Ordered successive sample `(I_1, ..., I_n)` of distinct ids.
pub fn draw_without_replacement<T: Scalar>(
    pop: &Population<T>,
    n: usize,
    rng: RngStreamSpec,
) -> Result<Vec<usize>> {
    if n > pop.len() {
        return Err(Error::SampleTooLarge {
            n,
            population: pop.len(),
        });
    }
    SuccessiveSampler::new(pop).sample(n, &mut rng.rng())
}

/// `d`-Polya sample `(K_1, ..., K_n)`: the urn starts with one ball per id and
/// the population weights are ignored.
pub fn draw_polya<T: Scalar>(
    pop: &Population<T>,
    d: u64,
    n: usize,
    rng: RngStreamSpec,
) -> Result<Vec<usize>> {
    let mut urn = PolyaUrn::new(pop.len(), d)?;
    let mut rng = rng.rng();
    Ok((0..n).map(|_| urn.draw(&mut rng)).collect())
}
