//! Vose alias table for constant-time draws from a fixed discrete law.

use rand::Rng;

use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct AliasTable<T> {
    prob: Vec<T>,
    alias: Vec<u32>,
}

impl<T: Scalar> AliasTable<T> {
    /// `weights` must be positive; they need not be normalized.
    pub fn new(weights: &[T]) -> Self {
        let n = weights.len();
        assert!(n > 0 && n <= u32::MAX as usize, "alias table size out of range");
        let total: T = crate::scalar::compensated_sum(weights.iter().copied());
        let scale = T::from_count(n) / total;
        let mut prob: Vec<T> = weights.iter().map(|&w| w * scale).collect();
        let mut alias: Vec<u32> = (0..n as u32).collect();

        let (mut small, mut large): (Vec<u32>, Vec<u32>) =
            (0..n as u32).partition(|&i| prob[i as usize] < T::one());
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            alias[s as usize] = l;
            let rest = (prob[l as usize] + prob[s as usize]) - T::one();
            prob[l as usize] = rest;
            if rest < T::one() {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers differ from one only by rounding.
        for i in small.into_iter().chain(large) {
            prob[i as usize] = T::one();
        }
        Self { prob, alias }
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    /// Zero-based index of one draw.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let column = rng.random_range(0..self.prob.len() as u64) as usize;
        if T::unit(rng) < self.prob[column] {
            column
        } else {
            self.alias[column] as usize
        }
    }

    /// Probability of index `i` implied by the table.
    pub fn implied_probability(&self, i: usize) -> T {
        let n = T::from_count(self.prob.len());
        let mut mass = self.prob[i];
        for (j, &a) in self.alias.iter().enumerate() {
            if a as usize == i && j != i {
                mass = mass + (T::one() - self.prob[j]);
            }
        }
        mass / n
    }
}
