//! Probability laws with finite real support.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, CompensatedSum, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Atom<T> {
    pub point: T,
    pub prob: T,
}

/// Atoms sorted by strictly increasing point, probabilities summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FiniteDistribution<T> {
    atoms: Vec<Atom<T>>,
}

/// Sorts `(point, prob)` pairs and merges points closer than `tol`.
pub(crate) fn merge_atoms<T: Scalar>(raw: &mut Vec<(T, T)>, tol: T) {
    raw.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite support point"));
    let mut out: Vec<(T, T)> = Vec::with_capacity(raw.len());
    let mut anchor = T::zero();
    for &(x, p) in raw.iter() {
        match out.last_mut() {
            Some(last) if x - anchor <= tol => last.1 = last.1 + p,
            _ => {
                anchor = x;
                out.push((x, p));
            }
        }
    }
    *raw = out;
}

impl<T: Scalar> FiniteDistribution<T> {
    /// Builds a law from possibly repeated, unsorted points. Points within the
    /// scalar's probability tolerance of the first point of a run are merged.
    pub fn from_weighted_points<I>(points: I) -> Result<Self>
    where
        I: IntoIterator<Item = (T, T)>,
    {
        let mut raw: Vec<(T, T)> = points.into_iter().collect();
        if raw.is_empty() {
            return Err(Error::InvalidDistribution("no atoms".into()));
        }
        for &(x, p) in &raw {
            if !x.is_finite() || !p.is_finite() || p < -T::prob_tol() {
                return Err(Error::InvalidDistribution(format!("bad atom ({x}, {p})")));
            }
        }
        merge_atoms(&mut raw, T::prob_tol());
        let total = compensated_sum(raw.iter().map(|a| a.1));
        if (total - T::one()).abs() > T::prob_tol() {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self {
            atoms: raw
                .into_iter()
                .map(|(point, prob)| Atom {
                    point,
                    prob: prob.max(T::zero()),
                })
                .collect(),
        })
    }

    pub fn point_mass(point: T) -> Self {
        Self {
            atoms: vec![Atom {
                point,
                prob: T::one(),
            }],
        }
    }

    /// Empirical law of a sample.
    pub fn empirical(sample: &[T]) -> Result<Self> {
        let p = T::one() / T::from_count(sample.len().max(1));
        Self::from_weighted_points(sample.iter().map(|&x| (x, p)))
    }

    pub fn atoms(&self) -> &[Atom<T>] {
        &self.atoms
    }

    pub fn support(&self) -> impl Iterator<Item = T> + '_ {
        self.atoms.iter().map(|a| a.point)
    }

    pub fn min(&self) -> T {
        self.atoms[0].point
    }

    pub fn max(&self) -> T {
        self.atoms[self.atoms.len() - 1].point
    }

    pub fn total_mass(&self) -> T {
        compensated_sum(self.atoms.iter().map(|a| a.prob))
    }

    pub fn mean(&self) -> T {
        self.expect(|x| x)
    }

    pub fn variance(&self) -> T {
        let m = self.mean();
        self.expect(|x| (x - m) * (x - m))
    }

    pub fn expect(&self, f: impl Fn(T) -> T) -> T {
        let mut acc = CompensatedSum::new();
        for a in &self.atoms {
            acc.add(a.prob * f(a.point));
        }
        acc.value()
    }

    /// `E[(X - a)+]`.
    pub fn upper_hinge(&self, a: T) -> T {
        self.expect(|x| (x - a).max(T::zero()))
    }

    /// `E[(a - X)+]`.
    pub fn lower_hinge(&self, a: T) -> T {
        self.expect(|x| (a - x).max(T::zero()))
    }

    /// `P(X >= a)`, with support points within tolerance of `a` counted.
    pub fn prob_at_least(&self, a: T) -> T {
        compensated_sum(
            self.atoms
                .iter()
                .filter(|at| at.point >= a - T::prob_tol())
                .map(|at| at.prob),
        )
    }

    /// `P(X > a)` for a strict threshold.
    pub fn prob_above(&self, a: T) -> T {
        compensated_sum(self.atoms.iter().filter(|at| at.point > a).map(|at| at.prob))
    }

    pub fn prob_below(&self, a: T) -> T {
        compensated_sum(self.atoms.iter().filter(|at| at.point < a).map(|at| at.prob))
    }

    /// Probability attached to the atom at `x` (within tolerance), zero if none.
    pub fn prob_of(&self, x: T) -> T {
        self.atoms
            .iter()
            .find(|a| (a.point - x).abs() <= T::prob_tol())
            .map_or(T::zero(), |a| a.prob)
    }
}
