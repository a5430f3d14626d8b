//! Finite weighted populations and their summary statistics.
//!
//! Items carry ids `1..=N`; internally item `id` lives at index `id - 1`.
//! Weights are normalized to sum to one at construction, and the raw total is
//! kept for reporting.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, Scalar};

/// One row of a population file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Item<T> {
    pub id: usize,
    pub weight: T,
    pub value: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Population<T> {
    weights: Vec<T>,
    values: Vec<T>,
    raw_weight_sum: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PopulationStats<T> {
    /// `max value - min value`.
    pub delta: T,
    /// `min weight / max weight`.
    pub alpha: T,
    /// Mean value under the weights, i.e. the mean of one weighted draw.
    pub mean_value: T,
}

impl<T: Scalar> Population<T> {
    /// Builds a population from raw (unnormalized) weights and values, item `i`
    /// getting id `i + 1`.
    pub fn new(weights: Vec<T>, values: Vec<T>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        if weights.len() != values.len() {
            return Err(Error::Parse(format!(
                "{} weights but {} values",
                weights.len(),
                values.len()
            )));
        }
        for (i, (&w, &v)) in weights.iter().zip(&values).enumerate() {
            if w <= T::zero() || !w.is_finite() {
                return Err(Error::InvalidWeight {
                    id: i + 1,
                    weight: w.as_f64(),
                });
            }
            if !v.is_finite() {
                return Err(Error::InvalidValue { id: i + 1 });
            }
        }
        let raw_weight_sum = compensated_sum(weights.iter().copied());
        if !raw_weight_sum.is_finite() {
            return Err(Error::Parse("weight total overflows".into()));
        }
        let weights = weights.into_iter().map(|w| w / raw_weight_sum).collect();
        Ok(Self {
            weights,
            values,
            raw_weight_sum,
        })
    }

    /// Equal weights.
    pub fn uniform(values: Vec<T>) -> Result<Self> {
        Self::new(vec![T::one(); values.len()], values)
    }

    /// Builds from id-tagged items in any order; ids must be exactly `1..=N`.
    pub fn from_items(items: &[Item<T>]) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        let n = items.len();
        let mut slots: Vec<Option<&Item<T>>> = vec![None; n];
        for item in items {
            if item.id == 0 || item.id > n {
                return Err(Error::UnknownId(item.id));
            }
            if slots[item.id - 1].replace(item).is_some() {
                return Err(Error::DuplicateId(item.id));
            }
        }
        let mut weights = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        for (i, slot) in slots.into_iter().enumerate() {
            let item = slot.ok_or(Error::MissingId { n, missing: i + 1 })?;
            weights.push(item.weight);
            values.push(item.value);
        }
        Self::new(weights, values)
    }

    /// Parses the `id,weight,value` CSV format.
    pub fn from_csv_str(src: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(src.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| Error::Parse(e.to_string()))?
            .clone();
        let expected = ["id", "weight", "value"];
        if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
            return Err(Error::Parse(format!(
                "expected header `id,weight,value`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut items = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Parse(e.to_string()))?;
            let field = |i: usize| record.get(i).unwrap_or_default();
            let id = field(0)
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("bad id `{}`: {e}", field(0))))?;
            let num = |i: usize| -> Result<T> {
                field(i)
                    .parse::<f64>()
                    .map(T::lit)
                    .map_err(|e| Error::Parse(format!("item {id}: bad number `{}`: {e}", field(i))))
            };
            items.push(Item {
                id,
                weight: num(1)?,
                value: num(2)?,
            });
        }
        Self::from_items(&items)
    }

    /// Parses a JSON array of `{"id", "weight", "value"}` objects.
    pub fn from_json_str(src: &str) -> Result<Self> {
        let items: Vec<Item<T>> =
            serde_json::from_str(src).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_items(&items)
    }

    /// Parses either format; JSON is recognized by a leading `[`.
    pub fn parse(src: &str) -> Result<Self> {
        if src.trim_start().starts_with('[') {
            Self::from_json_str(src)
        } else {
            Self::from_csv_str(src)
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Normalized weights, indexed by `id - 1`.
    #[inline]
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Weight total before normalization.
    pub fn raw_weight_sum(&self) -> T {
        self.raw_weight_sum
    }

    fn index(&self, id: usize) -> Result<usize> {
        if id == 0 || id > self.len() {
            Err(Error::UnknownId(id))
        } else {
            Ok(id - 1)
        }
    }

    pub fn weight(&self, id: usize) -> Result<T> {
        Ok(self.weights[self.index(id)?])
    }

    pub fn value(&self, id: usize) -> Result<T> {
        Ok(self.values[self.index(id)?])
    }

    pub fn items(&self) -> Vec<Item<T>> {
        self.weights
            .iter()
            .zip(&self.values)
            .enumerate()
            .map(|(i, (&weight, &value))| Item {
                id: i + 1,
                weight,
                value,
            })
            .collect()
    }

    pub fn stats(&self) -> PopulationStats<T> {
        let fold_min = |xs: &[T]| xs.iter().copied().fold(T::infinity(), T::min);
        let fold_max = |xs: &[T]| xs.iter().copied().fold(T::neg_infinity(), T::max);
        PopulationStats {
            delta: fold_max(&self.values) - fold_min(&self.values),
            alpha: fold_min(&self.weights) / fold_max(&self.weights),
            mean_value: compensated_sum(
                self.weights.iter().zip(&self.values).map(|(&w, &v)| w * v),
            ),
        }
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn value_sum(&self) -> T {
        compensated_sum(self.values.iter().copied())
    }

    /// Sum of values over a sample of ids; repeats count every time.
    pub fn cumulative_value(&self, sample: &[usize]) -> Result<T> {
        let mut acc = crate::scalar::CompensatedSum::new();
        for &id in sample {
            acc.add(self.values[self.index(id)?]);
        }
        Ok(acc.value())
    }

    /// Whether weights and values are arranged in the same order:
    /// `w(i) > w(j)` implies `v(i) >= v(j)`.
    pub fn weights_values_aligned(&self) -> bool {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.weights[a]
                .partial_cmp(&self.weights[b])
                .expect("finite weights")
        });
        // Within a group of equal weights values are unconstrained, so each
        // group only has to sit above the largest value of all lighter groups.
        let mut lighter_max = T::neg_infinity();
        let mut i = 0;
        while i < order.len() {
            let w = self.weights[order[i]];
            let mut j = i;
            let mut group_max = T::neg_infinity();
            while j < order.len() && self.weights[order[j]] == w {
                let v = self.values[order[j]];
                if v < lighter_max {
                    return false;
                }
                group_max = group_max.max(v);
                j += 1;
            }
            lighter_max = lighter_max.max(group_max);
            i = j;
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p2() -> Population<f64> {
        Population::new(vec![0.2, 0.3, 0.5], vec![1.0, 2.0, 3.0]).unwrap()
    }

    #[test]
    fn csv_already_normalized() {
        let pop = Population::<f64>::from_csv_str("id,weight,value\n1,0.3,0\n2,0.7,1").unwrap();
        assert_eq!(pop.len(), 2);
        assert!((pop.weights()[0] - 0.3).abs() < 1e-15);
        assert!((pop.weights()[1] - 0.7).abs() < 1e-15);
        assert_eq!(pop.values(), &[0.0, 1.0]);
    }

    #[test]
    fn csv_raw_counts_are_normalized() {
        let pop = Population::<f64>::from_csv_str("id,weight,value\n1,3,0\n2,7,1\n").unwrap();
        assert!((pop.weights()[0] - 0.3).abs() < 1e-15);
        assert!((pop.weights()[1] - 0.7).abs() < 1e-15);
        assert_eq!(pop.raw_weight_sum(), 10.0);
    }

    #[test]
    fn zero_weight_names_the_item() {
        let err = Population::<f64>::from_csv_str("id,weight,value\n1,0.3,0\n2,0,1").unwrap_err();
        assert!(matches!(err, Error::InvalidWeight { id: 2, .. }));
        assert!(err.to_string().contains("item 2"));
    }

    #[test]
    fn rejects_duplicates_gaps_and_empty() {
        let dup = Population::<f64>::from_csv_str("id,weight,value\n1,1,0\n1,1,1").unwrap_err();
        assert!(matches!(dup, Error::DuplicateId(1)));
        let gap = Population::<f64>::from_csv_str("id,weight,value\n1,1,0\n3,1,1").unwrap_err();
        assert!(matches!(gap, Error::UnknownId(3)));
        let empty = Population::<f64>::from_csv_str("id,weight,value\n").unwrap_err();
        assert!(matches!(empty, Error::EmptyPopulation));
        assert!(Population::<f64>::from_csv_str("a,b,c\n1,1,1").is_err());
    }

    #[test]
    fn json_any_order() {
        let src = r#"[{"id":2,"weight":0.7,"value":1.0},{"id":1,"weight":0.3,"value":0.0}]"#;
        let pop = Population::<f64>::parse(src).unwrap();
        assert_eq!(pop.values(), &[0.0, 1.0]);
        assert!((pop.weight(2).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn stats_of_p2() {
        let s = p2().stats();
        assert!((s.delta - 2.0).abs() < 1e-15);
        assert!((s.alpha - 0.4).abs() < 1e-15);
        assert!((s.mean_value - 2.3).abs() < 1e-15);
    }

    #[test]
    fn stats_degenerate_cases() {
        let uniform = Population::<f64>::uniform(vec![5.0, -1.0, 2.0]).unwrap();
        assert_eq!(uniform.stats().alpha, 1.0);
        let flat = Population::<f64>::new(vec![1.0, 2.0], vec![4.0, 4.0]).unwrap();
        assert_eq!(flat.stats().delta, 0.0);
    }

    #[test]
    fn cumulative_values() {
        let p1 = Population::<f64>::new(vec![0.3, 0.7], vec![0.0, 1.0]).unwrap();
        assert_eq!(p1.cumulative_value(&[2, 1]).unwrap(), 1.0);
        assert_eq!(p1.cumulative_value(&[2, 2]).unwrap(), 2.0);
        assert_eq!(p1.cumulative_value(&[]).unwrap(), 0.0);
        assert!(matches!(p1.cumulative_value(&[3]), Err(Error::UnknownId(3))));
    }

    #[test]
    fn alignment_condition() {
        assert!(p2().weights_values_aligned());
        let reversed = Population::<f64>::new(vec![0.5, 0.3, 0.2], vec![1.0, 2.0, 3.0]).unwrap();
        assert!(!reversed.weights_values_aligned());
        let tied = Population::<f64>::new(vec![1.0, 1.0, 2.0], vec![3.0, 0.0, 3.0]).unwrap();
        assert!(tied.weights_values_aligned());
        let tied_bad = Population::<f64>::new(vec![1.0, 1.0, 2.0], vec![3.0, 0.0, 2.0]).unwrap();
        assert!(!tied_bad.weights_values_aligned());
    }

    #[test]
    fn works_in_single_precision() {
        let pop = Population::<f32>::new(vec![2.0, 3.0, 5.0], vec![1.0, 2.0, 3.0]).unwrap();
        let s = pop.stats();
        assert!((s.alpha - 0.4).abs() < 1e-6);
        assert!((s.mean_value - 2.3).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn normalized_and_stats_consistent(
            rows in prop::collection::vec((1e-3f64..1e3, -50.0f64..50.0), 1..40)
        ) {
            let (w, v): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
            let pop = Population::new(w, v.clone()).unwrap();
            prop_assert!((compensated_sum(pop.weights().iter().copied()) - 1.0).abs() <= 1e-12);
            let s = pop.stats();
            let hi = v.iter().cloned().fold(f64::MIN, f64::max);
            let lo = v.iter().cloned().fold(f64::MAX, f64::min);
            prop_assert_eq!(s.delta, hi - lo);
            prop_assert!(s.alpha > 0.0 && s.alpha <= 1.0);
        }

        #[test]
        fn cumulative_value_is_additive(
            a in prop::collection::vec(1usize..=5, 0..10),
            b in prop::collection::vec(1usize..=5, 0..10),
        ) {
            let pop = Population::<f64>::new(vec![1.0; 5], vec![0.5, -2.0, 3.25, 7.0, 1.0]).unwrap();
            let joined: Vec<usize> = a.iter().chain(&b).copied().collect();
            let lhs = pop.cumulative_value(&joined).unwrap();
            let rhs = pop.cumulative_value(&a).unwrap() + pop.cumulative_value(&b).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
