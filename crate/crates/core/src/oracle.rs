//! Exact ground truth for small instances by enumerating ordered tuples.
//!
//! Every routine refuses instances with more than [`ENUMERATION_LIMIT`] tuples
//! rather than approximating. Arithmetic is plain floating point; comparisons
//! use the scalar's probability tolerance.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::distribution::{merge_atoms, FiniteDistribution};
use crate::error::{Error, Result};
use crate::population::Population;
use crate::scalar::{CompensatedSum, Scalar};

pub const ENUMERATION_LIMIT: u128 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleMode {
    With,
    Without,
}

/// `N (N-1) ... (N-n+1)`, saturating.
pub fn permutation_count(population: usize, n: usize) -> u128 {
    if n > population {
        return 0;
    }
    ((population - n + 1)..=population).fold(1u128, |acc, k| acc.saturating_mul(k as u128))
}

pub fn power_count(population: usize, n: usize) -> u128 {
    (0..n).fold(1u128, |acc, _| acc.saturating_mul(population as u128))
}

fn guard(count: u128) -> Result<()> {
    if count > ENUMERATION_LIMIT {
        Err(Error::TooLarge {
            count,
            limit: ENUMERATION_LIMIT,
        })
    } else {
        Ok(())
    }
}

/// Visits every ordered tuple of `n` distinct ids with its successive-sampling
/// probability `prod w(i_k) / (1 - w(i_1) - ... - w(i_{k-1}))`.
pub fn for_each_without_tuple<T: Scalar>(
    pop: &Population<T>,
    n: usize,
    mut visit: impl FnMut(&[usize], T),
) -> Result<()> {
    if n > pop.len() {
        return Err(Error::SampleTooLarge {
            n,
            population: pop.len(),
        });
    }
    guard(permutation_count(pop.len(), n))?;
    fn rec<T: Scalar>(
        w: &[T],
        n: usize,
        tuple: &mut Vec<usize>,
        used: &mut [bool],
        prob: T,
        visit: &mut impl FnMut(&[usize], T),
    ) {
        if tuple.len() == n {
            visit(tuple, prob);
            return;
        }
        let rest = unused_mass(w, used, T::zero());
        for i in 0..w.len() {
            if used[i] {
                continue;
            }
            used[i] = true;
            tuple.push(i + 1);
            let p = prob * w[i] / rest;
            rec(w, n, tuple, used, p, visit);
            tuple.pop();
            used[i] = false;
        }
    }
    let mut used = vec![false; pop.len()];
    rec(
        pop.weights(),
        n,
        &mut Vec::with_capacity(n),
        &mut used,
        T::one(),
        &mut visit,
    );
    Ok(())
}

/// `1 - (weight already drawn)`, summed from the undrawn side so that it is
/// exact when a single item remains.
fn unused_mass<T: Scalar>(w: &[T], used: &[bool], outside: T) -> T {
    let mut acc = CompensatedSum::new();
    acc.add(outside);
    for (&x, &u) in w.iter().zip(used) {
        if !u {
            acc.add(x);
        }
    }
    acc.value()
}

/// Visits every ordered tuple in `{1..N}^n` with probability `prod w(j_k)`.
pub fn for_each_with_tuple<T: Scalar>(
    pop: &Population<T>,
    n: usize,
    mut visit: impl FnMut(&[usize], T),
) -> Result<()> {
    guard(power_count(pop.len(), n))?;
    fn rec<T: Scalar>(w: &[T], n: usize, tuple: &mut Vec<usize>, prob: T, visit: &mut impl FnMut(&[usize], T)) {
        if tuple.len() == n {
            visit(tuple, prob);
            return;
        }
        for (i, &wi) in w.iter().enumerate() {
            tuple.push(i + 1);
            rec(w, n, tuple, prob * wi, visit);
            tuple.pop();
        }
    }
    rec(pop.weights(), n, &mut Vec::with_capacity(n), T::one(), &mut visit);
    Ok(())
}

/// Visits every label sequence of a `d`-Polya urn started with one ball per
/// label, with its probability.
pub fn for_each_polya_tuple<T: Scalar>(
    labels: usize,
    d: u64,
    n: usize,
    mut visit: impl FnMut(&[usize], T),
) -> Result<()> {
    if d < 1 {
        return Err(Error::InvalidReplacement("d >= 1".into()));
    }
    guard(power_count(labels, n))?;
    fn rec<T: Scalar>(
        counts: &mut [u64],
        extra: u64,
        total: u64,
        n: usize,
        tuple: &mut Vec<usize>,
        prob: T,
        visit: &mut impl FnMut(&[usize], T),
    ) {
        if tuple.len() == n {
            visit(tuple, prob);
            return;
        }
        for j in 0..counts.len() {
            let p = prob * T::lit(counts[j] as f64) / T::lit(total as f64);
            counts[j] += extra;
            tuple.push(j + 1);
            rec(counts, extra, total + extra, n, tuple, p, visit);
            tuple.pop();
            counts[j] -= extra;
        }
    }
    let mut counts = vec![1u64; labels];
    rec(
        &mut counts,
        d - 1,
        labels as u64,
        n,
        &mut Vec::with_capacity(n),
        T::one(),
        &mut visit,
    );
    Ok(())
}

/// Accumulates `(value, prob)` pairs, compacting periodically.
struct LawBuilder<T> {
    raw: Vec<(T, T)>,
}

impl<T: Scalar> LawBuilder<T> {
    const COMPACT_AT: usize = 1 << 20;

    fn new() -> Self {
        Self { raw: Vec::new() }
    }

    fn push(&mut self, point: T, prob: T) {
        self.raw.push((point, prob));
        if self.raw.len() >= Self::COMPACT_AT {
            merge_atoms(&mut self.raw, T::prob_tol());
        }
    }

    fn finish(self) -> Result<FiniteDistribution<T>> {
        FiniteDistribution::from_weighted_points(self.raw)
    }
}

fn tuple_value<T: Scalar>(values: &[T], tuple: &[usize]) -> T {
    let mut acc = CompensatedSum::new();
    for &id in tuple {
        acc.add(values[id - 1]);
    }
    acc.value()
}

/// Exact law of the cumulative value of an `n`-sample drawn with or without
/// replacement.
pub fn exact_sample_dist<T: Scalar>(
    pop: &Population<T>,
    n: usize,
    mode: SampleMode,
) -> Result<FiniteDistribution<T>> {
    let mut law = LawBuilder::new();
    let values = pop.values();
    let visit = |t: &[usize], p: T| law.push(tuple_value(values, t), p);
    match mode {
        SampleMode::Without => for_each_without_tuple(pop, n, visit)?,
        SampleMode::With => for_each_with_tuple(pop, n, visit)?,
    }
    law.finish()
}

/// Exact law of the cumulative value of a `d`-Polya sample of length `n`.
pub fn exact_polya_dist<T: Scalar>(
    pop: &Population<T>,
    d: u64,
    n: usize,
) -> Result<FiniteDistribution<T>> {
    let mut law = LawBuilder::new();
    let values = pop.values();
    for_each_polya_tuple(pop.len(), d, n, |t, p| law.push(tuple_value(values, t), p))?;
    law.finish()
}

/// Exact probability of every ordered tuple, in enumeration order.
pub fn exact_tuple_law<T: Scalar>(
    pop: &Population<T>,
    n: usize,
    mode: SampleMode,
) -> Result<Vec<(Vec<usize>, T)>> {
    let mut out = Vec::new();
    let visit = |t: &[usize], p: T| out.push((t.to_vec(), p));
    match mode {
        SampleMode::Without => for_each_without_tuple(pop, n, visit)?,
        SampleMode::With => for_each_with_tuple(pop, n, visit)?,
    }
    Ok(out)
}

pub fn exact_polya_tuple_law<T: Scalar>(
    labels: usize,
    d: u64,
    n: usize,
) -> Result<Vec<(Vec<usize>, T)>> {
    let mut out = Vec::new();
    for_each_polya_tuple(labels, d, n, |t, p: T| out.push((t.to_vec(), p)))?;
    Ok(out)
}

/// Which hinge family a violation was found in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HingeSide {
    /// `E[(X - a)+]`
    Upper,
    /// `E[(a - X)+]`
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct OrderWitness<T> {
    pub threshold: T,
    pub lhs: T,
    pub rhs: T,
    pub side: HingeSide,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct OrderCheckResult<T> {
    pub holds: bool,
    pub witness: Option<OrderWitness<T>>,
}

impl<T: Scalar> OrderCheckResult<T> {
    /// `lhs - rhs` of the witness, or zero.
    pub fn violation(&self) -> T {
        self.witness.map_or(T::zero(), |w| w.lhs - w.rhs)
    }
}

fn test_points<T: Scalar>(a: &FiniteDistribution<T>, b: &FiniteDistribution<T>) -> Vec<T> {
    let mut pts: Vec<T> = a.support().chain(b.support()).collect();
    pts.sort_by(|x, y| x.partial_cmp(y).expect("finite support"));
    pts.dedup();
    pts
}

/// Largest violation of `E[(lower - a)+] <= E[(upper - a)+] + tol` over the
/// joint support and one point below it. Ties keep the smallest support point.
fn worst_upper_hinge<T: Scalar>(
    lower: &FiniteDistribution<T>,
    upper: &FiniteDistribution<T>,
    tol: T,
) -> Option<OrderWitness<T>> {
    let pts = test_points(lower, upper);
    let below = pts[0] - T::one();
    let mut worst: Option<OrderWitness<T>> = None;
    for a in pts.into_iter().chain(std::iter::once(below)) {
        let lhs = lower.upper_hinge(a);
        let rhs = upper.upper_hinge(a);
        if lhs > rhs + tol && worst.is_none_or(|w| lhs - rhs > w.lhs - w.rhs + tol) {
            worst = Some(OrderWitness {
                threshold: a,
                lhs,
                rhs,
                side: HingeSide::Upper,
            });
        }
    }
    worst
}

/// Increasing convex order `lower <=_icx upper`, decided by hinge functions.
pub fn icx_dominates<T: Scalar>(
    lower: &FiniteDistribution<T>,
    upper: &FiniteDistribution<T>,
    tol: T,
) -> OrderCheckResult<T> {
    let witness = worst_upper_hinge(lower, upper, tol);
    OrderCheckResult {
        holds: witness.is_none(),
        witness,
    }
}

/// Convex order `lower <=_cx upper`: equal means and increasing convex order.
pub fn cx_dominates<T: Scalar>(
    lower: &FiniteDistribution<T>,
    upper: &FiniteDistribution<T>,
    tol: T,
) -> OrderCheckResult<T> {
    let (ml, mu) = (lower.mean(), upper.mean());
    if ml < mu - tol {
        // f(x) = (a - x)+ with a above both supports reduces to a - mean.
        let a = lower.max().max(upper.max()) + T::one();
        return OrderCheckResult {
            holds: false,
            witness: Some(OrderWitness {
                threshold: a,
                lhs: lower.lower_hinge(a),
                rhs: upper.lower_hinge(a),
                side: HingeSide::Lower,
            }),
        };
    }
    icx_dominates(lower, upper, tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ConditionalFirstDraw<T> {
    /// `P(first draw = id | sampled set = item_set)`.
    pub probs: BTreeMap<usize, T>,
    pub cond_mean: T,
    /// `P(sampled set = item_set)`.
    pub set_probability: T,
}

/// Law of the first successive draw given the unordered set of the first `n`
/// draws, summing the ordered-tuple probabilities over all orderings.
pub fn conditional_first_draw_given_set<T: Scalar>(
    pop: &Population<T>,
    item_set: &[usize],
) -> Result<ConditionalFirstDraw<T>> {
    let n = item_set.len();
    if n == 0 || n > pop.len() {
        return Err(Error::SampleTooLarge {
            n,
            population: pop.len(),
        });
    }
    let mut weights = Vec::with_capacity(n);
    for (k, &id) in item_set.iter().enumerate() {
        weights.push(pop.weight(id)?);
        if item_set[..k].contains(&id) {
            return Err(Error::RepeatedId(id));
        }
    }
    guard(permutation_count(n, n))?;

    fn rec<T: Scalar>(
        w: &[T],
        outside: T,
        first: Option<usize>,
        depth: usize,
        used: &mut [bool],
        prob: T,
        by_first: &mut [CompensatedSum<T>],
    ) {
        if depth == w.len() {
            by_first[first.expect("non-empty set")].add(prob);
            return;
        }
        let rest = unused_mass(w, used, outside);
        for k in 0..w.len() {
            if used[k] {
                continue;
            }
            used[k] = true;
            let p = prob * w[k] / rest;
            rec(w, outside, first.or(Some(k)), depth + 1, used, p, by_first);
            used[k] = false;
        }
    }
    let mut in_set = vec![false; pop.len()];
    for &id in item_set {
        in_set[id - 1] = true;
    }
    let outside = unused_mass(pop.weights(), &in_set, T::zero());
    let mut by_first = vec![CompensatedSum::new(); n];
    rec(
        &weights,
        outside,
        None,
        0,
        &mut vec![false; n],
        T::one(),
        &mut by_first,
    );
    let set_probability: T = by_first.iter().map(|s| s.value()).sum();
    let mut probs = BTreeMap::new();
    let mut mean = CompensatedSum::new();
    for (k, &id) in item_set.iter().enumerate() {
        let p = by_first[k].value() / set_probability;
        mean.add(p * pop.value(id)?);
        probs.insert(id, p);
    }
    Ok(ConditionalFirstDraw {
        probs,
        cond_mean: mean.value(),
        set_probability,
    })
}

/// `E[T_n]`: expected stream position of the `n`-th distinct id, as the
/// tuple-law average of `sum_k 1 / (1 - sigma_{k-1})`.
pub fn exact_expected_tn<T: Scalar>(pop: &Population<T>, n: usize) -> Result<T> {
    let w = pop.weights();
    let mut acc = CompensatedSum::new();
    for_each_without_tuple(pop, n, |tuple, p| {
        let mut sigma = T::zero();
        let mut wait = T::zero();
        for &id in tuple {
            wait = wait + T::one() / (T::one() - sigma);
            sigma = sigma + w[id - 1];
        }
        acc.add(p * wait);
    })?;
    Ok(acc.value())
}

/// Populations with sizes in `sizes`, every raw weight vector in
/// `levels^N`, and values `0..N-1` assigned in increasing-weight order so that
/// heavier items never carry smaller values.
pub fn aligned_grid<T: Scalar>(sizes: std::ops::RangeInclusive<usize>, levels: &[u32]) -> Vec<Population<T>> {
    let mut out = Vec::new();
    for size in sizes {
        let combos = power_count(levels.len(), size) as usize;
        for code in 0..combos {
            let mut c = code;
            let raw: Vec<T> = (0..size)
                .map(|_| {
                    let level = levels[c % levels.len()];
                    c /= levels.len();
                    T::lit(f64::from(level))
                })
                .collect();
            let mut order: Vec<usize> = (0..size).collect();
            order.sort_by(|&a, &b| raw[a].partial_cmp(&raw[b]).expect("finite"));
            let mut values = vec![T::zero(); size];
            for (rank, &i) in order.iter().enumerate() {
                values[i] = T::from_count(rank);
            }
            out.push(Population::new(raw, values).expect("positive grid weights"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p1() -> Population<f64> {
        Population::new(vec![0.3, 0.7], vec![0.0, 1.0]).unwrap()
    }

    fn p2() -> Population<f64> {
        Population::new(vec![0.2, 0.3, 0.5], vec![1.0, 2.0, 3.0]).unwrap()
    }

    fn dist(atoms: &[(f64, f64)]) -> FiniteDistribution<f64> {
        FiniteDistribution::from_weighted_points(atoms.iter().copied()).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12
    }

    #[test]
    fn without_law_of_p1_and_p2() {
        let d = exact_sample_dist(&p1(), 2, SampleMode::Without).unwrap();
        assert_eq!(d.atoms().len(), 1);
        assert!(close(d.prob_of(1.0), 1.0));

        let d = exact_sample_dist(&p2(), 2, SampleMode::Without).unwrap();
        assert_eq!(d.atoms().len(), 3);
        // 0.075 + 0.3/3.5, 0.125 + 0.2, 0.15/0.7 + 0.3
        assert!(close(d.prob_of(3.0), 0.075 + 0.06 / 0.7));
        assert!(close(d.prob_of(4.0), 0.325));
        assert!(close(d.prob_of(5.0), 0.15 / 0.7 + 0.3));
        assert!((d.prob_of(3.0) - 0.160714).abs() < 1e-6);
        assert!((d.prob_of(5.0) - 0.514286).abs() < 1e-6);
    }

    #[test]
    fn with_law_is_binomial() {
        let d = exact_sample_dist(&p1(), 2, SampleMode::With).unwrap();
        assert!(close(d.prob_of(0.0), 0.09));
        assert!(close(d.prob_of(1.0), 0.42));
        assert!(close(d.prob_of(2.0), 0.49));
    }

    #[test]
    fn tuple_law_of_p2() {
        let law: BTreeMap<Vec<usize>, f64> = exact_tuple_law(&p2(), 2, SampleMode::Without)
            .unwrap()
            .into_iter()
            .collect();
        assert!(close(law[&vec![3, 2]], 0.3));
        assert!(close(law[&vec![1, 2]], 0.075));
        assert!(close(law[&vec![2, 1]], 0.06 / 0.7));
        assert!(close(law.values().sum::<f64>(), 1.0));
    }

    #[test]
    fn polya_laws() {
        let pop = Population::<f64>::uniform(vec![0.0, 1.0]).unwrap();
        let d2 = exact_polya_dist(&pop, 2, 2).unwrap();
        for k in 0..3 {
            assert!(close(d2.prob_of(k as f64), 1.0 / 3.0));
        }
        // d = 1 returns the ball alone: two i.i.d. uniform draws.
        let d1 = exact_polya_dist(&pop, 1, 2).unwrap();
        assert!(close(d1.prob_of(0.0), 0.25));
        assert!(close(d1.prob_of(1.0), 0.5));
        assert!(close(d1.prob_of(2.0), 0.25));
        let tuples = exact_polya_tuple_law::<f64>(2, 2, 2).unwrap();
        let both_one = tuples.iter().find(|(t, _)| t == &vec![1, 1]).unwrap().1;
        assert!(close(both_one, 1.0 / 3.0));
        for d in 1..5 {
            let first = exact_polya_dist(&p2(), d, 1).unwrap();
            for v in [1.0, 2.0, 3.0] {
                assert!(close(first.prob_of(v), 1.0 / 3.0));
            }
        }
    }

    #[test]
    fn guard_rail() {
        let big = Population::<f64>::uniform(vec![0.0; 30]).unwrap();
        assert!(matches!(
            exact_sample_dist(&big, 6, SampleMode::Without),
            Err(Error::TooLarge { .. })
        ));
        assert!(matches!(
            exact_sample_dist(&big, 6, SampleMode::With),
            Err(Error::TooLarge { .. })
        ));
        assert!(exact_polya_dist(&big, 2, 5).is_err());
    }

    #[test]
    fn icx_examples() {
        let a = dist(&[(0.0, 0.5), (3.0, 0.5)]);
        assert!(icx_dominates(&a, &a, 1e-12).holds);
        let r = icx_dominates(&FiniteDistribution::point_mass(1.0), &FiniteDistribution::point_mass(0.0), 1e-12);
        assert!(!r.holds);
        let w = r.witness.unwrap();
        assert_eq!((w.threshold, w.lhs, w.rhs), (0.0, 1.0, 0.0));

        let x = exact_sample_dist(&p1(), 2, SampleMode::Without).unwrap();
        let y = exact_sample_dist(&p1(), 2, SampleMode::With).unwrap();
        assert!(icx_dominates(&x, &y, 1e-12).holds);
        assert!(close(y.upper_hinge(1.0), 0.49));
        assert!(!icx_dominates(&y, &x, 1e-12).holds);
    }

    #[test]
    fn cx_examples() {
        let third = dist(&[(0.0, 1.0 / 3.0), (1.0, 1.0 / 3.0), (2.0, 1.0 / 3.0)]);
        assert!(cx_dominates(&FiniteDistribution::point_mass(1.0), &third, 1e-12).holds);
        let r = cx_dominates(&FiniteDistribution::point_mass(0.0), &FiniteDistribution::point_mass(1.0), 1e-12);
        assert!(!r.holds);
        let w = r.witness.unwrap();
        assert_eq!(w.side, HingeSide::Lower);
        assert!(w.lhs > w.rhs);
        assert!(cx_dominates(&third, &third, 1e-12).holds);
        assert!(!cx_dominates(&third, &FiniteDistribution::point_mass(1.0), 1e-12).holds);
    }

    #[test]
    fn conditional_first_draw() {
        let c = conditional_first_draw_given_set(&p2(), &[2, 3]).unwrap();
        assert!(close(c.set_probability, 0.15 / 0.7 + 0.3));
        assert!((c.probs[&2] - 0.416667).abs() < 1e-6);
        assert!((c.probs[&3] - 0.583333).abs() < 1e-6);
        assert!((c.cond_mean - 2.583333).abs() < 1e-6);
        assert!(c.cond_mean >= 2.5);

        let single = conditional_first_draw_given_set(&p2(), &[3]).unwrap();
        assert!(close(single.probs[&3], 1.0));
        assert!(close(single.cond_mean, 3.0));

        let uni = Population::<f64>::uniform(vec![1.0, 5.0, 2.0, 8.0]).unwrap();
        let c = conditional_first_draw_given_set(&uni, &[1, 2, 4]).unwrap();
        assert!(c.probs.values().all(|&p| close(p, 1.0 / 3.0)));
        assert!(close(c.cond_mean, 14.0 / 3.0));

        assert!(matches!(
            conditional_first_draw_given_set(&p2(), &[2, 2]),
            Err(Error::RepeatedId(2))
        ));
        assert!(conditional_first_draw_given_set(&p2(), &[4]).is_err());
        assert!(conditional_first_draw_given_set(&p2(), &[1, 2, 3, 1]).is_err());
    }

    #[test]
    fn expected_tn() {
        assert!(close(exact_expected_tn(&p2(), 1).unwrap(), 1.0));
        // sum_i w(i) (1 + 1/(1 - w(i)))
        let e2 = 0.2 * (1.0 + 1.0 / 0.8) + 0.3 * (1.0 + 1.0 / 0.7) + 0.5 * (1.0 + 1.0 / 0.5);
        assert!(close(exact_expected_tn(&p2(), 2).unwrap(), e2));
        assert!((e2 - 2.678571).abs() < 1e-6);
        let coupon = Population::<f64>::uniform(vec![0.0, 1.0]).unwrap();
        assert!(close(exact_expected_tn(&coupon, 2).unwrap(), 3.0));
        let coupon4 = Population::<f64>::uniform(vec![0.0; 4]).unwrap();
        // 4 (1 + 1/2 + 1/3 + 1/4)
        assert!(close(exact_expected_tn(&coupon4, 4).unwrap(), 4.0 * (25.0 / 12.0)));
    }

    #[test]
    fn grid_is_aligned() {
        let grid = aligned_grid::<f64>(2..=3, &[1, 2, 3]);
        assert_eq!(grid.len(), 9 + 27);
        assert!(grid.iter().all(|p| p.weights_values_aligned()));
    }

    #[test]
    fn single_precision_oracle() {
        let pop = Population::<f32>::new(vec![0.2, 0.3, 0.5], vec![1.0, 2.0, 3.0]).unwrap();
        let d = exact_sample_dist(&pop, 2, SampleMode::Without).unwrap();
        assert!((d.prob_of(4.0) - 0.325).abs() < 1e-5);
    }
}
