//! Two stacked Polya urns sharing ball positions.
//!
//! The upper urn (replacement number `D`) only holds labelled balls; the lower
//! urn (replacement number `d < D`) mirrors it position by position, except
//! that part of every appended block is unlabelled. A uniformly chosen
//! position is read in both urns at once. The labelled draws of the lower urn
//! form a `d`-Polya sample and the upper draws a `D`-Polya sample.
//!
//! Appended balls always go to the right in blocks of `D - 1`, so the content
//! of a position is recovered from the block that created it and the arrays are
//! never materialized.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::Population;
use crate::rng::RngStreamSpec;
use crate::scalar::Scalar;

/// Steps allowed before giving up on reaching `n` labelled lower draws.
pub const TRACE_STEP_LIMIT: usize = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrnStep {
    /// 0-based position drawn in both urns.
    pub ball_index: usize,
    pub label_upper: usize,
    /// `None` when the lower ball is unlabelled.
    pub label_lower: Option<usize>,
    /// Size of each urn after the step.
    pub urn_size: usize,
    /// Unlabelled balls in the lower urn after the step.
    pub unlabelled_lower: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct UrnTrace<T> {
    pub d: u64,
    #[serde(rename = "D")]
    pub big_d: u64,
    pub steps: Vec<UrnStep>,
    /// Labels of the first `n` labelled lower draws (`d`-Polya).
    pub k_sample: Vec<usize>,
    /// Labels of the first `n` upper draws (`D`-Polya).
    pub l_sample: Vec<usize>,
    pub w: T,
    pub z: T,
}

/// State of the coupled urns.
#[derive(Clone, Debug)]
pub struct CoupledUrns {
    labels: usize,
    d: u64,
    big_d: u64,
    // One entry per step: label of the appended block, high bit set when the
    // lower copy of the block starts with d - 1 labelled balls.
    blocks: Vec<u32>,
    unlabelled: usize,
}

const LABELLED_BLOCK: u32 = 1 << 31;

impl CoupledUrns {
    pub fn new(labels: usize, d: u64, big_d: u64) -> Result<Self> {
        if labels == 0 {
            return Err(Error::EmptyPopulation);
        }
        if !(1 <= d && d < big_d) {
            return Err(Error::InvalidReplacement(format!("1 <= d < D, got d={d}, D={big_d}")));
        }
        if labels >= LABELLED_BLOCK as usize {
            return Err(Error::InvalidArgument("too many labels".into()));
        }
        Ok(Self {
            labels,
            d,
            big_d,
            blocks: Vec::new(),
            unlabelled: 0,
        })
    }

    pub fn size(&self) -> usize {
        self.labels + self.blocks.len() * (self.big_d as usize - 1)
    }

    pub fn steps(&self) -> usize {
        self.blocks.len()
    }

    pub fn unlabelled_lower(&self) -> usize {
        self.unlabelled
    }

    /// `(upper label, lower label)` at a 0-based position.
    pub fn ball_at(&self, position: usize) -> (usize, Option<usize>) {
        if position < self.labels {
            return (position + 1, Some(position + 1));
        }
        let width = self.big_d as usize - 1;
        let offset = position - self.labels;
        let block = self.blocks[offset / width];
        let label = (block & !LABELLED_BLOCK) as usize;
        let labelled = block & LABELLED_BLOCK != 0 && offset % width < self.d as usize - 1;
        (label, labelled.then_some(label))
    }

    /// Draws the ball at `position` in both urns and appends the new block.
    pub fn step_at(&mut self, position: usize) -> UrnStep {
        assert!(position < self.size(), "position {position} outside urn");
        let (label_upper, label_lower) = self.ball_at(position);
        let mut block = label_upper as u32;
        match label_lower {
            Some(j) => {
                debug_assert_eq!(j, label_upper);
                block |= LABELLED_BLOCK;
                self.unlabelled += (self.big_d - self.d) as usize;
            }
            None => self.unlabelled += self.big_d as usize - 1,
        }
        self.blocks.push(block);
        UrnStep {
            ball_index: position,
            label_upper,
            label_lower,
            urn_size: self.size(),
            unlabelled_lower: self.unlabelled,
        }
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> UrnStep {
        let position = rng.random_range(0..self.size() as u64) as usize;
        self.step_at(position)
    }
}

/// Runs the coupled urns until `n` labelled lower draws, returning only the
/// two samples. Fails past `step_limit` steps.
pub fn coupled_samples<R: Rng + ?Sized>(
    labels: usize,
    d: u64,
    big_d: u64,
    n: usize,
    step_limit: usize,
    rng: &mut R,
    mut on_step: impl FnMut(&UrnStep),
) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut urns = CoupledUrns::new(labels, d, big_d)?;
    let mut k = Vec::with_capacity(n);
    let mut l = Vec::with_capacity(n);
    while k.len() < n {
        if urns.steps() >= step_limit {
            return Err(Error::StepLimit(step_limit));
        }
        let step = urns.step(rng);
        on_step(&step);
        if l.len() < n {
            l.push(step.label_upper);
        }
        if let Some(j) = step.label_lower {
            k.push(j);
        }
    }
    Ok((k, l))
}

/// Martingale coupling of a `d`-Polya sample and a `D`-Polya sample, with the
/// full step trace.
pub fn polya_coupling<T: Scalar>(
    pop: &Population<T>,
    d: u64,
    big_d: u64,
    n: usize,
    rng: RngStreamSpec,
) -> Result<UrnTrace<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("polya coupling needs n >= 1".into()));
    }
    let mut steps = Vec::new();
    let (k_sample, l_sample) = coupled_samples(
        pop.len(),
        d,
        big_d,
        n,
        TRACE_STEP_LIMIT,
        &mut rng.rng(),
        |s| steps.push(*s),
    )?;
    Ok(UrnTrace {
        d,
        big_d,
        steps,
        w: pop.cumulative_value(&k_sample)?,
        z: pop.cumulative_value(&l_sample)?,
        k_sample,
        l_sample,
    })
}
