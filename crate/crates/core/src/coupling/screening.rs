//! Sampling without replacement obtained by screening an i.i.d. weighted
//! stream: `I_k` is the k-th distinct id of the stream and `T_k` the position
//! where it first appears. The same stream also yields the with-replacement
//! sample `(J_1, ..., J_n)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::Population;
use crate::rng::{RngStreamSpec, StreamRng};
use crate::samplers::WithReplacementSampler;
use crate::scalar::{CompensatedSum, Scalar};

/// Tag for the lazily generated stream continuation used by perturbations.
const EXTENSION_TAG: u64 = 0x5c4e_e7e5_0000_0001;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ScreeningRecord<T> {
    /// Stream prefix `J_1, ..., J_{T_n}`.
    pub stream: Vec<usize>,
    /// 1-based positions `T_1 < ... < T_n`.
    pub screen_times: Vec<usize>,
    pub i_sample: Vec<usize>,
    pub x: T,
    pub y: T,
    /// Seed of the stream, absent for records screened from a given stream.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<RngStreamSpec>,
}

impl<T: Scalar> ScreeningRecord<T> {
    pub fn n(&self) -> usize {
        self.i_sample.len()
    }

    /// `T_n`, zero for the empty record.
    pub fn last_time(&self) -> usize {
        self.screen_times.last().copied().unwrap_or(0)
    }

    /// Spec of the stream continuation beyond `T_n`.
    pub fn extension_spec(&self) -> RngStreamSpec {
        self.seed
            .unwrap_or(RngStreamSpec::new(0, 0))
            .derived(EXTENSION_TAG)
    }
}

/// Reusable screening state for one population.
#[derive(Clone, Debug)]
pub struct Screener<'a, T> {
    pop: &'a Population<T>,
    sampler: WithReplacementSampler<T>,
    seen: Vec<bool>,
}

impl<'a, T: Scalar> Screener<'a, T> {
    pub fn new(pop: &'a Population<T>) -> Self {
        Self {
            pop,
            sampler: WithReplacementSampler::new(pop),
            seen: vec![false; pop.len()],
        }
    }

    pub fn sampler(&self) -> &WithReplacementSampler<T> {
        &self.sampler
    }

    /// Screens a fresh stream from `rng` until `n` distinct ids have appeared.
    pub fn run<R: Rng + ?Sized>(&mut self, n: usize, rng: &mut R) -> Result<ScreeningRecord<T>> {
        let sampler = &self.sampler;
        let stream = std::iter::repeat_with(|| sampler.draw(rng));
        screen(self.pop, &mut self.seen, n, stream)
    }
}

fn screen<T: Scalar>(
    pop: &Population<T>,
    seen: &mut [bool],
    n: usize,
    stream: impl IntoIterator<Item = usize>,
) -> Result<ScreeningRecord<T>> {
    if n > pop.len() {
        return Err(Error::SampleTooLarge {
            n,
            population: pop.len(),
        });
    }
    let values = pop.values();
    let mut record = ScreeningRecord {
        stream: Vec::new(),
        screen_times: Vec::with_capacity(n),
        i_sample: Vec::with_capacity(n),
        x: T::zero(),
        y: T::zero(),
        seed: None,
    };
    let mut y = CompensatedSum::new();
    let mut stream = stream.into_iter();
    let outcome = loop {
        if record.i_sample.len() == n {
            break Ok(());
        }
        let Some(id) = stream.next() else {
            break Err(Error::StreamExhausted {
                consumed: record.stream.len(),
                needed: n,
            });
        };
        if id == 0 || id > pop.len() {
            break Err(Error::UnknownId(id));
        }
        record.stream.push(id);
        if record.stream.len() <= n {
            y.add(values[id - 1]);
        }
        if !seen[id - 1] {
            seen[id - 1] = true;
            record.screen_times.push(record.stream.len());
            record.i_sample.push(id);
        }
    };
    for &id in &record.i_sample {
        seen[id - 1] = false;
    }
    outcome?;
    record.x = pop.cumulative_value(&record.i_sample)?;
    record.y = y.value();
    Ok(record)
}

/// Screens a given stream; errors if it ends before `n` distinct ids appear.
pub fn screen_stream<T: Scalar>(
    pop: &Population<T>,
    n: usize,
    stream: impl IntoIterator<Item = usize>,
) -> Result<ScreeningRecord<T>> {
    screen(pop, &mut vec![false; pop.len()], n, stream)
}

/// Screening coupling of `(X, Y)` driven by one seeded stream.
pub fn screening_coupling<T: Scalar>(
    pop: &Population<T>,
    n: usize,
    rng: RngStreamSpec,
) -> Result<ScreeningRecord<T>> {
    let mut record = Screener::new(pop).run(n, &mut rng.rng())?;
    record.seed = Some(rng);
    Ok(record)
}

/// A stream prefix that grows on demand with fresh i.i.d. weighted draws.
pub struct ExtendableStream<'s, T> {
    entries: Vec<usize>,
    sampler: &'s WithReplacementSampler<T>,
    rng: StreamRng,
}

impl<'s, T: Scalar> ExtendableStream<'s, T> {
    pub fn new(prefix: Vec<usize>, sampler: &'s WithReplacementSampler<T>, rng: StreamRng) -> Self {
        Self {
            entries: prefix,
            sampler,
            rng,
        }
    }

    /// Entry at 1-based `position`.
    pub fn get(&mut self, position: usize) -> usize {
        while self.entries.len() < position {
            let id = self.sampler.draw(&mut self.rng);
            self.entries.push(id);
        }
        self.entries[position - 1]
    }

    pub fn materialized(&self) -> &[usize] {
        &self.entries
    }
}

/// Cumulative value of the first `n` distinct ids of `stream` with the entry at
/// 1-based `position` replaced by `replacement`.
pub fn rescreen_value<T: Scalar>(
    pop: &Population<T>,
    n: usize,
    stream: &mut ExtendableStream<'_, T>,
    position: usize,
    replacement: usize,
    seen: &mut Vec<bool>,
) -> T {
    seen.clear();
    seen.resize(pop.len(), false);
    let values = pop.values();
    let mut acc = CompensatedSum::new();
    let mut found = 0;
    let mut p = 0;
    while found < n {
        p += 1;
        let id = if p == position {
            replacement
        } else {
            stream.get(p)
        };
        if !seen[id - 1] {
            seen[id - 1] = true;
            acc.add(values[id - 1]);
            found += 1;
        }
    }
    acc.value()
}

/// `X^i`: the cumulative value after replacing `J_i` by `j_prime` and
/// re-screening. Entries needed beyond `T_n` come from the record's
/// deterministic extension stream.
pub fn perturbed_value<T: Scalar>(
    record: &ScreeningRecord<T>,
    position: usize,
    j_prime: usize,
    pop: &Population<T>,
    n: usize,
) -> Result<T> {
    if position == 0 {
        return Err(Error::PositionOutOfRange {
            position,
            len: record.stream.len(),
        });
    }
    pop.weight(j_prime)?;
    if n != record.n() {
        return Err(Error::InvalidArgument(format!(
            "record holds {} screened ids, not {n}",
            record.n()
        )));
    }
    // Positions after T_n never influence the first n distinct ids.
    if position > record.last_time() {
        return Ok(record.x);
    }
    let sampler = WithReplacementSampler::new(pop);
    let mut stream =
        ExtendableStream::new(record.stream.clone(), &sampler, record.extension_spec().rng());
    Ok(rescreen_value(pop, n, &mut stream, position, j_prime, &mut Vec::new()))
}
