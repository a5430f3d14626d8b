//! Monte Carlo verification and the pre-registered verification suites.
//!
//! Replicate `r` of a run always uses stream `r` of the run's master seed.
//! Replicates are evaluated in parallel, collected in replicate order and then
//! reduced sequentially, so every report is bit-identical for any thread count.

mod checks;
mod perturbation;
pub mod suites;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::rng::{RngStreamSpec, StreamRng};
use crate::scalar::CompensatedSum;

pub use checks::{
    mc_diagnostics_check, mc_order_check, mc_polya_marginal_check, mc_polya_martingale_check,
    mc_screening_marginal_check, mc_submartingale_check, mc_tail_check, SampleScheme, SamplerSpec,
};
pub use perturbation::estimate_v;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub params: Value,
    pub statistic: f64,
    pub reference: f64,
    /// Half-width of the acceptance band (3σ unless stated in `info`).
    pub ci: f64,
    pub replicates: u64,
    pub verdict: Verdict,
    /// Master seed of the replicate streams; absent for exact checks.
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub info: Option<Value>,
}

impl VerificationReport {
    /// One-sided check: passes when `statistic <= reference + ci`.
    pub fn upper_bound(check: &str, params: Value, statistic: f64, reference: f64, ci: f64) -> Self {
        let verdict = if statistic <= reference + ci {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self::with_verdict(check, params, statistic, reference, ci, verdict)
    }

    /// Two-sided check: passes when `|statistic - reference| <= ci`.
    pub fn equality(check: &str, params: Value, statistic: f64, reference: f64, ci: f64) -> Self {
        let verdict = if (statistic - reference).abs() <= ci {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self::with_verdict(check, params, statistic, reference, ci, verdict)
    }

    pub fn with_verdict(
        check: &str,
        params: Value,
        statistic: f64,
        reference: f64,
        ci: f64,
        verdict: Verdict,
    ) -> Self {
        Self {
            check: check.to_owned(),
            params,
            statistic,
            reference,
            ci,
            replicates: 0,
            verdict,
            seed: None,
            info: None,
        }
    }

    pub fn sampled(mut self, replicates: usize, seed: u64) -> Self {
        self.replicates = replicates as u64;
        self.seed = Some(seed);
        self
    }

    pub fn info(mut self, info: Value) -> Self {
        self.info = Some(info);
        self
    }

    /// Downgrades a verdict that cannot be trusted to inconclusive.
    pub fn inconclusive(mut self) -> Self {
        self.verdict = Verdict::Inconclusive;
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn failed(&self) -> bool {
        self.verdict == Verdict::Fail
    }
}

/// Replicate budget, master seed and worker count of a Monte Carlo run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub replicates: usize,
    pub master_seed: u64,
    /// Worker threads; `None` uses rayon's global pool.
    pub threads: Option<usize>,
}

impl McConfig {
    pub fn new(replicates: usize, master_seed: u64) -> Self {
        Self {
            replicates,
            master_seed,
            threads: None,
        }
    }

    pub fn threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    pub fn replicates(mut self, replicates: usize) -> Self {
        self.replicates = replicates;
        self
    }

    /// Same budget on an unrelated master seed, for a separate check in a
    /// suite.
    pub fn derived(&self, tag: u64) -> Self {
        Self {
            master_seed: RngStreamSpec::new(self.master_seed, 0).derived(tag).master_seed,
            ..*self
        }
    }

    pub fn stream(&self, replicate: u64) -> RngStreamSpec {
        RngStreamSpec::new(self.master_seed, replicate)
    }
}

/// Runs `f(replicate, rng)` for every replicate and returns the results in
/// replicate order.
pub fn run_replicates<R, F>(cfg: &McConfig, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(u64, &mut StreamRng) -> Result<R> + Sync + Send,
{
    if cfg.replicates == 0 {
        return Err(Error::ZeroReplicates);
    }
    let job = || {
        (0..cfg.replicates as u64)
            .into_par_iter()
            .map(|r| f(r, &mut cfg.stream(r).rng()))
            .collect::<Result<Vec<R>>>()
    };
    match cfg.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(job),
        None => job(),
    }
}

/// Sample mean and standard error of the mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
}

impl Moments {
    pub fn of(xs: impl IntoIterator<Item = f64> + Clone) -> Self {
        let mut sum = CompensatedSum::new();
        let mut count = 0;
        for x in xs.clone() {
            sum.add(x);
            count += 1;
        }
        if count == 0 {
            return Self {
                count,
                mean: 0.0,
                sd: 0.0,
            };
        }
        let mean = sum.value() / count as f64;
        let mut sq = CompensatedSum::new();
        for x in xs {
            sq.add((x - mean) * (x - mean));
        }
        let sd = if count > 1 {
            (sq.value() / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { count, mean, sd }
    }

    pub fn se(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sd / (self.count as f64).sqrt()
        }
    }

    /// Pre-registered 3σ half-width.
    pub fn band(&self) -> f64 {
        3.0 * self.se()
    }
}

/// 3σ half-width of a binomial proportion.
pub fn proportion_band(p: f64, trials: usize) -> f64 {
    3.0 * (p * (1.0 - p) / trials as f64).sqrt()
}

/// Chi-square goodness of fit; bins with expected count below 5 are pooled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareFit {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// Upper `1 - significance` quantile.
    pub critical: f64,
}

pub const GOF_SIGNIFICANCE: f64 = 0.001;

pub fn chi_square_fit(observed: &[u64], probs: &[f64]) -> Result<ChiSquareFit> {
    if observed.len() != probs.len() {
        return Err(Error::InvalidArgument("observed and expected bins differ".into()));
    }
    let total: u64 = observed.iter().sum();
    let total = total as f64;
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut pooled_o, mut pooled_e) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        let e = p * total;
        if e < 5.0 {
            pooled_o += o as f64;
            pooled_e += e;
        } else {
            bins.push((o as f64, e));
        }
    }
    if pooled_e > 0.0 || pooled_o > 0.0 {
        bins.push((pooled_o, pooled_e));
    }
    let mut statistic = CompensatedSum::new();
    for &(o, e) in &bins {
        if e > 0.0 {
            statistic.add((o - e) * (o - e) / e);
        } else if o > 0.0 {
            statistic.add(f64::INFINITY);
        }
    }
    let statistic = statistic.value();
    let df = bins.len().saturating_sub(1);
    if df == 0 {
        let ok = statistic == 0.0;
        return Ok(ChiSquareFit {
            statistic,
            df,
            p_value: if ok { 1.0 } else { 0.0 },
            critical: 0.0,
        });
    }
    let law = ChiSquared::new(df as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(ChiSquareFit {
        statistic,
        df,
        p_value: law.sf(statistic),
        critical: law.inverse_cdf(1.0 - GOF_SIGNIFICANCE),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn replicates_are_thread_count_independent() {
        let run = |threads| {
            let cfg = McConfig::new(2000, 5).threads(Some(threads));
            run_replicates(&cfg, |r, rng| Ok((r, rng.random::<f64>()))).unwrap()
        };
        let one = run(1);
        assert_eq!(one, run(8));
        assert!(one.iter().enumerate().all(|(i, &(r, _))| r == i as u64));
    }

    #[test]
    fn zero_replicates_is_an_error() {
        let cfg = McConfig::new(0, 1);
        assert!(matches!(
            run_replicates(&cfg, |_, _| Ok(())),
            Err(Error::ZeroReplicates)
        ));
    }

    #[test]
    fn moments() {
        let m = Moments::of([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((m.band() - 3.0 * m.sd / 2.0).abs() < 1e-15);
        assert_eq!(Moments::of([7.0]).sd, 0.0);
    }

    #[test]
    fn verdict_rules() {
        let r = VerificationReport::upper_bound("x", Value::Null, 1.05, 1.0, 0.1);
        assert!(r.passed());
        let r = VerificationReport::upper_bound("x", Value::Null, 1.2, 1.0, 0.1);
        assert!(r.failed());
        assert!(VerificationReport::equality("x", Value::Null, 0.85, 1.0, 0.1).failed());
        assert!(VerificationReport::equality("x", Value::Null, 0.95, 1.0, 0.1).passed());
    }

    #[test]
    fn report_schema() {
        let r = VerificationReport::upper_bound("tail", serde_json::json!({"n": 2}), 0.0, 0.5, 0.0).sampled(10, 3);
        let v = serde_json::to_value(&r).unwrap();
        for key in ["check", "params", "statistic", "reference", "ci", "replicates", "verdict", "seed"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["verdict"], "pass");
        assert!(v.get("info").is_none());
    }

    #[test]
    fn chi_square_matches_textbook() {
        // Fair die, 60 rolls.
        let fit = chi_square_fit(&[5, 8, 9, 8, 10, 20], &[1.0 / 6.0; 6]).unwrap();
        assert!((fit.statistic - 13.4).abs() < 1e-12);
        assert_eq!(fit.df, 5);
        assert!((fit.p_value - 0.019905).abs() < 1e-5);
        assert!((fit.critical - 20.515).abs() < 1e-3);
        let exact = chi_square_fit(&[50, 50], &[0.5, 0.5]).unwrap();
        assert_eq!(exact.statistic, 0.0);
        assert!((exact.p_value - 1.0).abs() < 1e-12);
    }
}
