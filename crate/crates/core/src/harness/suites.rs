//! Pre-registered verification suites: fixed instances, fixed thresholds,
//! fixed replicate budgets unless overridden. Each returns every report it
//! produced; a suite passes when no report fails.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{
    estimate_v, mc_diagnostics_check, mc_order_check, mc_polya_marginal_check, mc_polya_martingale_check,
    mc_screening_marginal_check, mc_submartingale_check, mc_tail_check, McConfig, SampleScheme, SamplerSpec,
    VerificationReport,
};
use crate::coupling::screen_stream;
use crate::error::Result;
use crate::oracle::{
    aligned_grid, conditional_first_draw_given_set, cx_dominates, exact_polya_dist, exact_sample_dist, icx_dominates,
    SampleMode,
};
use crate::population::Population;
use crate::scalar::compensated_sum;

pub const DEFAULT_REPLICATES: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grid {
    /// `N` in `2..=4`.
    Small,
    /// `N` in `2..=5`.
    Full,
}

impl Grid {
    fn max_size(self) -> usize {
        match self {
            Grid::Small => 4,
            Grid::Full => 5,
        }
    }
}

pub fn p1() -> Population<f64> {
    Population::new(vec![0.3, 0.7], vec![0.0, 1.0]).expect("valid population")
}

pub fn p2() -> Population<f64> {
    Population::new(vec![0.2, 0.3, 0.5], vec![1.0, 2.0, 3.0]).expect("valid population")
}

/// `size` items with geometric weights from 1 down to `alpha` and values
/// 1, 2, 3 in thirds of the weight ranking, heaviest items highest.
pub fn p2_like(size: usize, alpha: f64) -> Population<f64> {
    let ratio = if size > 1 {
        alpha.powf(1.0 / (size - 1) as f64)
    } else {
        1.0
    };
    let weights = (0..size).map(|i| ratio.powi(i as i32)).collect();
    let values = (0..size).map(|i| 3.0 - (3 * i / size) as f64).collect();
    Population::new(weights, values).expect("valid population")
}

fn describe(pop: &Population<f64>) -> serde_json::Value {
    json!({"weights": pop.weights(), "values": pop.values()})
}

/// Exact increasing convex order of the without- and with-replacement sums
/// over the aligned grid, the first-draw identity on every subset, and a
/// Monte Carlo hinge comparison at `N = 100`.
pub fn theorem1_suite(grid: Grid, tol: f64, cfg: &McConfig) -> Result<Vec<VerificationReport>> {
    let mut reports = Vec::new();
    for pop in aligned_grid::<f64>(2..=grid.max_size(), &[1, 2, 3]) {
        for n in 1..=pop.len() {
            let x = exact_sample_dist(&pop, n, SampleMode::Without)?;
            let y = exact_sample_dist(&pop, n, SampleMode::With)?;
            let order = icx_dominates(&x, &y, tol);
            let mut params = describe(&pop);
            params["n"] = json!(n);
            reports.push(
                VerificationReport::upper_bound("theorem1_icx", params, order.violation(), 0.0, tol)
                    .info(json!({"witness": order.witness})),
            );
        }
        reports.push(first_draw_identity(&pop, tol)?);
    }
    let big = p2_like(100, 0.5);
    let n = 50;
    let lower = SamplerSpec {
        pop: &big,
        n,
        scheme: SampleScheme::Without,
    };
    let upper = SamplerSpec {
        scheme: SampleScheme::With,
        ..lower
    };
    let stats = big.stats();
    let centre = n as f64 * stats.mean_value;
    let spread = stats.delta * (n as f64).sqrt();
    let hinges: Vec<f64> = (-2..=2).map(|k| centre + 0.5 * k as f64 * spread).collect();
    reports.extend(mc_order_check(&lower, &upper, &hinges, &cfg.derived(1))?);
    Ok(reports)
}

/// For every nonempty subset: the conditional mean of the first draw is at
/// least the subset average, and higher values never get a smaller
/// first-draw probability. The statistic is the worst violation.
pub fn first_draw_identity(pop: &Population<f64>, tol: f64) -> Result<VerificationReport> {
    let size = pop.len();
    let mut worst_mean: f64 = f64::NEG_INFINITY;
    let mut worst_order: f64 = f64::NEG_INFINITY;
    let mut subsets = 0;
    for mask in 1u32..(1 << size) {
        let set: Vec<usize> = (0..size).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).collect();
        let cond = conditional_first_draw_given_set(pop, &set)?;
        let values: Vec<f64> = set.iter().map(|&id| pop.values()[id - 1]).collect();
        let average = compensated_sum(values.iter().copied()) / set.len() as f64;
        worst_mean = worst_mean.max(average - cond.cond_mean);
        for (a, &va) in set.iter().zip(&values) {
            for (b, &vb) in set.iter().zip(&values) {
                if va > vb {
                    worst_order = worst_order.max(cond.probs[b] - cond.probs[a]);
                }
            }
        }
        subsets += 1;
    }
    let worst = worst_mean.max(worst_order).max(0.0);
    Ok(
        VerificationReport::upper_bound("first_draw_identity", describe(pop), worst, 0.0, tol).info(json!({
            "subsets": subsets,
            "worst_mean_gap": worst_mean,
            "worst_monotonicity_gap": if worst_order.is_finite() { Some(worst_order) } else { None },
        })),
    )
}

/// Tail bounds at `N = 100`: geometric weights with `α = 1/2` for
/// `n ∈ {25, 50, 90}`, and uniform weights with `n = 95` (Serfling factor),
/// each at `t ∈ {Δ√n / 2, Δ√n}`.
pub fn theorem2_suite(cfg: &McConfig) -> Result<Vec<VerificationReport>> {
    let mut reports = Vec::new();
    let geometric = p2_like(100, 0.5);
    let uniform = p2_like(100, 1.0);
    let runs = [(&geometric, 25), (&geometric, 50), (&geometric, 90), (&uniform, 95)];
    for (tag, (pop, n)) in runs.into_iter().enumerate() {
        let delta = pop.stats().delta;
        let root = (n as f64).sqrt();
        let ts = [0.5 * delta * root, delta * root];
        reports.extend(mc_tail_check(pop, n, &ts, &cfg.derived(tag as u64 + 1))?);
    }
    Ok(reports)
}

/// Exact convex order of the `d`- and `D`-Polya sums for `N ∈ 2..=4`,
/// `n ∈ 1..=4`, `1 <= d < D <= 4` with two value assignments, both means equal
/// to `n Σν / N`; then Monte Carlo checks of the coupled urns.
pub fn theorem3_suite(tol: f64, cfg: &McConfig) -> Result<Vec<VerificationReport>> {
    let mut reports = Vec::new();
    for size in 2..=4usize {
        let linear: Vec<f64> = (0..size).map(|i| i as f64).collect();
        let squares: Vec<f64> = (0..size).map(|i| (i * i) as f64).collect();
        for values in [linear, squares] {
            let pop = Population::uniform(values)?;
            for n in 1..=4 {
                for big_d in 2..=4u64 {
                    for d in 1..big_d {
                        let w = exact_polya_dist(&pop, d, n)?;
                        let z = exact_polya_dist(&pop, big_d, n)?;
                        let order = cx_dominates(&w, &z, tol);
                        let params = json!({"values": pop.values(), "n": n, "d": d, "D": big_d});
                        reports.push(
                            VerificationReport::upper_bound("theorem3_cx", params.clone(), order.violation(), 0.0, tol)
                                .info(json!({"witness": order.witness})),
                        );
                        let expected = n as f64 * pop.value_sum() / size as f64;
                        let gap = (w.mean() - expected).abs().max((z.mean() - expected).abs());
                        reports.push(VerificationReport::upper_bound("theorem3_means", params, gap, 0.0, tol));
                    }
                }
            }
        }
    }
    let coin = Population::uniform(vec![0.0, 1.0])?;
    reports.extend(mc_polya_marginal_check(&coin, 1, 2, 2, &cfg.derived(1))?);
    let five = Population::uniform(vec![0.0, 1.0, 3.0, 7.0, 8.0])?;
    reports.extend(mc_polya_martingale_check(&five, 3, 4, 3, &cfg.derived(2))?);
    reports.extend(mc_polya_marginal_check(&five, 3, 4, 3, &cfg.derived(3))?);
    reports.extend(mc_polya_martingale_check(&coin, 1, 2, 2, &cfg.derived(4))?);
    Ok(reports)
}

/// Screening coupling checks on the three-item population: tuple laws, the
/// waiting time `T_n`, unique occurrences against `B`, the conditional
/// submartingale property and the perturbation quantity `V` at `I = (3, 2)`.
pub fn diagnostics_suite(cfg: &McConfig) -> Result<Vec<VerificationReport>> {
    let pop = p2();
    let mut reports = mc_screening_marginal_check(&pop, 2, &cfg.derived(1))?;
    reports.extend(mc_diagnostics_check(&pop, 2, &cfg.derived(2))?);
    reports.extend(mc_diagnostics_check(&pop, 3, &cfg.derived(3))?);
    reports.push(mc_submartingale_check(&pop, 2, &cfg.derived(4))?);
    let record = screen_stream(&pop, 2, [3, 2])?;
    reports.push(estimate_v(&pop, &record, &cfg.derived(5))?);
    Ok(reports)
}
