use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{chi_square_fit, proportion_band, run_replicates, McConfig, Moments, VerificationReport};
use crate::bounds::{entropy_diagnostics, serfling_variance, subgaussian_tail_bound, variance_factor};
use crate::coupling::{coupled_samples, CoupledUrns, Screener, TRACE_STEP_LIMIT};
use crate::distribution::FiniteDistribution;
use crate::error::{Error, Result};
use crate::oracle::{
    conditional_first_draw_given_set, exact_expected_tn, exact_polya_dist, exact_sample_dist,
    exact_tuple_law, for_each_without_tuple, permutation_count, SampleMode,
};
use crate::population::Population;
use crate::samplers::{PolyaUrn, SuccessiveSampler, WithReplacementSampler};
use crate::scalar::{CompensatedSum, Scalar};

/// Largest tuple count for which checks add exact oracle values to reports.
const ORACLE_INFO_LIMIT: u128 = 1_000_000;

/// Minimum occupancy of a conditioning group.
pub const MIN_GROUP: usize = 30;

/// Variance factor for tail checks, with Serfling's factor for uniform
/// weights.
pub(crate) fn tail_variance<T: Scalar>(pop: &Population<T>, n: usize) -> Result<(f64, &'static str)> {
    let stats = pop.stats();
    match variance_factor(&stats, pop.len(), n) {
        Ok(v) => Ok((v.as_f64(), "theorem")),
        Err(Error::UniformWeights) => Ok((serfling_variance(stats.delta, pop.len(), n)?.as_f64(), "serfling")),
        Err(e) => Err(e),
    }
}

/// Both tails of `X - E[X]` for successive samples against
/// `exp(-t² / (2v))`. One report per threshold and side.
pub fn mc_tail_check<T: Scalar>(
    pop: &Population<T>,
    n: usize,
    t_values: &[f64],
    cfg: &McConfig,
) -> Result<Vec<VerificationReport>> {
    if n > pop.len() {
        return Err(Error::SampleTooLarge {
            n,
            population: pop.len(),
        });
    }
    if let Some(&t) = t_values.iter().find(|&&t| t.is_nan() || t <= 0.0) {
        return Err(Error::NonPositiveThreshold(t));
    }
    let (v, source) = tail_variance(pop, n)?;
    let xs = run_replicates(cfg, |_, rng| {
        let ids = SuccessiveSampler::new(pop).sample(n, rng)?;
        Ok(pop.cumulative_value(&ids)?.as_f64())
    })?;
    let r = xs.len();
    let mean = Moments::of(xs.iter().copied()).mean;
    let exact_mean = (permutation_count(pop.len(), n) <= ORACLE_INFO_LIMIT)
        .then(|| exact_sample_dist(pop, n, SampleMode::Without).map(|d| d.mean().as_f64()))
        .transpose()?;
    let stats = pop.stats();
    let mut reports = Vec::new();
    for &t in t_values {
        let bound = subgaussian_tail_bound(v, t)?;
        let upper = xs.iter().filter(|&&x| x - mean > t).count() as f64 / r as f64;
        let lower = xs.iter().filter(|&&x| x - mean < -t).count() as f64 / r as f64;
        for (side, p) in [("upper", upper), ("lower", lower)] {
            let params = json!({
                "N": pop.len(), "n": n, "t": t, "side": side, "v": v,
                "variance_source": source,
                "delta": stats.delta.as_f64(), "alpha": stats.alpha.as_f64(),
            });
            let mut report =
                VerificationReport::upper_bound("tail", params, p, bound, proportion_band(p, r))
                    .sampled(r, cfg.master_seed)
                    .info(json!({
                        "centre": "replicate mean",
                        "empirical_mean": mean,
                        "exact_mean": exact_mean,
                        "bound_over_empirical": if p > 0.0 { Some(bound / p) } else { None },
                    }));
            if r < 1000 {
                report = report.inconclusive();
            }
            reports.push(report);
        }
    }
    Ok(reports)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleScheme {
    With,
    Without,
    /// `d`-Polya sampling.
    Polya(u64),
}

/// Which cumulative value a Monte Carlo order check draws.
#[derive(Clone, Copy, Debug)]
pub struct SamplerSpec<'a, T> {
    pub pop: &'a Population<T>,
    pub n: usize,
    pub scheme: SampleScheme,
}

impl<T: Scalar> SamplerSpec<'_, T> {
    fn validate(&self) -> Result<()> {
        match self.scheme {
            SampleScheme::Without if self.n > self.pop.len() => Err(Error::SampleTooLarge {
                n: self.n,
                population: self.pop.len(),
            }),
            SampleScheme::Polya(d) => PolyaUrn::new(self.pop.len(), d).map(|_| ()),
            _ => Ok(()),
        }
    }

    fn draw_value<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let ids = match self.scheme {
            SampleScheme::With => WithReplacementSampler::new(self.pop).sample(self.n, rng),
            SampleScheme::Without => SuccessiveSampler::new(self.pop).sample(self.n, rng)?,
            SampleScheme::Polya(d) => {
                let mut urn = PolyaUrn::new(self.pop.len(), d)?;
                (0..self.n).map(|_| urn.draw(rng)).collect()
            }
        };
        Ok(self.pop.cumulative_value(&ids)?.as_f64())
    }
}

/// Hinge comparisons `E[(lower - a)+] <= E[(upper - a)+]` with common random
/// numbers: both samplers read the same stream in each replicate, and the
/// band is 3σ of the paired difference.
pub fn mc_order_check<T: Scalar>(
    lower: &SamplerSpec<'_, T>,
    upper: &SamplerSpec<'_, T>,
    hinge_points: &[f64],
    cfg: &McConfig,
) -> Result<Vec<VerificationReport>> {
    if !(std::ptr::eq(lower.pop, upper.pop) || lower.pop == upper.pop) {
        return Err(Error::MismatchedPopulations);
    }
    lower.validate()?;
    upper.validate()?;
    let pairs = run_replicates(cfg, |_, rng| {
        let mut twin = rng.clone();
        Ok((lower.draw_value(rng)?, upper.draw_value(&mut twin)?))
    })?;
    let r = pairs.len();
    Ok(hinge_points
        .iter()
        .map(|&a| {
            let hinge = |x: f64| (x - a).max(0.0);
            let diff = Moments::of(pairs.iter().map(|&(l, u)| hinge(l) - hinge(u)));
            let lhs = Moments::of(pairs.iter().map(|&(l, _)| hinge(l))).mean;
            let rhs = Moments::of(pairs.iter().map(|&(_, u)| hinge(u))).mean;
            let params = json!({
                "N": lower.pop.len(), "a": a,
                "lower": {"n": lower.n, "scheme": lower.scheme},
                "upper": {"n": upper.n, "scheme": upper.scheme},
            });
            VerificationReport::upper_bound("hinge_order", params, diff.mean, 0.0, diff.band())
                .sampled(r, cfg.master_seed)
                .info(json!({"lhs": lhs, "rhs": rhs}))
        })
        .collect())
}

/// `E[Y | {I_1..I_n}] >= X` under the screening coupling, per unordered sample
/// set with at least [`MIN_GROUP`] replicates. The report carries the tightest
/// group: `statistic = X - Ê[Y | set]`, band 3σ of that group.
pub fn mc_submartingale_check<T: Scalar>(
    pop: &Population<T>,
    n: usize,
    cfg: &McConfig,
) -> Result<VerificationReport> {
    if n == 0 || n > pop.len() {
        return Err(Error::SampleTooLarge {
            n,
            population: pop.len(),
        });
    }
    let rows = run_replicates(cfg, |_, rng| {
        let rec = Screener::new(pop).run(n, rng)?;
        let mut set = rec.i_sample;
        set.sort_unstable();
        Ok((set, rec.x.as_f64(), rec.y.as_f64()))
    })?;
    let r = rows.len();
    let mut groups: BTreeMap<Vec<usize>, (f64, Vec<f64>)> = BTreeMap::new();
    for (set, x, y) in rows {
        groups.entry(set).or_insert_with(|| (x, Vec::new())).1.push(y);
    }
    let with_exact = permutation_count(n, n) <= 40_320;
    let mut worst: Option<(f64, f64, f64)> = None;
    let mut details = Vec::new();
    let (mut sparse_groups, mut sparse_replicates) = (0usize, 0usize);
    for (set, (x, ys)) in &groups {
        if ys.len() < MIN_GROUP {
            sparse_groups += 1;
            sparse_replicates += ys.len();
            continue;
        }
        let m = Moments::of(ys.iter().copied());
        let gap = x - m.mean;
        if worst.is_none_or(|(g, band, _)| gap - m.band() > g - band) {
            worst = Some((gap, m.band(), *x));
        }
        if details.len() < 64 {
            let exact = if with_exact {
                Some(T::from_count(n).as_f64() * conditional_first_draw_given_set(pop, set)?.cond_mean.as_f64())
            } else {
                None
            };
            details.push(json!({
                "set": set, "count": ys.len(), "x": x, "mean_y": m.mean,
                "band": m.band(), "exact_mean_y": exact,
            }));
        }
    }
    let condition = pop.weights_values_aligned();
    let params = json!({"N": pop.len(), "n": n, "condition_holds": condition});
    let all_x = Moments::of(groups.values().flat_map(|(x, ys)| std::iter::repeat_n(*x, ys.len())));
    let all_y = Moments::of(groups.values().flat_map(|(_, ys)| ys.iter().copied()));
    let info = json!({
        "groups_checked": groups.len() - sparse_groups,
        "sparse_groups": sparse_groups,
        "sparse_replicates": sparse_replicates,
        "aggregate": {"mean_x": all_x.mean, "mean_y": all_y.mean, "band": all_y.band()},
        "groups": details,
        "note": if condition { Value::Null } else { json!("assumption violated, informational") },
    });
    let report = match worst {
        Some((gap, band, _)) => VerificationReport::upper_bound("submartingale", params, gap, 0.0, band),
        None => VerificationReport::with_verdict("submartingale", params, 0.0, 0.0, 0.0, super::Verdict::Inconclusive),
    }
    .sampled(r, cfg.master_seed)
    .info(info);
    Ok(if condition { report } else { report.inconclusive() })
}

/// Conditional martingale property of the coupled urns: `Ê[Z | W = w] = w`
/// per level of `W` with at least [`MIN_GROUP`] replicates, plus the two
/// unconditional means against `n Σν / N`.
pub fn mc_polya_martingale_check<T: Scalar>(
    pop: &Population<T>,
    d: u64,
    big_d: u64,
    n: usize,
    cfg: &McConfig,
) -> Result<Vec<VerificationReport>> {
    CoupledUrns::new(pop.len(), d, big_d)?;
    let rows = run_replicates(cfg, |_, rng| {
        match coupled_samples(pop.len(), d, big_d, n, TRACE_STEP_LIMIT, rng, |_| {}) {
            Ok((k, l)) => Ok(Some((pop.cumulative_value(&k)?.as_f64(), pop.cumulative_value(&l)?.as_f64()))),
            Err(Error::StepLimit(_)) => Ok(None),
            Err(e) => Err(e),
        }
    })?;
    let r = rows.len();
    let done: Vec<(f64, f64)> = rows.into_iter().flatten().collect();
    let truncated = r - done.len();
    let base = json!({"N": pop.len(), "d": d, "D": big_d, "n": n});
    let param = |extra: Value| {
        let mut p = base.clone();
        if let (Value::Object(p), Value::Object(e)) = (&mut p, extra) {
            p.extend(e);
        }
        p
    };
    // Exact equalities (e.g. n = 1) have zero spread; allow float rounding.
    let floor = |x: f64| 1e-9 * (1.0 + x.abs());
    let mut levels: BTreeMap<i64, (f64, Vec<f64>)> = BTreeMap::new();
    for &(w, z) in &done {
        levels
            .entry((w * 1e9).round() as i64)
            .or_insert_with(|| (w, Vec::new()))
            .1
            .push(z);
    }
    let mut reports = Vec::new();
    let mut sparse = Vec::new();
    for (w, zs) in levels.values() {
        if zs.len() < MIN_GROUP {
            sparse.extend(zs.iter().map(|z| z - w));
            continue;
        }
        let m = Moments::of(zs.iter().copied());
        reports.push(
            VerificationReport::equality(
                "polya_martingale_level",
                param(json!({"w": w, "count": zs.len()})),
                m.mean,
                *w,
                m.band().max(floor(*w)),
            )
            .sampled(r, cfg.master_seed),
        );
    }
    if !sparse.is_empty() {
        let m = Moments::of(sparse.iter().copied());
        reports.push(
            VerificationReport::equality(
                "polya_martingale_sparse_levels",
                param(json!({"count": sparse.len()})),
                m.mean,
                0.0,
                m.band(),
            )
            .sampled(r, cfg.master_seed)
            .inconclusive(),
        );
    }
    let expected = (T::from_count(n) * pop.value_sum() / T::from_count(pop.len())).as_f64();
    for (name, m) in [
        ("polya_mean_w", Moments::of(done.iter().map(|p| p.0))),
        ("polya_mean_z", Moments::of(done.iter().map(|p| p.1))),
    ] {
        reports.push(
            VerificationReport::equality(name, base.clone(), m.mean, expected, m.band().max(floor(expected)))
                .sampled(r, cfg.master_seed),
        );
    }
    if truncated > 0 {
        reports = reports
            .into_iter()
            .map(|rep| rep.info(json!({"truncated_replicates": truncated})).inconclusive())
            .collect();
    }
    Ok(reports)
}

/// Monte Carlo mean of `T_n` against the exact `E[T_n]`, and (for `n < N`) the
/// mean number of sampled ids seen exactly once before `T_{n+1}` against the
/// exact average of `B` over the law of `I`.
pub fn mc_diagnostics_check<T: Scalar>(
    pop: &Population<T>,
    n: usize,
    cfg: &McConfig,
) -> Result<Vec<VerificationReport>> {
    if n == 0 || n > pop.len() {
        return Err(Error::SampleTooLarge {
            n,
            population: pop.len(),
        });
    }
    let expected_tn = exact_expected_tn(pop, n)?.as_f64();
    let next = n < pop.len();
    let mut expected_b = CompensatedSum::new();
    if next {
        let mut failure = None;
        for_each_without_tuple(pop, n, |tuple, p| match entropy_diagnostics(pop, tuple) {
            Ok(diag) => expected_b.add(p.as_f64() * diag.b_diag.as_f64()),
            Err(e) => failure = Some(e),
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
    }
    let rows = run_replicates(cfg, |_, rng| {
        let rec = Screener::new(pop).run(if next { n + 1 } else { n }, rng)?;
        let tn = rec.screen_times[n - 1];
        let unique = if next {
            let before = &rec.stream[..rec.screen_times[n] - 1];
            rec.i_sample[..n]
                .iter()
                .filter(|&&id| before.iter().filter(|&&j| j == id).count() == 1)
                .count()
        } else {
            0
        };
        Ok((tn as f64, unique as f64))
    })?;
    let r = rows.len();
    let params = json!({"N": pop.len(), "n": n});
    let tn = Moments::of(rows.iter().map(|p| p.0));
    let mut reports = vec![
        VerificationReport::equality("expected_tn", params.clone(), tn.mean, expected_tn, tn.band())
            .sampled(r, cfg.master_seed),
    ];
    if next {
        let u = Moments::of(rows.iter().map(|p| p.1));
        reports.push(
            VerificationReport::equality("unique_before_next", params, u.mean, expected_b.value(), u.band())
                .sampled(r, cfg.master_seed),
        );
    }
    Ok(reports)
}

fn tuple_gof(
    check: &str,
    params: Value,
    law: Vec<(Vec<usize>, f64)>,
    observed: impl IntoIterator<Item = Vec<usize>>,
) -> Result<VerificationReport> {
    let index: HashMap<&[usize], usize> = law.iter().enumerate().map(|(i, (t, _))| (t.as_slice(), i)).collect();
    let mut counts = vec![0u64; law.len()];
    let mut outside = 0u64;
    for t in observed {
        match index.get(t.as_slice()) {
            Some(&i) => counts[i] += 1,
            None => outside += 1,
        }
    }
    gof_report(check, params, &counts, &law.iter().map(|l| l.1).collect::<Vec<_>>(), outside)
}

fn gof_report(check: &str, params: Value, counts: &[u64], probs: &[f64], outside: u64) -> Result<VerificationReport> {
    let fit = chi_square_fit(counts, probs)?;
    let report = VerificationReport::upper_bound(check, params, fit.statistic, fit.critical, 0.0).info(json!({
        "p_value": fit.p_value,
        "df": fit.df,
        "significance": super::GOF_SIGNIFICANCE,
        "outside_support": outside,
    }));
    Ok(if outside > 0 {
        VerificationReport {
            verdict: super::Verdict::Fail,
            ..report
        }
    } else {
        report
    })
}

fn value_gof(
    check: &str,
    params: Value,
    law: &FiniteDistribution<f64>,
    values: impl IntoIterator<Item = f64>,
) -> Result<VerificationReport> {
    let atoms = law.atoms();
    let mut counts = vec![0u64; atoms.len()];
    let mut outside = 0;
    for v in values {
        let i = atoms.partition_point(|a| a.point < v);
        let near = [i.checked_sub(1), Some(i)]
            .into_iter()
            .flatten()
            .find(|&j| j < atoms.len() && (atoms[j].point - v).abs() <= 1e-9 * (1.0 + v.abs()));
        match near {
            Some(j) => counts[j] += 1,
            None => outside += 1,
        }
    }
    gof_report(check, params, &counts, &atoms.iter().map(|a| a.prob).collect::<Vec<_>>(), outside)
}

/// Chi-square fit of the screened tuples `(I_1..I_n)` to the successive
/// sampling law and of the stream prefix `(J_1..J_n)` to the i.i.d. law.
pub fn mc_screening_marginal_check<T: Scalar>(
    pop: &Population<T>,
    n: usize,
    cfg: &McConfig,
) -> Result<Vec<VerificationReport>> {
    let as_f64 = |law: Vec<(Vec<usize>, T)>| law.into_iter().map(|(t, p)| (t, p.as_f64())).collect::<Vec<_>>();
    let law_i = as_f64(exact_tuple_law(pop, n, SampleMode::Without)?);
    let law_j = as_f64(exact_tuple_law(pop, n, SampleMode::With)?);
    let rows = run_replicates(cfg, |_, rng| {
        let rec = Screener::new(pop).run(n, rng)?;
        let mut j = rec.stream;
        // The stream stops at T_n and may be shorter than n; continue it.
        let sampler = WithReplacementSampler::new(pop);
        while j.len() < n {
            j.push(sampler.draw(rng));
        }
        j.truncate(n);
        Ok((rec.i_sample, j))
    })?;
    let r = rows.len();
    let params = json!({"N": pop.len(), "n": n});
    let (is, js): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    Ok(vec![
        tuple_gof("screening_i_tuples", params.clone(), law_i, is)?.sampled(r, cfg.master_seed),
        tuple_gof("screening_j_tuples", params, law_j, js)?.sampled(r, cfg.master_seed),
    ])
}

/// Chi-square fit of the coupled urns' `W` and `Z` to the exact `d`- and
/// `D`-Polya value laws.
pub fn mc_polya_marginal_check<T: Scalar>(
    pop: &Population<T>,
    d: u64,
    big_d: u64,
    n: usize,
    cfg: &McConfig,
) -> Result<Vec<VerificationReport>> {
    CoupledUrns::new(pop.len(), d, big_d)?;
    let to_f64 = |law: FiniteDistribution<T>| {
        FiniteDistribution::from_weighted_points(law.atoms().iter().map(|a| (a.point.as_f64(), a.prob.as_f64())))
    };
    let law_w = to_f64(exact_polya_dist(pop, d, n)?)?;
    let law_z = to_f64(exact_polya_dist(pop, big_d, n)?)?;
    let rows = run_replicates(cfg, |_, rng| {
        match coupled_samples(pop.len(), d, big_d, n, TRACE_STEP_LIMIT, rng, |_| {}) {
            Ok((k, l)) => Ok(Some((pop.cumulative_value(&k)?.as_f64(), pop.cumulative_value(&l)?.as_f64()))),
            Err(Error::StepLimit(_)) => Ok(None),
            Err(e) => Err(e),
        }
    })?;
    let r = rows.len();
    let done: Vec<(f64, f64)> = rows.into_iter().flatten().collect();
    let truncated = r - done.len();
    let params = json!({"N": pop.len(), "d": d, "D": big_d, "n": n});
    let mut reports = vec![
        value_gof("polya_w_law", params.clone(), &law_w, done.iter().map(|p| p.0))?.sampled(r, cfg.master_seed),
        value_gof("polya_z_law", params, &law_z, done.iter().map(|p| p.1))?.sampled(r, cfg.master_seed),
    ];
    if truncated > 0 {
        for rep in &mut reports {
            rep.verdict = super::Verdict::Inconclusive;
        }
    }
    Ok(reports)
}
