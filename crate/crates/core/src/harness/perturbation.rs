use rand_distr::{Distribution, Geometric};
use serde_json::json;

use super::{run_replicates, McConfig, Moments, VerificationReport};
use crate::bounds::{entropy_diagnostics, variance_factor};
use crate::coupling::{rescreen_value, ExtendableStream, ScreeningRecord};
use crate::error::{Error, Result};
use crate::population::Population;
use crate::samplers::{SumTree, WithReplacementSampler};
use crate::scalar::{compensated_sum, CompensatedSum, Scalar};

const EXTENSION_TAG: u64 = 0x5c4e_e7e5_0000_0002;

/// Draws a stream prefix `J_1..J_{T_n}` from its conditional law given the
/// screened sample `I`: block `k` holds `τ_k - 1` draws from `{I_1..I_{k-1}}`
/// in proportion to their weights, then `I_k`, with `τ_k` geometric on
/// `{1, 2, ...}` with success probability `1 - σ_{k-1}`.
fn conditional_stream<T: Scalar, R: rand::Rng + ?Sized>(
    pop: &Population<T>,
    i_sample: &[usize],
    rest: &[T],
    rng: &mut R,
) -> Result<Vec<usize>> {
    let mut seen = SumTree::zeros(pop.len());
    let mut stream = Vec::with_capacity(2 * i_sample.len());
    for (k, &id) in i_sample.iter().enumerate() {
        if k > 0 {
            let geo = Geometric::new(rest[k].as_f64())
                .map_err(|e| Error::InvalidArgument(format!("block length law: {e}")))?;
            for _ in 0..geo.sample(rng) {
                let target = T::unit(rng) * seen.total();
                stream.push(seen.find(target) + 1);
            }
        }
        stream.push(id);
        seen.set(id - 1, pop.weight(id)?);
    }
    Ok(stream)
}

/// `V = E[Σ_{i ≤ T_n} (X - X^i)+² | I]` for the sample screened in `record`.
///
/// Each replicate redraws the stream given `I`, replaces every position
/// `i ≤ T_n` in turn by a fresh weighted draw and re-screens; entries past
/// `T_n` come from an independent i.i.d. continuation. The verdict compares
/// `V̂` with `v / 2` (with `2 Δ² n`, half the first branch of `v`, for uniform
/// weights); the comparison with `Δ² (A + B)` is reported in `info`.
pub fn estimate_v<T: Scalar>(
    pop: &Population<T>,
    record: &ScreeningRecord<T>,
    cfg: &McConfig,
) -> Result<VerificationReport> {
    let ids = &record.i_sample;
    let diag = entropy_diagnostics(pop, ids)?;
    let n = ids.len();
    let x = pop.cumulative_value(ids)?;
    // rest[k] = 1 - σ_k from the unsampled side.
    let mut rest = vec![T::zero(); n + 1];
    let mut in_sample = vec![false; pop.len()];
    for &id in ids {
        in_sample[id - 1] = true;
    }
    rest[n] = compensated_sum(
        pop.weights()
            .iter()
            .zip(&in_sample)
            .filter(|(_, &s)| !s)
            .map(|(&w, _)| w),
    );
    for k in (0..n).rev() {
        rest[k] = rest[k + 1] + pop.weight(ids[k])?;
    }
    let sampler = WithReplacementSampler::new(pop);
    let rows = run_replicates(cfg, |r, rng| {
        let prefix = conditional_stream(pop, ids, &rest, rng)?;
        let tn = prefix.len();
        let ext = cfg.stream(r).derived(EXTENSION_TAG).rng();
        let mut stream = ExtendableStream::new(prefix, &sampler, ext);
        let mut seen = Vec::new();
        let mut acc = CompensatedSum::new();
        for i in 1..=tn {
            let j = sampler.draw(rng);
            let xi = rescreen_value(pop, n, &mut stream, i, j, &mut seen);
            let gap = (x - xi).max(T::zero()).as_f64();
            acc.add(gap * gap);
        }
        Ok((acc.value(), tn as f64))
    })?;
    let reps = rows.len();
    let v_hat = Moments::of(rows.iter().map(|p| p.0));
    let tn = Moments::of(rows.iter().map(|p| p.1));
    let stats = pop.stats();
    let delta2 = (stats.delta * stats.delta).as_f64();
    let (reference, source) = match variance_factor(&stats, pop.len(), n) {
        Ok(v) => (v.as_f64() / 2.0, "theorem"),
        Err(Error::UniformWeights) => (2.0 * delta2 * n as f64, "first_branch"),
        Err(e) => return Err(e),
    };
    let diag_bound = delta2 * (diag.a_diag + diag.b_diag).as_f64();
    let params = json!({"N": pop.len(), "n": n, "i_sample": ids, "reference_source": source});
    Ok(
        VerificationReport::upper_bound("perturbation_v", params, v_hat.mean, reference, v_hat.band())
            .sampled(reps, cfg.master_seed)
            .info(json!({
                "diag_bound": diag_bound,
                "diag_pass": v_hat.mean <= diag_bound + v_hat.band(),
                "a_diag": diag.a_diag.as_f64(),
                "b_diag": diag.b_diag.as_f64(),
                "expected_tn_given_i": diag.expected_tn_given_i.as_f64(),
                "mean_tn": tn.mean,
                "mean_tn_band": tn.band(),
            })),
    )
}
