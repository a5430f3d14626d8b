//! Closed-form bounds: the sub-Gaussian variance factor for sampling without
//! replacement, Serfling's factor for uniform weights, the Chernoff bound for
//! the with-replacement sum, and per-sample quantities of the entropy-method
//! argument.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::{Population, PopulationStats};
use crate::scalar::{compensated_sum, CompensatedSum, Scalar};

/// `v = min(4 Δ² n, (1 + 4α) / (α (1 - α)) Δ² N ((N - n) / N)^α)`.
///
/// Requires `α < 1`; uniform weights go through [`serfling_variance`].
pub fn variance_factor<T: Scalar>(stats: &PopulationStats<T>, population: usize, n: usize) -> Result<T> {
    if n > population {
        return Err(Error::SampleTooLarge { n, population });
    }
    let delta2 = stats.delta * stats.delta;
    if delta2 == T::zero() {
        return Ok(T::zero());
    }
    let alpha = stats.alpha;
    if alpha >= T::one() {
        return Err(Error::UniformWeights);
    }
    let big_n = T::from_count(population);
    let first = T::lit(4.0) * delta2 * T::from_count(n);
    let constant = (T::one() + T::lit(4.0) * alpha) / (alpha * (T::one() - alpha));
    let second = constant * delta2 * big_n * (T::from_count(population - n) / big_n).powf(alpha);
    Ok(first.min(second))
}

/// `Δ² n (N - n + 1) / (4N)`.
pub fn serfling_variance<T: Scalar>(delta: T, population: usize, n: usize) -> Result<T> {
    if n > population {
        return Err(Error::SampleTooLarge { n, population });
    }
    if n == 0 {
        return Ok(T::zero());
    }
    Ok(delta * delta * T::from_count(n) * T::from_count(population - n + 1) / (T::lit(4.0) * T::from_count(population)))
}

/// `exp(-t² / (2v))`, zero when `v = 0`.
pub fn subgaussian_tail_bound<T: Scalar>(v: T, t: T) -> Result<T> {
    if t.is_nan() || t <= T::zero() {
        return Err(Error::NonPositiveThreshold(t.as_f64()));
    }
    if v < T::zero() || v.is_nan() {
        return Err(Error::InvalidArgument(format!("variance factor {v} is negative")));
    }
    if v == T::zero() {
        return Ok(T::zero());
    }
    Ok((-(t * t) / (T::lit(2.0) * v)).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ChernoffBound<T> {
    pub bound: T,
    /// Minimizing `θ`; infinite when the infimum is only approached.
    pub theta_star: T,
}

/// `ln E[exp(θ ν(J))]` and the tilted mean, with the max shift.
fn log_mgf<T: Scalar>(pop: &Population<T>, theta: T, max: T) -> (T, T) {
    let mut z = CompensatedSum::new();
    let mut m = CompensatedSum::new();
    for (&w, &v) in pop.weights().iter().zip(pop.values()) {
        let e = w * (theta * (v - max)).exp();
        z.add(e);
        m.add(e * v);
    }
    let z = z.value();
    (theta * max + z.ln(), m.value() / z)
}

/// `inf_{θ ≥ 0} exp(n Λ(θ) - θ a)` with `Λ(θ) = ln E[exp(θ ν(J_1))]`, an upper
/// bound on `P(Y ≥ a)` for the with-replacement sum `Y`.
pub fn chernoff_upper_bound<T: Scalar>(pop: &Population<T>, n: usize, a: T) -> Result<ChernoffBound<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("chernoff bound needs n >= 1".into()));
    }
    let nn = T::from_count(n);
    let mean = compensated_sum(pop.weights().iter().zip(pop.values()).map(|(&w, &v)| w * v));
    let max = pop.max_value();
    if a <= nn * mean {
        return Ok(ChernoffBound {
            bound: T::one(),
            theta_star: T::zero(),
        });
    }
    let top = nn * max;
    let edge = T::prob_tol() * top.abs().max(T::one());
    if a > top + edge {
        return Ok(ChernoffBound {
            bound: T::zero(),
            theta_star: T::zero(),
        });
    }
    if a >= top - edge {
        // Exponent decreases to n ln P(ν = max ν) as θ grows.
        let at_max = compensated_sum(
            pop.weights()
                .iter()
                .zip(pop.values())
                .filter(|(_, &v)| v == max)
                .map(|(&w, _)| w),
        );
        return Ok(ChernoffBound {
            bound: at_max.powi(n as i32),
            theta_star: T::infinity(),
        });
    }
    let exponent = |theta: T| nn * log_mgf(pop, theta, max).0 - theta * a;
    let slope = |theta: T| nn * log_mgf(pop, theta, max).1 - a;
    let mut lo = T::zero();
    let mut hi = T::one();
    while slope(hi) < T::zero() {
        lo = hi;
        hi = hi * T::lit(2.0);
        if !hi.is_finite() {
            return Err(Error::InvalidArgument("chernoff bracket diverged".into()));
        }
    }
    let ratio = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let tol = T::lit(1e-10);
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let (mut fc, mut fd) = (exponent(c), exponent(d));
    for _ in 0..500 {
        if hi - lo <= tol * hi.max(T::one()) {
            break;
        }
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = exponent(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = exponent(d);
        }
    }
    let theta = (lo + hi) / T::lit(2.0);
    Ok(ChernoffBound {
        bound: exponent(theta).exp().min(T::one()),
        theta_star: theta,
    })
}

fn check_distinct<T: Scalar>(pop: &Population<T>, ids: &[usize]) -> Result<Vec<T>> {
    let mut seen = vec![false; pop.len()];
    ids.iter()
        .map(|&id| {
            let w = pop.weight(id)?;
            if std::mem::replace(&mut seen[id - 1], true) {
                return Err(Error::RepeatedId(id));
            }
            Ok(w)
        })
        .collect()
}

/// Total variation distance between the next successive draw after `drawn`
/// and a fresh weighted draw: the weight already sampled.
pub fn tv_next_draw<T: Scalar>(pop: &Population<T>, drawn: &[usize]) -> Result<T> {
    Ok(compensated_sum(check_distinct(pop, drawn)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EntropyDiagnostics<T> {
    /// `σ_k = ω(I_1) + ... + ω(I_k)`.
    pub sigma: Vec<T>,
    /// `E[T_n | I] = Σ_k 1 / (1 - σ_{k-1})`.
    #[serde(rename = "expected_Tn_given_I")]
    pub expected_tn_given_i: T,
    /// `A = (1 - σ_n) E[T_n | I]`.
    pub a_diag: T,
    /// `B = Σ_k Π_{j=k}^n 1 / (1 + ω(I_k) / (1 - σ_j))`.
    pub b_diag: T,
}

/// Conditional quantities given the ordered without-replacement sample.
pub fn entropy_diagnostics<T: Scalar>(pop: &Population<T>, i_sample: &[usize]) -> Result<EntropyDiagnostics<T>> {
    if i_sample.is_empty() {
        return Err(Error::InvalidArgument("diagnostics need n >= 1".into()));
    }
    let w = check_distinct(pop, i_sample)?;
    let n = w.len();
    // rest[j] = 1 - σ_j, built from the unsampled mass so it is exactly 0 at n = N.
    let mut in_sample = vec![false; pop.len()];
    for &id in i_sample {
        in_sample[id - 1] = true;
    }
    let unsampled = compensated_sum(
        pop.weights()
            .iter()
            .zip(&in_sample)
            .filter(|(_, &s)| !s)
            .map(|(&x, _)| x),
    );
    let mut rest = vec![T::zero(); n + 1];
    rest[n] = unsampled;
    for j in (0..n).rev() {
        rest[j] = rest[j + 1] + w[j];
    }
    rest[0] = T::one();

    let mut sigma = Vec::with_capacity(n);
    let mut acc = CompensatedSum::new();
    for &x in &w {
        acc.add(x);
        sigma.push(acc.value());
    }
    let expected = compensated_sum(rest[..n].iter().map(|&r| T::one() / r));
    let a_diag = rest[n] * expected;
    let mut b = CompensatedSum::new();
    for k in 1..=n {
        let mut prod = T::one();
        for &r in &rest[k..=n] {
            prod = prod * if r == T::zero() { T::zero() } else { r / (r + w[k - 1]) };
        }
        b.add(prod);
    }
    Ok(EntropyDiagnostics {
        sigma,
        expected_tn_given_i: expected,
        a_diag,
        b_diag: b.value(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p1() -> Population<f64> {
        Population::new(vec![0.3, 0.7], vec![0.0, 1.0]).unwrap()
    }

    fn p2() -> Population<f64> {
        Population::new(vec![0.2, 0.3, 0.5], vec![1.0, 2.0, 3.0]).unwrap()
    }

    #[test]
    fn variance_factor_examples() {
        let pop = p2();
        let s = pop.stats();
        assert_eq!(variance_factor(&s, 3, 2).unwrap(), 32.0);
        let second = 2.6 / 0.24 * 4.0 * 3.0 * (1.0f64 / 3.0).powf(0.4);
        assert!((second - 83.77).abs() < 0.01);
        assert_eq!(variance_factor(&s, 3, 3).unwrap(), 0.0);
        let flat = Population::new(vec![0.2, 0.8], vec![1.0, 1.0]).unwrap();
        assert_eq!(variance_factor(&flat.stats(), 2, 1).unwrap(), 0.0);
        let uni = Population::<f64>::uniform(vec![0.0, 1.0]).unwrap();
        assert!(matches!(variance_factor(&uni.stats(), 2, 1), Err(Error::UniformWeights)));
        assert!(variance_factor(&s, 3, 4).is_err());
    }

    #[test]
    fn serfling_examples() {
        assert!((serfling_variance(1.0f64, 10, 9).unwrap() - 0.45).abs() < 1e-15);
        assert_eq!(serfling_variance(1.0f64, 10, 0).unwrap(), 0.0);
        assert_eq!(serfling_variance(0.0f64, 10, 5).unwrap(), 0.0);
    }

    #[test]
    fn tail_bound_examples() {
        assert!((subgaussian_tail_bound(2.0, 2.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(subgaussian_tail_bound(0.0, 1.0).unwrap(), 0.0);
        assert_eq!(subgaussian_tail_bound(f64::INFINITY, 1.0).unwrap(), 1.0);
        assert!(matches!(subgaussian_tail_bound(1.0, 0.0), Err(Error::NonPositiveThreshold(_))));
        assert!((subgaussian_tail_bound(32.0, 1.5).unwrap() - (-2.25f64 / 64.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn chernoff_examples() {
        let b = chernoff_upper_bound(&p1(), 2, 1.0).unwrap();
        assert_eq!((b.bound, b.theta_star), (1.0, 0.0));
        let b = chernoff_upper_bound(&p1(), 2, 2.0).unwrap();
        assert!((b.bound - 0.49).abs() < 1e-6);
        assert!(b.theta_star.is_infinite());
        assert_eq!(chernoff_upper_bound(&p1(), 2, 2.5).unwrap().bound, 0.0);
        assert!(chernoff_upper_bound(&p1(), 0, 1.0).is_err());
    }

    #[test]
    fn chernoff_interior_matches_bernoulli_rate() {
        // Bernoulli(p): bound = exp(-n KL(a/n || p)).
        let (p, n, a) = (0.7f64, 5usize, 4.0f64);
        let q = a / n as f64;
        let kl = q * (q / p).ln() + (1.0 - q) * ((1.0 - q) / (1.0 - p)).ln();
        let b = chernoff_upper_bound(&p1(), n, a).unwrap();
        assert!((b.bound - (-(n as f64) * kl).exp()).abs() < 1e-9);
        let theta = (q * (1.0 - p) / (p * (1.0 - q))).ln();
        assert!((b.theta_star - theta).abs() < 1e-6);
    }

    #[test]
    fn tv_examples() {
        assert_eq!(tv_next_draw(&p2(), &[]).unwrap(), 0.0);
        assert!((tv_next_draw(&p2(), &[3, 2]).unwrap() - 0.8).abs() < 1e-15);
        assert!((tv_next_draw(&p2(), &[1, 3, 2]).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(tv_next_draw(&p2(), &[3, 3]), Err(Error::RepeatedId(3))));
    }

    #[test]
    fn diagnostics_examples() {
        let d = entropy_diagnostics(&p2(), &[3, 2]).unwrap();
        assert!((d.sigma[0] - 0.5).abs() < 1e-15 && (d.sigma[1] - 0.8).abs() < 1e-15);
        assert!((d.expected_tn_given_i - 3.0).abs() < 1e-12);
        assert!((d.a_diag - 0.6).abs() < 1e-12);
        assert!((d.b_diag - (0.5 / 3.5 + 0.4)).abs() < 1e-12);
        assert!((4.0 * (d.a_diag + d.b_diag) - 4.571428).abs() < 1e-6);

        let one = entropy_diagnostics(&p2(), &[2]).unwrap();
        assert_eq!(one.expected_tn_given_i, 1.0);
        assert!((one.a_diag - 0.7).abs() < 1e-12);
        assert!((one.b_diag - 0.7).abs() < 1e-12);

        let full = entropy_diagnostics(&p2(), &[1, 3, 2]).unwrap();
        assert_eq!(full.a_diag, 0.0);
        assert_eq!(full.b_diag, 0.0);

        assert!(entropy_diagnostics(&p2(), &[]).is_err());
        assert!(matches!(entropy_diagnostics(&p2(), &[1, 1]), Err(Error::RepeatedId(1))));
    }

    fn weights_and_order() -> impl Strategy<Value = (Vec<f64>, Vec<usize>)> {
        prop::collection::vec(0.01f64..10.0, 1..9).prop_flat_map(|w| {
            let n = w.len();
            (Just(w), Just((1..=n).collect::<Vec<_>>()).prop_shuffle(), 1..=n)
                .prop_map(|(w, ids, k)| (w, ids[..k].to_vec()))
        })
    }

    proptest! {
        #[test]
        fn a_and_b_at_most_n((w, ids) in weights_and_order()) {
            let values = vec![0.0; w.len()];
            let pop = Population::new(w, values).unwrap();
            let d = entropy_diagnostics(&pop, &ids).unwrap();
            let n = ids.len() as f64;
            prop_assert!(d.expected_tn_given_i >= n - 1e-12);
            prop_assert!(d.a_diag >= 0.0 && d.a_diag <= n + 1e-9);
            prop_assert!(d.b_diag >= 0.0 && d.b_diag <= n + 1e-12);
            prop_assert!(d.sigma.windows(2).all(|s| s[0] < s[1]));
            prop_assert!(*d.sigma.last().unwrap() <= 1.0 + 1e-12);
        }

        #[test]
        fn variance_factor_shape(raw in prop::collection::vec(1.0f64..4.0, 2..12), spread in 0.1f64..5.0) {
            prop_assume!(raw.iter().any(|&x| x != raw[0]));
            let len = raw.len();
            let values: Vec<f64> = (0..len).map(|i| spread * i as f64).collect();
            let pop = Population::new(raw, values).unwrap();
            let s = pop.stats();
            let mut prev = f64::INFINITY;
            for n in 0..=len {
                let v = variance_factor(&s, len, n).unwrap();
                prop_assert!(v <= 4.0 * s.delta * s.delta * n as f64 + 1e-9);
                let constant = (1.0 + 4.0 * s.alpha) / (s.alpha * (1.0 - s.alpha));
                let second = constant * s.delta * s.delta * len as f64
                    * ((len - n) as f64 / len as f64).powf(s.alpha);
                prop_assert!(second <= prev + 1e-9);
                prev = second;
            }
        }

        #[test]
        fn serfling_below_hoeffding(big_n in 2usize..400, frac in 0.0f64..0.5, delta in 0.0f64..10.0) {
            let n = ((big_n as f64) * frac) as usize;
            let v = serfling_variance(delta, big_n, n).unwrap();
            prop_assert!(v <= delta * delta * n as f64 / 4.0 + 1e-12);
        }
    }
}
