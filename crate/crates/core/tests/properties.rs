//! Cross-module invariants on random small populations.

use drawcouple::bounds::{chernoff_upper_bound, entropy_diagnostics, tv_next_draw};
use drawcouple::coupling::screening_coupling;
use drawcouple::oracle::{
    cx_dominates, exact_expected_tn, exact_polya_dist, exact_sample_dist, exact_tuple_law, for_each_without_tuple,
    icx_dominates, SampleMode,
};
use drawcouple::{Population32, Population64, RngStreamSpec};
use proptest::prelude::*;

/// Random weights with values sorted in the same order as the weights.
fn aligned_population() -> impl Strategy<Value = Population64> {
    prop::collection::vec((0.05f64..1.0, 0.0f64..5.0), 2..6).prop_map(|mut items| {
        let mut values: Vec<f64> = items.iter().map(|p| p.1).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        items.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let weights = items.iter().map(|p| p.0).collect();
        Population64::new(weights, values).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laws_are_probability_measures(pop in aligned_population(), n in 0usize..5) {
        let n = n.min(pop.len());
        for mode in [SampleMode::Without, SampleMode::With] {
            let law = exact_sample_dist(&pop, n, mode).unwrap();
            prop_assert!((law.total_mass() - 1.0).abs() < 1e-12);
            let tuples = exact_tuple_law(&pop, n, mode).unwrap();
            prop_assert!((tuples.iter().map(|t| t.1).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn aligned_populations_satisfy_icx(pop in aligned_population(), n in 1usize..5) {
        let n = n.min(pop.len());
        let x = exact_sample_dist(&pop, n, SampleMode::Without).unwrap();
        let y = exact_sample_dist(&pop, n, SampleMode::With).unwrap();
        prop_assert!(icx_dominates(&x, &y, 1e-10).holds);
        prop_assert!(x.mean() <= y.mean() + 1e-10);
    }

    #[test]
    fn chernoff_dominates_exact_tail(pop in aligned_population(), n in 1usize..4, frac in 0.0f64..1.2) {
        let y = exact_sample_dist(&pop, n, SampleMode::With).unwrap();
        let a = y.min() + frac * (y.max() - y.min());
        let b = chernoff_upper_bound(&pop, n, a).unwrap();
        prop_assert!(b.bound >= y.prob_at_least(a) - 1e-9);
        prop_assert!(b.bound <= 1.0 && b.theta_star >= 0.0);
    }

    #[test]
    fn polya_orders_are_convex(labels in 2usize..4, n in 1usize..4, d in 1u64..3, extra in 1u64..3, scale in 0.5f64..3.0) {
        let values: Vec<f64> = (0..labels).map(|i| scale * (i * i) as f64).collect();
        let pop = Population64::uniform(values).unwrap();
        let w = exact_polya_dist(&pop, d, n).unwrap();
        let z = exact_polya_dist(&pop, d + extra, n).unwrap();
        prop_assert!(cx_dominates(&w, &z, 1e-10).holds);
    }

    #[test]
    fn expected_tn_from_diagnostics(pop in aligned_population(), n in 1usize..5) {
        let n = n.min(pop.len());
        let mut avg = 0.0;
        let mut failure = None;
        for_each_without_tuple(&pop, n, |t, p| match entropy_diagnostics(&pop, t) {
            Ok(d) => avg += p * d.expected_tn_given_i,
            Err(e) => failure = Some(e),
        }).unwrap();
        prop_assert!(failure.is_none());
        prop_assert!((avg - exact_expected_tn(&pop, n).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn screening_records_are_consistent(pop in aligned_population(), seed in any::<u64>()) {
        let n = pop.len().min(3);
        let rec = screening_coupling(&pop, n, RngStreamSpec::new(seed, 0)).unwrap();
        prop_assert_eq!(rec.i_sample.len(), n);
        prop_assert!((rec.x - pop.cumulative_value(&rec.i_sample).unwrap()).abs() < 1e-12);
        let tv = tv_next_draw(&pop, &rec.i_sample).unwrap();
        let d = entropy_diagnostics(&pop, &rec.i_sample).unwrap();
        prop_assert!((tv - d.sigma[n - 1]).abs() < 1e-12);
    }
}

#[test]
fn single_precision_pipeline() {
    let pop = Population32::new(vec![0.2, 0.3, 0.5], vec![1.0, 2.0, 3.0]).unwrap();
    let x = exact_sample_dist(&pop, 2, SampleMode::Without).unwrap();
    let y = exact_sample_dist(&pop, 2, SampleMode::With).unwrap();
    assert!(icx_dominates(&x, &y, 1e-5).holds);
    let d = entropy_diagnostics(&pop, &[3, 2]).unwrap();
    assert!((d.b_diag - 0.542857).abs() < 1e-5);
    let rec = screening_coupling(&pop, 2, RngStreamSpec::new(1, 1)).unwrap();
    assert_eq!(rec.i_sample.len(), 2);
}
