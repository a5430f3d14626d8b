//! Monte Carlo estimates against exact values on instances the oracle can
//! enumerate.

use drawcouple::coupling::{perturbed_value, screen_stream, screening_coupling};
use drawcouple::harness::suites::{diagnostics_suite, p2, theorem2_suite, theorem3_suite};
use drawcouple::harness::{
    mc_order_check, mc_polya_martingale_check, mc_submartingale_check, mc_tail_check, McConfig, SampleScheme,
    SamplerSpec, Verdict,
};
use drawcouple::oracle::{conditional_first_draw_given_set, exact_sample_dist, SampleMode};
use drawcouple::{Population64, RngStreamSpec};

#[test]
fn hinge_estimates_match_exact_hinges() {
    let pop = p2();
    let lower = SamplerSpec {
        pop: &pop,
        n: 2,
        scheme: SampleScheme::Without,
    };
    let upper = SamplerSpec {
        scheme: SampleScheme::With,
        ..lower
    };
    let x = exact_sample_dist(&pop, 2, SampleMode::Without).unwrap();
    let y = exact_sample_dist(&pop, 2, SampleMode::With).unwrap();
    let points = [2.0, 3.0, 4.0, 5.0];
    let reports = mc_order_check(&lower, &upper, &points, &McConfig::new(50_000, 1)).unwrap();
    for (r, &a) in reports.iter().zip(&points) {
        assert_eq!(r.verdict, Verdict::Pass);
        let info = r.info.as_ref().unwrap();
        // Per-side error of a bounded variable in [0, 4]: 3 * 2 / sqrt(R) covers it.
        let band = 3.0 * 2.0 / (50_000f64).sqrt();
        assert!((info["lhs"].as_f64().unwrap() - x.upper_hinge(a)).abs() < band);
        assert!((info["rhs"].as_f64().unwrap() - y.upper_hinge(a)).abs() < band);
    }
}

#[test]
fn tail_estimate_on_three_items() {
    // X ∈ {3, 4, 5}: E[X] = 3 P(3) + 4 P(4) + 5 P(5); no atom lies 1.5 above
    // or below it, so both tails at t = 1.5 are empty.
    let pop = p2();
    let p3: f64 = 0.075 + 0.06 / 0.7;
    let p5 = 0.15 / 0.7 + 0.3;
    let mean = 3.0 * p3 + 4.0 * 0.325 + 5.0 * p5;
    assert!((mean - 4.353571).abs() < 1e-6);
    let reports = mc_tail_check(&pop, 2, &[1.5], &McConfig::new(100_000, 2)).unwrap();
    for r in &reports {
        assert_eq!(r.statistic, 0.0);
        assert!((r.reference - (-2.25f64 / 64.0).exp()).abs() < 1e-12);
        assert!(r.passed());
    }
}

#[test]
fn conditional_means_match_first_draw_identity() {
    let pop = p2();
    let rep = mc_submartingale_check(&pop, 2, &McConfig::new(100_000, 3)).unwrap();
    assert!(rep.passed(), "{rep:?}");
    let groups = rep.info.as_ref().unwrap()["groups"].as_array().unwrap().clone();
    assert_eq!(groups.len(), 3);
    for g in groups {
        let set: Vec<usize> = serde_json::from_value(g["set"].clone()).unwrap();
        let exact = 2.0 * conditional_first_draw_given_set(&pop, &set).unwrap().cond_mean;
        assert!((g["mean_y"].as_f64().unwrap() - exact).abs() <= g["band"].as_f64().unwrap() + 1e-12);
        assert!((g["exact_mean_y"].as_f64().unwrap() - exact).abs() < 1e-12);
    }
}

#[test]
fn uniform_weights_make_the_coupling_a_martingale() {
    let pop = Population64::uniform(vec![0.0, 1.0, 3.0, 4.0]).unwrap();
    let rep = mc_submartingale_check(&pop, 2, &McConfig::new(60_000, 4)).unwrap();
    for g in rep.info.as_ref().unwrap()["groups"].as_array().unwrap() {
        let gap = g["mean_y"].as_f64().unwrap() - g["x"].as_f64().unwrap();
        assert!(gap.abs() <= g["band"].as_f64().unwrap() * 4.0 / 3.0, "{g}");
    }
}

#[test]
fn misaligned_population_is_informational() {
    let pop = Population64::new(vec![0.7, 0.3], vec![0.0, 1.0]).unwrap();
    let rep = mc_submartingale_check(&pop, 1, &McConfig::new(2_000, 5)).unwrap();
    assert_eq!(rep.verdict, Verdict::Inconclusive);
    assert_eq!(rep.params["condition_holds"], false);
}

#[test]
fn polya_means_on_two_labels() {
    // d = 1: two fair coin flips, mean 1; D = 2: uniform on {0, 1, 2}, mean 1.
    let pop = Population64::uniform(vec![0.0, 1.0]).unwrap();
    let reports = mc_polya_martingale_check(&pop, 1, 2, 2, &McConfig::new(50_000, 6)).unwrap();
    assert!(reports.iter().all(|r| r.verdict != Verdict::Fail), "{reports:?}");
    let mean_z = reports.iter().find(|r| r.check == "polya_mean_z").unwrap();
    assert!((mean_z.reference - 1.0).abs() < 1e-12);
}

#[test]
fn perturbing_before_the_last_screen_time() {
    let pop = p2();
    for s in 0..200 {
        let rec = screening_coupling(&pop, 2, RngStreamSpec::new(7, s)).unwrap();
        for i in 1..=rec.last_time() {
            let same = perturbed_value(&rec, i, rec.stream[i - 1], &pop, 2).unwrap();
            assert_eq!(same, rec.x);
            for j in 1..=3 {
                let xi = perturbed_value(&rec, i, j, &pop, 2).unwrap();
                assert!([3.0, 4.0, 5.0].contains(&xi));
            }
        }
    }
    let rec = screen_stream(&pop, 2, [3, 3, 2]).unwrap();
    // Whichever entry becomes 1, the first two distinct ids are {1, 3}.
    assert_eq!(perturbed_value(&rec, 2, 1, &pop, 2).unwrap(), 4.0);
    assert_eq!(perturbed_value(&rec, 1, 1, &pop, 2).unwrap(), 4.0);
    assert_eq!(perturbed_value(&rec, 3, 1, &pop, 2).unwrap(), 4.0);
}

#[test]
fn suites_have_no_failures_at_reduced_budget() {
    let cfg = McConfig::new(20_000, 8);
    for reports in [
        theorem2_suite(&cfg).unwrap(),
        theorem3_suite(1e-12, &cfg).unwrap(),
        diagnostics_suite(&cfg).unwrap(),
    ] {
        let failed: Vec<_> = reports.iter().filter(|r| r.failed()).collect();
        assert!(failed.is_empty(), "{failed:?}");
    }
}
