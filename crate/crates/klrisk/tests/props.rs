//! Property-based invariants over randomized inputs.

use klrisk::{
    binomial_family, hardy_weinberg_family, kl_divergence, mean_of_statistic, mixture,
    Distribution, SampleSpace, Statistic,
};
use proptest::prelude::*;

fn logits(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, len)
}

proptest! {
    #[test]
    fn kl_is_nonnegative_and_zero_only_at_equality(a in logits(7), b in logits(7)) {
        let space = SampleSpace::integers(6);
        let p = Distribution::from_logits(space.clone(), a).unwrap();
        let q = Distribution::from_logits(space, b).unwrap();
        let d = kl_divergence(&p, &q).unwrap();
        prop_assert!(d >= 0.0);
        if d == 0.0 {
            prop_assert!(p.approx_eq(&q, 1e-12));
        }
        prop_assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn mixture_means_are_linear(a in logits(7), b in logits(7), w in 0.0..1.0f64) {
        let space = SampleSpace::integers(6);
        let p = Distribution::from_logits(space.clone(), a).unwrap();
        let q = Distribution::from_logits(space.clone(), b).unwrap();
        let t = Statistic::scalar_from_fn(space, |i| i as f64).unwrap();
        let m = mixture(&[w, 1.0 - w], &[p.clone(), q.clone()]).unwrap();
        let lhs = mean_of_statistic(&m, &t).unwrap()[0];
        let rhs = w * mean_of_statistic(&p, &t).unwrap()[0]
            + (1.0 - w) * mean_of_statistic(&q, &t).unwrap()[0];
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn duality_round_trip_binomial(theta in -3.0..3.0f64) {
        let fam = binomial_family(6);
        let mu = fam.cumulant(&[theta]).grad;
        let point = fam.natural_from_mean(&mu).unwrap();
        prop_assert!((point.theta[0] - theta).abs() <= 1e-9);
    }

    #[test]
    fn duality_round_trip_hardy_weinberg(theta in -2.5..2.5f64) {
        let fam = hardy_weinberg_family(4);
        let mu = fam.cumulant(&[theta]).grad;
        let point = fam.natural_from_mean(&mu).unwrap();
        prop_assert!((point.theta[0] - theta).abs() <= 1e-9);
    }

    #[test]
    fn projection_moment_match(a in logits(7)) {
        let fam = binomial_family(6);
        let r = Distribution::from_logits(fam.space().clone(), a).unwrap();
        let proj = fam.project(&r).unwrap();
        let mu_r = mean_of_statistic(&r, fam.statistic()).unwrap()[0];
        let mu_p = mean_of_statistic(&proj, fam.statistic()).unwrap()[0];
        prop_assert!((mu_r - mu_p).abs() <= 1e-9);
    }
}
