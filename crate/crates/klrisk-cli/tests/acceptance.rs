//! Acceptance suite: one test per criterion, each printing a PASS line after
//! its assertions. Run with `cargo test -p klrisk-cli --test acceptance`.

use std::sync::Arc;

use klrisk::random::{derive_seed, keyed_rng, random_estimator};
use klrisk::{
    binomial_family, check_distribution_unbiased, conditional_kl_mean, delta_correction,
    expected_divergence_with_weights, hardy_weinberg_family, iid_pmf, kl_divergence,
    kl_mean_with_weights, make_mean_matched_competitor_on, mean_of_statistic, mle_estimator_on,
    poisson_family, poisson_indicator_umvue, rao_blackwellize, run_identity_suites, Distribution,
    DistributionEstimator, ExponentialFamily, FamilySpec, IIDSpace, VerifyConfig,
};

/// The four benchmark configurations: family name and i.i.d. sample size.
const CASES: [(&str, u32); 4] = [
    ("binomial:6", 1),
    ("hw:6", 1),
    ("poisson:60", 2),
    ("trinomial:6", 1),
];

fn interior_grid(fam: &ExponentialFamily, points: usize) -> Vec<Vec<f64>> {
    klrisk::default_natural_grid(fam, points)
}

fn run_binary(args: &[&str]) -> std::process::Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_klrisk"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn acceptance_01_identity_suites() {
    // KLR1, KLP1-KLP4, and the Pythagorean identity at <= 1e-9 on all four
    // families, >= 9 interior grid points, >= 20 randomized estimators,
    // under 30 seconds total.
    let started = std::time::Instant::now();
    let criterion_suites = [
        "klr1_risk_decomposition",
        "klp1_characterization",
        "klp2_conditional_mean",
        "klp3_variance_decomposition",
        "klp4_expectation_property",
        "pythagorean",
    ];
    for (name, n) in CASES {
        let fam = FamilySpec::parse(name).unwrap().build();
        let config = VerifyConfig::new(&fam, n, 1);
        assert!(config.estimator_count >= 20);
        assert!(config.member_grid.len() >= 9);
        let outcomes = run_identity_suites(&fam, &config).unwrap();
        for suite in criterion_suites {
            let o = outcomes
                .iter()
                .find(|o| o.name == suite)
                .unwrap_or_else(|| panic!("{name}: suite {suite} missing"));
            assert!(
                o.value <= 1e-9,
                "{name}: {suite} residual {} above 1e-9",
                o.value
            );
        }
        for o in &outcomes {
            assert!(o.pass, "{name}: suite {} failed at {}", o.name, o.value);
        }
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 30.0,
        "identity suites took {elapsed:?}, over the 30 s target"
    );
    println!("ACCEPTANCE 01 identity suites (4 families, residuals <= 1e-9, {elapsed:?}): PASS");
}

#[test]
fn acceptance_02_delta_vanishing_and_sanity() {
    // |Delta| <= 1e-9 across the grid on every family; a constructed
    // non-projected triple shows |Delta| >= 1e-3.
    for (name, n) in CASES {
        let fam = FamilySpec::parse(name).unwrap().build();
        let iid = IIDSpace::new(fam.space().clone(), n).unwrap();
        let mle = mle_estimator_on(&fam, &iid).unwrap();
        let grid = interior_grid(&fam, 9);
        let mut max_delta = 0.0f64;
        for theta0 in &grid {
            let p0 = fam.member_from_natural(theta0);
            let weights = iid_pmf(&p0, &iid).unwrap();
            let e_r = kl_mean_with_weights(&mle, &weights).unwrap();
            let ed_r = fam.extended_project(&e_r).unwrap();
            for theta in &grid {
                let p = fam.member_from_natural(theta);
                max_delta = max_delta.max(delta_correction(&e_r, &ed_r, &p).unwrap().abs());
            }
        }
        assert!(max_delta <= 1e-9, "{name}: max |Delta| = {max_delta}");
    }

    // sanity construction on the binomial family
    let fam = binomial_family(6);
    let iid = IIDSpace::new(fam.space().clone(), 1).unwrap();
    let mle = mle_estimator_on(&fam, &iid).unwrap();
    let p0 = fam.member_from_natural(&[0.0]);
    let e_r = kl_mean_with_weights(&mle, &iid_pmf(&p0, &iid).unwrap()).unwrap();
    let wrong = fam.member_at_mean_extended(&[2.0]).unwrap();
    let query = fam.member_at_mean_extended(&[4.0]).unwrap();
    let delta = delta_correction(&e_r, &wrong, &query).unwrap().abs();
    assert!(delta >= 1e-3, "sanity |Delta| = {delta}");
    println!("ACCEPTANCE 02 delta vanishing (<= 1e-9) with failing sanity triple (|Delta| = {delta:.3}): PASS");
}

#[test]
fn acceptance_03_duality_round_trip() {
    // 100 grid thetas per family: || theta - invert(grad psi(theta)) || <= 1e-9.
    for (name, _) in CASES {
        let fam = FamilySpec::parse(name).unwrap().build();
        let grid: Vec<Vec<f64>> = if fam.dim() == 1 {
            (0..100).map(|i| vec![-2.5 + 5.0 * i as f64 / 99.0]).collect()
        } else {
            let mut g = Vec::new();
            for i in 0..10 {
                for j in 0..10 {
                    g.push(vec![-1.25 + 2.5 * i as f64 / 9.0, -1.25 + 2.5 * j as f64 / 9.0]);
                }
            }
            g
        };
        assert_eq!(grid.len(), 100);
        let mut worst = 0.0f64;
        for theta in &grid {
            let mu = fam.cumulant(theta).grad;
            let point = fam.natural_from_mean(&mu).unwrap();
            for (got, want) in point.theta.iter().zip(theta) {
                worst = worst.max((got - want).abs());
            }
        }
        assert!(worst <= 1e-9, "{name}: round-trip error {worst}");
    }
    println!("ACCEPTANCE 03 duality round trip (100 thetas per family, <= 1e-9): PASS");
}

#[test]
fn acceptance_04_mle_distribution_unbiasedness() {
    // D(Ed MLE, P_theta0) <= 1e-9 for every grid generator in all four
    // families; the estimator includes boundary(extended) values throughout.
    for (name, n) in CASES {
        let fam = FamilySpec::parse(name).unwrap().build();
        let iid = IIDSpace::new(fam.space().clone(), n).unwrap();
        let mle = mle_estimator_on(&fam, &iid).unwrap();
        // confirm boundary handling is actually exercised
        let has_boundary_value = mle.values().iter().any(|v| !v.is_full_support());
        assert!(has_boundary_value, "{name}: no boundary MLE values");
        for theta0 in interior_grid(&fam, 9) {
            let p0 = fam.member_from_natural(&theta0);
            let weights = iid_pmf(&p0, &iid).unwrap();
            let ed = fam
                .extended_project(&kl_mean_with_weights(&mle, &weights).unwrap())
                .unwrap();
            let d = kl_divergence(&ed, &p0).unwrap();
            assert!(d <= 1e-9, "{name}: D(Ed, P0) = {d} at {theta0:?}");
        }
    }
    println!("ACCEPTANCE 04 MLE distribution unbiasedness (D <= 1e-9, all families): PASS");
}

#[test]
fn acceptance_05_rao_blackwell() {
    // 50 randomized estimators per family: conditioning on the sufficient
    // statistic never increases Vd (within 1e-12), preserves Ed within 1e-10
    // per point, and strictly decreases Vd for these non-measurable inputs.
    for (name, n) in CASES {
        let fam = FamilySpec::parse(name).unwrap().build();
        let iid = IIDSpace::new(fam.space().clone(), n).unwrap();
        let sufficient = iid.sum_statistic(fam.statistic()).unwrap();
        let generators: Vec<Distribution> = interior_grid(&fam, 9)
            .iter()
            .map(|t| fam.member_from_natural(t))
            .collect();
        for i in 0..50u64 {
            let mut rng = keyed_rng(4000 + i, 0);
            let est = random_estimator(&iid, fam.space(), &mut rng);
            let r0 = &generators[(i as usize) % generators.len()];
            let weights = iid_pmf(r0, &iid).unwrap();
            let ed = fam
                .extended_project(&kl_mean_with_weights(&est, &weights).unwrap())
                .unwrap();
            let vd = expected_divergence_with_weights(&est, &weights, &ed).unwrap();
            let rb = rao_blackwellize(&est, &sufficient, &fam, r0).unwrap();
            let ed_rb = fam
                .extended_project(&kl_mean_with_weights(&rb.estimator, &weights).unwrap())
                .unwrap();
            let vd_rb =
                expected_divergence_with_weights(&rb.estimator, &weights, &ed_rb).unwrap();
            assert!(vd_rb <= vd + 1e-12, "{name}: Vd grew {vd} -> {vd_rb}");
            assert!(
                vd - vd_rb > 1e-10,
                "{name}: no strict improvement for a non-measurable estimator"
            );
            let gap = ed.max_mass_diff(&ed_rb).unwrap();
            assert!(gap <= 1e-10, "{name}: Ed moved by {gap}");
        }
    }
    println!("ACCEPTANCE 05 Rao-Blackwell (50 estimators per family, Vd down, Ed fixed): PASS");
}

#[test]
fn acceptance_06_umvu_arena() {
    // 100 mean-matched competitors per family (eps in {0.25, 0.5} x seeds
    // 1..=5 x 10): unbiasedness residual <= 1e-8 and Vd >= Vd(MLE) - 1e-10,
    // strictly above for these eps > 0 competitors.
    for (name, n) in CASES {
        let fam = FamilySpec::parse(name).unwrap().build();
        let iid = IIDSpace::new(fam.space().clone(), n).unwrap();
        let mle = mle_estimator_on(&fam, &iid).unwrap();
        let grid = interior_grid(&fam, 9);
        let check_grid: Vec<Vec<f64>> = vec![grid[1].clone(), grid[4].clone(), grid[7].clone()];
        let mut generators = Vec::new();
        for theta0 in &check_grid {
            let p0 = fam.member_from_natural(theta0);
            let weights = iid_pmf(&p0, &iid).unwrap();
            let ed = fam
                .extended_project(&kl_mean_with_weights(&mle, &weights).unwrap())
                .unwrap();
            let vd_mle = expected_divergence_with_weights(&mle, &weights, &ed).unwrap();
            generators.push((weights, vd_mle));
        }
        let mut competitors = 0usize;
        for &epsilon in &[0.25, 0.5] {
            for seed in 1..=5u64 {
                for k in 0..10u64 {
                    competitors += 1;
                    let sub_seed = derive_seed(seed, k);
                    let comp =
                        make_mean_matched_competitor_on(&fam, &iid, epsilon, sub_seed).unwrap();
                    let report = check_distribution_unbiased(&comp, &fam, &check_grid).unwrap();
                    for entry in &report.entries {
                        let residual = entry.projection_divergence.max(entry.max_level_residual);
                        assert!(
                            residual <= 1e-8,
                            "{name}: unbiasedness residual {residual}"
                        );
                    }
                    for (weights, vd_mle) in &generators {
                        let ed = fam
                            .extended_project(&kl_mean_with_weights(&comp, weights).unwrap())
                            .unwrap();
                        let vd =
                            expected_divergence_with_weights(&comp, weights, &ed).unwrap();
                        assert!(
                            vd >= vd_mle - 1e-10,
                            "{name}: competitor beat the MLE ({vd} < {vd_mle})"
                        );
                        assert!(
                            vd > *vd_mle,
                            "{name}: eps > 0 competitor tied the MLE ({vd} vs {vd_mle})"
                        );
                    }
                }
            }
        }
        assert_eq!(competitors, 100);
    }
    println!("ACCEPTANCE 06 UMV arena (100 competitors per family, MLE wins strictly): PASS");
}

#[test]
fn acceptance_07_bernoulli_closed_form() {
    // V = Vd = binary entropy of theta0 within 1e-12; ln 2 at theta0 = 0.5.
    let fam = binomial_family(1);
    let iid = IIDSpace::new(fam.space().clone(), 1).unwrap();
    let mle = mle_estimator_on(&fam, &iid).unwrap();
    for i in 1..=9u32 {
        let theta0 = i as f64 / 10.0;
        let p0 = fam.member_from_natural(&[(theta0 / (1.0 - theta0)).ln()]);
        let weights = iid_pmf(&p0, &iid).unwrap();
        let e_r = kl_mean_with_weights(&mle, &weights).unwrap();
        let v = expected_divergence_with_weights(&mle, &weights, &e_r).unwrap();
        let ed = fam.extended_project(&e_r).unwrap();
        let vd = expected_divergence_with_weights(&mle, &weights, &ed).unwrap();
        let entropy = -theta0 * theta0.ln() - (1.0 - theta0) * (1.0 - theta0).ln();
        assert!((v - entropy).abs() <= 1e-12, "V at {theta0}: {v} vs {entropy}");
        assert!((vd - entropy).abs() <= 1e-12, "Vd at {theta0}: {vd} vs {entropy}");
        if i == 5 {
            assert!((v - std::f64::consts::LN_2).abs() <= 1e-12);
        }
    }
    println!("ACCEPTANCE 07 Bernoulli closed form (V = Vd = binary entropy, <= 1e-12): PASS");
}

#[test]
fn acceptance_08_hw_figure() {
    // The emitted figure data: KL-mean pi1 at theta = 0.5 equals
    // 1/4 + 1/48 within 1e-9; the KL mean stays off the model by more than
    // 1e-4 at every interior grid theta while Ed stays on it within 1e-9.
    let out = run_binary(&["hw-figure", "--n", "6"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut found_half = false;
    for line in text.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        let (theta, klmean_pi1, gap) = (cols[0], cols[4], cols[7]);
        assert!(
            gap > 1e-4,
            "KL mean sits on the model at theta = {theta} (gap {gap})"
        );
        if (theta - 0.5).abs() < 1e-12 {
            found_half = true;
            let closed_form = 0.25 + 0.25 / 12.0;
            assert!(
                (klmean_pi1 - closed_form).abs() <= 1e-9,
                "pi1 coordinate {klmean_pi1} vs {closed_form}"
            );
        }
    }
    assert!(found_half, "default grid must include theta = 0.5");

    let fam = hardy_weinberg_family(6);
    let iid = IIDSpace::new(fam.space().clone(), 1).unwrap();
    let mle = mle_estimator_on(&fam, &iid).unwrap();
    for i in 1..=19u32 {
        let theta = i as f64 * 0.05;
        let p0 = fam.member_from_natural(&[(theta / (1.0 - theta)).ln()]);
        let weights = iid_pmf(&p0, &iid).unwrap();
        let ed = fam
            .extended_project(&kl_mean_with_weights(&mle, &weights).unwrap())
            .unwrap();
        let d = kl_divergence(&ed, &p0).unwrap();
        assert!(d <= 1e-9, "Ed off the model at theta = {theta}: {d}");
    }
    println!("ACCEPTANCE 08 Hardy-Weinberg figure (closed form at 0.5, KL mean off-model): PASS");
}

#[test]
fn acceptance_09_poisson_pathologies() {
    // The smoothed indicator matches its closed form to 1e-12 for all
    // i <= s_n <= 40 on poisson:60 pairs, and the truncated expectation of
    // (-2)^x matches e^{-3 lambda} within 1e-8 for lambda in {0.5, 1, 2, 4}.
    let fam = poisson_family(60);
    let iid = IIDSpace::new(fam.space().clone(), 2).unwrap();
    let est = DistributionEstimator::from_fn(iid.clone(), |idx| {
        let coords = iid.outcome(idx);
        Arc::new(Distribution::point_mass(fam.space().clone(), coords[0]))
    })
    .unwrap();
    let s = iid.sum_statistic(fam.statistic()).unwrap();
    let r0 = fam.member_from_natural(&[0.0]);
    for s_n in 0..=40u64 {
        let smoothed = conditional_kl_mean(&est, &s, &[s_n as f64], &r0).unwrap();
        for i in 0..=s_n {
            let closed = poisson_indicator_umvue(i, s_n, 2);
            let got = smoothed.mass(i as usize);
            assert!(
                (got - closed).abs() <= 1e-12,
                "delta_1 mismatch at i={i}, s={s_n}: {got} vs {closed}"
            );
        }
    }

    for &lambda in &[0.5, 1.0, 2.0, 4.0] {
        let member = fam.member_from_natural(&[f64::ln(lambda)]);
        let tail = klrisk::poisson_truncation_tail(lambda, 60);
        assert!(tail < 1e-12, "lambda {lambda}: truncation tail {tail}");
        // E[(-2)^X] under the untruncated pmf, restricted to the support
        let mut total = 0.0;
        for x in 0..=60u32 {
            let untruncated_logp =
                -lambda + (x as f64) * lambda.ln() - klrisk::numeric::ln_factorial(x as u64);
            total += klrisk::lehmann_umvu(x) * untruncated_logp.exp();
        }
        let target = (-3.0 * lambda).exp();
        assert!(
            (total - target).abs() <= 1e-8,
            "lambda {lambda}: {total} vs {target}"
        );
        // and the member pmf is that truncated-renormalized pmf
        let mu = mean_of_statistic(&member, fam.statistic()).unwrap();
        assert!((mu[0] - lambda).abs() < 1e-8, "truncated mean far from lambda");
    }
    println!("ACCEPTANCE 09 Poisson pathologies (smoothed indicator, Lehmann sum): PASS");
}

#[test]
fn acceptance_10_compete_determinism() {
    // Identical flags produce byte-identical arena reports.
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a.json");
    let out_b = dir.path().join("b.json");
    for path in [&out_a, &out_b] {
        let out = run_binary(&[
            "compete",
            "--family",
            "binomial:6",
            "--k",
            "5",
            "--epsilon",
            "0.25,0.5",
            "--seed",
            "3",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let a = std::fs::read(&out_a).unwrap();
    let b = std::fs::read(&out_b).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "arena reports differ between identical runs");
    println!("ACCEPTANCE 10 determinism (byte-identical compete reports): PASS");
}
