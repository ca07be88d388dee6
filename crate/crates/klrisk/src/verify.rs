//! The runnable identity suites: every decomposition and projection identity
//! checked by exact enumeration against seeded randomized estimators, with
//! one outcome row per identity.

use std::sync::Arc;

use crate::error::Result;
use crate::estimation::{
    delta_correction, expected_divergence_with_weights, kl_mean_with_weights, rao_blackwellize,
    DistributionEstimator,
};
use crate::expfam::{inf_norm_diff, ExponentialFamily, HullPosition};
use crate::families::mle_estimator_on;
use crate::measure::{
    iid_pmf, kl_divergence, mean_of_statistic, Distribution, IIDSpace, Statistic,
    DEFAULT_ENUM_CAP,
};
use crate::random::{keyed_rng, random_distribution, random_estimator};
use rand::Rng;

/// One identity's verification outcome. `pass` is `value <= threshold` for
/// residual checks (`at_most`), `value >= threshold` for margin checks.
#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub at_most: bool,
    pub pass: bool,
}

impl SuiteOutcome {
    fn residual(name: &str, value: f64, threshold: f64) -> Self {
        SuiteOutcome {
            name: name.to_string(),
            value,
            threshold,
            at_most: true,
            pass: value <= threshold,
        }
    }

    fn margin(name: &str, value: f64, threshold: f64) -> Self {
        SuiteOutcome {
            name: name.to_string(),
            value,
            threshold,
            at_most: false,
            pass: value >= threshold,
        }
    }
}

/// Knobs for one verification run.
#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub sample_size: u32,
    pub seed: u64,
    pub estimator_count: usize,
    /// Interior members used as generators and comparison points, in natural
    /// coordinates.
    pub member_grid: Vec<Vec<f64>>,
    pub enumeration_cap: usize,
}

impl VerifyConfig {
    pub fn new(fam: &ExponentialFamily, sample_size: u32, seed: u64) -> Self {
        VerifyConfig {
            sample_size,
            seed,
            estimator_count: 20,
            member_grid: default_natural_grid(fam, 9),
            enumeration_cap: DEFAULT_ENUM_CAP,
        }
    }
}

/// An interior grid in natural coordinates with at least `points` entries.
pub fn default_natural_grid(fam: &ExponentialFamily, points: usize) -> Vec<Vec<f64>> {
    assert!(points >= 2);
    if fam.dim() == 1 {
        (0..points)
            .map(|i| vec![-1.5 + 3.0 * i as f64 / (points - 1) as f64])
            .collect()
    } else {
        let side = (points as f64).sqrt().ceil() as usize;
        let mut grid = Vec::new();
        for i in 0..side {
            for j in 0..side {
                grid.push(vec![
                    -1.0 + 2.0 * i as f64 / (side - 1) as f64,
                    -1.0 + 2.0 * j as f64 / (side - 1) as f64,
                ]);
            }
        }
        grid
    }
}

/// A seeded integer-valued statistic whose level sets form an arbitrary
/// (non-sufficient) partition of the sample domain.
fn partition_statistic(iid: &IIDSpace, seed: u64) -> Statistic {
    let mut rng = keyed_rng(seed, 0xC0FFEE);
    Statistic::scalar_from_fn(iid.space().clone(), |_| rng.random_range(0..4u32) as f64)
        .expect("integer partition statistic")
}

/// Per-estimator decomposition terms, computed once and shared by the suites.
struct Analysis {
    weights: Distribution,
    kl_mean: Distribution,
    kl_variance: f64,
    dist_mean: Distribution,
    dist_variance: f64,
}

fn analyze(
    est: &DistributionEstimator,
    fam: &ExponentialFamily,
    r0: &Distribution,
    iid: &IIDSpace,
) -> Result<Analysis> {
    let weights = iid_pmf(r0, iid)?;
    let kl_mean = kl_mean_with_weights(est, &weights)?;
    let kl_variance = expected_divergence_with_weights(est, &weights, &kl_mean)?;
    let dist_mean = fam.extended_project(&kl_mean)?;
    let dist_variance = expected_divergence_with_weights(est, &weights, &dist_mean)?;
    Ok(Analysis {
        weights,
        kl_mean,
        kl_variance,
        dist_mean,
        dist_variance,
    })
}

/// Run every identity suite for one family and return one row per identity.
pub fn run_identity_suites(
    fam: &ExponentialFamily,
    config: &VerifyConfig,
) -> Result<Vec<SuiteOutcome>> {
    let iid = IIDSpace::with_cap(fam.space().clone(), config.sample_size, config.enumeration_cap)?;
    let members: Vec<Distribution> = config
        .member_grid
        .iter()
        .map(|theta| fam.member_from_natural(theta))
        .collect();
    let estimators: Vec<DistributionEstimator> = (0..config.estimator_count)
        .map(|i| {
            let mut rng = keyed_rng(config.seed, i as u64);
            random_estimator(&iid, fam.space(), &mut rng)
        })
        .collect();
    // Each estimator draws its generator from the member grid round-robin.
    let generator = |i: usize| &members[i % members.len()];
    let analyses: Vec<Analysis> = estimators
        .iter()
        .enumerate()
        .map(|(i, est)| analyze(est, fam, generator(i), &iid))
        .collect::<Result<_>>()?;
    let mle = mle_estimator_on(fam, &iid)?;
    let mut out = Vec::new();

    // Natural/mean duality round trip over a dense grid.
    {
        let mut worst = 0.0f64;
        let grid = if fam.dim() == 1 {
            (0..100)
                .map(|i| vec![-2.5 + 5.0 * i as f64 / 99.0])
                .collect::<Vec<_>>()
        } else {
            let mut g = Vec::new();
            for i in 0..10 {
                for j in 0..10 {
                    g.push(vec![
                        -1.25 + 2.5 * i as f64 / 9.0,
                        -1.25 + 2.5 * j as f64 / 9.0,
                    ]);
                }
            }
            g
        };
        for theta in &grid {
            let mu = fam.cumulant(theta).grad;
            let point = fam.natural_from_mean(&mu)?;
            worst = worst.max(inf_norm_diff(&point.theta, theta));
        }
        out.push(SuiteOutcome::residual("duality_round_trip", worst, 1e-9));
    }

    // Projection moment matching on random full-support distributions.
    {
        let mut rng = keyed_rng(config.seed, 0xA11CE);
        let mut worst = 0.0f64;
        for _ in 0..config.estimator_count.max(10) {
            let r = random_distribution(fam.space(), &mut rng);
            let proj = fam.project(&r)?;
            let mu_r = mean_of_statistic(&r, fam.statistic())?;
            let mu_p = mean_of_statistic(&proj, fam.statistic())?;
            worst = worst.max(inf_norm_diff(&mu_r, &mu_p));
        }
        out.push(SuiteOutcome::residual("moment_matching", worst, 1e-9));
    }

    // Pythagorean identity D(r,P) = D(r,proj r) + D(proj r,P).
    {
        let mut rng = keyed_rng(config.seed, 0xBEEF);
        let mut worst = 0.0f64;
        for _ in 0..config.estimator_count {
            let r = random_distribution(fam.space(), &mut rng);
            let proj = fam.project(&r)?;
            let d_r_proj = kl_divergence(&r, &proj)?;
            for p in &members {
                let lhs = kl_divergence(&r, p)?;
                let rhs = d_r_proj + kl_divergence(&proj, p)?;
                worst = worst.max((lhs - rhs).abs());
            }
        }
        out.push(SuiteOutcome::residual("pythagorean", worst, 1e-9));
    }

    // Extended Pythagorean identity at every boundary point mass.
    {
        let mut worst = 0.0f64;
        for x in 0..fam.space().len() {
            let t_x = fam.statistic().value(x).to_vec();
            if !matches!(fam.hull_position(&t_x)?, HullPosition::Boundary(_)) {
                continue;
            }
            let r = Distribution::point_mass(fam.space().clone(), x);
            let proj = fam.extended_project(&r)?;
            let d_r_proj = kl_divergence(&r, &proj)?;
            for p in &members {
                let lhs = kl_divergence(&r, p)?;
                let rhs = d_r_proj + kl_divergence(&proj, p)?;
                worst = worst.max((lhs - rhs).abs());
            }
        }
        out.push(SuiteOutcome::residual("extended_pythagorean", worst, 1e-9));
    }

    // KLR1: E[D(R, ref)] = D(E R, ref) + V R for arbitrary references.
    {
        let mut rng = keyed_rng(config.seed, 0xD1CE);
        let mut worst = 0.0f64;
        for (est, a) in estimators.iter().zip(&analyses) {
            for _ in 0..3 {
                let reference = random_distribution(fam.space(), &mut rng);
                let lhs = expected_divergence_with_weights(est, &a.weights, &reference)?;
                let rhs = kl_divergence(&a.kl_mean, &reference)? + a.kl_variance;
                worst = worst.max((lhs - rhs).abs());
            }
        }
        out.push(SuiteOutcome::residual("klr1_risk_decomposition", worst, 1e-10));
    }

    // Expectation property of the KL mean for arbitrary statistics.
    {
        let mut rng = keyed_rng(config.seed, 0xFACE);
        let mut worst = 0.0f64;
        for (est, a) in estimators.iter().zip(&analyses).take(8) {
            let stat =
                Statistic::scalar_from_fn(fam.space().clone(), |_| rng.random_range(-1.0..1.0))?;
            let lhs = mean_of_statistic(&a.kl_mean, &stat)?[0];
            let mut rhs = 0.0;
            for x in 0..iid.len() {
                rhs += a.weights.mass(x) * mean_of_statistic(est.value(x), &stat)?[0];
            }
            worst = worst.max((lhs - rhs).abs());
        }
        out.push(SuiteOutcome::residual("expectation_property", worst, 1e-12));
    }

    // KLP1: E[D(R, P)] = D(Ed R, P) + Vd R on the member grid.
    {
        let mut worst = 0.0f64;
        for (est, a) in estimators.iter().zip(&analyses) {
            for p in &members {
                let lhs = expected_divergence_with_weights(est, &a.weights, p)?;
                let rhs = kl_divergence(&a.dist_mean, p)? + a.dist_variance;
                worst = worst.max((lhs - rhs).abs());
            }
        }
        out.push(SuiteOutcome::residual("klp1_characterization", worst, 1e-9));
    }

    // KLP2 / KLP3: conditional equalities for an arbitrary partition and for
    // the sufficient statistic.
    {
        let sufficient = iid.sum_statistic(fam.statistic())?;
        let mut worst2 = 0.0f64;
        let mut worst3 = 0.0f64;
        for (i, (est, a)) in estimators.iter().zip(&analyses).enumerate() {
            let r0 = generator(i);
            for s in [&partition_statistic(&iid, config.seed ^ i as u64), &sufficient] {
                let rb = rao_blackwellize(est, s, fam, r0)?;
                let e_rb = kl_mean_with_weights(&rb.estimator, &a.weights)?;
                let ed_rb = fam.extended_project(&e_rb)?;
                worst2 = worst2.max(a.dist_mean.max_mass_diff(&ed_rb)?);
                let vd_rb =
                    expected_divergence_with_weights(&rb.estimator, &a.weights, &ed_rb)?;
                let mut within = 0.0;
                for x in 0..iid.len() {
                    within += a.weights.mass(x)
                        * kl_divergence(est.value(x), rb.estimator.value(x))?;
                }
                worst3 = worst3.max((a.dist_variance - vd_rb - within).abs());
            }
        }
        out.push(SuiteOutcome::residual("klp2_conditional_mean", worst2, 1e-10));
        out.push(SuiteOutcome::residual("klp3_variance_decomposition", worst3, 1e-9));
    }

    // KLP4: canonical-statistic expectation property of Ed.
    {
        let mut worst = 0.0f64;
        for (est, a) in estimators.iter().zip(&analyses) {
            let lhs = mean_of_statistic(&a.dist_mean, fam.statistic())?;
            let mut rhs = vec![0.0; fam.dim()];
            for x in 0..iid.len() {
                let mu = mean_of_statistic(est.value(x), fam.statistic())?;
                for k in 0..fam.dim() {
                    rhs[k] += a.weights.mass(x) * mu[k];
                }
            }
            worst = worst.max(inf_norm_diff(&lhs, &rhs));
        }
        out.push(SuiteOutcome::residual("klp4_expectation_property", worst, 1e-9));
    }

    // Delta vanishes on the family: MLE and random estimators alike.
    {
        let mut worst = 0.0f64;
        let mle_mean = kl_mean_with_weights(&mle, &analyses[0].weights)?;
        let mle_dist_mean = fam.extended_project(&mle_mean)?;
        for p in &members {
            worst = worst.max(delta_correction(&mle_mean, &mle_dist_mean, p)?.abs());
        }
        for a in analyses.iter().take(5) {
            for p in &members {
                worst = worst.max(delta_correction(&a.kl_mean, &a.dist_mean, p)?.abs());
            }
        }
        out.push(SuiteOutcome::residual("delta_vanishing", worst, 1e-9));
    }

    // Sanity: a deliberately non-projected triple must show a large |Delta|.
    {
        let r0 = &members[members.len() / 2];
        let e_r = kl_mean_with_weights(&mle, &iid_pmf(r0, &iid)?)?;
        let mu = mean_of_statistic(&e_r, fam.statistic())?;
        let t_lo = fam.statistic().value(0);
        let t_hi = fam.statistic().value(fam.space().len() - 1);
        let mu_wrong: Vec<f64> = (0..fam.dim()).map(|k| 0.7 * mu[k] + 0.3 * t_lo[k]).collect();
        let mu_query: Vec<f64> = (0..fam.dim()).map(|k| 0.7 * mu[k] + 0.3 * t_hi[k]).collect();
        let ed_wrong = fam.member_at_mean_extended(&mu_wrong)?;
        let p = fam.member_at_mean_extended(&mu_query)?;
        let delta = delta_correction(&e_r, &ed_wrong, &p)?.abs();
        out.push(SuiteOutcome::margin("delta_sanity_nonprojected", delta, 1e-3));
    }

    // Rao-Blackwell improvement: projecting values never hurts.
    {
        let mut margin = f64::INFINITY;
        for (est, a) in estimators.iter().zip(&analyses).take(5) {
            let projected = DistributionEstimator::from_fn(iid.clone(), |x| {
                Arc::new(fam.extended_project(est.value(x)).expect("projection"))
            })?;
            for p in &members {
                let raw = expected_divergence_with_weights(est, &a.weights, p)?;
                let smoothed = expected_divergence_with_weights(&projected, &a.weights, p)?;
                margin = margin.min(raw - smoothed);
            }
        }
        out.push(SuiteOutcome::margin("rao_blackwell_improvement", margin, -1e-12));
    }

    // V R <= Vd R.
    {
        let mut margin = f64::INFINITY;
        for a in &analyses {
            margin = margin.min(a.dist_variance - a.kl_variance);
        }
        out.push(SuiteOutcome::margin("kl_variance_le_distribution_variance", margin, -1e-12));
    }

    // Distribution unbiasedness of the extended MLE across the grid.
    {
        let mut worst = 0.0f64;
        for p0 in &members {
            let weights = iid_pmf(p0, &iid)?;
            let ed = fam.extended_project(&kl_mean_with_weights(&mle, &weights)?)?;
            worst = worst.max(kl_divergence(&ed, p0)?);
        }
        out.push(SuiteOutcome::residual("mle_distribution_unbiased", worst, 1e-9));
    }

    Ok(out)
}
