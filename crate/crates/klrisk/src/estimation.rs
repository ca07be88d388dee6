//! Distribution-valued estimators and their risk decomposition.
//!
//! An estimator maps every outcome of an enumerated i.i.d. sample space to a
//! distribution on the base space. Its KL mean is the mixture of its values
//! under the sampling weights; the KL variance is the expected divergence to
//! that mean. Restricting the argmin to an exponential family gives the
//! distribution mean (the KL projection of the KL mean) and the distribution
//! variance, which together characterize the expected KL risk against any
//! family member.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::expfam::{inf_norm_diff, ExponentialFamily, HullPosition};
use crate::measure::{
    conditional_sample_law, iid_pmf, kl_divergence, level_sets, log_weighted_mixture,
    mean_of_statistic, mixture, same_space, Distribution, IIDSpace, SampleSpace, Statistic,
};
use crate::numeric::{log_sum_exp, pairwise_sum};
use crate::random::keyed_rng;

/// Pass threshold for the distribution-unbiasedness check.
pub const UNBIASED_TOL: f64 = 1e-8;

/// A total map from enumerated sample outcomes to distributions on the base
/// space.
#[derive(Debug, Clone)]
pub struct DistributionEstimator {
    domain: IIDSpace,
    values: Vec<Arc<Distribution>>,
}

impl DistributionEstimator {
    pub fn new(domain: IIDSpace, values: Vec<Arc<Distribution>>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::EstimatorLength {
                expected: domain.len(),
                got: values.len(),
            });
        }
        let target = values[0].space().clone();
        for v in &values[1..] {
            if !same_space(&target, v.space()) {
                return Err(Error::SpaceMismatch);
            }
        }
        Ok(DistributionEstimator { domain, values })
    }

    pub fn from_fn(
        domain: IIDSpace,
        mut f: impl FnMut(usize) -> Arc<Distribution>,
    ) -> Result<Self> {
        let values = (0..domain.len()).map(&mut f).collect();
        Self::new(domain, values)
    }

    pub fn constant(domain: IIDSpace, value: Distribution) -> Result<Self> {
        let shared = Arc::new(value);
        let len = domain.len();
        Self::new(domain, vec![shared; len])
    }

    pub fn domain(&self) -> &IIDSpace {
        &self.domain
    }

    pub fn n(&self) -> u32 {
        self.domain.n()
    }

    pub fn value(&self, outcome: usize) -> &Arc<Distribution> {
        &self.values[outcome]
    }

    pub fn values(&self) -> &[Arc<Distribution>] {
        &self.values
    }

    pub fn target_space(&self) -> &Arc<SampleSpace> {
        self.values[0].space()
    }

    /// Distinct values (by shared allocation) with their outcome indices, in
    /// first-occurrence order. Estimators built per level set collapse to one
    /// entry per level, which keeps risk sums exact and cheap.
    pub fn groups(&self) -> Vec<(Arc<Distribution>, Vec<usize>)> {
        let mut order: Vec<(Arc<Distribution>, Vec<usize>)> = Vec::new();
        let mut index: HashMap<*const Distribution, usize> = HashMap::new();
        for (i, v) in self.values.iter().enumerate() {
            match index.entry(Arc::as_ptr(v)) {
                std::collections::hash_map::Entry::Occupied(slot) => {
                    order[*slot.get()].1.push(i);
                }
                std::collections::hash_map::Entry::Vacant(slot) => {
                    slot.insert(order.len());
                    order.push((v.clone(), vec![i]));
                }
            }
        }
        order
    }

    /// Serialize as `{"base_space": [...], "n": ..., "values": {index: dist}}`.
    pub fn to_json_string(&self) -> String {
        let labels = self.domain.base().labels();
        let base = serde_json::to_string(&labels).expect("labels serialize");
        let mut entries = Vec::with_capacity(self.values.len());
        for (i, v) in self.values.iter().enumerate() {
            entries.push(format!("\"{}\":{}", i, v.to_json_string()));
        }
        format!(
            "{{\"base_space\":{},\"n\":{},\"values\":{{{}}}}}",
            base,
            self.domain.n(),
            entries.join(",")
        )
    }

    /// Parse the outcome-indexed JSON form. `cap` bounds the enumerated
    /// product space.
    pub fn from_json_str(text: &str, cap: usize) -> Result<Self> {
        #[derive(Deserialize)]
        struct EstimatorJson {
            base_space: Vec<String>,
            n: u32,
            values: HashMap<String, serde_json::Value>,
        }
        let parsed: EstimatorJson = serde_json::from_str(text)?;
        let base = SampleSpace::new(parsed.base_space)?;
        let domain = IIDSpace::with_cap(base, parsed.n, cap)?;
        let mut values: Vec<Option<Arc<Distribution>>> = vec![None; domain.len()];
        for (key, value) in &parsed.values {
            let idx: usize = key
                .parse()
                .map_err(|_| Error::Format(format!("bad outcome index {key:?}")))?;
            if idx >= domain.len() {
                return Err(Error::Format(format!(
                    "outcome index {idx} out of range (domain has {})",
                    domain.len()
                )));
            }
            values[idx] = Some(Arc::new(Distribution::from_json_str(&value.to_string())?));
        }
        let values: Result<Vec<Arc<Distribution>>> = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or(Error::Format(format!("outcome {i} has no assigned value"))))
            .collect();
        Self::new(domain, values?)
    }
}

/// The KL mean `E R`: the sampling-weighted mixture of the estimator's
/// values. This is the argmin over all distributions of the expected KL
/// divergence from the estimator.
pub fn kl_mean(est: &DistributionEstimator, r0: &Distribution) -> Result<Distribution> {
    let weights = sampling_weights(est, r0)?;
    kl_mean_with_weights(est, &weights)
}

/// As [`kl_mean`] with precomputed outcome weights (`iid_pmf` of the
/// generator over the estimator's domain).
pub fn kl_mean_with_weights(
    est: &DistributionEstimator,
    weights: &Distribution,
) -> Result<Distribution> {
    if !same_space(weights.space(), est.domain().space()) {
        return Err(Error::SpaceMismatch);
    }
    let groups = est.groups();
    let mut parts: Vec<(f64, &Distribution)> = Vec::with_capacity(groups.len());
    for (value, outcomes) in &groups {
        let logs: Vec<f64> = outcomes.iter().map(|&i| weights.log_mass_at(i)).collect();
        let lw = log_sum_exp(&logs);
        if lw > f64::NEG_INFINITY {
            parts.push((lw, value.as_ref()));
        }
    }
    log_weighted_mixture(est.target_space().clone(), &parts)
}

/// The KL variance `V R = E[D(R, E R)]`, the minimized expected divergence.
pub fn kl_variance(est: &DistributionEstimator, r0: &Distribution) -> Result<f64> {
    let weights = sampling_weights(est, r0)?;
    let mean = kl_mean_with_weights(est, &weights)?;
    expected_divergence_with_weights(est, &weights, &mean)
}

/// Expected divergence `E[D(R, q)]` under the generator `r0`.
pub fn expected_divergence(
    est: &DistributionEstimator,
    r0: &Distribution,
    q: &Distribution,
) -> Result<f64> {
    let weights = sampling_weights(est, r0)?;
    expected_divergence_with_weights(est, &weights, q)
}

/// As [`expected_divergence`] with precomputed outcome weights. Returns
/// `+inf` when any positive-weight value fails absolute continuity against
/// `q`.
pub fn expected_divergence_with_weights(
    est: &DistributionEstimator,
    weights: &Distribution,
    q: &Distribution,
) -> Result<f64> {
    if !same_space(weights.space(), est.domain().space()) {
        return Err(Error::SpaceMismatch);
    }
    let mut terms = Vec::new();
    for (value, outcomes) in est.groups() {
        let w = pairwise_sum(&outcomes.iter().map(|&i| weights.mass(i)).collect::<Vec<_>>());
        if w == 0.0 {
            continue;
        }
        let d = kl_divergence(&value, q)?;
        if d == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        terms.push(w * d);
    }
    Ok(pairwise_sum(&terms))
}

/// Outcome weights of the generator: the product pmf over the domain.
pub fn sampling_weights(est: &DistributionEstimator, r0: &Distribution) -> Result<Distribution> {
    if !r0.is_full_support() {
        if let Some(i) = (0..r0.len()).find(|&i| r0.mass(i) == 0.0) {
            return Err(Error::NotFullSupport { index: i });
        }
    }
    iid_pmf(r0, est.domain())
}

/// The distribution mean `Ed R`: the KL projection of the KL mean onto the
/// family (extended projection when the mean statistic sits on the boundary).
pub fn distribution_mean(
    est: &DistributionEstimator,
    fam: &ExponentialFamily,
    r0: &Distribution,
) -> Result<Distribution> {
    let mean = kl_mean(est, r0)?;
    fam.extended_project(&mean)
}

/// The distribution variance `Vd R = inf_{P in family} E[D(R, P)]`, realized
/// at the distribution mean.
pub fn distribution_variance(
    est: &DistributionEstimator,
    fam: &ExponentialFamily,
    r0: &Distribution,
) -> Result<f64> {
    let weights = sampling_weights(est, r0)?;
    let mean = kl_mean_with_weights(est, &weights)?;
    let dist_mean = fam.extended_project(&mean)?;
    expected_divergence_with_weights(est, &weights, &dist_mean)
}

/// The correction `Delta = D(E R, P) - D(E R, Ed R) - D(Ed R, P)`: the defect
/// of the dual Pythagorean triangle. Vanishes whenever `ed_r` is the KL
/// projection of `e_r` onto an exponential family containing `p`.
pub fn delta_correction(
    e_r: &Distribution,
    ed_r: &Distribution,
    p: &Distribution,
) -> Result<f64> {
    let d_ep = kl_divergence(e_r, p)?;
    let d_ed = kl_divergence(e_r, ed_r)?;
    let d_dp = kl_divergence(ed_r, p)?;
    if !d_ep.is_finite() || !d_ed.is_finite() || !d_dp.is_finite() {
        return Err(Error::InfiniteDivergence);
    }
    Ok(d_ep - d_ed - d_dp)
}

/// All risk decomposition terms for one estimator and generator.
#[derive(Debug, Clone)]
pub struct RiskDecomposition {
    pub kl_mean: Distribution,
    pub kl_variance: f64,
    pub dist_mean: Distribution,
    pub dist_variance: f64,
}

/// Shared computation behind [`RiskReport`] and the report commands.
pub fn risk_decomposition(
    est: &DistributionEstimator,
    fam: &ExponentialFamily,
    r0: &Distribution,
) -> Result<RiskDecomposition> {
    let weights = sampling_weights(est, r0)?;
    let kl_mean = kl_mean_with_weights(est, &weights)?;
    let kl_variance = expected_divergence_with_weights(est, &weights, &kl_mean)?;
    let dist_mean = fam.extended_project(&kl_mean)?;
    let dist_variance = expected_divergence_with_weights(est, &weights, &dist_mean)?;
    debug_assert!(kl_variance >= 0.0);
    debug_assert!(
        !dist_variance.is_finite() || dist_variance >= kl_variance - 1e-12,
        "distribution variance below KL variance"
    );
    Ok(RiskDecomposition {
        kl_mean,
        kl_variance,
        dist_mean,
        dist_variance,
    })
}

/// Risk decomposition terms evaluated against one queried family member.
#[derive(Debug, Clone)]
pub struct RiskReport {
    pub kl_mean: Distribution,
    pub kl_variance: f64,
    pub dist_mean: Distribution,
    pub dist_variance: f64,
    /// `Delta(E R, Ed R, p)` at the queried member.
    pub delta: f64,
    /// `|E[D(R, p)] - D(Ed R, p) - Vd R|` at the queried member.
    pub pythagorean_residual: f64,
}

impl RiskReport {
    pub fn compute(
        est: &DistributionEstimator,
        fam: &ExponentialFamily,
        r0: &Distribution,
        p: &Distribution,
    ) -> Result<RiskReport> {
        let weights = sampling_weights(est, r0)?;
        let kl_mean = kl_mean_with_weights(est, &weights)?;
        let kl_variance = expected_divergence_with_weights(est, &weights, &kl_mean)?;
        let dist_mean = fam.extended_project(&kl_mean)?;
        let dist_variance = expected_divergence_with_weights(est, &weights, &dist_mean)?;
        let delta = delta_correction(&kl_mean, &dist_mean, p)?;
        let risk = expected_divergence_with_weights(est, &weights, p)?;
        let pythagorean_residual =
            (risk - kl_divergence(&dist_mean, p)? - dist_variance).abs();
        Ok(RiskReport {
            kl_mean,
            kl_variance,
            dist_mean,
            dist_variance,
            delta,
            pythagorean_residual,
        })
    }
}

/// Result of Rao-Blackwellization: the conditioned-and-projected estimator
/// plus the level-set values (if any) that carried zero reference probability
/// and were filled with the extended MLE at their canonical statistic.
#[derive(Debug)]
pub struct RaoBlackwellized {
    pub estimator: DistributionEstimator,
    pub fallback_levels: Vec<Vec<f64>>,
}

/// Condition on the level sets of `s` and project back onto the family:
/// `outcome -> extended_projection(E[R | s = s(outcome)])`.
///
/// When `s` is sufficient for the family the result does not depend on the
/// reference generator. Distribution means are preserved and distribution
/// variances never increase.
pub fn rao_blackwellize(
    est: &DistributionEstimator,
    s: &Statistic,
    fam: &ExponentialFamily,
    reference: &Distribution,
) -> Result<RaoBlackwellized> {
    if !same_space(s.space(), est.domain().space()) {
        return Err(Error::SpaceMismatch);
    }
    if !same_space(est.target_space(), fam.space()) {
        return Err(Error::SpaceMismatch);
    }
    let ref_n = iid_pmf(reference, est.domain())?;
    let t_n = est.domain().sum_statistic(fam.statistic())?;
    let n = est.n() as f64;
    let sets = level_sets(s);
    let mut assigned: Vec<Option<Arc<Distribution>>> = vec![None; est.domain().len()];
    let mut fallback_levels = Vec::new();
    for set in &sets {
        let level_log_mass: Vec<f64> = set
            .outcomes
            .iter()
            .map(|&i| ref_n.log_mass_at(i))
            .collect();
        let total = log_sum_exp(&level_log_mass);
        let conditional = if total == f64::NEG_INFINITY {
            // Measure-zero freedom: fill with the extended MLE at the level's
            // canonical statistic and flag it.
            fallback_levels.push(set.value.clone());
            let t_first = t_n.value(set.outcomes[0]);
            let mu: Vec<f64> = t_first.iter().map(|&t| t / n).collect();
            fam.member_at_mean_extended(&mu)?
        } else {
            let all_same = set
                .outcomes
                .iter()
                .all(|&i| Arc::ptr_eq(est.value(i), est.value(set.outcomes[0])));
            let mean = if all_same {
                est.value(set.outcomes[0]).as_ref().clone()
            } else {
                let parts: Vec<(f64, &Distribution)> = set
                    .outcomes
                    .iter()
                    .zip(&level_log_mass)
                    .filter(|(_, &lw)| lw > f64::NEG_INFINITY)
                    .map(|(&i, &lw)| (lw - total, est.value(i).as_ref()))
                    .collect();
                log_weighted_mixture(est.target_space().clone(), &parts)?
            };
            fam.extended_project(&mean)?
        };
        let shared = Arc::new(conditional);
        for &i in &set.outcomes {
            assigned[i] = Some(shared.clone());
        }
    }
    let values: Vec<Arc<Distribution>> = assigned
        .into_iter()
        .map(|v| v.expect("level sets partition the domain"))
        .collect();
    Ok(RaoBlackwellized {
        estimator: DistributionEstimator::new(est.domain().clone(), values)?,
        fallback_levels,
    })
}

/// The conditional KL mean `E[R | s = value]` under the generator `r0`:
/// the conditional-law-weighted mixture of the estimator's values.
pub fn conditional_kl_mean(
    est: &DistributionEstimator,
    s: &Statistic,
    value: &[f64],
    r0: &Distribution,
) -> Result<Distribution> {
    if !same_space(s.space(), est.domain().space()) {
        return Err(Error::SpaceMismatch);
    }
    let r0n = iid_pmf(r0, est.domain())?;
    let law = conditional_sample_law(&r0n, s, value)?;
    let parts: Vec<(f64, &Distribution)> = (0..law.len())
        .filter(|&i| law.log_mass_at(i) > f64::NEG_INFINITY)
        .map(|i| (law.log_mass_at(i), est.value(i).as_ref()))
        .collect();
    log_weighted_mixture(est.target_space().clone(), &parts)
}

/// One generator's row in the unbiasedness report.
#[derive(Debug, Clone)]
pub struct UnbiasednessEntry {
    pub theta: Vec<f64>,
    /// `D(Ed R, P_theta)`.
    pub projection_divergence: f64,
    /// `max_t |mu(E[R | T = t]) - t/n|`, the per-observation-scale criterion.
    pub max_level_residual: f64,
    /// `max_t |mu(E[R | T = t]) - t|`, reported alongside for reference.
    pub max_level_residual_unnormalized: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct UnbiasednessReport {
    pub tolerance: f64,
    pub entries: Vec<UnbiasednessEntry>,
    pub pass: bool,
}

/// Check distribution unbiasedness over a grid of interior generators: the
/// estimator passes when `Ed R` recovers each generator and every level set
/// of the canonical statistic satisfies `mu(E[R | T = t]) = t/n`.
pub fn check_distribution_unbiased(
    est: &DistributionEstimator,
    fam: &ExponentialFamily,
    theta_grid: &[Vec<f64>],
) -> Result<UnbiasednessReport> {
    let t_n = est.domain().sum_statistic(fam.statistic())?;
    let sets = level_sets(&t_n);
    let n = est.n() as f64;
    let mut entries = Vec::with_capacity(theta_grid.len());
    for theta in theta_grid {
        let p0 = fam.member_from_natural(theta);
        let weights = sampling_weights(est, &p0)?;
        let kl_mean = kl_mean_with_weights(est, &weights)?;
        let dist_mean = fam.extended_project(&kl_mean)?;
        let projection_divergence = kl_divergence(&dist_mean, &p0)?;
        let mut max_level = 0.0f64;
        let mut max_level_raw = 0.0f64;
        for set in &sets {
            let all_same = set
                .outcomes
                .iter()
                .all(|&i| Arc::ptr_eq(est.value(i), est.value(set.outcomes[0])));
            let cond_mean = if all_same {
                est.value(set.outcomes[0]).as_ref().clone()
            } else {
                let logs: Vec<f64> = set
                    .outcomes
                    .iter()
                    .map(|&i| weights.log_mass_at(i))
                    .collect();
                let total = log_sum_exp(&logs);
                let parts: Vec<(f64, &Distribution)> = set
                    .outcomes
                    .iter()
                    .zip(&logs)
                    .filter(|(_, &lw)| lw > f64::NEG_INFINITY)
                    .map(|(&i, &lw)| (lw - total, est.value(i).as_ref()))
                    .collect();
                log_weighted_mixture(est.target_space().clone(), &parts)?
            };
            let mu = mean_of_statistic(&cond_mean, fam.statistic())?;
            let per_obs: Vec<f64> = set.value.iter().map(|&t| t / n).collect();
            max_level = max_level.max(inf_norm_diff(&mu, &per_obs));
            max_level_raw = max_level_raw.max(inf_norm_diff(&mu, &set.value));
        }
        let pass = projection_divergence <= UNBIASED_TOL && max_level <= UNBIASED_TOL;
        entries.push(UnbiasednessEntry {
            theta: theta.clone(),
            projection_divergence,
            max_level_residual: max_level,
            max_level_residual_unnormalized: max_level_raw,
            pass,
        });
    }
    let pass = entries.iter().all(|e| e.pass);
    Ok(UnbiasednessReport {
        tolerance: UNBIASED_TOL,
        entries,
        pass,
    })
}

/// Build a distribution-unbiased competitor: on each level set `T = t` the
/// value is `(1 - eps) * MLE(t) + eps * Q_t`, where `Q_t` is a seeded random
/// full-support pmf exponentially tilted so that `mu_T(Q_t) = t/n` exactly.
/// Mixture linearity then gives `mu_T(value) = t/n`, the unbiasedness
/// criterion. Boundary levels fall back to the extended MLE value.
pub fn make_mean_matched_competitor(
    fam: &ExponentialFamily,
    n: u32,
    epsilon: f64,
    seed: u64,
) -> Result<DistributionEstimator> {
    let iid = IIDSpace::new(fam.space().clone(), n)?;
    make_mean_matched_competitor_on(fam, &iid, epsilon, seed)
}

/// As [`make_mean_matched_competitor`] on a pre-built domain.
pub fn make_mean_matched_competitor_on(
    fam: &ExponentialFamily,
    iid: &IIDSpace,
    epsilon: f64,
    seed: u64,
) -> Result<DistributionEstimator> {
    assert!(
        (0.0..1.0).contains(&epsilon),
        "epsilon must lie in [0, 1)"
    );
    if !same_space(iid.base(), fam.space()) {
        return Err(Error::SpaceMismatch);
    }
    let t_n = iid.sum_statistic(fam.statistic())?;
    let sets = level_sets(&t_n);
    let n = iid.n() as f64;
    let mut assigned: Vec<Option<Arc<Distribution>>> = vec![None; iid.len()];
    for (set_idx, set) in sets.iter().enumerate() {
        let mu: Vec<f64> = set.value.iter().map(|&t| t / n).collect();
        let value = match fam.hull_position(&mu)? {
            HullPosition::Interior => {
                let mle = fam.member_from_natural(&fam.natural_from_mean(&mu)?.theta);
                if epsilon == 0.0 {
                    mle
                } else {
                    match tilted_random_member(fam, &mu, seed, set_idx as u64) {
                        Ok(tilted) => mixture(&[1.0 - epsilon, epsilon], &[mle, tilted])?,
                        // tilt solve failure at an extreme level: keep the MLE
                        Err(Error::NoConvergence { .. }) => mle,
                        Err(e) => return Err(e),
                    }
                }
            }
            _ => fam.member_at_mean_extended(&mu)?,
        };
        let shared = Arc::new(value);
        for &i in &set.outcomes {
            assigned[i] = Some(shared.clone());
        }
    }
    let values: Vec<Arc<Distribution>> = assigned
        .into_iter()
        .map(|v| v.expect("level sets partition the domain"))
        .collect();
    DistributionEstimator::new(iid.clone(), values)
}

/// A seeded random full-support pmf re-weighted by an exponential tilt so its
/// canonical-statistic mean is exactly `mu`.
fn tilted_random_member(
    fam: &ExponentialFamily,
    mu: &[f64],
    seed: u64,
    stream: u64,
) -> Result<Distribution> {
    use rand::Rng;
    let mut rng = keyed_rng(seed, stream);
    let logits: Vec<f64> = (0..fam.space().len())
        .map(|_| rng.random_range(-1.5..1.5))
        .collect();
    let q = Distribution::from_logits(fam.space().clone(), logits)?;
    let tilt_family = ExponentialFamily::new(q, fam.statistic().clone())?;
    let point = tilt_family.natural_from_mean(mu)?;
    Ok(tilt_family.member_from_natural(&point.theta))
}

/// Result of the mixture-family closure check.
#[derive(Debug, Clone)]
pub struct ClosureCheck {
    /// `D(E R, mixture(recovered weights, parts))`.
    pub residual: f64,
    pub weights: Vec<f64>,
    /// Weight recovery was ill-posed (parts effectively coincide).
    pub ambiguous: bool,
}

/// For an estimator valued in the mixture family spanned by `parts`, the KL
/// mean stays in the family: recover mixture weights from `E R` by least
/// squares and measure the divergence to the recovered member.
pub fn mixture_family_closure_check(
    parts: &[Distribution],
    est: &DistributionEstimator,
    r0: &Distribution,
) -> Result<ClosureCheck> {
    assert!(!parts.is_empty());
    let mean = kl_mean(est, r0)?;
    let k = parts.len();
    if k == 1 {
        let residual = kl_divergence(&mean, &parts[0])?;
        return Ok(ClosureCheck {
            residual,
            weights: vec![1.0],
            ambiguous: false,
        });
    }
    // Affine least squares over the simplex directions: columns p_j - p_k.
    let m = k - 1;
    let dim = mean.len();
    let col = |j: usize, x: usize| parts[j].mass(x) - parts[k - 1].mass(x);
    let mut gram = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    let mut scale = 0.0f64;
    for j in 0..m {
        for l in 0..m {
            let mut acc = 0.0;
            for x in 0..dim {
                acc += col(j, x) * col(l, x);
            }
            gram[j * m + l] = acc;
            scale = scale.max(acc.abs());
        }
        let mut acc = 0.0;
        for x in 0..dim {
            acc += col(j, x) * (mean.mass(x) - parts[k - 1].mass(x));
        }
        rhs[j] = acc;
    }
    let det_like = (0..m).map(|j| gram[j * m + j]).fold(f64::INFINITY, f64::min);
    let ambiguous = det_like <= 1e-10 * (1.0 + scale);
    if ambiguous {
        // ridge stabilization; the residual is still informative
        for j in 0..m {
            gram[j * m + j] += 1e-9 * (1.0 + scale);
        }
    }
    let solved = crate::numeric::solve_linear(&gram, &rhs, m)
        .ok_or(Error::NoConvergence { residual: f64::NAN })?;
    let mut weights = solved;
    weights.push(1.0 - pairwise_sum(&weights));
    // snap rounding noise back onto the simplex
    for w in weights.iter_mut() {
        if *w < 0.0 {
            *w = 0.0;
        }
    }
    let total = pairwise_sum(&weights);
    for w in weights.iter_mut() {
        *w /= total;
    }
    let recovered = mixture(&weights, parts)?;
    let residual = kl_divergence(&mean, &recovered)?;
    Ok(ClosureCheck {
        residual,
        weights,
        ambiguous,
    })
}
