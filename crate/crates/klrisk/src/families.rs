//! The concrete family catalog: binomial, right-truncated Poisson, trinomial,
//! and Hardy-Weinberg, plus the extended-MLE constructors and the classical
//! pathological UMVU estimators they are compared against.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::estimation::DistributionEstimator;
use crate::expfam::ExponentialFamily;
use crate::measure::{level_sets, Distribution, IIDSpace, SampleSpace, Statistic};
use crate::numeric::{ln_factorial, log_sum_exp};

/// Catalog identifier with its size parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Binomial,
    PoissonTruncated,
    Trinomial,
    HardyWeinberg,
}

/// A named family specification, e.g. `binomial:6` or `poisson:60`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub size: u64,
}

impl FamilySpec {
    /// Parse a `kind:size` name (`binomial`, `poisson`, `trinomial`, `hw`).
    pub fn parse(name: &str) -> Result<FamilySpec> {
        let (kind_str, size_str) = name
            .split_once(':')
            .ok_or_else(|| Error::Format(format!("family name {name:?} is not kind:size")))?;
        let size: u64 = size_str
            .parse()
            .map_err(|_| Error::Format(format!("bad family size in {name:?}")))?;
        if size == 0 {
            return Err(Error::Format(format!("family size must be positive: {name:?}")));
        }
        let kind = match kind_str {
            "binomial" => FamilyKind::Binomial,
            "poisson" => FamilyKind::PoissonTruncated,
            "trinomial" => FamilyKind::Trinomial,
            "hw" => FamilyKind::HardyWeinberg,
            other => {
                return Err(Error::Format(format!("unknown family kind {other:?}")));
            }
        };
        Ok(FamilySpec { kind, size })
    }

    pub fn name(&self) -> String {
        let kind = match self.kind {
            FamilyKind::Binomial => "binomial",
            FamilyKind::PoissonTruncated => "poisson",
            FamilyKind::Trinomial => "trinomial",
            FamilyKind::HardyWeinberg => "hw",
        };
        format!("{kind}:{}", self.size)
    }

    pub fn build(&self) -> ExponentialFamily {
        match self.kind {
            FamilyKind::Binomial => binomial_family(self.size),
            FamilyKind::PoissonTruncated => poisson_family(self.size),
            FamilyKind::Trinomial => trinomial_family(self.size),
            FamilyKind::HardyWeinberg => hardy_weinberg_family(self.size),
        }
    }
}

/// The n-trial binomial family: support `{0..n}`, `T(x) = x`, base point the
/// fair binomial. The member at natural `theta` is Binomial(n, sigmoid(theta)).
pub fn binomial_family(trials: u64) -> ExponentialFamily {
    assert!(trials >= 1, "binomial family needs at least one trial");
    let space = SampleSpace::integers(trials as usize);
    let logits: Vec<f64> = (0..=trials)
        .map(|x| ln_factorial(trials) - ln_factorial(x) - ln_factorial(trials - x))
        .collect();
    let base = Distribution::from_logits(space.clone(), logits).expect("binomial base");
    let t = Statistic::scalar_from_fn(space, |i| i as f64).expect("identity statistic");
    ExponentialFamily::new(base, t).expect("binomial family is minimal and full support")
}

/// The Poisson family right-truncated at `x_max`: support `{0..x_max}`,
/// `T(x) = x`, base point the truncated Poisson(1). The member at natural
/// `theta = log(lambda)` is Poisson(lambda) restricted to the support and
/// renormalized; [`poisson_truncation_tail`] bounds the discarded mass.
pub fn poisson_family(x_max: u64) -> ExponentialFamily {
    assert!(x_max >= 1, "truncated Poisson needs x_max >= 1");
    let space = SampleSpace::integers(x_max as usize);
    let logits: Vec<f64> = (0..=x_max).map(|x| -ln_factorial(x)).collect();
    let base = Distribution::from_logits(space.clone(), logits).expect("poisson base");
    let t = Statistic::scalar_from_fn(space, |i| i as f64).expect("identity statistic");
    ExponentialFamily::new(base, t).expect("poisson family is minimal and full support")
}

/// The discarded upper-tail mass `sum_{x > x_max} e^{-lambda} lambda^x / x!`.
pub fn poisson_truncation_tail(lambda: f64, x_max: u64) -> f64 {
    assert!(lambda > 0.0);
    let log_lambda = lambda.ln();
    let mut log_terms = Vec::new();
    let mut best = f64::NEG_INFINITY;
    for x in (x_max + 1)..(x_max + 1000) {
        let lt = -lambda + (x as f64) * log_lambda - ln_factorial(x);
        best = best.max(lt);
        log_terms.push(lt);
        if lt < best - 80.0 {
            break; // remaining terms are negligible at f64 precision
        }
    }
    log_sum_exp(&log_terms).exp()
}

/// Count triples `(y1, y2, y3)` with `y1 + y2 + y3 = total`, in the fixed
/// enumeration order (ascending `y1`, then `y2`).
pub fn trinomial_counts(total: u64) -> Vec<[u64; 3]> {
    let mut out = Vec::new();
    for y1 in 0..=total {
        for y2 in 0..=(total - y1) {
            out.push([y1, y2, total - y1 - y2]);
        }
    }
    out
}

fn trinomial_space(total: u64) -> (Arc<SampleSpace>, Vec<[u64; 3]>) {
    let counts = trinomial_counts(total);
    let labels = counts
        .iter()
        .map(|c| format!("{},{},{}", c[0], c[1], c[2]))
        .collect();
    let space = SampleSpace::new(labels).expect("count labels are distinct");
    (space, counts)
}

fn ln_multinomial_coefficient(total: u64, counts: &[u64; 3]) -> f64 {
    ln_factorial(total) - ln_factorial(counts[0]) - ln_factorial(counts[1]) - ln_factorial(counts[2])
}

/// The trinomial family on count triples summing to `total`: `T(y) = (y1, y2)`
/// with the uniform-cell multinomial as base point. Members are
/// multinomial(total; pi) pmfs with mean map `mu = total * (pi1, pi2)`.
pub fn trinomial_family(total: u64) -> ExponentialFamily {
    assert!(total >= 1, "trinomial family needs at least one trial");
    let (space, counts) = trinomial_space(total);
    let logits: Vec<f64> = counts
        .iter()
        .map(|c| ln_multinomial_coefficient(total, c))
        .collect();
    let base = Distribution::from_logits(space.clone(), logits).expect("trinomial base");
    let mut t_values = Vec::with_capacity(2 * counts.len());
    for c in &counts {
        t_values.push(c[0] as f64);
        t_values.push(c[1] as f64);
    }
    let t = Statistic::new(space, 2, t_values).expect("count statistic");
    ExponentialFamily::new(base, t).expect("trinomial family is minimal and full support")
}

/// The Hardy-Weinberg family on the same count triples: canonical statistic
/// `T = 2*y1 + y2` (the allele count) and base point at allele probability
/// 1/2, i.e. multinomial(total; 1/4, 1/2, 1/4). The member at natural
/// `log(theta/(1-theta))` is multinomial(total; theta^2, 2 theta (1-theta),
/// (1-theta)^2) with mean parameter `2 * total * theta`.
pub fn hardy_weinberg_family(total: u64) -> ExponentialFamily {
    assert!(total >= 1, "Hardy-Weinberg family needs at least one trial");
    let (space, counts) = trinomial_space(total);
    let quarter = 0.25f64.ln();
    let half = 0.5f64.ln();
    let logits: Vec<f64> = counts
        .iter()
        .map(|c| {
            ln_multinomial_coefficient(total, c)
                + (c[0] as f64) * quarter
                + (c[1] as f64) * half
                + (c[2] as f64) * quarter
        })
        .collect();
    let base = Distribution::from_logits(space.clone(), logits).expect("hw base");
    let t = Statistic::scalar_from_fn(space, {
        let counts = counts.clone();
        move |i| (2 * counts[i][0] + counts[i][1]) as f64
    })
    .expect("allele-count statistic");
    ExponentialFamily::new(base, t).expect("hw family is minimal and full support")
}

/// The extended MLE as a distribution: the member with `mu_T = t/n` when that
/// mean is interior, and the face-restricted boundary distribution otherwise.
pub fn extended_mle(fam: &ExponentialFamily, t_value: &[f64], n: u32) -> Result<Distribution> {
    assert!(n >= 1);
    let mu: Vec<f64> = t_value.iter().map(|&t| t / n as f64).collect();
    fam.member_at_mean_extended(&mu)
}

/// The extended MLE as a distribution estimator: every outcome receives the
/// extended MLE at its summed canonical statistic, so the estimator is
/// constant on sufficient-statistic level sets.
pub fn mle_estimator(fam: &ExponentialFamily, n: u32) -> Result<DistributionEstimator> {
    let iid = IIDSpace::new(fam.space().clone(), n)?;
    mle_estimator_on(fam, &iid)
}

/// As [`mle_estimator`] on a pre-built domain (for custom enumeration caps).
pub fn mle_estimator_on(
    fam: &ExponentialFamily,
    iid: &IIDSpace,
) -> Result<DistributionEstimator> {
    if !crate::measure::same_space(iid.base(), fam.space()) {
        return Err(Error::SpaceMismatch);
    }
    let t_n = iid.sum_statistic(fam.statistic())?;
    let sets = level_sets(&t_n);
    let mut assigned: Vec<Option<std::sync::Arc<Distribution>>> = vec![None; iid.len()];
    for set in &sets {
        let value = std::sync::Arc::new(extended_mle(fam, &set.value, iid.n())?);
        for &i in &set.outcomes {
            assigned[i] = Some(value.clone());
        }
    }
    let values = assigned
        .into_iter()
        .map(|v| v.expect("level sets partition the domain"))
        .collect();
    DistributionEstimator::new(iid.clone(), values)
}

/// Lehmann's UMVU estimator of `(P(X=0))^3` for a single Poisson observation:
/// `(-2)^x`.
pub fn lehmann_umvu(x: u32) -> f64 {
    (-2.0f64).powi(x as i32)
}

/// The UMVU estimator of `P(X1 = i)` from the Poisson sample sum:
/// `C(s_n, i) (1/n)^i (1 - 1/n)^(s_n - i)` for `i <= s_n`, else 0. This is the
/// conditional expectation of the indicator of `{X1 = i}` given the sum.
pub fn poisson_indicator_umvue(i: u64, s_n: u64, n: u32) -> f64 {
    assert!(n >= 2, "the smoothed indicator needs n >= 2");
    if i > s_n {
        return 0.0;
    }
    let ln_c = ln_factorial(s_n) - ln_factorial(i) - ln_factorial(s_n - i);
    let p = 1.0 / n as f64;
    (ln_c + (i as f64) * p.ln() + ((s_n - i) as f64) * (1.0 - p).ln()).exp()
}
