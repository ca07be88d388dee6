//! Exact Kullback-Leibler risk decompositions for distribution-valued
//! estimators on finite discrete sample spaces.
//!
//! An estimator here is a map from sample outcomes to probability
//! distributions. Its KL mean is the mixture of its values under the sampling
//! weights, its KL variance the minimized expected divergence, and on an
//! exponential family the projection of the KL mean (the distribution mean)
//! together with the distribution variance characterizes the expected KL risk
//! against every family member. Everything is computed by exact enumeration,
//! so Pythagorean identities, Rao-Blackwell improvements, and the optimality
//! of the extended maximum likelihood estimator can be verified to tight
//! numerical tolerances rather than sampled.
//!
//! Modules:
//! - [`measure`]: sample spaces, distributions, statistics, divergences,
//!   conditional laws.
//! - [`expfam`]: cumulant machinery, natural/mean duality, KL projection and
//!   its boundary extension.
//! - [`estimation`]: estimators, risk decompositions, Rao-Blackwellization,
//!   unbiasedness checks, mean-matched competitors.
//! - [`families`]: the binomial / truncated-Poisson / trinomial /
//!   Hardy-Weinberg catalog and extended-MLE constructors.

pub mod error;
pub mod estimation;
pub mod expfam;
pub mod families;
pub mod measure;
pub mod numeric;
pub mod random;
pub mod verify;

pub use error::{Error, Result};
pub use estimation::{
    check_distribution_unbiased, conditional_kl_mean, delta_correction, distribution_mean,
    distribution_variance, expected_divergence, expected_divergence_with_weights, kl_mean,
    kl_mean_with_weights, kl_variance, make_mean_matched_competitor,
    make_mean_matched_competitor_on, mixture_family_closure_check, rao_blackwellize,
    risk_decomposition, sampling_weights, ClosureCheck, DistributionEstimator, RaoBlackwellized,
    RiskDecomposition, RiskReport, UnbiasednessEntry, UnbiasednessReport, UNBIASED_TOL,
};
pub use expfam::{
    CumulantEval, ExponentialFamily, Face, HullPosition, ParamPoint, BOUNDARY_TOL,
};
pub use families::{
    binomial_family, extended_mle, hardy_weinberg_family, lehmann_umvu, mle_estimator,
    mle_estimator_on, poisson_family, poisson_indicator_umvue, poisson_truncation_tail,
    trinomial_counts, trinomial_family, FamilyKind, FamilySpec,
};
pub use measure::{
    conditional_sample_law, iid_pmf, kl_divergence, level_sets, mean_of_statistic, mixture,
    Distribution, IIDSpace, LevelSet, SampleSpace, Statistic, DEFAULT_ENUM_CAP,
    NORMALIZATION_TOL,
};
pub use verify::{default_natural_grid, run_identity_suites, SuiteOutcome, VerifyConfig};
