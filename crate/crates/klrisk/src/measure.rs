//! Finite sample spaces with counting measure, exact probability vectors, and
//! the divergence/conditioning operations everything else is built from.
//!
//! Probabilities are stored in log domain; `f64::NEG_INFINITY` is the explicit
//! zero-mass marker. The conventions `0 * log(0/q) = 0` and
//! `p * log(p/0) = +inf` are applied term by term, so an infinite divergence
//! is an explicit `f64::INFINITY` value, never an overflow.

use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::numeric::{g17, log_sum_exp, pairwise_sum};

/// Sum-to-one slack accepted when validating a probability vector.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Default ceiling on the number of enumerable outcomes of a product space.
pub const DEFAULT_ENUM_CAP: usize = 10_000_000;

/// Absolute tolerance used to match statistic values when slicing level sets.
pub const LEVEL_VALUE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
enum SpaceKind {
    /// Points carry explicit labels.
    Explicit(Vec<String>),
    /// n-fold product of a base space, enumerated lexicographically.
    Product { base: Arc<SampleSpace>, n: u32 },
}

/// An ordered finite set of outcomes under counting measure.
///
/// The ordering is fixed at construction and serialization-stable: index `i`
/// always refers to label `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSpace {
    kind: SpaceKind,
    len: usize,
}

impl SampleSpace {
    /// Space with explicit, distinct labels.
    pub fn new(labels: Vec<String>) -> Result<Arc<Self>> {
        if labels.is_empty() {
            return Err(Error::EmptySpace);
        }
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l.clone()) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        let len = labels.len();
        Ok(Arc::new(SampleSpace {
            kind: SpaceKind::Explicit(labels),
            len,
        }))
    }

    /// Space labeled `0, 1, ..., max` in order.
    pub fn integers(max: usize) -> Arc<Self> {
        let labels = (0..=max).map(|i| i.to_string()).collect();
        Self::new(labels).expect("integer labels are distinct and nonempty")
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false // nonempty by construction
    }

    /// Label of point `i`. Product-space labels join base labels with `|`.
    pub fn label(&self, i: usize) -> String {
        assert!(i < self.len, "point index {i} out of range");
        match &self.kind {
            SpaceKind::Explicit(labels) => labels[i].clone(),
            SpaceKind::Product { base, n } => {
                let digits = decode_product_index(i, base.len(), *n);
                let parts: Vec<String> = digits.iter().map(|&d| base.label(d)).collect();
                parts.join("|")
            }
        }
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.len).map(|i| self.label(i)).collect()
    }

    /// Index of the given label, if present.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        match &self.kind {
            SpaceKind::Explicit(labels) => labels.iter().position(|l| l == label),
            SpaceKind::Product { .. } => (0..self.len).find(|&i| self.label(i) == label),
        }
    }
}

/// Two spaces agree when they are the same allocation or structurally equal.
pub fn same_space(a: &Arc<SampleSpace>, b: &Arc<SampleSpace>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

fn ensure_same_space(a: &Arc<SampleSpace>, b: &Arc<SampleSpace>) -> Result<()> {
    if same_space(a, b) {
        Ok(())
    } else {
        Err(Error::SpaceMismatch)
    }
}

fn decode_product_index(index: usize, base_len: usize, n: u32) -> Vec<usize> {
    let mut digits = vec![0usize; n as usize];
    let mut rest = index;
    for j in (0..n as usize).rev() {
        digits[j] = rest % base_len;
        rest /= base_len;
    }
    debug_assert_eq!(rest, 0);
    digits
}

/// An exact probability vector over a [`SampleSpace`].
#[derive(Debug, Clone)]
pub struct Distribution {
    space: Arc<SampleSpace>,
    log_mass: Vec<f64>,
    mass: Vec<f64>,
}

impl Distribution {
    pub(crate) fn new_unchecked(space: Arc<SampleSpace>, log_mass: Vec<f64>) -> Self {
        let mass = log_mass.iter().map(|&l| l.exp()).collect();
        Distribution {
            space,
            log_mass,
            mass,
        }
    }

    /// Build from per-point log masses (`-inf` marks zero mass) and validate
    /// that the masses sum to one within [`NORMALIZATION_TOL`].
    pub fn from_log_masses(space: Arc<SampleSpace>, log_mass: Vec<f64>) -> Result<Self> {
        if log_mass.len() != space.len() {
            return Err(Error::StatisticLength {
                expected: space.len(),
                got: log_mass.len(),
            });
        }
        for (i, &l) in log_mass.iter().enumerate() {
            if l.is_nan() || l == f64::INFINITY {
                return Err(Error::InvalidLogMass { index: i, value: l });
            }
        }
        let d = Distribution::new_unchecked(space, log_mass);
        let sum = pairwise_sum(&d.mass);
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized { sum });
        }
        Ok(d)
    }

    /// Build from unnormalized log weights, normalizing exactly.
    pub fn from_logits(space: Arc<SampleSpace>, logits: Vec<f64>) -> Result<Self> {
        if logits.len() != space.len() {
            return Err(Error::StatisticLength {
                expected: space.len(),
                got: logits.len(),
            });
        }
        for (i, &l) in logits.iter().enumerate() {
            if l.is_nan() || l == f64::INFINITY {
                return Err(Error::InvalidLogMass { index: i, value: l });
            }
        }
        let total = log_sum_exp(&logits);
        if total == f64::NEG_INFINITY {
            return Err(Error::NotNormalized { sum: 0.0 });
        }
        let log_mass = logits.iter().map(|&l| l - total).collect();
        Ok(Distribution::new_unchecked(space, log_mass))
    }

    /// Build from linear-domain masses.
    pub fn from_masses(space: Arc<SampleSpace>, masses: Vec<f64>) -> Result<Self> {
        for (i, &m) in masses.iter().enumerate() {
            if !m.is_finite() || m < 0.0 {
                return Err(Error::InvalidLogMass {
                    index: i,
                    value: m.ln(),
                });
            }
        }
        let log_mass = masses.iter().map(|&m| m.ln()).collect();
        Self::from_log_masses(space, log_mass)
    }

    /// The degenerate distribution putting all mass on one point.
    pub fn point_mass(space: Arc<SampleSpace>, index: usize) -> Self {
        assert!(index < space.len(), "point index out of range");
        let mut log_mass = vec![f64::NEG_INFINITY; space.len()];
        log_mass[index] = 0.0;
        Distribution::new_unchecked(space, log_mass)
    }

    pub fn uniform(space: Arc<SampleSpace>) -> Self {
        let l = -(space.len() as f64).ln();
        let log_mass = vec![l; space.len()];
        Distribution::new_unchecked(space, log_mass)
    }

    pub fn space(&self) -> &Arc<SampleSpace> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.log_mass.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.mass[i]
    }

    pub fn log_mass_at(&self, i: usize) -> f64 {
        self.log_mass[i]
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn log_masses(&self) -> &[f64] {
        &self.log_mass
    }

    pub fn is_full_support(&self) -> bool {
        self.log_mass.iter().all(|&l| l > f64::NEG_INFINITY)
    }

    /// Largest per-point mass difference, or an error on mismatched spaces.
    pub fn max_mass_diff(&self, other: &Distribution) -> Result<f64> {
        ensure_same_space(&self.space, &other.space)?;
        let mut worst = 0.0f64;
        for i in 0..self.len() {
            worst = worst.max((self.mass[i] - other.mass[i]).abs());
        }
        Ok(worst)
    }

    pub fn approx_eq(&self, other: &Distribution, tol: f64) -> bool {
        matches!(self.max_mass_diff(other), Ok(d) if d <= tol)
    }

    /// Serialize as `{"space": [...], "logp": [...]}` with `null` marking zero
    /// mass and floats printed with 17 significant digits.
    pub fn to_json_string(&self) -> String {
        let labels = self.space.labels();
        let space_json = serde_json::to_string(&labels).expect("labels serialize");
        let logp: Vec<String> = self
            .log_mass
            .iter()
            .map(|&l| {
                if l == f64::NEG_INFINITY {
                    "null".to_string()
                } else {
                    g17(l)
                }
            })
            .collect();
        format!("{{\"space\":{},\"logp\":[{}]}}", space_json, logp.join(","))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct DistributionJson {
            space: Vec<String>,
            logp: Vec<Option<f64>>,
        }
        let parsed: DistributionJson = serde_json::from_str(text)?;
        let space = SampleSpace::new(parsed.space)?;
        let log_mass = parsed
            .logp
            .iter()
            .map(|v| v.unwrap_or(f64::NEG_INFINITY))
            .collect();
        Self::from_log_masses(space, log_mass)
    }
}

/// A per-point vector statistic `T: X -> R^d`, stored flat with stride `d`.
#[derive(Debug, Clone)]
pub struct Statistic {
    space: Arc<SampleSpace>,
    dim: usize,
    values: Vec<f64>,
}

impl Statistic {
    pub fn new(space: Arc<SampleSpace>, dim: usize, values: Vec<f64>) -> Result<Self> {
        assert!(dim >= 1, "statistic dimension must be positive");
        if values.len() != dim * space.len() {
            return Err(Error::StatisticLength {
                expected: dim * space.len(),
                got: values.len(),
            });
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteStatistic { index: i / dim });
            }
        }
        Ok(Statistic { space, dim, values })
    }

    pub fn scalar(space: Arc<SampleSpace>, values: Vec<f64>) -> Result<Self> {
        Self::new(space, 1, values)
    }

    /// Scalar statistic computed per point index.
    pub fn scalar_from_fn(space: Arc<SampleSpace>, mut f: impl FnMut(usize) -> f64) -> Result<Self> {
        let values = (0..space.len()).map(&mut f).collect();
        Self::scalar(space, values)
    }

    pub fn space(&self) -> &Arc<SampleSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values_flat(&self) -> &[f64] {
        &self.values
    }
}

/// The n-fold i.i.d. product of a base space, with lexicographic enumeration.
#[derive(Debug, Clone)]
pub struct IIDSpace {
    base: Arc<SampleSpace>,
    n: u32,
    space: Arc<SampleSpace>,
}

impl IIDSpace {
    pub fn new(base: Arc<SampleSpace>, n: u32) -> Result<Self> {
        Self::with_cap(base, n, DEFAULT_ENUM_CAP)
    }

    /// As [`IIDSpace::new`] with an explicit enumeration cap.
    pub fn with_cap(base: Arc<SampleSpace>, n: u32, cap: usize) -> Result<Self> {
        assert!(n >= 1, "sample size must be positive");
        let size = (base.len() as u128)
            .checked_pow(n)
            .ok_or(Error::EnumerationCap { size: u128::MAX, cap })?;
        if size > cap as u128 {
            return Err(Error::EnumerationCap { size, cap });
        }
        let space = Arc::new(SampleSpace {
            kind: SpaceKind::Product {
                base: base.clone(),
                n,
            },
            len: size as usize,
        });
        Ok(IIDSpace { base, n, space })
    }

    pub fn base(&self) -> &Arc<SampleSpace> {
        &self.base
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn space(&self) -> &Arc<SampleSpace> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Base-point indices of outcome `index`, in coordinate order.
    pub fn outcome(&self, index: usize) -> Vec<usize> {
        decode_product_index(index, self.base.len(), self.n)
    }

    /// Outcome index of the given coordinates.
    pub fn index_of(&self, coords: &[usize]) -> usize {
        assert_eq!(coords.len(), self.n as usize);
        let mut idx = 0usize;
        for &c in coords {
            assert!(c < self.base.len());
            idx = idx * self.base.len() + c;
        }
        idx
    }

    /// Lift a base-space statistic to the coordinate sum `sum_i t(x_i)`.
    pub fn sum_statistic(&self, t: &Statistic) -> Result<Statistic> {
        ensure_same_space(&self.base, t.space())?;
        let d = t.dim();
        let mut values = vec![0.0; d * self.len()];
        for idx in 0..self.len() {
            let digits = self.outcome(idx);
            for &digit in &digits {
                let row = t.value(digit);
                for k in 0..d {
                    values[idx * d + k] += row[k];
                }
            }
        }
        Statistic::new(self.space.clone(), d, values)
    }
}

/// KL divergence `D(r1, r2) = sum_x r1(x) log(r1(x)/r2(x))`.
///
/// Returns `+inf` when `r1` puts mass where `r2` has none. The value is
/// clamped at zero when accumulated rounding noise drives an exact-zero case
/// marginally negative.
pub fn kl_divergence(r1: &Distribution, r2: &Distribution) -> Result<f64> {
    ensure_same_space(r1.space(), r2.space())?;
    let mut terms = Vec::with_capacity(r1.len());
    for i in 0..r1.len() {
        let l1 = r1.log_mass[i];
        if l1 == f64::NEG_INFINITY {
            continue; // 0 * log(0/q) = 0
        }
        let l2 = r2.log_mass[i];
        if l2 == f64::NEG_INFINITY {
            return Ok(f64::INFINITY); // absolute-continuity failure
        }
        terms.push(r1.mass[i] * (l1 - l2));
    }
    let sum = pairwise_sum(&terms);
    if sum < 0.0 {
        debug_assert!(sum > -1e-9, "KL divergence {sum} below rounding noise");
        return Ok(0.0);
    }
    Ok(sum)
}

/// `mu_T(r) = E_r[T]`.
pub fn mean_of_statistic(r: &Distribution, t: &Statistic) -> Result<Vec<f64>> {
    ensure_same_space(r.space(), t.space())?;
    let d = t.dim();
    let mut out = Vec::with_capacity(d);
    let mut terms = vec![0.0; r.len()];
    for k in 0..d {
        for (i, term) in terms.iter_mut().enumerate() {
            *term = r.mass[i] * t.values[i * d + k];
        }
        out.push(pairwise_sum(&terms));
    }
    Ok(out)
}

/// Pointwise convex combination of distributions on one space.
pub fn mixture(weights: &[f64], parts: &[Distribution]) -> Result<Distribution> {
    assert!(!parts.is_empty(), "mixture of zero parts");
    if weights.len() != parts.len() {
        return Err(Error::InvalidWeights {
            sum: pairwise_sum(weights),
        });
    }
    let wsum = pairwise_sum(weights);
    if (wsum - 1.0).abs() > NORMALIZATION_TOL || weights.iter().any(|&w| w < 0.0) {
        return Err(Error::InvalidWeights { sum: wsum });
    }
    let space = parts[0].space().clone();
    for p in &parts[1..] {
        ensure_same_space(&space, p.space())?;
    }
    let log_weighted: Vec<(f64, &Distribution)> = weights
        .iter()
        .zip(parts.iter())
        .filter(|(&w, _)| w > 0.0)
        .map(|(&w, p)| (w.ln(), p))
        .collect();
    log_weighted_mixture(space, &log_weighted)
}

/// Mixture from (log weight, component) pairs; weights must sum to one.
pub(crate) fn log_weighted_mixture(
    space: Arc<SampleSpace>,
    parts: &[(f64, &Distribution)],
) -> Result<Distribution> {
    let mut logp = vec![f64::NEG_INFINITY; space.len()];
    let mut scratch = Vec::with_capacity(parts.len());
    for (x, lp) in logp.iter_mut().enumerate() {
        scratch.clear();
        for &(lw, part) in parts {
            scratch.push(lw + part.log_mass[x]);
        }
        *lp = log_sum_exp(&scratch);
    }
    // Normalization re-check: the convex combination of probability vectors
    // can only drift from one by accumulation noise.
    let total = log_sum_exp(&logp);
    if (total.exp() - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotNormalized { sum: total.exp() });
    }
    for lp in logp.iter_mut() {
        *lp -= total;
    }
    Ok(Distribution::new_unchecked(space, logp))
}

/// The product pmf `r0^n` on the enumerated i.i.d. space.
pub fn iid_pmf(r0: &Distribution, iid: &IIDSpace) -> Result<Distribution> {
    ensure_same_space(r0.space(), iid.base())?;
    let base_len = iid.base().len();
    let n = iid.n() as usize;
    let mut logp = vec![0.0; iid.len()];
    for (idx, lp) in logp.iter_mut().enumerate() {
        let mut rest = idx;
        let mut acc = 0.0;
        for _ in 0..n {
            acc += r0.log_mass[rest % base_len];
            rest /= base_len;
        }
        *lp = acc;
    }
    Distribution::from_log_masses(iid.space().clone(), logp)
}

/// Restrict `r0n` to the level set `{x : s(x) = value}` and renormalize.
pub fn conditional_sample_law(
    r0n: &Distribution,
    s: &Statistic,
    value: &[f64],
) -> Result<Distribution> {
    ensure_same_space(r0n.space(), s.space())?;
    assert_eq!(value.len(), s.dim(), "level value dimension mismatch");
    let d = s.dim();
    let mut logp = vec![f64::NEG_INFINITY; r0n.len()];
    let mut members = Vec::new();
    for (i, lp) in logp.iter_mut().enumerate() {
        let row = s.value(i);
        if (0..d).all(|k| (row[k] - value[k]).abs() <= LEVEL_VALUE_TOL) {
            *lp = r0n.log_mass[i];
            members.push(i);
        }
    }
    if members.is_empty() {
        return Err(Error::NullLevelSet {
            description: format!("s = {value:?} (empty)"),
        });
    }
    let total = log_sum_exp(&logp);
    if total == f64::NEG_INFINITY {
        return Err(Error::NullLevelSet {
            description: format!("s = {value:?}"),
        });
    }
    for lp in logp.iter_mut() {
        if *lp > f64::NEG_INFINITY {
            *lp -= total;
        }
    }
    Ok(Distribution::new_unchecked(r0n.space().clone(), logp))
}

/// One level set of a statistic: the shared value and its outcome indices.
#[derive(Debug, Clone)]
pub struct LevelSet {
    pub value: Vec<f64>,
    pub outcomes: Vec<usize>,
}

/// Partition the space of `s` into level sets, ordered by value
/// (lexicographically, ascending). Values are grouped by exact bits; the
/// integer-valued statistics used throughout make this grouping exact.
pub fn level_sets(s: &Statistic) -> Vec<LevelSet> {
    let mut by_key: std::collections::BTreeMap<Vec<u64>, LevelSet> = std::collections::BTreeMap::new();
    for i in 0..s.space().len() {
        let row = s.value(i);
        let key: Vec<u64> = row.iter().map(|v| ordered_bits(*v)).collect();
        by_key
            .entry(key)
            .or_insert_with(|| LevelSet {
                value: row.to_vec(),
                outcomes: Vec::new(),
            })
            .outcomes
            .push(i);
    }
    by_key.into_values().collect()
}

/// Monotone bit pattern: orders f64 keys like the floats themselves.
fn ordered_bits(v: f64) -> u64 {
    let bits = v.to_bits();
    if bits >> 63 == 0 {
        bits ^ (1 << 63)
    } else {
        !bits
    }
}
