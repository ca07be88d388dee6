//! Exponential families on a finite sample space: cumulant function,
//! natural/mean duality, KL projection by moment matching, and the extended
//! projection onto boundary faces of the mean space.
//!
//! A family is a full-support base point `P0` plus a canonical statistic
//! `T: X -> R^d`; members have density `exp(theta'T(x) - psi(theta))` with
//! respect to `P0`. The mean space is the interior of the convex hull of
//! `T(X)`; means on the hull boundary are handled by restricting the base
//! measure to the active face.

use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::measure::{mean_of_statistic, same_space, Distribution, SampleSpace, Statistic};
use crate::numeric::{g17, log_sum_exp, pairwise_sum, solve_linear};

/// Hull-membership tolerance: means within this distance of the boundary are
/// routed to the extended projection.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// Target gradient residual for the moment-matching solver.
const GRAD_TOL: f64 = 1e-12;
/// Residual at which a stalled solve is still accepted.
const ACCEPT_TOL: f64 = 1e-11;
const MAX_SOLVER_ITER: usize = 200;

/// One family member in both coordinate systems.
#[derive(Debug, Clone)]
pub struct ParamPoint {
    pub theta: Vec<f64>,
    pub mu: Vec<f64>,
    pub psi: f64,
}

/// Value, gradient, and Hessian of the cumulant function at one point.
///
/// The gradient is the member's mean of `T`; the Hessian is its covariance
/// (row-major, `d x d`).
#[derive(Debug, Clone)]
pub struct CumulantEval {
    pub psi: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

/// A proper face of the convex hull of `T(X)`: the points whose statistic
/// values realize it, and a mean vector lying on it.
#[derive(Debug, Clone)]
pub struct Face {
    pub active_points: Vec<usize>,
    pub face_mean: Vec<f64>,
}

/// Where a mean vector sits relative to the closed convex hull of `T(X)`.
#[derive(Debug, Clone)]
pub enum HullPosition {
    Interior,
    Boundary(Face),
    /// Unreachable for means of actual distributions; kept as a guard against
    /// externally supplied vectors.
    Outside,
}

#[derive(Debug, Clone)]
enum HullGeometry {
    Interval {
        min: f64,
        max: f64,
    },
    Polygon {
        /// Hull vertices in counter-clockwise order.
        verts: Vec<[f64; 2]>,
    },
}

#[derive(Debug, Clone)]
pub struct ExponentialFamily {
    base: Distribution,
    t: Statistic,
    hull: Option<HullGeometry>,
}

impl ExponentialFamily {
    /// Validate and build a family from a full-support base point and a
    /// minimal canonical statistic.
    pub fn new(base: Distribution, t: Statistic) -> Result<Self> {
        if !same_space(base.space(), t.space()) {
            return Err(Error::SpaceMismatch);
        }
        if let Some(i) = (0..base.len()).find(|&i| base.mass(i) == 0.0) {
            return Err(Error::NotFullSupport { index: i });
        }
        let d = t.dim();
        let size = base.space().len();
        if d > size - 1 {
            return Err(Error::DimensionTooLarge {
                dim: d,
                max: size - 1,
            });
        }
        // Minimal representation: {1, T_1, ..., T_d} affinely independent,
        // i.e. Cov_base(T) positive definite.
        let cov = covariance(&base, &t);
        let scale = t
            .values_flat()
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let eps = 1e-9 * (1.0 + scale * scale);
        let minimal = match d {
            1 => cov[0] > eps,
            2 => cov[0] > eps && cov[3] > eps && cov[0] * cov[3] - cov[1] * cov[2] > eps * eps,
            _ => {
                // Gram-determinant test via elimination on the covariance.
                solve_linear(&cov, &vec![0.0; d], d).is_some()
                    && (0..d).all(|k| cov[k * d + k] > eps)
            }
        };
        if !minimal {
            return Err(Error::NotMinimal);
        }
        let hull = match d {
            1 => {
                let vals = t.values_flat();
                let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                Some(HullGeometry::Interval { min, max })
            }
            2 => {
                let pts: Vec<[f64; 2]> = (0..size)
                    .map(|i| {
                        let v = t.value(i);
                        [v[0], v[1]]
                    })
                    .collect();
                Some(HullGeometry::Polygon {
                    verts: convex_hull(&pts),
                })
            }
            _ => None,
        };
        Ok(ExponentialFamily { base, t, hull })
    }

    pub fn base(&self) -> &Distribution {
        &self.base
    }

    pub fn statistic(&self) -> &Statistic {
        &self.t
    }

    pub fn dim(&self) -> usize {
        self.t.dim()
    }

    pub fn space(&self) -> &Arc<SampleSpace> {
        self.base.space()
    }

    /// Cumulant function `psi(theta) = log sum_x exp(theta'T(x)) p0(x)` with
    /// its gradient (member mean of `T`) and Hessian (member covariance).
    pub fn cumulant(&self, theta: &[f64]) -> CumulantEval {
        let d = self.dim();
        assert_eq!(theta.len(), d, "natural parameter dimension mismatch");
        assert!(theta.iter().all(|v| v.is_finite()));
        let size = self.space().len();
        let mut logits = Vec::with_capacity(size);
        for i in 0..size {
            let row = self.t.value(i);
            let mut dot = self.base.log_mass_at(i);
            for k in 0..d {
                dot += theta[k] * row[k];
            }
            logits.push(dot);
        }
        let psi = log_sum_exp(&logits);
        let mass: Vec<f64> = logits.iter().map(|&l| (l - psi).exp()).collect();
        let mut grad = vec![0.0; d];
        let mut terms = vec![0.0; size];
        for (k, g) in grad.iter_mut().enumerate() {
            for (i, term) in terms.iter_mut().enumerate() {
                *term = mass[i] * self.t.value(i)[k];
            }
            *g = pairwise_sum(&terms);
        }
        let mut hess = vec![0.0; d * d];
        for k in 0..d {
            for l in k..d {
                for (i, term) in terms.iter_mut().enumerate() {
                    let row = self.t.value(i);
                    *term = mass[i] * (row[k] - grad[k]) * (row[l] - grad[l]);
                }
                let v = pairwise_sum(&terms);
                hess[k * d + l] = v;
                hess[l * d + k] = v;
            }
        }
        CumulantEval { psi, grad, hess }
    }

    /// The member with natural parameter `theta`.
    pub fn member_from_natural(&self, theta: &[f64]) -> Distribution {
        let d = self.dim();
        assert_eq!(theta.len(), d);
        let size = self.space().len();
        let mut logits = Vec::with_capacity(size);
        for i in 0..size {
            let row = self.t.value(i);
            let mut dot = self.base.log_mass_at(i);
            for k in 0..d {
                dot += theta[k] * row[k];
            }
            logits.push(dot);
        }
        Distribution::from_logits(self.space().clone(), logits)
            .expect("full-support base and finite theta yield a valid member")
    }

    /// Both coordinates of the member at `theta`.
    pub fn param_point(&self, theta: &[f64]) -> ParamPoint {
        let eval = self.cumulant(theta);
        ParamPoint {
            theta: theta.to_vec(),
            mu: eval.grad,
            psi: eval.psi,
        }
    }

    /// Invert the mean map: find `theta` with `grad psi(theta) = mu`.
    ///
    /// Damped Newton from `theta = 0`, with step halving on the concave dual
    /// objective `theta'mu - psi(theta)`; for d = 1 a bisection fallback on
    /// the monotone map `theta -> psi'(theta)` covers stalls.
    pub fn natural_from_mean(&self, mu: &[f64]) -> Result<ParamPoint> {
        assert_eq!(mu.len(), self.dim());
        match self.hull_position(mu)? {
            HullPosition::Interior => {}
            HullPosition::Boundary(face) => return Err(Error::BoundaryMean { face }),
            HullPosition::Outside => return Err(Error::OutsideHull { mu: mu.to_vec() }),
        }
        let d = self.dim();
        let mut theta = vec![0.0; d];
        let mut eval = self.cumulant(&theta);
        let mut residual = inf_norm_diff(&eval.grad, mu);
        let mut iterations = 0;
        while residual > GRAD_TOL && iterations < MAX_SOLVER_ITER {
            iterations += 1;
            let rhs: Vec<f64> = (0..d).map(|k| mu[k] - eval.grad[k]).collect();
            let delta = match solve_linear(&eval.hess, &rhs, d) {
                Some(v) => v,
                None => break,
            };
            let g0 = dot(&theta, mu) - eval.psi;
            let mut alpha = 1.0;
            let mut stepped = false;
            for _ in 0..60 {
                let trial: Vec<f64> = (0..d).map(|k| theta[k] + alpha * delta[k]).collect();
                let trial_eval = self.cumulant(&trial);
                // Accept on dual-objective increase, or on residual decrease
                // once the objective is flat at float precision.
                let improved = dot(&trial, mu) - trial_eval.psi > g0
                    || inf_norm_diff(&trial_eval.grad, mu) < residual;
                if improved {
                    theta = trial;
                    eval = trial_eval;
                    stepped = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !stepped {
                break; // converged to float resolution
            }
            residual = inf_norm_diff(&eval.grad, mu);
        }
        if residual > GRAD_TOL && d == 1 {
            let (t1, e1) = self.bisect_mean_1d(mu[0], theta[0]);
            let r1 = (e1.grad[0] - mu[0]).abs();
            if r1 < residual {
                theta = vec![t1];
                eval = e1;
                residual = r1;
            }
        }
        if residual <= ACCEPT_TOL {
            Ok(ParamPoint {
                theta,
                mu: eval.grad,
                psi: eval.psi,
            })
        } else {
            Err(Error::NoConvergence { residual })
        }
    }

    /// Bisection on the monotone scalar mean map, seeded near `hint`.
    fn bisect_mean_1d(&self, mu: f64, hint: f64) -> (f64, CumulantEval) {
        let grad_at = |th: f64| self.cumulant(&[th]).grad[0];
        let mut lo = hint - 1.0;
        let mut hi = hint + 1.0;
        let mut width = 1.0;
        while grad_at(lo) > mu && lo > -1e4 {
            width *= 2.0;
            lo -= width;
        }
        while grad_at(hi) < mu && hi < 1e4 {
            width *= 2.0;
            hi += width;
        }
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..300 {
            mid = 0.5 * (lo + hi);
            let g = grad_at(mid);
            if (g - mu).abs() <= GRAD_TOL || hi - lo <= f64::EPSILON * (1.0 + mid.abs()) {
                break;
            }
            if g < mu {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (mid, self.cumulant(&[mid]))
    }

    /// Classify a mean vector against the closed convex hull of `T(X)`,
    /// returning the minimal containing face for boundary vectors.
    pub fn hull_position(&self, mu: &[f64]) -> Result<HullPosition> {
        assert_eq!(mu.len(), self.dim());
        let geometry = self
            .hull
            .as_ref()
            .ok_or(Error::UnsupportedDimension { dim: self.dim() })?;
        match geometry {
            HullGeometry::Interval { min, max } => {
                let m = mu[0];
                if m < min - BOUNDARY_TOL || m > max + BOUNDARY_TOL {
                    return Ok(HullPosition::Outside);
                }
                for &endpoint in &[*min, *max] {
                    if (m - endpoint).abs() <= BOUNDARY_TOL {
                        let active = self.points_near(&[endpoint]);
                        return Ok(HullPosition::Boundary(Face {
                            active_points: active,
                            face_mean: vec![endpoint],
                        }));
                    }
                }
                Ok(HullPosition::Interior)
            }
            HullGeometry::Polygon { verts } => self.polygon_position(verts, mu),
        }
    }

    fn polygon_position(&self, verts: &[[f64; 2]], mu: &[f64]) -> Result<HullPosition> {
        let p = [mu[0], mu[1]];
        let m = verts.len();
        debug_assert!(m >= 3, "minimality rules out degenerate hulls");
        let mut min_signed = f64::INFINITY;
        let mut nearest_edge = 0;
        for e in 0..m {
            let a = verts[e];
            let b = verts[(e + 1) % m];
            let sd = signed_edge_distance(a, b, p);
            if sd < min_signed {
                min_signed = sd;
                nearest_edge = e;
            }
        }
        if min_signed < -BOUNDARY_TOL {
            return Ok(HullPosition::Outside);
        }
        if min_signed > BOUNDARY_TOL {
            return Ok(HullPosition::Interior);
        }
        // On the boundary: vertex faces take precedence over edge faces.
        for v in verts {
            if dist2(*v, p).sqrt() <= BOUNDARY_TOL {
                return Ok(HullPosition::Boundary(Face {
                    active_points: self.points_near(v),
                    face_mean: v.to_vec(),
                }));
            }
        }
        let a = verts[nearest_edge];
        let b = verts[(nearest_edge + 1) % m];
        let snapped = project_onto_segment(a, b, p);
        let active = self.points_on_edge(a, b);
        Ok(HullPosition::Boundary(Face {
            active_points: active,
            face_mean: snapped.to_vec(),
        }))
    }

    fn points_near(&self, target: &[f64]) -> Vec<usize> {
        let d = self.dim();
        (0..self.space().len())
            .filter(|&i| {
                let row = self.t.value(i);
                (0..d).all(|k| (row[k] - target[k]).abs() <= BOUNDARY_TOL)
            })
            .collect()
    }

    fn points_on_edge(&self, a: [f64; 2], b: [f64; 2]) -> Vec<usize> {
        let len = dist2(a, b).sqrt();
        (0..self.space().len())
            .filter(|&i| {
                let row = self.t.value(i);
                let p = [row[0], row[1]];
                let sd = signed_edge_distance(a, b, p).abs();
                if sd > BOUNDARY_TOL {
                    return false;
                }
                let s = ((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) / (len * len);
                (-BOUNDARY_TOL..=1.0 + BOUNDARY_TOL).contains(&s)
            })
            .collect()
    }

    /// KL projection onto the family: the member matching `mu_T(r)`.
    ///
    /// Errors with the boundary face when the mean lies on the hull boundary;
    /// callers then use [`ExponentialFamily::extended_project`].
    pub fn project(&self, r: &Distribution) -> Result<Distribution> {
        let mu = mean_of_statistic(r, &self.t)?;
        let point = self.natural_from_mean(&mu)?;
        Ok(self.member_from_natural(&point.theta))
    }

    /// Extended KL projection: interior means delegate to [`Self::project`];
    /// boundary means are matched inside the face-restricted family.
    pub fn extended_project(&self, r: &Distribution) -> Result<Distribution> {
        let mu = mean_of_statistic(r, &self.t)?;
        self.member_at_mean_extended(&mu)
    }

    /// The (extended) member whose `T`-mean equals `mu`, for any `mu` in the
    /// closed hull.
    pub fn member_at_mean_extended(&self, mu: &[f64]) -> Result<Distribution> {
        match self.hull_position(mu)? {
            HullPosition::Interior => {
                let point = self.natural_from_mean(mu)?;
                Ok(self.member_from_natural(&point.theta))
            }
            HullPosition::Boundary(face) => self.face_member(&face),
            HullPosition::Outside => Err(Error::OutsideHull { mu: mu.to_vec() }),
        }
    }

    /// Member of the face-restricted family with mean `face.face_mean`: the
    /// base measure is restricted to the active points (the closure limit of
    /// the family along the face) and moment matching is re-solved within it.
    pub fn face_member(&self, face: &Face) -> Result<Distribution> {
        assert!(!face.active_points.is_empty(), "face has no active points");
        let d = self.dim();
        let size = self.space().len();
        // The statistic varies at most one-dimensionally on a proper face of
        // a d <= 2 hull. Pick the extreme active points as the direction.
        let mut span = 0.0f64;
        let mut extremes = (face.active_points[0], face.active_points[0]);
        for &i in &face.active_points {
            for &j in &face.active_points {
                let mut gap = 0.0;
                for k in 0..d {
                    let diff = self.t.value(i)[k] - self.t.value(j)[k];
                    gap += diff * diff;
                }
                if gap > span {
                    span = gap;
                    extremes = (j, i);
                }
            }
        }
        let mut logits = vec![f64::NEG_INFINITY; size];
        if span.sqrt() <= BOUNDARY_TOL {
            // Zero-dimensional face: the restricted base point itself.
            for &i in &face.active_points {
                logits[i] = self.base.log_mass_at(i);
            }
            return Distribution::from_logits(self.space().clone(), logits);
        }
        // One-dimensional face: tilt along the face direction until the
        // scalar coordinate of the mean matches.
        let u: Vec<f64> = {
            let from = self.t.value(extremes.0);
            let to = self.t.value(extremes.1);
            let norm = span.sqrt();
            (0..d).map(|k| (to[k] - from[k]) / norm).collect()
        };
        let coords: Vec<f64> = face
            .active_points
            .iter()
            .map(|&i| dot(&u, self.t.value(i)))
            .collect();
        let base_logs: Vec<f64> = face
            .active_points
            .iter()
            .map(|&i| self.base.log_mass_at(i))
            .collect();
        let target = dot(&u, &face.face_mean);
        let beta = tilt_to_scalar_mean(&base_logs, &coords, target)?;
        for (slot, &i) in face.active_points.iter().enumerate() {
            logits[i] = base_logs[slot] + beta * coords[slot];
        }
        let member = Distribution::from_logits(self.space().clone(), logits)?;
        debug_assert!({
            let got = mean_of_statistic(&member, &self.t).unwrap();
            inf_norm_diff(&got, &face.face_mean) < 1e-9
        });
        Ok(member)
    }

    /// In-family divergence `D(P1, P2)` from dual coordinates:
    /// `psi(theta2) - psi(theta1) - (theta2 - theta1)'mu1`.
    pub fn bregman_divergence(&self, p1: &ParamPoint, p2: &ParamPoint) -> f64 {
        let mut v = p2.psi - p1.psi;
        for k in 0..self.dim() {
            v -= (p2.theta[k] - p1.theta[k]) * p1.mu[k];
        }
        v
    }

    /// Serialize as `{"support": [...], "base_logp": [...], "T": [[...]]}`.
    pub fn to_json_string(&self) -> String {
        let labels = self.space().labels();
        let support = serde_json::to_string(&labels).expect("labels serialize");
        let base_logp: Vec<String> = (0..self.space().len())
            .map(|i| g17(self.base.log_mass_at(i)))
            .collect();
        let rows: Vec<String> = (0..self.space().len())
            .map(|i| {
                let row: Vec<String> = self.t.value(i).iter().map(|&v| g17(v)).collect();
                format!("[{}]", row.join(","))
            })
            .collect();
        format!(
            "{{\"support\":{},\"base_logp\":[{}],\"T\":[{}]}}",
            support,
            base_logp.join(","),
            rows.join(",")
        )
    }

    /// Parse and validate a family from its JSON form.
    pub fn from_json_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct FamilyJson {
            support: Vec<String>,
            base_logp: Vec<f64>,
            #[serde(rename = "T")]
            t: Vec<Vec<f64>>,
        }
        let parsed: FamilyJson = serde_json::from_str(text)?;
        let space = SampleSpace::new(parsed.support)?;
        let base = Distribution::from_log_masses(space.clone(), parsed.base_logp)?;
        if parsed.t.len() != space.len() {
            return Err(Error::StatisticLength {
                expected: space.len(),
                got: parsed.t.len(),
            });
        }
        let dim = parsed.t.first().map(|r| r.len()).unwrap_or(0);
        if dim == 0 || parsed.t.iter().any(|r| r.len() != dim) {
            return Err(Error::Format(
                "statistic rows must share one positive dimension".into(),
            ));
        }
        let mut flat = Vec::with_capacity(dim * space.len());
        for row in &parsed.t {
            flat.extend_from_slice(row);
        }
        let t = Statistic::new(space, dim, flat)?;
        ExponentialFamily::new(base, t)
    }
}

/// Solve for `beta` with `sum_i softmax(base + beta * s)_i * s_i = target`,
/// the scalar moment match used inside face restrictions.
fn tilt_to_scalar_mean(base_logs: &[f64], coords: &[f64], target: f64) -> Result<f64> {
    let mean_at = |beta: f64| -> f64 {
        let logits: Vec<f64> = base_logs
            .iter()
            .zip(coords)
            .map(|(&b, &s)| b + beta * s)
            .collect();
        let z = log_sum_exp(&logits);
        let terms: Vec<f64> = logits
            .iter()
            .zip(coords)
            .map(|(&l, &s)| (l - z).exp() * s)
            .collect();
        pairwise_sum(&terms)
    };
    let mut lo = -1.0;
    let mut hi = 1.0;
    let mut width = 1.0;
    while mean_at(lo) > target && lo > -1e4 {
        width *= 2.0;
        lo -= width;
    }
    width = 1.0;
    while mean_at(hi) < target && hi < 1e4 {
        width *= 2.0;
        hi += width;
    }
    let mut mid = 0.5 * (lo + hi);
    let mut residual = f64::INFINITY;
    for _ in 0..300 {
        mid = 0.5 * (lo + hi);
        let g = mean_at(mid);
        residual = (g - target).abs();
        if residual <= GRAD_TOL || hi - lo <= f64::EPSILON * (1.0 + mid.abs()) {
            break;
        }
        if g < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if residual <= ACCEPT_TOL {
        Ok(mid)
    } else {
        Err(Error::NoConvergence { residual })
    }
}

fn covariance(base: &Distribution, t: &Statistic) -> Vec<f64> {
    let d = t.dim();
    let size = base.len();
    let mut mean = vec![0.0; d];
    let mut terms = vec![0.0; size];
    for (k, m) in mean.iter_mut().enumerate() {
        for (i, term) in terms.iter_mut().enumerate() {
            *term = base.mass(i) * t.value(i)[k];
        }
        *m = pairwise_sum(&terms);
    }
    let mut cov = vec![0.0; d * d];
    for k in 0..d {
        for l in 0..d {
            for (i, term) in terms.iter_mut().enumerate() {
                let row = t.value(i);
                *term = base.mass(i) * (row[k] - mean[k]) * (row[l] - mean[l]);
            }
            cov[k * d + l] = pairwise_sum(&terms);
        }
    }
    cov
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn inf_norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Signed distance from `p` to the directed edge `a -> b`; positive on the
/// interior side of a counter-clockwise polygon.
fn signed_edge_distance(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
    cross / dist2(a, b).sqrt()
}

fn project_onto_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> [f64; 2] {
    let len2 = dist2(a, b);
    let s = (((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) / len2).clamp(0.0, 1.0);
    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
}

/// Andrew's monotone chain; returns hull vertices counter-clockwise.
fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite statistic values"));
    pts.dedup();
    let n = pts.len();
    if n < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{binomial_family, hardy_weinberg_family, trinomial_family};
    use crate::measure::kl_divergence;
    use crate::numeric::ln_choose;

    fn fair_coin_family() -> ExponentialFamily {
        let space = SampleSpace::integers(1);
        let base = Distribution::uniform(space.clone());
        let t = Statistic::scalar_from_fn(space, |i| i as f64).unwrap();
        ExponentialFamily::new(base, t).unwrap()
    }

    #[test]
    fn cumulant_at_zero_is_base_normalization() {
        let fam = binomial_family(6);
        let eval = fam.cumulant(&[0.0]);
        assert!(eval.psi.abs() < 1e-12);
        let mu0 = mean_of_statistic(fam.base(), fam.statistic()).unwrap();
        assert!((eval.grad[0] - mu0[0]).abs() < 1e-13);
        assert!((eval.grad[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn cumulant_gradient_two_point_hand_value() {
        // fair coin base, T(x) = x, theta = log 9:
        // grad = 0.5 e^theta / (0.5 + 0.5 e^theta) = 0.9
        let fam = fair_coin_family();
        let eval = fam.cumulant(&[9.0f64.ln()]);
        assert!((eval.grad[0] - 0.9).abs() < 1e-14);
        // Hessian is the Bernoulli variance 0.9 * 0.1
        assert!((eval.hess[0] - 0.09).abs() < 1e-13);
    }

    #[test]
    fn member_matches_closed_form_binomial() {
        let fam = binomial_family(6);
        // theta = log(p / (1-p)) at p = 2/3 is log 2
        let member = fam.member_from_natural(&[2.0f64.ln()]);
        let p: f64 = 2.0 / 3.0;
        for x in 0..=6u64 {
            let direct =
                (ln_choose(6, x) + (x as f64) * p.ln() + ((6 - x) as f64) * (1.0 - p).ln()).exp();
            assert!((member.mass(x as usize) - direct).abs() < 1e-14);
        }
        let mu = mean_of_statistic(&member, fam.statistic()).unwrap();
        assert!((mu[0] - fam.cumulant(&[2.0f64.ln()]).grad[0]).abs() < 1e-12);
    }

    #[test]
    fn member_at_zero_is_base() {
        let fam = hardy_weinberg_family(6);
        let member = fam.member_from_natural(&[0.0]);
        assert!(member.approx_eq(fam.base(), 1e-15));
    }

    #[test]
    fn natural_from_mean_examples() {
        let fam = binomial_family(6);
        let p0 = fam.natural_from_mean(&[3.0]).unwrap();
        assert!(p0.theta[0].abs() < 1e-11);
        // mu = 4 => success probability 2/3 => theta = log 2
        let p1 = fam.natural_from_mean(&[4.0]).unwrap();
        assert!((p1.theta[0] - 2.0f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn natural_from_mean_boundary_and_outside() {
        let fam = binomial_family(6);
        match fam.natural_from_mean(&[0.0]) {
            Err(Error::BoundaryMean { face }) => {
                assert_eq!(face.active_points, vec![0]);
                assert_eq!(face.face_mean, vec![0.0]);
            }
            other => panic!("expected boundary error, got {other:?}"),
        }
        assert!(matches!(
            fam.natural_from_mean(&[6.5]),
            Err(Error::OutsideHull { .. })
        ));
    }

    #[test]
    fn hull_position_trinomial_edge() {
        let fam = trinomial_family(6);
        assert!(matches!(
            fam.hull_position(&[2.0, 2.0]).unwrap(),
            HullPosition::Interior
        ));
        // y2 = 0 edge of the count simplex
        match fam.hull_position(&[2.5, 0.0]).unwrap() {
            HullPosition::Boundary(face) => {
                assert!((face.face_mean[0] - 2.5).abs() < 1e-12);
                assert!(face.face_mean[1].abs() < 1e-12);
                for &i in &face.active_points {
                    assert!(fam.statistic().value(i)[1].abs() < 1e-12);
                }
                assert_eq!(face.active_points.len(), 7);
            }
            other => panic!("expected edge face, got {other:?}"),
        }
        // vertex
        match fam.hull_position(&[6.0, 0.0]).unwrap() {
            HullPosition::Boundary(face) => assert_eq!(face.active_points.len(), 1),
            other => panic!("expected vertex face, got {other:?}"),
        }
    }

    #[test]
    fn project_fixes_family_members() {
        let fam = binomial_family(6);
        let member = fam.member_from_natural(&[0.7]);
        let proj = fam.project(&member).unwrap();
        assert!(proj.approx_eq(&member, 1e-10));
    }

    #[test]
    fn project_uniform_onto_binomial_with_grid_oracle() {
        let fam = binomial_family(6);
        let uniform = Distribution::uniform(fam.space().clone());
        let proj = fam.project(&uniform).unwrap();
        let fair = fam.member_from_natural(&[0.0]);
        assert!(proj.approx_eq(&fair, 1e-10));
        // independent argmin oracle: grid search over theta-probability
        let mut best = (f64::INFINITY, 0.0f64);
        let mut p = 1e-4f64;
        while p < 1.0 {
            let member = fam.member_from_natural(&[(p / (1.0 - p)).ln()]);
            let d = kl_divergence(&uniform, &member).unwrap();
            if d < best.0 {
                best = (d, p);
            }
            p += 1e-4;
        }
        assert!((best.1 - 0.5).abs() < 1e-3);
        let d_proj = kl_divergence(&uniform, &proj).unwrap();
        assert!(d_proj <= best.0 + 1e-12);
    }

    #[test]
    fn extended_project_boundary_cases() {
        let fam = binomial_family(6);
        let i0 = Distribution::point_mass(fam.space().clone(), 0);
        let proj0 = fam.extended_project(&i0).unwrap();
        assert!(proj0.approx_eq(&i0, 1e-15));
        let i6 = Distribution::point_mass(fam.space().clone(), 6);
        let proj6 = fam.extended_project(&i6).unwrap();
        assert!(proj6.approx_eq(&i6, 1e-15));
        // interior means delegate to the plain projection
        let uniform = Distribution::uniform(fam.space().clone());
        let a = fam.extended_project(&uniform).unwrap();
        let b = fam.project(&uniform).unwrap();
        assert!(a.approx_eq(&b, 0.0));
    }

    #[test]
    fn extended_project_trinomial_edge_matches_mean() {
        let fam = trinomial_family(6);
        // all mass on the y2 = 0 edge, mean (2.5, 0)
        let mut masses = vec![0.0; fam.space().len()];
        let idx_a = fam.space().index_of("2,0,4").unwrap();
        let idx_b = fam.space().index_of("3,0,3").unwrap();
        masses[idx_a] = 0.5;
        masses[idx_b] = 0.5;
        let r = Distribution::from_masses(fam.space().clone(), masses).unwrap();
        let proj = fam.extended_project(&r).unwrap();
        let mu = mean_of_statistic(&proj, fam.statistic()).unwrap();
        assert!((mu[0] - 2.5).abs() < 1e-11);
        assert!(mu[1].abs() < 1e-11);
        // support restricted to the edge
        for i in 0..fam.space().len() {
            if fam.statistic().value(i)[1].abs() > 1e-12 {
                assert_eq!(proj.mass(i), 0.0);
            }
        }
    }

    #[test]
    fn bregman_examples() {
        let fam = fair_coin_family();
        let p_half = fam.param_point(&[0.0]);
        assert!(fam.bregman_divergence(&p_half, &p_half).abs() < 1e-15);
        // members 0.5 vs 0.9: D = 0.5 ln(0.5/0.9) + 0.5 ln(0.5/0.1) = ln(5/3)
        let p_nine = fam.param_point(&[9.0f64.ln()]);
        let d = fam.bregman_divergence(&p_half, &p_nine);
        assert!((d - (5.0f64 / 3.0).ln()).abs() < 1e-13);

        let binom = binomial_family(6);
        let a = binom.param_point(&[0.0]);
        let b = binom.param_point(&[2.0f64.ln()]);
        let direct = kl_divergence(
            &binom.member_from_natural(&a.theta),
            &binom.member_from_natural(&b.theta),
        )
        .unwrap();
        assert!((binom.bregman_divergence(&a, &b) - direct).abs() < 1e-12);
    }

    #[test]
    fn family_json_round_trip_and_validation() {
        let fam = hardy_weinberg_family(4);
        let text = fam.to_json_string();
        let back = ExponentialFamily::from_json_str(&text).unwrap();
        assert!(back.base().approx_eq(fam.base(), 1e-15));
        assert_eq!(back.dim(), 1);

        // non-minimal statistic rejected
        let space = SampleSpace::integers(2);
        let base = Distribution::uniform(space.clone());
        let constant = Statistic::scalar_from_fn(space, |_| 1.0).unwrap();
        assert!(matches!(
            ExponentialFamily::new(base, constant),
            Err(Error::NotMinimal)
        ));

        // zero base mass rejected
        let space2 = SampleSpace::integers(1);
        let degenerate = Distribution::point_mass(space2.clone(), 0);
        let t2 = Statistic::scalar_from_fn(space2, |i| i as f64).unwrap();
        assert!(matches!(
            ExponentialFamily::new(degenerate, t2),
            Err(Error::NotFullSupport { index: 1 })
        ));
    }

    #[test]
    fn vertex_divergence_decreases_toward_boundary() {
        // inf_P D(I_0, P) = 0: D decreases monotonically along theta -> -inf.
        let fam = binomial_family(6);
        let i0 = Distribution::point_mass(fam.space().clone(), 0);
        let mut last = f64::INFINITY;
        for k in 1..=30 {
            let member = fam.member_from_natural(&[-(k as f64)]);
            let d = kl_divergence(&i0, &member).unwrap();
            assert!(d < last);
            last = d;
        }
        assert!(last < 1e-8);
    }
}
