//! Numerically stable accumulation primitives shared by the probability code.
//!
//! All reductions are deterministic: the same inputs in the same order produce
//! bit-identical results, which is what lets the identity suites pin residual
//! tolerances near machine precision.

/// Pairwise (tree) summation.
///
/// Error grows like O(log n) in the number of terms instead of O(n) for naive
/// left-to-right accumulation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BASE: usize = 32;
    if values.len() <= BASE {
        let mut acc = 0.0;
        for &v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// log(sum(exp(values))) with the usual max-shift guard.
///
/// `f64::NEG_INFINITY` entries are exact zero-mass markers and contribute
/// nothing; an empty or all-`-inf` input yields `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        if v > max {
            max = v;
        }
    }
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut terms = Vec::with_capacity(values.len());
    for &v in values {
        terms.push(if v == f64::NEG_INFINITY {
            0.0
        } else {
            (v - max).exp()
        });
    }
    max + pairwise_sum(&terms).ln()
}

/// ln(n!) computed by direct summation of logs; exact enough (~1e-14 relative)
/// for the factorial ranges used here (n well below 10^4).
pub fn ln_factorial(n: u64) -> f64 {
    let mut terms = Vec::with_capacity(n as usize);
    for k in 2..=n {
        terms.push((k as f64).ln());
    }
    pairwise_sum(&terms)
}

/// ln C(n, k).
pub fn ln_choose(n: u64, k: u64) -> f64 {
    assert!(k <= n, "ln_choose: k={k} > n={n}");
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Solve the d x d system `a * x = b` by Gaussian elimination with partial
/// pivoting. `a` is row-major. Returns `None` for (numerically) singular
/// systems. Intended for the tiny systems of this crate (d <= 3 in practice).
pub fn solve_linear(a: &[f64], b: &[f64], d: usize) -> Option<Vec<f64>> {
    assert_eq!(a.len(), d * d);
    assert_eq!(b.len(), d);
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..d {
        let mut pivot = col;
        for row in col + 1..d {
            if m[row * d + col].abs() > m[pivot * d + col].abs() {
                pivot = row;
            }
        }
        if m[pivot * d + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for j in 0..d {
                m.swap(col * d + j, pivot * d + j);
            }
            rhs.swap(col, pivot);
        }
        let diag = m[col * d + col];
        for row in col + 1..d {
            let factor = m[row * d + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for j in col..d {
                m[row * d + j] -= factor * m[col * d + j];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; d];
    for col in (0..d).rev() {
        let mut acc = rhs[col];
        for j in col + 1..d {
            acc -= m[col * d + j] * x[j];
        }
        x[col] = acc / m[col * d + col];
    }
    Some(x)
}

/// Format a float with 17 significant digits (scientific notation), the fixed
/// file format for emitted probabilities and report columns.
pub fn g17(x: f64) -> String {
    format!("{x:.16e}")
}
