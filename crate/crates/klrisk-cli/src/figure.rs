//! The `hw-figure` command: the Hardy-Weinberg simplex curves as CSV — the
//! model curve, the KL mean of the extended MLE, and the divergence between
//! the KL mean and the distribution mean at each allele probability.

use anyhow::{anyhow, bail, Result};

use klrisk::numeric::g17;
use klrisk::{
    expected_divergence_with_weights, hardy_weinberg_family, iid_pmf, kl_mean_with_weights,
    mean_of_statistic, mle_estimator, trinomial_counts, Statistic,
};

pub struct HwFigureArgs {
    pub n: u64,
    pub grid: Option<String>,
    pub format: String,
}

pub fn run(args: &HwFigureArgs) -> Result<(String, bool)> {
    if args.format != "csv" {
        bail!("hw-figure is emitted as CSV data");
    }
    let thetas: Vec<f64> = match &args.grid {
        Some(text) => text
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| anyhow!("bad grid value {v:?}"))
            })
            .collect::<Result<_>>()?,
        None => (1..=19).map(|i| i as f64 * 0.05).collect(),
    };
    if thetas.iter().any(|&t| !(0.0 < t && t < 1.0)) {
        bail!("grid values must lie strictly inside (0,1)");
    }

    let fam = hardy_weinberg_family(args.n);
    let est = mle_estimator(&fam, 1)?;
    let counts = trinomial_counts(args.n);
    let count_stats: Vec<Statistic> = (0..3)
        .map(|k| {
            Statistic::scalar_from_fn(fam.space().clone(), |i| counts[i][k] as f64)
                .expect("count statistic")
        })
        .collect();

    let mut out = String::from(
        "theta,model_pi1,model_pi2,model_pi3,klmean_pi1,klmean_pi2,klmean_pi3,d_klmean_distmean\n",
    );
    for &theta in &thetas {
        let r0 = fam.member_from_natural(&[(theta / (1.0 - theta)).ln()]);
        let weights = iid_pmf(&r0, est.domain())?;
        let e_r = kl_mean_with_weights(&est, &weights)?;
        let coords: Vec<f64> = count_stats
            .iter()
            .map(|s| mean_of_statistic(&e_r, s).map(|m| m[0] / args.n as f64))
            .collect::<klrisk::Result<_>>()?;
        let ed_r = fam.extended_project(&e_r)?;
        let gap = klrisk::kl_divergence(&e_r, &ed_r)?;
        // consistency with the variance route: Vd - V = D(E R, Ed R)
        let vd = expected_divergence_with_weights(&est, &weights, &ed_r)?;
        let v = expected_divergence_with_weights(&est, &weights, &e_r)?;
        if (vd - v - gap).abs() > 1e-9 {
            bail!("internal decomposition inconsistency at theta {theta}");
        }
        let model = [theta * theta, 2.0 * theta * (1.0 - theta), (1.0 - theta) * (1.0 - theta)];
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            g17(theta),
            g17(model[0]),
            g17(model[1]),
            g17(model[2]),
            g17(coords[0]),
            g17(coords[1]),
            g17(coords[2]),
            g17(gap),
        ));
    }
    Ok((out, true))
}
