//! The `risk` command: full KL risk decomposition of an estimator (the
//! extended MLE by default, or a serialized estimator) against a generator,
//! with the correction term evaluated at each grid member.

use anyhow::{anyhow, bail, Result};

use crate::json::{jarr, jnum, jnum_vec, jobj, jstr};
use crate::params::{
    default_grid, display_label, enumeration_cap, natural_from_display, parse_grid,
    resolve_family, FamilyHandle,
};
use klrisk::numeric::g17;
use klrisk::{
    delta_correction, expected_divergence_with_weights, iid_pmf, kl_divergence,
    kl_mean_with_weights, mle_estimator_on, DistributionEstimator, Error, FamilyKind, IIDSpace,
};

pub struct RiskArgs {
    pub family: String,
    pub n: u32,
    pub theta: Option<f64>,
    pub lambda: Option<f64>,
    pub pi: Option<String>,
    pub natural: Option<String>,
    pub grid: Option<String>,
    pub estimator: Option<std::path::PathBuf>,
    pub format: String,
}

fn parse_components(text: &str) -> Result<Vec<f64>> {
    text.split('/')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("bad component {v:?}"))
        })
        .collect()
}

/// Resolve the generator's natural coordinates from whichever scale flag the
/// family calls for.
fn generator_natural(handle: &FamilyHandle, args: &RiskArgs) -> Result<Vec<f64>> {
    if let Some(text) = &args.natural {
        let vals = parse_components(text)?;
        if vals.len() != handle.fam.dim() {
            bail!("--natural needs {} components", handle.fam.dim());
        }
        return Ok(vals);
    }
    let Some(spec) = handle.spec else {
        bail!("JSON-loaded families take --natural coordinates");
    };
    match spec.kind {
        FamilyKind::Binomial | FamilyKind::HardyWeinberg => {
            let p = args
                .theta
                .ok_or_else(|| anyhow!("{} takes --theta <prob>", handle.name))?;
            natural_from_display(handle, &[p])}
        FamilyKind::PoissonTruncated => {
            let l = args
                .lambda
                .ok_or_else(|| anyhow!("{} takes --lambda <rate>", handle.name))?;
            natural_from_display(handle, &[l])}
        FamilyKind::Trinomial => {
            let text = args
                .pi
                .as_ref()
                .ok_or_else(|| anyhow!("{} takes --pi <p1/p2>", handle.name))?;
            natural_from_display(handle, &parse_components(text)?)}
    }
}

pub fn run(args: &RiskArgs) -> Result<(String, bool)> {
    let handle = resolve_family(&args.family)?;
    let fam = &handle.fam;
    let cap = enumeration_cap()?;
    let natural0 = generator_natural(&handle, args)?;
    let r0 = fam.member_from_natural(&natural0);

    let est = match &args.estimator {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let est = DistributionEstimator::from_json_str(&text, cap)?;
            if !klrisk::measure::same_space(est.domain().base(), fam.space())
                || !klrisk::measure::same_space(est.target_space(), fam.space())
            {
                bail!("estimator file is not on the family's sample space");
            }
            est
        }
        None => {
            let iid = IIDSpace::with_cap(fam.space().clone(), args.n, cap)?;
            mle_estimator_on(fam, &iid)?
        }
    };

    let weights = iid_pmf(&r0, est.domain())?;
    let e_r = kl_mean_with_weights(&est, &weights)?;
    let kl_var = expected_divergence_with_weights(&est, &weights, &e_r)?;
    let ed_r = fam.extended_project(&e_r)?;
    let dist_var = expected_divergence_with_weights(&est, &weights, &ed_r)?;

    let grid = match &args.grid {
        Some(text) => parse_grid(&handle, text)?,
        None => default_grid(&handle, 9)?,
    };
    struct Row {
        label: String,
        natural: Vec<f64>,
        risk: f64,
        delta: f64,
        pythagorean_residual: f64,
        dist_mean_divergence: f64,
    }
    let mut rows = Vec::new();
    for natural in &grid {
        let p = fam.member_from_natural(natural);
        let risk = expected_divergence_with_weights(&est, &weights, &p)?;
        let delta = match delta_correction(&e_r, &ed_r, &p) {
            Ok(v) => v,
            Err(Error::InfiniteDivergence) => f64::INFINITY,
            Err(e) => return Err(e.into()),
        };
        let d_ed_p = kl_divergence(&ed_r, &p)?;
        let pythagorean_residual = if risk.is_finite() && d_ed_p.is_finite() && dist_var.is_finite()
        {
            (risk - d_ed_p - dist_var).abs()
        } else {
            f64::INFINITY
        };
        rows.push(Row {
            label: display_label(&handle, natural),
            natural: natural.clone(),
            risk,
            delta,
            pythagorean_residual,
            dist_mean_divergence: d_ed_p,
        });
    }

    match args.format.as_str() {
        "json" => {
            let row_objs = rows.iter().map(|row| {
                jobj(&[
                    ("param", jstr(&row.label)),
                    ("natural", jnum_vec(&row.natural)),
                    ("risk", jnum(row.risk)),
                    ("delta", jnum(row.delta)),
                    ("pythagorean_residual", jnum(row.pythagorean_residual)),
                    ("dist_mean_divergence", jnum(row.dist_mean_divergence)),
                ])
            });
            let report = jobj(&[
                ("family", jstr(&handle.name)),
                ("n", est.n().to_string()),
                (
                    "generator",
                    jobj(&[
                        ("param", jstr(&display_label(&handle, &natural0))),
                        ("natural", jnum_vec(&natural0)),
                    ]),
                ),
                ("kl_mean", e_r.to_json_string()),
                ("kl_variance", jnum(kl_var)),
                ("dist_mean", ed_r.to_json_string()),
                ("dist_variance", jnum(dist_var)),
                ("grid", jarr(row_objs)),
            ]);
            Ok((report, true))
        }
        "csv" => {
            let mut out = String::from(
                "param,risk,delta,pythagorean_residual,dist_mean_divergence,kl_variance,dist_variance\n",
            );
            for row in &rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    row.label,
                    g17(row.risk),
                    g17(row.delta),
                    g17(row.pythagorean_residual),
                    g17(row.dist_mean_divergence),
                    g17(kl_var),
                    g17(dist_var),
                ));
            }
            Ok((out, true))
        }
        other => bail!("unknown format {other:?} (json or csv)"),
    }
}
