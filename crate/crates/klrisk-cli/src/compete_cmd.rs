//! The `compete` command: pit mean-matched distribution-unbiased competitors
//! against the extended MLE and report the distribution-variance margins.

use anyhow::{anyhow, bail, Result};

use crate::json::{jarr, jbool, jnum, jobj, jstr};
use crate::params::{default_grid, display_label, enumeration_cap, parse_grid, resolve_family};
use klrisk::numeric::g17;
use klrisk::random::derive_seed;
use klrisk::{
    check_distribution_unbiased, expected_divergence_with_weights, iid_pmf, kl_mean_with_weights,
    make_mean_matched_competitor_on, mle_estimator_on, Distribution, IIDSpace, UNBIASED_TOL,
};

/// Margin slack: a competitor may not undercut the MLE's distribution
/// variance by more than this.
const MARGIN_TOL: f64 = 1e-10;

pub struct CompeteArgs {
    pub family: String,
    pub n: u32,
    pub k: usize,
    pub epsilon: String,
    pub seed: String,
    pub grid: Option<String>,
    pub format: String,
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<T>()
                .map_err(|_| anyhow!("bad {what} value {v:?}"))
        })
        .collect()
}

pub fn run(args: &CompeteArgs) -> Result<(String, bool)> {
    let handle = resolve_family(&args.family)?;
    let fam = &handle.fam;
    let cap = enumeration_cap()?;
    let epsilons: Vec<f64> = parse_list(&args.epsilon, "epsilon")?;
    if epsilons.iter().any(|&e| !(0.0..1.0).contains(&e)) {
        bail!("epsilon values must lie in [0, 1)");
    }
    let seeds: Vec<u64> = parse_list(&args.seed, "seed")?;
    let grid = match &args.grid {
        Some(text) => parse_grid(&handle, text)?,
        None => {
            // three interior generators from the default grid
            let full = default_grid(&handle, 9)?;
            [1usize, 4, 7].iter().map(|&i| full[i % full.len()].clone()).collect()
        }
    };

    let iid = IIDSpace::with_cap(fam.space().clone(), args.n, cap)?;
    let mle = mle_estimator_on(fam, &iid)?;
    struct Generator {
        label: String,
        weights: Distribution,
        vd_mle: f64,
    }
    let mut generators = Vec::new();
    for natural in &grid {
        let p0 = fam.member_from_natural(natural);
        let weights = iid_pmf(&p0, &iid)?;
        let ed = fam.extended_project(&kl_mean_with_weights(&mle, &weights)?)?;
        let vd_mle = expected_divergence_with_weights(&mle, &weights, &ed)?;
        generators.push(Generator {
            label: display_label(&handle, natural),
            weights,
            vd_mle,
        });
    }

    struct Row {
        epsilon: f64,
        seed: u64,
        competitor: usize,
        generator: String,
        unbiased_residual: f64,
        vd_competitor: f64,
        vd_mle: f64,
        margin: f64,
    }
    let mut rows: Vec<Row> = Vec::new();
    for &epsilon in &epsilons {
        for &seed in &seeds {
            for k in 0..args.k {
                let sub_seed = derive_seed(seed, k as u64);
                let comp = make_mean_matched_competitor_on(fam, &iid, epsilon, sub_seed)?;
                let report = check_distribution_unbiased(&comp, fam, &grid)?;
                let unbiased_residual = report
                    .entries
                    .iter()
                    .map(|e| e.projection_divergence.max(e.max_level_residual))
                    .fold(0.0, f64::max);
                for g in &generators {
                    let ed = fam.extended_project(&kl_mean_with_weights(&comp, &g.weights)?)?;
                    let vd = expected_divergence_with_weights(&comp, &g.weights, &ed)?;
                    rows.push(Row {
                        epsilon,
                        seed,
                        competitor: k,
                        generator: g.label.clone(),
                        unbiased_residual,
                        vd_competitor: vd,
                        vd_mle: g.vd_mle,
                        margin: vd - g.vd_mle,
                    });
                }
            }
        }
    }

    let min_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    let max_unbiased = rows
        .iter()
        .map(|r| r.unbiased_residual)
        .fold(0.0, f64::max);
    let strict_wins = rows.iter().filter(|r| r.margin > 0.0).count();
    let pass = min_margin >= -MARGIN_TOL && max_unbiased <= UNBIASED_TOL;

    match args.format.as_str() {
        "json" => {
            let row_objs = rows.iter().map(|r| {
                jobj(&[
                    ("epsilon", jnum(r.epsilon)),
                    ("seed", r.seed.to_string()),
                    ("competitor", r.competitor.to_string()),
                    ("generator", jstr(&r.generator)),
                    ("unbiased_residual", jnum(r.unbiased_residual)),
                    ("vd_competitor", jnum(r.vd_competitor)),
                    ("vd_mle", jnum(r.vd_mle)),
                    ("margin", jnum(r.margin)),
                ])
            });
            let report = jobj(&[
                ("family", jstr(&handle.name)),
                ("n", args.n.to_string()),
                ("k", args.k.to_string()),
                ("epsilons", jarr(epsilons.iter().map(|&e| jnum(e)))),
                ("seeds", jarr(seeds.iter().map(|s| s.to_string()))),
                ("rows", jarr(row_objs)),
                (
                    "summary",
                    jobj(&[
                        ("competitors", (epsilons.len() * seeds.len() * args.k).to_string()),
                        ("min_margin", jnum(min_margin)),
                        ("strict_wins", strict_wins.to_string()),
                        ("max_unbiased_residual", jnum(max_unbiased)),
                        ("margin_tolerance", jnum(MARGIN_TOL)),
                        ("unbiased_tolerance", jnum(UNBIASED_TOL)),
                        ("pass", jbool(pass)),
                    ]),
                ),
            ]);
            Ok((report, pass))
        }
        "csv" => {
            let mut out = String::from(
                "epsilon,seed,competitor,generator,unbiased_residual,vd_competitor,vd_mle,margin\n",
            );
            for r in &rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    g17(r.epsilon),
                    r.seed,
                    r.competitor,
                    r.generator,
                    g17(r.unbiased_residual),
                    g17(r.vd_competitor),
                    g17(r.vd_mle),
                    g17(r.margin),
                ));
            }
            Ok((out, pass))
        }
        other => bail!("unknown format {other:?} (json or csv)"),
    }
}
