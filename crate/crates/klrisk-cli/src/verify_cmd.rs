use anyhow::{bail, Result};

use crate::json::{jarr, jbool, jnum, jobj, jstr};
use crate::params::{default_grid, enumeration_cap, parse_grid, resolve_family};
use klrisk::{run_identity_suites, VerifyConfig};

pub struct VerifyArgs {
    pub family: String,
    pub n: u32,
    pub seed: u64,
    pub estimators: usize,
    pub grid: Option<String>,
    pub format: String,
}

pub fn run(args: &VerifyArgs) -> Result<(String, bool)> {
    if args.format != "json" {
        bail!("verify reports are JSON only");
    }
    let handle = resolve_family(&args.family)?;
    let member_grid = match &args.grid {
        Some(text) => parse_grid(&handle, text)?,
        None => default_grid(&handle, 9)?,
    };
    let config = VerifyConfig {
        sample_size: args.n,
        seed: args.seed,
        estimator_count: args.estimators,
        member_grid,
        enumeration_cap: enumeration_cap()?,
    };
    let outcomes = run_identity_suites(&handle.fam, &config)?;
    let pass = outcomes.iter().all(|o| o.pass);
    let suites = outcomes.iter().map(|o| {
        jobj(&[
            ("name", jstr(&o.name)),
            ("value", jnum(o.value)),
            ("threshold", jnum(o.threshold)),
            (
                "check",
                jstr(if o.at_most { "value<=threshold" } else { "value>=threshold" }),
            ),
            ("pass", jbool(o.pass)),
        ])
    });
    let report = jobj(&[
        ("family", jstr(&handle.name)),
        ("n", args.n.to_string()),
        ("seed", args.seed.to_string()),
        ("estimators", args.estimators.to_string()),
        ("suites", jarr(suites)),
        ("pass", jbool(pass)),
    ]);
    Ok((report, pass))
}
