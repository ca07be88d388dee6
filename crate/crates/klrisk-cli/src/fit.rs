//! The `mle` and `project` commands: fit the extended MLE to observed
//! outcomes, or project a serialized distribution onto the family.

use anyhow::{anyhow, bail, Result};

use crate::json::{jarr, jbool, jnum_vec, jobj, jstr};
use crate::params::{display_fields, resolve_family, FamilyHandle};
use klrisk::{extended_mle, mean_of_statistic, Distribution, Face, HullPosition};

fn face_json(handle: &FamilyHandle, face: &Face) -> String {
    let labels = face
        .active_points
        .iter()
        .map(|&i| jstr(&handle.fam.space().label(i)));
    jobj(&[
        ("active_points", jarr(labels)),
        ("face_mean", jnum_vec(&face.face_mean)),
    ])
}

pub struct MleArgs {
    pub family: String,
    pub data: Vec<String>,
    pub format: String,
}

pub fn run_mle(args: &MleArgs) -> Result<(String, bool)> {
    if args.format != "json" {
        bail!("mle reports are JSON only");
    }
    let handle = resolve_family(&args.family)?;
    let fam = &handle.fam;
    let n = args.data.len() as u32;
    let d = fam.dim();
    let mut t = vec![0.0; d];
    for label in &args.data {
        let idx = fam
            .space()
            .index_of(label)
            .ok_or_else(|| anyhow!("outcome {label:?} is not in the sample space of {}", handle.name))?;
        for (acc, v) in t.iter_mut().zip(fam.statistic().value(idx)) {
            *acc += v;
        }
    }
    let mean: Vec<f64> = t.iter().map(|&v| v / n as f64).collect();
    let position = fam.hull_position(&mean)?;
    let fit = extended_mle(fam, &t, n)?;
    let (boundary, face_field, natural_field) = match &position {
        HullPosition::Interior => {
            let point = fam.natural_from_mean(&mean)?;
            (false, "null".to_string(), jnum_vec(&point.theta))
        }
        HullPosition::Boundary(face) => (true, face_json(&handle, face), "null".to_string()),
        HullPosition::Outside => bail!("statistic mean {mean:?} is outside the closed hull"),
    };
    let natural_opt = match &position {
        HullPosition::Interior => Some(fam.natural_from_mean(&mean)?.theta),
        _ => None,
    };
    let report = jobj(&[
        ("family", jstr(&handle.name)),
        ("n", n.to_string()),
        ("data", jarr(args.data.iter().map(|s| jstr(s)))),
        ("t", jnum_vec(&t)),
        ("mean", jnum_vec(&mean)),
        ("boundary", jbool(boundary)),
        ("face", face_field),
        ("natural", natural_field),
        (
            "display",
            display_fields(&handle, &mean, natural_opt.as_deref(), boundary),
        ),
        ("pmf", fit.to_json_string()),
    ]);
    Ok((report, true))
}

pub struct ProjectArgs {
    pub family: String,
    pub input: std::path::PathBuf,
    pub format: String,
}

pub fn run_project(args: &ProjectArgs) -> Result<(String, bool)> {
    if args.format != "json" {
        bail!("project reports are JSON only");
    }
    let handle = resolve_family(&args.family)?;
    let fam = &handle.fam;
    let text = std::fs::read_to_string(&args.input)?;
    let r = Distribution::from_json_str(&text)?;
    if !klrisk::measure::same_space(r.space(), fam.space()) {
        bail!("input distribution is not on the family's sample space");
    }
    let mu = mean_of_statistic(&r, fam.statistic())?;
    let position = fam.hull_position(&mu)?;
    let projection = fam.extended_project(&r)?;
    let (position_name, face_field, natural_field) = match &position {
        HullPosition::Interior => {
            let point = fam.natural_from_mean(&mu)?;
            ("interior", "null".to_string(), jnum_vec(&point.theta))
        }
        HullPosition::Boundary(face) => ("boundary", face_json(&handle, face), "null".to_string()),
        HullPosition::Outside => bail!("statistic mean {mu:?} is outside the closed hull"),
    };
    let report = jobj(&[
        ("family", jstr(&handle.name)),
        ("mean", jnum_vec(&mu)),
        ("position", jstr(position_name)),
        ("face", face_field),
        ("natural", natural_field),
        ("projection", projection.to_json_string()),
    ]);
    Ok((report, true))
}
