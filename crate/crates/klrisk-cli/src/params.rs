//! Family resolution and the display-scale parameterizations the CLI accepts:
//! success probability for binomial, allele probability for Hardy-Weinberg,
//! rate for Poisson, and cell-probability pairs for the trinomial. Natural
//! coordinates are used internally throughout.

use anyhow::{anyhow, bail, Context, Result};

use crate::json::{jnum, jobj};
use klrisk::{ExponentialFamily, FamilyKind, FamilySpec};

pub struct FamilyHandle {
    pub fam: ExponentialFamily,
    /// Present for catalog families; JSON-loaded families have no display
    /// scale and use natural coordinates directly.
    pub spec: Option<FamilySpec>,
    pub name: String,
}

/// Accepts a catalog name (`binomial:6`, `poisson:60`, `trinomial:6`, `hw:6`)
/// or a path to a family JSON file.
pub fn resolve_family(name_or_path: &str) -> Result<FamilyHandle> {
    if let Ok(spec) = FamilySpec::parse(name_or_path) {
        return Ok(FamilyHandle {
            fam: spec.build(),
            spec: Some(spec),
            name: spec.name(),
        });
    }
    let text = std::fs::read_to_string(name_or_path)
        .with_context(|| format!("family {name_or_path:?} is neither kind:size nor a readable file"))?;
    let fam = ExponentialFamily::from_json_str(&text)
        .with_context(|| format!("invalid family file {name_or_path:?}"))?;
    Ok(FamilyHandle {
        fam,
        spec: None,
        name: name_or_path.to_string(),
    })
}

/// The enumeration cap, overridable through `KLRISK_MAX_ENUM`.
pub fn enumeration_cap() -> Result<usize> {
    match std::env::var("KLRISK_MAX_ENUM") {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| anyhow!("KLRISK_MAX_ENUM must be a positive integer, got {text:?}")),
        Err(_) => Ok(klrisk::DEFAULT_ENUM_CAP),
    }
}

/// Convert display-scale values to natural coordinates.
pub fn natural_from_display(handle: &FamilyHandle, vals: &[f64]) -> Result<Vec<f64>> {
    let Some(spec) = handle.spec else {
        // no display scale: values are already natural coordinates
        if vals.len() != handle.fam.dim() {
            bail!("expected {} natural coordinates", handle.fam.dim());
        }
        return Ok(vals.to_vec());
    };
    match spec.kind {
        FamilyKind::Binomial | FamilyKind::HardyWeinberg => {
            let [p] = vals else {
                bail!("{} takes one probability in (0,1)", handle.name);
            };
            if *p <= 0.0 || *p >= 1.0 || p.is_nan() {
                bail!("probability {p} is outside (0,1)");
            }
            Ok(vec![(p / (1.0 - p)).ln()])
        }
        FamilyKind::PoissonTruncated => {
            let [lambda] = vals else {
                bail!("{} takes one rate lambda > 0", handle.name);
            };
            if *lambda <= 0.0 || lambda.is_nan() {
                bail!("rate {lambda} must be positive");
            }
            Ok(vec![lambda.ln()])
        }
        FamilyKind::Trinomial => {
            let [p1, p2] = vals else {
                bail!("{} takes a pi1/pi2 pair", handle.name);
            };
            let p3 = 1.0 - p1 - p2;
            if !(*p1 > 0.0 && *p2 > 0.0 && p3 > 0.0) {
                bail!("cell probabilities ({p1}, {p2}, {p3}) must be positive");
            }
            Ok(vec![(p1 / p3).ln(), (p2 / p3).ln()])
        }
    }
}

/// Parse a display-scale grid: entries separated by commas, vector components
/// within an entry separated by slashes (e.g. `0.2/0.3,0.4/0.3`).
pub fn parse_grid(handle: &FamilyHandle, text: &str) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for entry in text.split(',') {
        let vals: Vec<f64> = entry
            .split('/')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| anyhow!("bad grid value {v:?}"))
            })
            .collect::<Result<_>>()?;
        out.push(natural_from_display(handle, &vals)?);
    }
    if out.is_empty() {
        bail!("grid is empty");
    }
    Ok(out)
}

/// The default interior generator grid in display scale.
pub fn default_display_grid(spec: &FamilySpec) -> Vec<Vec<f64>> {
    match spec.kind {
        FamilyKind::Binomial | FamilyKind::HardyWeinberg => {
            (1..=9).map(|i| vec![i as f64 / 10.0]).collect()
        }
        FamilyKind::PoissonTruncated => [0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0]
            .iter()
            .map(|&l| vec![l])
            .collect(),
        FamilyKind::Trinomial => {
            let marks = [0.2, 1.0 / 3.0, 0.45];
            let mut grid = Vec::new();
            for &a in &marks {
                for &b in &marks {
                    grid.push(vec![a, b]);
                }
            }
            grid
        }
    }
}

/// The default generator grid in natural coordinates.
pub fn default_grid(handle: &FamilyHandle, points: usize) -> Result<Vec<Vec<f64>>> {
    match handle.spec {
        Some(spec) => default_display_grid(&spec)
            .iter()
            .map(|v| natural_from_display(handle, v))
            .collect(),
        None => Ok(klrisk::default_natural_grid(&handle.fam, points)),
    }
}

/// Human label for one grid entry (display scale for catalogs).
pub fn display_label(handle: &FamilyHandle, natural: &[f64]) -> String {
    match handle.spec.map(|s| s.kind) {
        Some(FamilyKind::Binomial) | Some(FamilyKind::HardyWeinberg) => {
            let p = 1.0 / (1.0 + (-natural[0]).exp());
            format!("{p}")
        }
        Some(FamilyKind::PoissonTruncated) => format!("{}", natural[0].exp()),
        Some(FamilyKind::Trinomial) => {
            let (a, b) = (natural[0].exp(), natural[1].exp());
            let z = 1.0 + a + b;
            format!("{}/{}", a / z, b / z)
        }
        None => natural
            .iter()
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join("/"),
    }
}

/// Display fields of a fitted member: probabilities, odds, rates, and their
/// boundary markers (odds 0 / inf, log-odds -inf / inf), per family kind.
pub fn display_fields(
    handle: &FamilyHandle,
    mean: &[f64],
    natural: Option<&[f64]>,
    boundary: bool,
) -> String {
    let Some(spec) = handle.spec else {
        return jobj(&[("mean", crate::json::jnum_vec(mean))]);
    };
    match spec.kind {
        FamilyKind::Binomial | FamilyKind::HardyWeinberg => {
            let scale = match spec.kind {
                FamilyKind::Binomial => spec.size as f64,
                _ => 2.0 * spec.size as f64,
            };
            let p = mean[0] / scale;
            let odds = p / (1.0 - p); // +inf at p = 1
            let log_odds = odds.ln(); // -inf at p = 0
            jobj(&[
                ("theta_prob", jnum(p)),
                ("odds", jnum(odds)),
                ("log_odds", jnum(log_odds)),
                ("boundary", crate::json::jbool(boundary)),
            ])
        }
        FamilyKind::PoissonTruncated => {
            let lambda = match natural {
                Some(theta) => theta[0].exp(),
                // degenerate boundary fits: rate 0 below, +inf above
                None => {
                    if mean[0] <= klrisk::BOUNDARY_TOL {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                }
            };
            jobj(&[
                ("lambda", jnum(lambda)),
                ("boundary", crate::json::jbool(boundary)),
            ])
        }
        FamilyKind::Trinomial => {
            let total = spec.size as f64;
            let pi = [
                mean[0] / total,
                mean[1] / total,
                1.0 - mean[0] / total - mean[1] / total,
            ];
            jobj(&[
                ("pi", crate::json::jnum_vec(&pi)),
                ("boundary", crate::json::jbool(boundary)),
            ])
        }
    }
}
