//! TOML problem descriptions.
//!
//! ```toml
//! n_q = 1
//! n_c = 1
//! alpha = 0.0
//! measurements = "exact:p=[1.0]"   # or a list of numbers
//!
//! [[regions]]
//! name = "upper"
//! half_plane = { normal = [1.0, 1.0], offset = 1.5 }
//!
//! [[state]]                        # F_0
//! [[state]]
//! scalar = [{ polynomial = [[2.0, 1, 0], [-2.0, 2, 0], [2.0, 0, 1], [-2.0, 0, 2]] }]
//!
//! [[measurement]]
//! vector = [{ value = [1.0, 0.0], region = "upper" }]
//! ```

use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use super::experiments::Experiment;
use crate::components::solve_all;
use crate::lsq::{assemble_b, Constraint, ProblemData};
use crate::mesh::{build_initial, DomainConfig, Region};
use crate::space::{Coefficient, DataPair, FeSpace, Mat2, Monomial, ScalarFn, ScalarTerm, VectorTerm};
use crate::{Error, Result};

const DEFAULT_EXACT_ELEMENTS: usize = 100_000;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    name: Option<String>,
    n_q: usize,
    n_c: usize,
    #[serde(default)]
    alpha: f64,
    #[serde(default)]
    regions: Vec<RegionSpec>,
    #[serde(default)]
    coefficient: Vec<CoefficientSpec>,
    state: Vec<DataSpec>,
    measurement: Vec<DataSpec>,
    measurements: MeasurementSpec,
    constraint: Option<BoxSpec>,
    /// Minimal element count of the mesh used to synthesize exact measurements.
    exact_elements: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionSpec {
    name: String,
    half_plane: Option<HalfPlaneSpec>,
    #[serde(rename = "box")]
    bbox: Option<BoxRegionSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HalfPlaneSpec {
    normal: [f64; 2],
    offset: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxRegionSpec {
    min: [f64; 2],
    max: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoefficientSpec {
    region: Option<String>,
    matrix: Mat2,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DataSpec {
    #[serde(default)]
    scalar: Vec<ScalarSpec>,
    #[serde(default)]
    vector: Vec<VectorSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScalarSpec {
    constant: Option<f64>,
    /// `[coeff, px, py]` triples.
    polynomial: Option<Vec<(f64, u32, u32)>>,
    sin_product: Option<SinSpec>,
    region: Option<String>,
    weight: Option<f64>,
    /// Extra factor `π^pi_power` on the weight.
    pi_power: Option<i32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SinSpec {
    amplitude: f64,
    freq_x: f64,
    freq_y: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VectorSpec {
    value: [f64; 2],
    region: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum MeasurementSpec {
    Values(Vec<f64>),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxSpec {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

pub fn load_problem(path: &Path) -> Result<Experiment> {
    let text = std::fs::read_to_string(path)?;
    let default_name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("problem");
    parse_problem(&text, default_name)
}

pub fn parse_problem(text: &str, default_name: &str) -> Result<Experiment> {
    let file: ProblemFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if file.state.len() != file.n_q + 1 {
        return Err(Error::Dimension { what: "state data entries", expected: file.n_q + 1, got: file.state.len() });
    }
    if file.measurement.len() != file.n_c {
        return Err(Error::Dimension { what: "measurement data entries", expected: file.n_c, got: file.measurement.len() });
    }
    let names: Vec<&str> = file.regions.iter().map(|r| r.name.as_str()).collect();
    for (k, n) in names.iter().enumerate() {
        if names[..k].contains(n) {
            return Err(Error::Parse(format!("region '{n}' defined twice")));
        }
    }
    let lookup = |name: &Option<String>| -> Result<Option<usize>> {
        match name {
            None => Ok(None),
            Some(n) => names
                .iter()
                .position(|r| r == n)
                .map(Some)
                .ok_or_else(|| Error::Parse(format!("unknown region '{n}'"))),
        }
    };

    let regions = file.regions.iter().map(region_from_spec).collect::<Result<Vec<_>>>()?;
    let domain = DomainConfig::with_regions(regions)?;

    let coefficient = if file.coefficient.is_empty() {
        Coefficient::identity()
    } else {
        let pieces = file
            .coefficient
            .iter()
            .map(|c| Ok((lookup(&c.region)?, c.matrix)))
            .collect::<Result<Vec<_>>>()?;
        Coefficient::new(pieces)?
    };
    let convert = |d: &DataSpec| -> Result<DataPair> {
        let scalar = d
            .scalar
            .iter()
            .map(|s| {
                Ok(ScalarTerm {
                    weight: s.weight.unwrap_or(1.0) * std::f64::consts::PI.powi(s.pi_power.unwrap_or(0)),
                    func: scalar_fn(s)?,
                    region: lookup(&s.region)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let vector = d
            .vector
            .iter()
            .map(|v| Ok(VectorTerm { value: v.value, region: lookup(&v.region)? }))
            .collect::<Result<Vec<_>>>()?;
        Ok(DataPair { scalar, vector })
    };
    let state_data = file.state.iter().map(&convert).collect::<Result<Vec<_>>>()?;
    let measure_data = file.measurement.iter().map(&convert).collect::<Result<Vec<_>>>()?;
    let constraint = match file.constraint {
        None => Constraint::Unconstrained,
        Some(b) => Constraint::Box { lower: b.lower, upper: b.upper },
    };

    let (measurements, exact_parameter) = match file.measurements {
        MeasurementSpec::Values(v) => (v, None),
        MeasurementSpec::Text(s) => {
            let p = parse_exact_spec(&s)?;
            if p.len() != file.n_q {
                return Err(Error::Dimension { what: "exact parameter", expected: file.n_q, got: p.len() });
            }
            let placeholder = ProblemData::new(
                coefficient.clone(),
                state_data.clone(),
                measure_data.clone(),
                file.alpha,
                vec![0.0; file.n_c],
                Constraint::Unconstrained,
            )?;
            let g = synthesize_measurements(
                &domain,
                &placeholder,
                &p,
                file.exact_elements.unwrap_or(DEFAULT_EXACT_ELEMENTS),
            )?;
            (g, Some(p))
        }
    };
    let problem = ProblemData::new(coefficient, state_data, measure_data, file.alpha, measurements, constraint)?;
    Ok(Experiment {
        name: file.name.unwrap_or_else(|| default_name.to_string()),
        domain,
        problem,
        exact_parameter,
    })
}

fn region_from_spec(r: &RegionSpec) -> Result<Region> {
    match (&r.half_plane, &r.bbox) {
        (Some(h), None) => Ok(Region::HalfPlane { normal: h.normal, offset: h.offset }),
        (None, Some(b)) => Ok(Region::Box { min: b.min, max: b.max }),
        _ => Err(Error::Parse(format!("region '{}' needs exactly one of half_plane or box", r.name))),
    }
}

fn scalar_fn(s: &ScalarSpec) -> Result<ScalarFn> {
    match (&s.constant, &s.polynomial, &s.sin_product) {
        (Some(c), None, None) => Ok(ScalarFn::Constant(*c)),
        (None, Some(p), None) => Ok(ScalarFn::Polynomial(
            p.iter().map(|&(coeff, px, py)| Monomial { coeff, px, py }).collect(),
        )),
        (None, None, Some(sp)) => Ok(ScalarFn::SinProduct {
            amplitude: sp.amplitude,
            freq_x: sp.freq_x,
            freq_y: sp.freq_y,
        }),
        _ => Err(Error::Parse(
            "scalar term needs exactly one of constant, polynomial or sin_product".into(),
        )),
    }
}

/// Parses `exact:p=[a, b, ...]`.
pub fn parse_exact_spec(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::Parse(format!("expected 'exact:p=[...]', got '{s}'"));
    let list = s
        .trim()
        .strip_prefix("exact:")
        .map(str::trim_start)
        .and_then(|r| r.strip_prefix("p"))
        .map(str::trim_start)
        .and_then(|r| r.strip_prefix('='))
        .map(str::trim)
        .and_then(|r| r.strip_prefix('['))
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(bad)?;
    let values = list
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<Vec<_>>>()?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(bad());
    }
    Ok(values)
}

/// `G(u_H(p))` on a uniformly refined mesh with at least `min_elements` elements.
pub fn synthesize_measurements(
    domain: &DomainConfig,
    problem: &ProblemData,
    p: &[f64],
    min_elements: usize,
) -> Result<Vec<f64>> {
    let mut mesh = build_initial(domain)?;
    while mesh.n_elements() < min_elements {
        mesh = mesh.refine_uniform().mesh;
    }
    let space = FeSpace::new(Arc::new(mesh));
    let comps = solve_all(&space, problem)?;
    let system = assemble_b(&comps, problem)?;
    let p = nalgebra::DVector::from_column_slice(p);
    let g = &system.g0 + system.b.transpose() * p;
    Ok(g.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_spec() {
        assert_eq!(parse_exact_spec("exact:p=[2, 0.5]").unwrap(), vec![2.0, 0.5]);
        assert_eq!(parse_exact_spec(" exact: p = [1.0] ").unwrap(), vec![1.0]);
        assert!(parse_exact_spec("p=[1]").is_err());
        assert!(parse_exact_spec("exact:p=[1,x]").is_err());
        assert!(parse_exact_spec("exact:p=[]").is_err());
    }

    const SINGLE: &str = r#"
n_q = 1
n_c = 1
measurements = [0.011458333333333333]

[[regions]]
name = "T1"
half_plane = { normal = [1.0, 1.0], offset = 1.5 }

[[state]]
[[state]]
scalar = [{ polynomial = [[2.0, 1, 0], [-2.0, 2, 0], [2.0, 0, 1], [-2.0, 0, 2]] }]

[[measurement]]
vector = [{ value = [1.0, 0.0], region = "T1" }]
"#;

    #[test]
    fn parses_single_parameter_problem() {
        let e = parse_problem(SINGLE, "single").unwrap();
        let builtin = super::super::experiments::single();
        assert_eq!(e.name, "single");
        assert_eq!(e.domain.regions, builtin.domain.regions[..1]);
        assert_eq!(e.problem.state_data, builtin.problem.state_data);
        assert_eq!(e.problem.measure_data, builtin.problem.measure_data);
        assert_eq!(e.problem.measurements, vec![11.0 / 960.0]);
        assert!(e.exact_parameter.is_none());
    }

    #[test]
    fn rejects_inconsistent_files() {
        let wrong_count = SINGLE.replace("n_c = 1", "n_c = 2");
        assert!(matches!(parse_problem(&wrong_count, "x"), Err(Error::Dimension { .. })));
        let unknown_region = SINGLE.replace("region = \"T1\"", "region = \"T9\"");
        assert!(matches!(parse_problem(&unknown_region, "x"), Err(Error::Parse(_))));
        assert!(matches!(parse_problem("n_q = ", "x"), Err(Error::Parse(_))));
    }

    #[test]
    fn synthesizes_exact_measurements() {
        let text = SINGLE
            .replace("measurements = [0.011458333333333333]", "measurements = \"exact:p=[1.0]\"\nexact_elements = 16000");
        let e = parse_problem(&text, "x").unwrap();
        assert_eq!(e.exact_parameter, Some(vec![1.0]));
        assert!((e.problem.measurements[0] - 11.0 / 960.0).abs() < 2e-4);
    }
}
