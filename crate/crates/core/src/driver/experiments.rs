//! Built-in benchmark problems on the unit square with identity coefficient.

use std::f64::consts::PI;

use crate::lsq::{Constraint, ProblemData};
use crate::mesh::{DomainConfig, Region};
use crate::space::{Coefficient, DataPair, Monomial, ScalarFn};
use crate::Result;

/// A problem together with its domain and, when known, the true parameter.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub name: String,
    pub domain: DomainConfig,
    pub problem: ProblemData,
    pub exact_parameter: Option<Vec<f64>>,
}

/// Region indices of [`benchmark_domain`].
pub const T1: usize = 0;
pub const T2: usize = 1;
pub const T3: usize = 2;

/// `T1 = {x1 + x2 > 3/2}`, `T2 = {x1 + x2 < 1/2}`, `T3 = (1/4, 3/4)²`.
pub fn benchmark_domain() -> DomainConfig {
    DomainConfig::with_regions(vec![
        Region::HalfPlane { normal: [1.0, 1.0], offset: 1.5 },
        Region::HalfPlane { normal: [-1.0, -1.0], offset: -0.5 },
        Region::Box { min: [0.25, 0.25], max: [0.75, 0.75] },
    ])
    .expect("benchmark regions are valid")
}

/// `2x(1-x) + 2y(1-y)`, the load of `x(1-x)y(1-y)`.
pub fn bubble_load() -> ScalarFn {
    let m = |coeff, px, py| Monomial { coeff, px, py };
    ScalarFn::Polynomial(vec![m(2.0, 1, 0), m(-2.0, 2, 0), m(2.0, 0, 1), m(-2.0, 0, 2)])
}

/// `5π² sin(πx) sin(2πy)`, the load of `sin(πx) sin(2πy)`.
pub fn sine_load() -> ScalarFn {
    ScalarFn::SinProduct { amplitude: 5.0 * PI * PI, freq_x: 1.0, freq_y: 2.0 }
}

/// One parameter, one flux measurement over `T1`; the true parameter is 1.
pub fn single() -> Experiment {
    let problem = ProblemData::new(
        Coefficient::identity(),
        vec![DataPair::zero(), DataPair::scalar(bubble_load(), None)],
        vec![DataPair::vector([1.0, 0.0], Some(T1))],
        0.0,
        vec![11.0 / 960.0],
        Constraint::Unconstrained,
    )
    .expect("valid built-in problem");
    Experiment {
        name: "single".into(),
        domain: benchmark_domain(),
        problem,
        exact_parameter: Some(vec![1.0]),
    }
}

/// Two parameters, three measurements; the true parameter is `(2, 1/2)`.
pub fn multi() -> Experiment {
    let problem = ProblemData::new(
        Coefficient::identity(),
        vec![DataPair::zero(), DataPair::scalar(bubble_load(), None), DataPair::scalar(sine_load(), None)],
        vec![
            DataPair::vector([-1.0, 0.0], Some(T2)),
            DataPair::vector([1.0, 0.0], Some(T1)),
            DataPair::scalar(ScalarFn::Constant(1.0), Some(T3)),
        ],
        0.0,
        multi_exact_measurements().to_vec(),
        Constraint::Unconstrained,
    )
    .expect("valid built-in problem");
    Experiment {
        name: "multi".into(),
        domain: benchmark_domain(),
        problem,
        exact_parameter: Some(vec![2.0, 0.5]),
    }
}

/// Noise-free measurements of the two-parameter problem.
pub fn multi_exact_measurements() -> [f64; 3] {
    [
        (11.0 * PI + 160.0) / (480.0 * PI),
        (11.0 * PI - 160.0) / (480.0 * PI),
        121.0 / 4608.0,
    ]
}

pub fn builtin(name: &str) -> Option<Experiment> {
    match name {
        "single" => Some(single()),
        "multi" => Some(multi()),
        _ => None,
    }
}

impl Experiment {
    pub fn with_measurements(&self, measurements: Vec<f64>) -> Result<Self> {
        Ok(Experiment { problem: self.problem.with_measurements(measurements)?, ..self.clone() })
    }
}
