//! Region-wise problem data: scalar densities, piecewise constant vector
//! densities and the piecewise constant coefficient matrix.

use std::f64::consts::PI;

use crate::{Error, Result};

pub type Mat2 = [[f64; 2]; 2];

/// `None` selects the whole domain, `Some(r)` the elements tagged with region `r`.
pub type RegionSelector = Option<usize>;

pub fn selects(selector: RegionSelector, tag: u32) -> bool {
    match selector {
        None => true,
        Some(r) => tag & (1 << r) != 0,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub coeff: f64,
    pub px: u32,
    pub py: u32,
}

/// Smooth scalar functions on the unit square.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalarFn {
    Constant(f64),
    Polynomial(Vec<Monomial>),
    /// `amplitude * sin(freq_x π x) * sin(freq_y π y)`.
    SinProduct { amplitude: f64, freq_x: f64, freq_y: f64 },
}

impl ScalarFn {
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        match self {
            ScalarFn::Constant(c) => *c,
            ScalarFn::Polynomial(terms) => terms
                .iter()
                .map(|m| m.coeff * x[0].powi(m.px as i32) * x[1].powi(m.py as i32))
                .sum(),
            ScalarFn::SinProduct { amplitude, freq_x, freq_y } => {
                amplitude * (freq_x * PI * x[0]).sin() * (freq_y * PI * x[1]).sin()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarTerm {
    pub weight: f64,
    pub func: ScalarFn,
    pub region: RegionSelector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorTerm {
    pub value: [f64; 2],
    pub region: RegionSelector,
}

/// Density pair `(f, f⃗)` of a functional `v ↦ ∫ f v - f⃗ · ∇v`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DataPair {
    pub scalar: Vec<ScalarTerm>,
    pub vector: Vec<VectorTerm>,
}

impl DataPair {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn scalar(func: ScalarFn, region: RegionSelector) -> Self {
        Self { scalar: vec![ScalarTerm { weight: 1.0, func, region }], vector: Vec::new() }
    }

    pub fn vector(value: [f64; 2], region: RegionSelector) -> Self {
        Self { scalar: Vec::new(), vector: vec![VectorTerm { value, region }] }
    }

    pub fn is_zero(&self) -> bool {
        self.scalar.iter().all(|t| t.weight == 0.0 || t.func == ScalarFn::Constant(0.0))
            && self.vector.iter().all(|t| t.value == [0.0, 0.0])
    }

    pub fn has_scalar_part(&self) -> bool {
        self.scalar.iter().any(|t| t.weight != 0.0 && t.func != ScalarFn::Constant(0.0))
    }

    pub fn scalar_at(&self, tag: u32, x: [f64; 2]) -> f64 {
        self.scalar
            .iter()
            .filter(|t| selects(t.region, tag))
            .map(|t| t.weight * t.func.eval(x))
            .sum()
    }

    pub fn vector_at(&self, tag: u32) -> [f64; 2] {
        self.vector
            .iter()
            .filter(|t| selects(t.region, tag))
            .fold([0.0, 0.0], |acc, t| [acc[0] + t.value[0], acc[1] + t.value[1]])
    }

    /// `Σ_k c_k d_k`; terms with zero weight are dropped.
    pub fn linear_combination(parts: &[(f64, &DataPair)]) -> DataPair {
        let mut out = DataPair::zero();
        for &(c, d) in parts.iter().filter(|(c, _)| *c != 0.0) {
            out.scalar.extend(d.scalar.iter().map(|t| ScalarTerm { weight: c * t.weight, ..t.clone() }));
            out.vector.extend(
                d.vector
                    .iter()
                    .map(|t| VectorTerm { value: [c * t.value[0], c * t.value[1]], region: t.region }),
            );
        }
        out
    }

    pub fn max_region(&self) -> Option<usize> {
        self.scalar
            .iter()
            .filter_map(|t| t.region)
            .chain(self.vector.iter().filter_map(|t| t.region))
            .max()
    }
}

/// Piecewise constant symmetric positive definite coefficient. The last
/// matching piece wins.
#[derive(Clone, Debug, PartialEq)]
pub struct Coefficient {
    pieces: Vec<(RegionSelector, Mat2)>,
}

fn check_spd(m: &Mat2) -> Result<()> {
    let sym = (m[0][1] - m[1][0]).abs() <= 1e-14 * (m[0][1].abs() + m[1][0].abs() + 1.0);
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if !sym {
        return Err(Error::Data(format!("coefficient {m:?} is not symmetric")));
    }
    if !(m[0][0] > 0.0 && det > 0.0) {
        return Err(Error::Data(format!("coefficient {m:?} is not positive definite")));
    }
    Ok(())
}

impl Coefficient {
    pub fn new(pieces: Vec<(RegionSelector, Mat2)>) -> Result<Self> {
        for (_, m) in &pieces {
            check_spd(m)?;
        }
        Ok(Self { pieces })
    }

    pub fn identity() -> Self {
        Self { pieces: vec![(None, [[1.0, 0.0], [0.0, 1.0]])] }
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(
            self.pieces
                .iter()
                .map(|(r, m)| (*r, [[s * m[0][0], s * m[0][1]], [s * m[1][0], s * m[1][1]]]))
                .collect(),
        )
    }

    pub fn matrix_for(&self, tag: u32) -> Result<Mat2> {
        self.pieces
            .iter()
            .rev()
            .find(|(r, _)| selects(*r, tag))
            .map(|(_, m)| *m)
            .ok_or_else(|| Error::Data(format!("coefficient undefined on region tag {tag:#b}")))
    }
}

pub fn mat_vec(m: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

pub fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}
