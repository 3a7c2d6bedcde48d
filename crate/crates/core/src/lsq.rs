//! Discrete least-squares system `(B Bᵀ + αI) p = B (G* - G(u_0))` and
//! parameter recovery, optionally under box constraints.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::components::ComponentSolutions;
use crate::space::{Coefficient, DataPair};
use crate::{Error, Result};

/// Relative tolerance of the dual computation `G_j(u_i) = b(e_i, z_j)` of the entries of `B`.
pub const DUAL_AGREEMENT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum Constraint {
    Unconstrained,
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

impl Constraint {
    fn project(&self, p: &mut DVector<f64>) {
        if let Constraint::Box { lower, upper } = self {
            for i in 0..p.len() {
                p[i] = p[i].clamp(lower[i], upper[i]);
            }
        }
    }

    pub fn contains(&self, p: &DVector<f64>) -> bool {
        match self {
            Constraint::Unconstrained => true,
            Constraint::Box { lower, upper } => {
                (0..p.len()).all(|i| p[i] >= lower[i] && p[i] <= upper[i])
            }
        }
    }
}

/// Linear-quadratic parameter estimation problem.
///
/// `state_data[0]` is the density of `F_0`, `state_data[i]` for `i >= 1`
/// that of `b(e_i, ·)`. `measure_data[j]` is the density of `G_{j+1}`.
#[derive(Clone, Debug)]
pub struct ProblemData {
    pub coefficient: Coefficient,
    pub state_data: Vec<DataPair>,
    pub measure_data: Vec<DataPair>,
    pub alpha: f64,
    pub measurements: Vec<f64>,
    pub constraint: Constraint,
}

impl ProblemData {
    pub fn new(
        coefficient: Coefficient,
        state_data: Vec<DataPair>,
        measure_data: Vec<DataPair>,
        alpha: f64,
        measurements: Vec<f64>,
        constraint: Constraint,
    ) -> Result<Self> {
        if state_data.len() < 2 {
            return Err(Error::Config(
                "need F_0 and at least one parameter density".into(),
            ));
        }
        if measure_data.is_empty() {
            return Err(Error::Config("need at least one measurement functional".into()));
        }
        if measurements.len() != measure_data.len() {
            return Err(Error::Dimension {
                what: "measurements",
                expected: measure_data.len(),
                got: measurements.len(),
            });
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be finite and >= 0, got {alpha}")));
        }
        let n_q = state_data.len() - 1;
        if let Constraint::Box { lower, upper } = &constraint {
            if lower.len() != n_q || upper.len() != n_q {
                return Err(Error::Dimension { what: "box bounds", expected: n_q, got: lower.len() });
            }
            if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
                return Err(Error::Config("box bounds must satisfy lower <= upper".into()));
            }
        }
        Ok(Self { coefficient, state_data, measure_data, alpha, measurements, constraint })
    }

    pub fn n_q(&self) -> usize {
        self.state_data.len() - 1
    }

    pub fn n_c(&self) -> usize {
        self.measure_data.len()
    }

    pub fn with_measurements(&self, measurements: Vec<f64>) -> Result<Self> {
        Self::new(
            self.coefficient.clone(),
            self.state_data.clone(),
            self.measure_data.clone(),
            self.alpha,
            measurements,
            self.constraint.clone(),
        )
    }
}

#[derive(Clone, Debug)]
pub struct LsqSystem {
    /// `B_ij = G_j(u_{H,i})`, `n_Q × n_C`.
    pub b: DMatrix<f64>,
    /// `G(u_{H,0})`.
    pub g0: DVector<f64>,
    pub measurements: DVector<f64>,
    pub alpha: f64,
    /// `B (G* - G(u_{H,0}))`.
    pub rhs: DVector<f64>,
    pub p_star: Option<DVector<f64>>,
    pub residual_norm: Option<f64>,
}

impl LsqSystem {
    pub fn from_parts(b: DMatrix<f64>, g0: DVector<f64>, measurements: DVector<f64>, alpha: f64) -> Result<Self> {
        if g0.len() != b.ncols() || measurements.len() != b.ncols() {
            return Err(Error::Dimension {
                what: "least-squares data",
                expected: b.ncols(),
                got: measurements.len(),
            });
        }
        let rhs = &b * (&measurements - &g0);
        Ok(Self { b, g0, measurements, alpha, rhs, p_star: None, residual_norm: None })
    }

    pub fn n_q(&self) -> usize {
        self.b.nrows()
    }

    pub fn hessian(&self) -> DMatrix<f64> {
        &self.b * self.b.transpose() + DMatrix::identity(self.n_q(), self.n_q()) * self.alpha
    }

    /// `r_H(p) = Bᵀp + G(u_{H,0}) - G*`.
    pub fn residual(&self, p: &DVector<f64>) -> DVector<f64> {
        self.b.transpose() * p + &self.g0 - &self.measurements
    }

    /// `J_H(p) = ½‖r_H(p)‖² + ½α‖p‖²`.
    pub fn evaluate_j(&self, p: &DVector<f64>) -> f64 {
        0.5 * self.residual(p).norm_squared() + 0.5 * self.alpha * p.norm_squared()
    }

    /// `(B Bᵀ + αI) p - B (G* - G(u_{H,0}))`.
    pub fn gradient(&self, p: &DVector<f64>) -> DVector<f64> {
        self.hessian() * p - &self.rhs
    }

    pub fn solve_parameter(&mut self, constraint: &Constraint) -> Result<DVector<f64>> {
        let p = match constraint {
            Constraint::Unconstrained => self.solve_unconstrained()?,
            Constraint::Box { lower, upper } => {
                if lower.len() != self.n_q() || upper.len() != self.n_q() {
                    return Err(Error::Dimension { what: "box bounds", expected: self.n_q(), got: lower.len() });
                }
                self.solve_box(constraint)?
            }
        };
        self.residual_norm = Some(self.residual(&p).norm());
        self.p_star = Some(p.clone());
        Ok(p)
    }

    fn solve_unconstrained(&self) -> Result<DVector<f64>> {
        let h = self.hessian();
        let eig = SymmetricEigen::new(h.clone());
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        if !(max > 0.0) || min <= 1e-14 * max {
            return Err(Error::RankDeficient);
        }
        let chol = h.cholesky().ok_or(Error::RankDeficient)?;
        Ok(chol.solve(&self.rhs))
    }

    /// Projected gradient with step `1/λ_max(B Bᵀ + αI)`, iterated to a fixed point.
    fn solve_box(&self, constraint: &Constraint) -> Result<DVector<f64>> {
        const MAX_ITER: usize = 10_000_000;
        let h = self.hessian();
        let lipschitz = SymmetricEigen::new(h.clone()).eigenvalues.max();
        let mut p = self.solve_unconstrained().unwrap_or_else(|_| DVector::zeros(self.n_q()));
        constraint.project(&mut p);
        if !(lipschitz > 0.0) {
            return Ok(p);
        }
        let step = 1.0 / lipschitz;
        for _ in 0..MAX_ITER {
            let mut next = &p - (&h * &p - &self.rhs) * step;
            constraint.project(&mut next);
            let change = (&next - &p).amax();
            p = next;
            if change <= 1e-14 * p.amax().max(1.0) {
                return Ok(p);
            }
        }
        Err(Error::Solver { iterations: MAX_ITER, residual: (&h * &p - &self.rhs).amax() })
    }
}

/// Fills `B` from the state components and checks it against the co-state route.
pub fn assemble_b(comps: &ComponentSolutions, problem: &ProblemData) -> Result<LsqSystem> {
    let space = comps.space();
    let (n_q, n_c) = (problem.n_q(), problem.n_c());
    if comps.state.len() != n_q + 1 || comps.costate.len() != n_c {
        return Err(Error::Dimension {
            what: "component solutions",
            expected: n_q + 1 + n_c,
            got: comps.state.len() + comps.costate.len(),
        });
    }
    let b = DMatrix::from_fn(n_q, n_c, |i, j| {
        space.evaluate_functional(&problem.measure_data[j], &comps.state[i + 1])
    });
    let via_costate = DMatrix::from_fn(n_q, n_c, |i, j| {
        comps.state_loads[i + 1]
            .iter()
            .zip(comps.costate[j].coeffs())
            .map(|(a, b)| a * b)
            .sum::<f64>()
    });
    let scale = b.amax().max(via_costate.amax());
    let gap = (&b - &via_costate).amax();
    if gap > DUAL_AGREEMENT_TOL * scale {
        return Err(Error::Consistency(format!(
            "B entries disagree between state and co-state evaluation: {gap:e} (scale {scale:e})"
        )));
    }
    let g0 = DVector::from_fn(n_c, |j, _| {
        space.evaluate_functional(&problem.measure_data[j], &comps.state[0])
    });
    LsqSystem::from_parts(b, g0, DVector::from_vec(problem.measurements.clone()), problem.alpha)
}
