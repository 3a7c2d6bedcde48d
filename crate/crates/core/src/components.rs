//! State components `u_{H,0..nQ}` and co-state components `z_{H,1..nC}`.
//!
//! The bilinear form is symmetric, so all `n_Q + 1 + n_C` problems share one
//! stiffness matrix and one solver setup.

use std::sync::Arc;

use rayon::prelude::*;

use crate::lsq::ProblemData;
use crate::space::{CsrMatrix, DiscreteFunction, FeSpace, SpdSolver};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct ComponentSolutions {
    space: Arc<FeSpace>,
    pub stiffness: CsrMatrix,
    /// `u_{H,0}, u_{H,1}, .., u_{H,nQ}`.
    pub state: Vec<DiscreteFunction>,
    /// `z_{H,1}, .., z_{H,nC}`.
    pub costate: Vec<DiscreteFunction>,
    /// Load vectors of `F_0, b(e_1, ·), ..`.
    pub state_loads: Vec<Vec<f64>>,
    /// Load vectors of `G_1, .., G_nC`.
    pub costate_loads: Vec<Vec<f64>>,
}

/// Solves every component problem on `space`.
pub fn solve_all(space: &Arc<FeSpace>, problem: &ProblemData) -> Result<ComponentSolutions> {
    let stiffness = space.assemble_stiffness(&problem.coefficient)?;
    let loads: Vec<Vec<f64>> = problem
        .state_data
        .par_iter()
        .chain(problem.measure_data.par_iter())
        .map(|d| space.assemble_load(d))
        .collect();
    let n_total = loads.len();
    let solutions: Vec<Vec<f64>> = if space.n_dofs() == 0 {
        vec![Vec::new(); n_total]
    } else {
        let solver = SpdSolver::new(&stiffness)?;
        loads
            .par_iter()
            .map(|rhs| solver.solve(rhs))
            .collect::<Result<_>>()?
    };
    let mut functions = solutions
        .into_iter()
        .map(|c| DiscreteFunction::new(Arc::clone(space), c))
        .collect::<Result<Vec<_>>>()?;
    let costate = functions.split_off(problem.state_data.len());
    let mut loads = loads;
    let costate_loads = loads.split_off(problem.state_data.len());
    Ok(ComponentSolutions {
        space: Arc::clone(space),
        stiffness,
        state: functions,
        costate,
        state_loads: loads,
        costate_loads,
    })
}

impl ComponentSolutions {
    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn n_q(&self) -> usize {
        self.state.len() - 1
    }

    pub fn n_c(&self) -> usize {
        self.costate.len()
    }

    /// `u_H(p) = u_{H,0} + Σ p_i u_{H,i}`.
    pub fn combine_state(&self, p: &[f64]) -> Result<DiscreteFunction> {
        if p.len() != self.n_q() {
            return Err(Error::Dimension { what: "parameter", expected: self.n_q(), got: p.len() });
        }
        let parts: Vec<(f64, &DiscreteFunction)> = std::iter::once(1.0)
            .chain(p.iter().copied())
            .zip(&self.state)
            .collect();
        DiscreteFunction::linear_combination(&self.space, &parts)
    }

    /// `z_H(p) = Σ r_j z_{H,j}` for the residual vector `r`.
    pub fn combine_costate(&self, residual: &[f64]) -> Result<DiscreteFunction> {
        if residual.len() != self.n_c() {
            return Err(Error::Dimension { what: "residual", expected: self.n_c(), got: residual.len() });
        }
        let parts: Vec<(f64, &DiscreteFunction)> =
            residual.iter().copied().zip(&self.costate).collect();
        DiscreteFunction::linear_combination(&self.space, &parts)
    }

    /// Coefficient vectors of all components, state first.
    pub fn coefficient_vectors(&self) -> impl Iterator<Item = &[f64]> {
        self.state.iter().chain(&self.costate).map(|f| f.coeffs())
    }

    /// Largest `‖K x - b‖∞ / ‖b‖∞` over all components (zero loads skipped).
    pub fn max_galerkin_residual(&self) -> f64 {
        self.coefficient_vectors()
            .zip(self.state_loads.iter().chain(&self.costate_loads))
            .map(|(x, b)| {
                let b_inf = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if b_inf == 0.0 {
                    return 0.0;
                }
                let kx = self.stiffness.mul_vec(x);
                kx.iter().zip(b).fold(0.0f64, |m, (a, c)| m.max((a - c).abs())) / b_inf
            })
            .fold(0.0, f64::max)
    }
}
