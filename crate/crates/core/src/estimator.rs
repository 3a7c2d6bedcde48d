//! Residual error indicators for the state and co-state components and the
//! weighted product indicator that drives refinement.
//!
//! For a P1 function `v` and data `(f, f⃗)` with `f⃗` and `A` constant on
//! each element, the squared indicator of `T` is
//!
//! ```text
//! η(T, v)² = h_T² ‖f‖²_{L²(T)} + h_T Σ_{E ⊂ ∂T ∩ Ω} |E| ⟦(f⃗ + A∇v)·n_E⟧²
//! ```
//!
//! with `h_T = |T|^{1/2}`; the divergence in the volume residual vanishes
//! elementwise. Every interior edge contributes to both adjacent elements.

use rayon::prelude::*;

use crate::components::ComponentSolutions;
use crate::lsq::ProblemData;
use crate::space::data::{dot, mat_vec};
use crate::space::{quadrature, Coefficient, DataPair, DiscreteFunction, FeSpace, Mat2};
use crate::Result;

/// Residual estimator for one coefficient on one space.
pub struct ResidualEstimator<'a> {
    space: &'a FeSpace,
    matrices: Vec<Mat2>,
}

impl<'a> ResidualEstimator<'a> {
    pub fn new(space: &'a FeSpace, coefficient: &Coefficient) -> Result<Self> {
        let mesh = space.mesh();
        let matrices = (0..mesh.n_elements())
            .map(|t| coefficient.matrix_for(mesh.region_tag(t)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { space, matrices })
    }

    fn volume_sq(&self, data: &DataPair, t: usize) -> f64 {
        if !data.has_scalar_part() {
            return 0.0;
        }
        let mesh = self.space.mesh();
        let tag = mesh.region_tag(t);
        let area = self.space.area(t);
        let l2_sq = quadrature::integrate(&mesh.element_points(t), area, |x| {
            data.scalar_at(tag, x).powi(2)
        });
        area * l2_sq
    }

    fn flux(&self, data: &DataPair, v: &DiscreteFunction, values: &[f64], t: usize) -> [f64; 2] {
        let fv = data.vector_at(self.space.mesh().region_tag(t));
        let ag = mat_vec(&self.matrices[t], v.gradient_with(values, t));
        [fv[0] + ag[0], fv[1] + ag[1]]
    }

    /// `|E| ⟦flux·n⟧²` for edge `e`, zero on the boundary.
    fn edge_jump_sq(&self, e: usize, fluxes: impl Fn(usize) -> [f64; 2]) -> f64 {
        let edge = &self.space.topology().edges[e];
        if edge.is_boundary() {
            return 0.0;
        }
        let mesh = self.space.mesh();
        let a = mesh.vertex(edge.vertices[0] as usize);
        let b = mesh.vertex(edge.vertices[1] as usize);
        let tangent = [b[0] - a[0], b[1] - a[1]];
        let length = dot(tangent, tangent).sqrt();
        let normal = [tangent[1] / length, -tangent[0] / length];
        let (f1, f2) = (fluxes(edge.elements[0] as usize), fluxes(edge.elements[1] as usize));
        let jump = dot([f1[0] - f2[0], f1[1] - f2[1]], normal);
        length * jump * jump
    }

    /// Squared indicators `η(T, v)²` of all elements.
    pub fn indicators_sq(&self, data: &DataPair, v: &DiscreteFunction) -> Vec<f64> {
        let mesh = self.space.mesh();
        let values = v.vertex_values();
        let fluxes: Vec<[f64; 2]> =
            (0..mesh.n_elements()).map(|t| self.flux(data, v, &values, t)).collect();
        let mut out: Vec<f64> = (0..mesh.n_elements()).map(|t| self.volume_sq(data, t)).collect();
        for (e, edge) in self.space.topology().edges.iter().enumerate() {
            if edge.is_boundary() {
                continue;
            }
            let jump_sq = self.edge_jump_sq(e, |t| fluxes[t]);
            for &t in &edge.elements {
                out[t as usize] += self.space.area(t as usize).sqrt() * jump_sq;
            }
        }
        out
    }

    /// Squared indicator of a single element.
    pub fn indicator_sq(&self, data: &DataPair, v: &DiscreteFunction, t: usize) -> f64 {
        let values = v.vertex_values();
        let h = self.space.area(t).sqrt();
        let jumps: f64 = self.space.topology().element_edges[t]
            .iter()
            .map(|&e| self.edge_jump_sq(e as usize, |s| self.flux(data, v, &values, s)))
            .sum();
        self.volume_sq(data, t) + h * jumps
    }
}

/// `η(T, v)²` for a single element `t`.
pub fn element_indicator(
    space: &FeSpace,
    coefficient: &Coefficient,
    data: &DataPair,
    v: &DiscreteFunction,
    t: usize,
) -> Result<f64> {
    Ok(ResidualEstimator::new(space, coefficient)?.indicator_sq(data, v, t))
}

/// Squared indicators of all state and co-state components and the weighted indicator.
#[derive(Clone, Debug)]
pub struct IndicatorField {
    /// `η_{H,i}(T)²`, one row per state component `i = 0..=n_Q`.
    pub eta_sq: Vec<Vec<f64>>,
    /// `ζ_{H,j}(T)²`, one row per co-state component.
    pub zeta_sq: Vec<Vec<f64>>,
    /// `Σ_i η_{H,i}(T)²` per element.
    pub eta_elem_sq: Vec<f64>,
    /// `Σ_j ζ_{H,j}(T)²` per element.
    pub zeta_elem_sq: Vec<f64>,
    /// `Σ_i η_{H,i}²`.
    pub eta_total_sq: f64,
    /// `Σ_j ζ_{H,j}²`.
    pub zeta_total_sq: f64,
    /// `ϱ_H(T)² = [Σ_i η_{H,i}²] ζ(T)² + η(T)² [Σ_j ζ_{H,j}²]`.
    pub rho_sq: Vec<f64>,
}

fn column_sums(rows: &[Vec<f64>], n: usize) -> Vec<f64> {
    (0..n).map(|t| rows.iter().map(|r| r[t]).sum()).collect()
}

impl IndicatorField {
    pub fn from_component_indicators(eta_sq: Vec<Vec<f64>>, zeta_sq: Vec<Vec<f64>>, n_elements: usize) -> Self {
        let eta_elem_sq = column_sums(&eta_sq, n_elements);
        let zeta_elem_sq = column_sums(&zeta_sq, n_elements);
        let eta_total_sq: f64 = eta_sq.iter().flatten().sum();
        let zeta_total_sq: f64 = zeta_sq.iter().flatten().sum();
        let rho_sq = eta_elem_sq
            .iter()
            .zip(&zeta_elem_sq)
            .map(|(e, z)| eta_total_sq * z + e * zeta_total_sq)
            .collect();
        Self { eta_sq, zeta_sq, eta_elem_sq, zeta_elem_sq, eta_total_sq, zeta_total_sq, rho_sq }
    }

    pub fn n_elements(&self) -> usize {
        self.rho_sq.len()
    }

    pub fn eta_total(&self) -> f64 {
        self.eta_total_sq.sqrt()
    }

    pub fn zeta_total(&self) -> f64 {
        self.zeta_total_sq.sqrt()
    }

    /// `Σ_T ϱ_H(T)²`, summed elementwise.
    pub fn rho_total_sq(&self) -> f64 {
        self.rho_sq.iter().sum()
    }

    /// `ϱ_H = (2 η² ζ²)^{1/2}`.
    pub fn rho(&self) -> f64 {
        (2.0 * self.eta_total_sq * self.zeta_total_sq).sqrt()
    }

    /// `η_{H,i}²` for one state component.
    pub fn eta_component_sq(&self, i: usize) -> f64 {
        self.eta_sq[i].iter().sum()
    }

    pub fn zeta_component_sq(&self, j: usize) -> f64 {
        self.zeta_sq[j].iter().sum()
    }
}

/// Indicators of every component against its own data.
pub fn compute_field(
    space: &FeSpace,
    coefficient: &Coefficient,
    problem: &ProblemData,
    comps: &ComponentSolutions,
) -> Result<IndicatorField> {
    let est = ResidualEstimator::new(space, coefficient)?;
    let eta_sq: Vec<Vec<f64>> = problem
        .state_data
        .par_iter()
        .zip(comps.state.par_iter())
        .map(|(d, u)| est.indicators_sq(d, u))
        .collect();
    let zeta_sq: Vec<Vec<f64>> = problem
        .measure_data
        .par_iter()
        .zip(comps.costate.par_iter())
        .map(|(d, z)| est.indicators_sq(d, z))
        .collect();
    Ok(IndicatorField::from_component_indicators(eta_sq, zeta_sq, space.mesh().n_elements()))
}

/// Indicators of the combined state `u_H(p)` and co-state `z_H(p)`.
#[derive(Clone, Debug)]
pub struct ClassicalIndicators {
    /// `η(T, u_H(p))²`.
    pub eta_sq: Vec<f64>,
    /// `ζ(T, z_H(p))²`.
    pub zeta_sq: Vec<f64>,
    /// `r_H(p) = G(u_H(p)) - G*`.
    pub residual: Vec<f64>,
}

impl ClassicalIndicators {
    /// Per-element `η(T)² + ζ(T)²`, used for marking.
    pub fn per_element(&self) -> Vec<f64> {
        self.eta_sq.iter().zip(&self.zeta_sq).map(|(a, b)| a + b).collect()
    }

    /// `η(u_H(p)) + ζ(z_H(p))`.
    pub fn total(&self) -> f64 {
        self.eta_sq.iter().sum::<f64>().sqrt() + self.zeta_sq.iter().sum::<f64>().sqrt()
    }
}

/// Classical estimator at parameter `p`: the state residual of `u_H(p)` with
/// data `F_0 + b(p, ·)` plus the co-state residual of `z_H(p)` with data
/// `Σ_j r_j G_j`.
pub fn classical_indicator(
    space: &FeSpace,
    coefficient: &Coefficient,
    problem: &ProblemData,
    comps: &ComponentSolutions,
    p: &[f64],
) -> Result<ClassicalIndicators> {
    let est = ResidualEstimator::new(space, coefficient)?;
    let u = comps.combine_state(p)?;
    let residual: Vec<f64> = problem
        .measure_data
        .iter()
        .zip(&problem.measurements)
        .map(|(g, gstar)| space.evaluate_functional(g, &u) - gstar)
        .collect();
    let z = comps.combine_costate(&residual)?;
    let state_weights: Vec<(f64, &DataPair)> = std::iter::once(1.0)
        .chain(p.iter().copied())
        .zip(&problem.state_data)
        .collect();
    let state_data = DataPair::linear_combination(&state_weights);
    let measure_weights: Vec<(f64, &DataPair)> =
        residual.iter().copied().zip(&problem.measure_data).collect();
    let measure_data = DataPair::linear_combination(&measure_weights);
    let (eta_sq, zeta_sq) = rayon::join(
        || est.indicators_sq(&state_data, &u),
        || est.indicators_sq(&measure_data, &z),
    );
    Ok(ClassicalIndicators { eta_sq, zeta_sq, residual })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::mesh::{build_initial, DomainConfig, Triangulation};
    use crate::space::ScalarFn;

    #[test]
    fn affine_function_without_data_has_no_residual() {
        let mut m = build_initial(&DomainConfig::unit_square()).unwrap();
        for _ in 0..3 {
            m = m.refine_uniform().mesh;
        }
        let space = FeSpace::new(Arc::new(m));
        // interior values of a globally affine function
        let v = space.interpolate(|p| 1.0 + 2.0 * p[0] - p[1]);
        let est = ResidualEstimator::new(&space, &Coefficient::identity()).unwrap();
        let ind = est.indicators_sq(&DataPair::zero(), &v);
        let topo = space.topology();
        for t in 0..space.mesh().n_elements() {
            let free = |k: usize| space.mesh().element(k).iter().all(|&v| space.dof_of_vertex(v).is_some());
            let interior = free(t)
                && topo.element_edges[t].iter().all(|&e| {
                    let edge = &topo.edges[e as usize];
                    !edge.is_boundary() && edge.elements.iter().all(|&k| free(k as usize))
                });
            if interior {
                assert!(ind[t].abs() < 1e-24, "element {t}: {}", ind[t]);
            }
        }
    }

    #[test]
    fn unit_source_on_isolated_triangle() {
        let h = 0.7;
        let m = Triangulation::from_triangles(vec![[0.0, 0.0], [h, 0.0], [0.0, h]], &[[0, 1, 2]], vec![0])
            .unwrap();
        let area = m.area(0);
        let space = FeSpace::new(Arc::new(m));
        let v = DiscreteFunction::zero(Arc::clone(&space));
        let data = DataPair::scalar(ScalarFn::Constant(1.0), None);
        let eta = element_indicator(&space, &Coefficient::identity(), &data, &v, 0).unwrap();
        assert!((eta - area * area).abs() < 1e-15);
    }

    #[test]
    fn weighted_indicator_identity() {
        let eta = vec![vec![1.0, 2.0, 0.5], vec![0.0, 0.25, 3.0]];
        let zeta = vec![vec![0.1, 0.2, 0.3]];
        let f = IndicatorField::from_component_indicators(eta, zeta, 3);
        assert!((f.eta_total_sq - 6.75).abs() < 1e-15);
        assert!((f.rho_total_sq() - 2.0 * f.eta_total_sq * f.zeta_total_sq).abs() < 1e-14);
        assert!((f.rho() * f.rho() - f.rho_total_sq()).abs() < 1e-13);
    }
}
