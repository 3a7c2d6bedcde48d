//! Conforming P1 finite elements with homogeneous Dirichlet boundary values.

pub mod data;
pub mod quadrature;
pub mod sparse;

use std::sync::Arc;

use rayon::prelude::*;

use crate::mesh::{Point, Refinement, Topology, Triangulation};
use crate::{Error, Result};

pub use data::{Coefficient, DataPair, Mat2, Monomial, RegionSelector, ScalarFn, ScalarTerm, VectorTerm};
pub use sparse::{solve_spd, CsrMatrix, SpdSolver};

const NO_DOF: u32 = u32::MAX;

/// P1 space on a triangulation. Degrees of freedom are the interior vertices.
#[derive(Debug)]
pub struct FeSpace {
    mesh: Arc<Triangulation>,
    topology: Topology,
    dof_of_vertex: Vec<u32>,
    vertex_of_dof: Vec<u32>,
    areas: Vec<f64>,
    /// Gradients of the barycentric coordinates, per element and local vertex.
    grads: Vec<[[f64; 2]; 3]>,
}

impl FeSpace {
    pub fn new(mesh: Arc<Triangulation>) -> Arc<Self> {
        let topology = mesh.topology();
        let boundary = mesh.boundary_vertices(&topology);
        let mut dof_of_vertex = vec![NO_DOF; mesh.n_vertices()];
        let mut vertex_of_dof = Vec::new();
        for (v, &b) in boundary.iter().enumerate() {
            if !b {
                dof_of_vertex[v] = vertex_of_dof.len() as u32;
                vertex_of_dof.push(v as u32);
            }
        }
        let (areas, grads) = (0..mesh.n_elements())
            .map(|t| {
                let [p0, p1, p2] = mesh.element_points(t);
                let area = mesh.area(t);
                let s = 1.0 / (2.0 * area);
                let g = [
                    [(p1[1] - p2[1]) * s, (p2[0] - p1[0]) * s],
                    [(p2[1] - p0[1]) * s, (p0[0] - p2[0]) * s],
                    [(p0[1] - p1[1]) * s, (p1[0] - p0[0]) * s],
                ];
                (area, g)
            })
            .unzip();
        Arc::new(Self { mesh, topology, dof_of_vertex, vertex_of_dof, areas, grads })
    }

    pub fn mesh(&self) -> &Arc<Triangulation> {
        &self.mesh
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn n_dofs(&self) -> usize {
        self.vertex_of_dof.len()
    }

    pub fn dof_of_vertex(&self, v: usize) -> Option<usize> {
        match self.dof_of_vertex[v] {
            NO_DOF => None,
            d => Some(d as usize),
        }
    }

    pub fn vertex_of_dof(&self, d: usize) -> usize {
        self.vertex_of_dof[d] as usize
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn basis_gradients(&self, t: usize) -> &[[f64; 2]; 3] {
        &self.grads[t]
    }

    fn local_dofs(&self, t: usize) -> [u32; 3] {
        self.mesh.elements()[t].map(|v| self.dof_of_vertex[v as usize])
    }

    /// Local stiffness matrix `|T| ∇λ_m · A ∇λ_n` of element `t`.
    pub fn element_stiffness(&self, t: usize, a: &Mat2) -> [[f64; 3]; 3] {
        let g = &self.grads[t];
        let mut k = [[0.0; 3]; 3];
        for m in 0..3 {
            for n in 0..3 {
                k[m][n] = self.areas[t] * data::dot(g[m], data::mat_vec(a, g[n]));
            }
        }
        k
    }

    /// `a(φ_n, φ_m) = ∫ A ∇φ_n · ∇φ_m`, exact for piecewise constant `A`.
    pub fn assemble_stiffness(&self, coefficient: &Coefficient) -> Result<CsrMatrix> {
        let matrices = (0..self.mesh.n_elements())
            .map(|t| coefficient.matrix_for(self.mesh.region_tag(t)))
            .collect::<Result<Vec<_>>>()?;
        let triplets: Vec<(u32, u32, f64)> = (0..self.mesh.n_elements())
            .into_par_iter()
            .flat_map_iter(|t| {
                let k = self.element_stiffness(t, &matrices[t]);
                let dofs = self.local_dofs(t);
                (0..9).filter_map(move |idx| {
                    let (m, n) = (idx / 3, idx % 3);
                    (dofs[m] != NO_DOF && dofs[n] != NO_DOF).then(|| (dofs[m], dofs[n], k[m][n]))
                })
            })
            .collect();
        Ok(CsrMatrix::from_triplets(self.n_dofs(), triplets))
    }

    /// Per-element `[∫_T f λ_k - |T| f⃗ · ∇λ_k]_k` with the degree-4 rule for the scalar part.
    fn element_load(&self, t: usize, data: &DataPair) -> [f64; 3] {
        let tag = self.mesh.region_tag(t);
        let area = self.areas[t];
        let mut out = [0.0; 3];
        if data.has_scalar_part() {
            let corners = self.mesh.element_points(t);
            for (bary, w) in quadrature::DEGREE4.iter() {
                let f = data.scalar_at(tag, quadrature::map_point(&corners, bary));
                for k in 0..3 {
                    out[k] += area * w * f * bary[k];
                }
            }
        }
        let fv = data.vector_at(tag);
        if fv != [0.0, 0.0] {
            for k in 0..3 {
                out[k] -= area * data::dot(fv, self.grads[t][k]);
            }
        }
        out
    }

    /// Load vector of `v ↦ ∫ f v - f⃗ · ∇v`.
    pub fn assemble_load(&self, data: &DataPair) -> Vec<f64> {
        let mut load = vec![0.0; self.n_dofs()];
        if data.is_zero() {
            return load;
        }
        for t in 0..self.mesh.n_elements() {
            let local = self.element_load(t, data);
            for (k, d) in self.local_dofs(t).into_iter().enumerate() {
                if d != NO_DOF {
                    load[d as usize] += local[k];
                }
            }
        }
        load
    }

    /// `G(v) = ∫ g v - g⃗ · ∇v` with the same quadrature as [`FeSpace::assemble_load`].
    pub fn evaluate_functional(&self, data: &DataPair, v: &DiscreteFunction) -> f64 {
        if data.is_zero() {
            return 0.0;
        }
        let values = v.vertex_values();
        (0..self.mesh.n_elements())
            .map(|t| {
                let local = self.element_load(t, data);
                self.mesh.elements()[t]
                    .iter()
                    .zip(local)
                    .map(|(&vx, l)| l * values[vx as usize])
                    .sum::<f64>()
            })
            .sum()
    }

    /// `a(v, v)`.
    pub fn energy_norm_sq(&self, coefficient: &Coefficient, v: &DiscreteFunction) -> Result<f64> {
        let values = v.vertex_values();
        let mut total = 0.0;
        for t in 0..self.mesh.n_elements() {
            let a = coefficient.matrix_for(self.mesh.region_tag(t))?;
            let g = gradient_from_values(&self.grads[t], self.mesh.elements()[t], &values);
            total += self.areas[t] * data::dot(g, data::mat_vec(&a, g));
        }
        Ok(total)
    }

    /// Nodal interpolant; boundary values of `f` are ignored.
    pub fn interpolate<F: Fn(Point) -> f64>(self: &Arc<Self>, f: F) -> DiscreteFunction {
        let coeffs = self.vertex_of_dof.iter().map(|&v| f(self.mesh.vertex(v as usize))).collect();
        DiscreteFunction { space: Arc::clone(self), coeffs }
    }
}

fn gradient_from_values(grads: &[[f64; 2]; 3], element: [u32; 3], values: &[f64]) -> [f64; 2] {
    let mut g = [0.0, 0.0];
    for k in 0..3 {
        let v = values[element[k] as usize];
        g[0] += v * grads[k][0];
        g[1] += v * grads[k][1];
    }
    g
}

/// Element of a [`FeSpace`], stored by its values at the interior vertices.
#[derive(Clone, Debug)]
pub struct DiscreteFunction {
    space: Arc<FeSpace>,
    coeffs: Vec<f64>,
}

impl DiscreteFunction {
    pub fn new(space: Arc<FeSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.n_dofs() {
            return Err(Error::Dimension {
                what: "discrete function",
                expected: space.n_dofs(),
                got: coeffs.len(),
            });
        }
        Ok(Self { space, coeffs })
    }

    pub fn zero(space: Arc<FeSpace>) -> Self {
        let n = space.n_dofs();
        Self { space, coeffs: vec![0.0; n] }
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Values at all mesh vertices, zero on the boundary.
    pub fn vertex_values(&self) -> Vec<f64> {
        let mut values = vec![0.0; self.space.mesh.n_vertices()];
        for (d, &c) in self.coeffs.iter().enumerate() {
            values[self.space.vertex_of_dof[d] as usize] = c;
        }
        values
    }

    /// Gradient on element `t`, given the vertex values from [`DiscreteFunction::vertex_values`].
    pub fn gradient_with(&self, values: &[f64], t: usize) -> [f64; 2] {
        gradient_from_values(&self.space.grads[t], self.space.mesh.elements()[t], values)
    }

    pub fn gradient(&self, t: usize) -> [f64; 2] {
        self.gradient_with(&self.vertex_values(), t)
    }

    /// `Σ_k c_k v_k` for functions on the same space.
    pub fn linear_combination(
        space: &Arc<FeSpace>,
        parts: &[(f64, &DiscreteFunction)],
    ) -> Result<DiscreteFunction> {
        let mut coeffs = vec![0.0; space.n_dofs()];
        for &(c, v) in parts {
            if !Arc::ptr_eq(&v.space, space) {
                return Err(Error::Data("linear combination of functions on different spaces".into()));
            }
            for (acc, x) in coeffs.iter_mut().zip(&v.coeffs) {
                *acc += c * x;
            }
        }
        Ok(DiscreteFunction { space: Arc::clone(space), coeffs })
    }

    /// Represents this function on the refined mesh of `refinement`.
    pub fn prolongate(&self, refinement: &Refinement, fine: &Arc<FeSpace>) -> Result<DiscreteFunction> {
        if fine.mesh.n_vertices() != refinement.mesh.n_vertices()
            || self.space.mesh.n_vertices() + refinement.new_vertex_parents.len()
                != fine.mesh.n_vertices()
        {
            return Err(Error::Data("refinement does not match the given spaces".into()));
        }
        let values = refinement.prolongate(&self.vertex_values());
        let coeffs = fine.vertex_of_dof.iter().map(|&v| values[v as usize]).collect();
        Ok(DiscreteFunction { space: Arc::clone(fine), coeffs })
    }
}
