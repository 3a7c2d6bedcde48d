#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use afem_param::components::{solve_all, ComponentSolutions};
use afem_param::driver::experiments::{self, Experiment};
use afem_param::mesh::{build_initial, Triangulation};
use afem_param::space::{DiscreteFunction, FeSpace};

/// Energy of `x(1-x)y(1-y)`.
pub const ENERGY_U1: f64 = 1.0 / 45.0;
/// Energy of `sin(πx) sin(2πy)`.
pub fn energy_u2() -> f64 {
    1.25 * PI * PI
}

pub fn grad_u1(x: [f64; 2]) -> [f64; 2] {
    [(1.0 - 2.0 * x[0]) * x[1] * (1.0 - x[1]), x[0] * (1.0 - x[0]) * (1.0 - 2.0 * x[1])]
}

pub fn grad_u2(x: [f64; 2]) -> [f64; 2] {
    [
        PI * (PI * x[0]).cos() * (2.0 * PI * x[1]).sin(),
        2.0 * PI * (PI * x[0]).sin() * (2.0 * PI * x[1]).cos(),
    ]
}

/// Seven-point rule, exact for polynomials of degree five.
pub fn seven_point() -> Vec<([f64; 3], f64)> {
    let s15 = 15f64.sqrt();
    let a1 = (6.0 - s15) / 21.0;
    let a2 = (6.0 + s15) / 21.0;
    let w1 = (155.0 - s15) / 1200.0;
    let w2 = (155.0 + s15) / 1200.0;
    let b1 = 1.0 - 2.0 * a1;
    let b2 = 1.0 - 2.0 * a2;
    vec![
        ([1.0 / 3.0; 3], 9.0 / 40.0),
        ([a1, a1, b1], w1),
        ([a1, b1, a1], w1),
        ([b1, a1, a1], w1),
        ([a2, a2, b2], w2),
        ([a2, b2, a2], w2),
        ([b2, a2, a2], w2),
    ]
}

/// `∫_T g` with the seven-point rule on the four congruent subtriangles of `T`.
pub fn integrate_fine(p: [[f64; 2]; 3], g: &dyn Fn([f64; 2]) -> f64) -> f64 {
    let mid = |a: [f64; 2], b: [f64; 2]| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    let (m01, m12, m20) = (mid(p[0], p[1]), mid(p[1], p[2]), mid(p[2], p[0]));
    [[p[0], m01, m20], [m01, p[1], m12], [m20, m12, p[2]], [m01, m12, m20]]
        .iter()
        .map(|q| integrate_seven(*q, g))
        .sum()
}

pub fn integrate_seven(p: [[f64; 2]; 3], g: &dyn Fn([f64; 2]) -> f64) -> f64 {
    let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1])).abs();
    seven_point()
        .iter()
        .map(|(l, w)| {
            let x = [
                l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
                l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
            ];
            w * g(x)
        })
        .sum::<f64>()
        * area
}

/// `|||u - v|||²` for the identity coefficient.
pub fn energy_error_sq(v: &DiscreteFunction, grad: fn([f64; 2]) -> [f64; 2]) -> f64 {
    let mesh = v.space().mesh();
    (0..mesh.n_elements())
        .map(|t| {
            let gv = v.gradient(t);
            integrate_fine(mesh.element_points(t), &|x| {
                let g = grad(x);
                (g[0] - gv[0]).powi(2) + (g[1] - gv[1]).powi(2)
            })
        })
        .sum()
}

pub fn uniform_mesh(e: &Experiment, min_elements: usize) -> Triangulation {
    let mut m = build_initial(&e.domain).unwrap();
    while m.n_elements() < min_elements {
        m = m.refine_uniform().mesh;
    }
    m
}

pub fn solve_on(e: &Experiment, mesh: Triangulation) -> ComponentSolutions {
    solve_all(&FeSpace::new(Arc::new(mesh)), &e.problem).unwrap()
}

pub fn single() -> Experiment {
    experiments::single()
}

pub fn multi() -> Experiment {
    experiments::multi()
}
