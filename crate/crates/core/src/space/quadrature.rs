//! Symmetric 6-point rule on triangles, exact for polynomials of degree 4.

/// Barycentric coordinates and weights (weights sum to one; multiply by `|T|`).
pub const DEGREE4: [([f64; 3], f64); 6] = {
    const A1: f64 = 0.445_948_490_915_964_886_32;
    const B1: f64 = 1.0 - 2.0 * A1;
    const W1: f64 = 0.223_381_589_678_011_465_7;
    const A2: f64 = 0.091_576_213_509_770_743_46;
    const B2: f64 = 1.0 - 2.0 * A2;
    const W2: f64 = 0.109_951_743_655_321_867_6;
    [
        ([B1, A1, A1], W1),
        ([A1, B1, A1], W1),
        ([A1, A1, B1], W1),
        ([B2, A2, A2], W2),
        ([A2, B2, A2], W2),
        ([A2, A2, B2], W2),
    ]
};

pub fn map_point(corners: &[[f64; 2]; 3], bary: &[f64; 3]) -> [f64; 2] {
    [
        bary[0] * corners[0][0] + bary[1] * corners[1][0] + bary[2] * corners[2][0],
        bary[0] * corners[0][1] + bary[1] * corners[1][1] + bary[2] * corners[2][1],
    ]
}

/// `∫_T f` with the degree-4 rule.
pub fn integrate<F: Fn([f64; 2]) -> f64>(corners: &[[f64; 2]; 3], area: f64, f: F) -> f64 {
    area * DEGREE4
        .iter()
        .map(|(bary, w)| w * f(map_point(corners, bary)))
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        let s: f64 = DEGREE4.iter().map(|(_, w)| w).sum();
        assert!((s - 1.0).abs() < 1e-15);
    }

    // ∫ over the reference triangle of x^a y^b = a! b! / (a + b + 2)!
    fn exact_monomial(a: u32, b: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        fact(a) * fact(b) / fact(a + b + 2)
    }

    #[test]
    fn exact_up_to_degree_four() {
        let corners = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        for a in 0..=4 {
            for b in 0..=(4 - a) {
                let q = integrate(&corners, 0.5, |p| p[0].powi(a as i32) * p[1].powi(b as i32));
                assert!((q - exact_monomial(a, b)).abs() < 1e-15, "x^{a} y^{b}");
            }
        }
        let q = integrate(&corners, 0.5, |p| p[0].powi(5));
        assert!((q - exact_monomial(5, 0)).abs() > 1e-8);
    }
}
