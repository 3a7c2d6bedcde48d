use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::{Error, Result};

/// `G* = Ḡ* + X` with i.i.d. `X_k ~ N(0, σ²)` from a seeded generator.
/// `σ = 0` returns the input unchanged.
pub fn perturb_measurements(exact: &[f64], sigma: f64, seed: u64) -> Result<Vec<f64>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Config(format!("noise level must be finite and >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(exact.to_vec());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(exact.iter().map(|g| g + normal.sample(&mut rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sigma_is_identity() {
        let g = [0.1, -0.2, 0.3];
        assert_eq!(perturb_measurements(&g, 0.0, 7).unwrap(), g);
    }

    #[test]
    fn seeded_draws_repeat() {
        let g = [0.1, -0.2, 0.3];
        let a = perturb_measurements(&g, 1e-3, 42).unwrap();
        let b = perturb_measurements(&g, 1e-3, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, perturb_measurements(&g, 1e-3, 43).unwrap());
    }

    #[test]
    fn sample_standard_deviation() {
        let sigma = 1e-3;
        let n = 100_000;
        let draws = perturb_measurements(&vec![0.0; n], sigma, 1).unwrap();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let std = var.sqrt();
        assert!(std >= 0.97 * sigma && std <= 1.03 * sigma, "sample std {std}");
    }

    #[test]
    fn negative_sigma_is_rejected() {
        assert!(perturb_measurements(&[1.0], -1.0, 0).is_err());
    }
}
