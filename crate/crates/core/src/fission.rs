//! Measurement splitting by Gaussian noise injection.
//!
//! A single measurement `y ~ N(A x*, sigma^2 I)` is split into
//!
//! ```text
//! y+ = y + c w        y- = y - w / c        c = sqrt(alpha / (1 - alpha))
//! ```
//!
//! with injected noise `w ~ N(0, sigma^2 I)`. Conditionally on `x*` the two
//! halves are independent Gaussians with variances `sigma^2 / (1 - alpha)`
//! and `sigma^2 / alpha`, and they recombine exactly:
//! `(1 - alpha) y+ + alpha y- = y`. Small `alpha` keeps `y+` close to `y`
//! and pushes most of the injected noise into `y-`.

use crate::error::{Error, Result};
use crate::rng::{gaussian_noise, SeedSpec};
use crate::tensor::Tensor;

/// One splitting realization, retaining the injected noise so it can be
/// replayed bit-exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct FissionPair {
    pub y_plus: Tensor,
    pub y_minus: Tensor,
    pub alpha: f64,
    pub sigma: f64,
    pub noise: Tensor,
}

/// The injected-noise scale `sqrt(alpha / (1 - alpha))`.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(
            "alpha",
            format!("must lie in (0, 1), got {alpha}"),
        ));
    }
    Ok((alpha / (1.0 - alpha)).sqrt())
}

/// Split `y` with fresh injected noise drawn from `seed`.
pub fn split(y: &Tensor, sigma: f64, alpha: f64, seed: &SeedSpec) -> Result<FissionPair> {
    let noise = gaussian_noise(y.shape(), sigma, seed)?;
    split_with_noise(y, sigma, alpha, noise)
}

/// Split `y` with caller-supplied injected noise (deterministic variant for
/// replaying stored realizations).
pub fn split_with_noise(y: &Tensor, sigma: f64, alpha: f64, noise: Tensor) -> Result<FissionPair> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(
            "sigma",
            format!("must be finite and > 0, got {sigma}"),
        ));
    }
    let c = c_alpha(alpha)?;
    if !y.same_shape(&noise) {
        return Err(Error::DimensionMismatch(format!(
            "noise shape {:?} does not match measurement shape {:?}",
            noise.shape(),
            y.shape()
        )));
    }
    let y_plus = y.zip_map(&noise, |yi, wi| yi + c * wi)?;
    let y_minus = y.zip_map(&noise, |yi, wi| yi - wi / c)?;
    Ok(FissionPair {
        y_plus,
        y_minus,
        alpha,
        sigma,
        noise,
    })
}

impl FissionPair {
    /// Recombine the halves: `(1 - alpha) y+ + alpha y-`, which equals the
    /// original measurement up to rounding.
    pub fn recombine(&self) -> Result<Tensor> {
        self.y_plus.zip_map(&self.y_minus, |p, m| {
            (1.0 - self.alpha) * p + self.alpha * m
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_alpha_values() {
        assert_eq!(c_alpha(0.5).unwrap(), 1.0);
        assert!((c_alpha(0.1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((c_alpha(0.9).unwrap() - 3.0).abs() < 1e-12);
        assert!(c_alpha(0.0).is_err());
        assert!(c_alpha(1.0).is_err());
        assert!(c_alpha(1.5).is_err());
    }

    #[test]
    fn symmetric_split_of_zero_measurement() {
        let y = Tensor::zeros(vec![2]).unwrap();
        let w = Tensor::from_vec(vec![2], vec![1.0, -1.0]).unwrap();
        let pair = split_with_noise(&y, 1.0, 0.5, w).unwrap();
        assert_eq!(pair.y_plus.data(), &[1.0, -1.0]);
        assert_eq!(pair.y_minus.data(), &[-1.0, 1.0]);
    }

    #[test]
    fn zero_noise_keeps_both_halves_equal_to_y() {
        let y = Tensor::from_vec(vec![3], vec![0.3, -0.7, 2.0]).unwrap();
        let w = Tensor::zeros(vec![3]).unwrap();
        let pair = split_with_noise(&y, 1.0, 0.3, w).unwrap();
        assert_eq!(pair.y_plus, y);
        assert_eq!(pair.y_minus, y);
    }

    #[test]
    fn replaying_stored_noise_is_bit_exact() {
        let y = Tensor::from_vec(vec![4], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let first = split(&y, 0.5, 0.25, &SeedSpec::new(3)).unwrap();
        let replay = split_with_noise(&y, 0.5, 0.25, first.noise.clone()).unwrap();
        assert_eq!(first, replay);
    }

    #[test]
    fn recombination_identity() {
        let y = Tensor::from_vec(vec![5], vec![1.0, -2.0, 0.5, 3.0, -0.1]).unwrap();
        for &alpha in &[0.05, 0.3, 0.5, 0.77, 0.99] {
            let pair = split(&y, 2.0, alpha, &SeedSpec::new(17)).unwrap();
            let back = pair.recombine().unwrap();
            for (a, b) in back.data().iter().zip(y.data()) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn small_alpha_keeps_plus_half_close() {
        let y = Tensor::zeros(vec![16]).unwrap();
        let alpha = 1e-3;
        let pair = split(&y, 1.0, alpha, &SeedSpec::new(23)).unwrap();
        let c = c_alpha(alpha).unwrap();
        let plus_dist = pair.y_plus.sub(&y).unwrap().norm();
        let minus_dist = pair.y_minus.sub(&y).unwrap().norm();
        assert!((plus_dist - c * pair.noise.norm()).abs() < 1e-12);
        assert!((minus_dist - pair.noise.norm() / c).abs() < 1e-9);
        assert!(plus_dist < minus_dist);
    }

    #[test]
    fn split_variance_matches_construction() {
        // Var(y+ - y) = c^2 sigma^2 = 1 at alpha = 0.5, sigma = 1.
        let n = 100_000;
        let y = Tensor::zeros(vec![n]).unwrap();
        let pair = split(&y, 1.0, 0.5, &SeedSpec::new(29)).unwrap();
        let var = pair.y_plus.norm_sq() / n as f64;
        assert!((0.98..=1.02).contains(&var), "empirical variance {var}");
    }
}
