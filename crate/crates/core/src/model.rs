//! Bayesian model definitions: Gaussian likelihoods and analytic priors.
//!
//! A `BayesianModel` pairs a prior with a linear-Gaussian likelihood and is
//! what samplers condition on and scorers evaluate. The likelihood may carry
//! a `ValidMask`; when set, residual norms (and the matching normalization
//! constant) are restricted to the interior crop. The mask is a metric-side
//! device; samplers condition on the full measurement.

use crate::error::{Error, Result};
use crate::linop::{valid_crop, LinearOperator, ValidMask};
use crate::tensor::Tensor;

const LN_2PI: f64 = 1.8378770664093453; // ln(2 pi)

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLikelihood {
    pub op: LinearOperator,
    pub sigma: f64,
    pub valid: Option<ValidMask>,
}

impl GaussianLikelihood {
    pub fn new(op: LinearOperator, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(
                "sigma",
                format!("must be finite and > 0, got {sigma}"),
            ));
        }
        Ok(GaussianLikelihood {
            op,
            sigma,
            valid: None,
        })
    }

    pub fn with_valid_mask(mut self, mask: ValidMask) -> Self {
        self.valid = Some(mask);
        self
    }

    /// Residual `y - A x`, cropped to the valid region when a mask is set.
    fn valid_residual(&self, y: &Tensor, x: &Tensor) -> Result<Tensor> {
        let r = y.sub(&self.op.apply(x)?)?;
        match self.valid {
            Some(mask) => valid_crop(&r, mask),
            None => Ok(r),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Prior {
    /// `log p(x) = -||x||^2 / (2 sigma_x^2) + const`
    IidGaussian { sigma_x: f64 },
    /// Charbonnier-smoothed total variation,
    /// `log p(x) = -lambda * sum_p sqrt(||grad x||_p^2 + eps^2) + const`,
    /// with forward differences and periodic boundary. The gradient is
    /// Lipschitz with constant at most `8 lambda / eps`.
    CharbonnierTv { lambda: f64, epsilon: f64 },
}

impl Prior {
    pub fn iid_gaussian(sigma_x: f64) -> Result<Self> {
        if !(sigma_x > 0.0) || !sigma_x.is_finite() {
            return Err(Error::invalid(
                "sigma_x",
                format!("must be finite and > 0, got {sigma_x}"),
            ));
        }
        Ok(Prior::IidGaussian { sigma_x })
    }

    pub fn charbonnier_tv(lambda: f64, epsilon: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::invalid(
                "lambda",
                format!("must be finite and > 0, got {lambda}"),
            ));
        }
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::invalid(
                "epsilon",
                format!("must be finite and > 0, got {epsilon}"),
            ));
        }
        Ok(Prior::CharbonnierTv { lambda, epsilon })
    }

    /// Unnormalized log-density.
    pub fn log_density(&self, x: &Tensor) -> Result<f64> {
        match *self {
            Prior::IidGaussian { sigma_x } => Ok(-x.norm_sq() / (2.0 * sigma_x * sigma_x)),
            Prior::CharbonnierTv { lambda, epsilon } => Ok(-lambda * charbonnier_sum(x, epsilon)?),
        }
    }

    /// Gradient of the log-density.
    pub fn grad_log_density(&self, x: &Tensor) -> Result<Tensor> {
        match *self {
            Prior::IidGaussian { sigma_x } => x.scale(-1.0 / (sigma_x * sigma_x)),
            Prior::CharbonnierTv { lambda, epsilon } => charbonnier_grad(x, lambda, epsilon),
        }
    }

    /// Upper bound on the gradient's Lipschitz constant.
    pub fn lipschitz_bound(&self) -> f64 {
        match *self {
            Prior::IidGaussian { sigma_x } => 1.0 / (sigma_x * sigma_x),
            Prior::CharbonnierTv { lambda, epsilon } => 8.0 * lambda / epsilon,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Prior::IidGaussian { sigma_x } => format!("iid_gaussian({sigma_x})"),
            Prior::CharbonnierTv { lambda, epsilon } => {
                format!("charbonnier_tv({lambda},{epsilon})")
            }
        }
    }
}

/// Forward differences with periodic wrap along each dim of a 1-d or 2-d
/// tensor, as `(dx, dy)` pairs per pixel (1-d tensors use only `dx`).
fn forward_diffs(x: &Tensor) -> Result<(Vec<f64>, Vec<f64>, usize, usize)> {
    match *x.shape() {
        [n] => {
            let d = x.data();
            let dx: Vec<f64> = (0..n).map(|i| d[(i + 1) % n] - d[i]).collect();
            Ok((dx, vec![0.0; n], 1, n))
        }
        [h, w] => {
            let d = x.data();
            let mut dx = vec![0.0; h * w];
            let mut dy = vec![0.0; h * w];
            for i in 0..h {
                for j in 0..w {
                    let p = i * w + j;
                    dx[p] = d[i * w + (j + 1) % w] - d[p];
                    dy[p] = d[((i + 1) % h) * w + j] - d[p];
                }
            }
            Ok((dx, dy, h, w))
        }
        _ => Err(Error::DimensionMismatch(format!(
            "total-variation prior supports 1-d and 2-d tensors, got {:?}",
            x.shape()
        ))),
    }
}

fn charbonnier_sum(x: &Tensor, epsilon: f64) -> Result<f64> {
    let (dx, dy, _, _) = forward_diffs(x)?;
    Ok(dx
        .iter()
        .zip(&dy)
        .map(|(&a, &b)| (a * a + b * b + epsilon * epsilon).sqrt())
        .sum())
}

fn charbonnier_grad(x: &Tensor, lambda: f64, epsilon: f64) -> Result<Tensor> {
    let (dx, dy, h, w) = forward_diffs(x)?;
    let u: Vec<f64> = dx
        .iter()
        .zip(&dy)
        .map(|(&a, &b)| (a * a + b * b + epsilon * epsilon).sqrt())
        .collect();
    let mut grad = vec![0.0; h * w];
    for i in 0..h {
        for j in 0..w {
            let p = i * w + j;
            // x[p] enters dx[p] and dy[p] with sign -1, dx of the left
            // neighbor and dy of the upper neighbor with sign +1.
            let left = i * w + (j + w - 1) % w;
            let up = ((i + h - 1) % h) * w + j;
            let g = -(dx[p] + dy[p]) / u[p] + dx[left] / u[left] + dy[up] / u[up];
            grad[p] = -lambda * g;
        }
    }
    Tensor::from_vec(x.shape().to_vec(), grad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesianModel {
    pub prior: Prior,
    pub likelihood: GaussianLikelihood,
    pub label: String,
}

impl BayesianModel {
    pub fn new(prior: Prior, likelihood: GaussianLikelihood, label: impl Into<String>) -> Self {
        BayesianModel {
            prior,
            likelihood,
            label: label.into(),
        }
    }

    /// Same model with a different likelihood noise level. The scoring rules
    /// use this to condition on split halves, which carry rescaled noise.
    pub fn with_likelihood_sigma(&self, sigma: f64) -> Result<Self> {
        let mut lk = self.likelihood.clone();
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(
                "sigma",
                format!("must be finite and > 0, got {sigma}"),
            ));
        }
        lk.sigma = sigma;
        Ok(BayesianModel {
            prior: self.prior.clone(),
            likelihood: lk,
            label: self.label.clone(),
        })
    }

    /// Same model without the metric-side crop, for posterior sampling.
    pub fn without_valid_mask(&self) -> Self {
        let mut lk = self.likelihood.clone();
        lk.valid = None;
        BayesianModel {
            prior: self.prior.clone(),
            likelihood: lk,
            label: self.label.clone(),
        }
    }
}

/// Fully normalized Gaussian log-likelihood
/// `-(||y - A x||^2) / (2 sigma^2) - (m/2) ln(2 pi sigma^2)`,
/// restricted to the valid region when a mask is set (`m` counts the
/// retained entries).
pub fn log_likelihood(model: &BayesianModel, y: &Tensor, x: &Tensor) -> Result<f64> {
    let lk = &model.likelihood;
    let r = lk.valid_residual(y, x)?;
    let m = r.len() as f64;
    let s2 = lk.sigma * lk.sigma;
    Ok(-r.norm_sq() / (2.0 * s2) - 0.5 * m * (LN_2PI + s2.ln()))
}

/// The bare squared residual `||y - A x||^2` over the valid region, the
/// unnormalized form used by the likelihood scoring rule.
pub fn squared_residual(model: &BayesianModel, y: &Tensor, x: &Tensor) -> Result<f64> {
    Ok(model.likelihood.valid_residual(y, x)?.norm_sq())
}

/// `grad_x log p(x | y) = Aᵀ (y - A x) / sigma^2 + grad log p(x)`.
///
/// When a valid mask is set the residual is zeroed outside the crop before
/// the adjoint, matching the gradient of the cropped data term.
pub fn grad_log_posterior(model: &BayesianModel, y: &Tensor, x: &Tensor) -> Result<Tensor> {
    let lk = &model.likelihood;
    let mut r = y.sub(&lk.op.apply(x)?)?;
    if let Some(mask) = lk.valid {
        r = zero_border(&r, mask.border)?;
    }
    let data_term = lk
        .op
        .apply_adjoint(&r)?
        .scale(1.0 / (lk.sigma * lk.sigma))?;
    data_term.add(&model.prior.grad_log_density(x)?)
}

fn zero_border(t: &Tensor, border: usize) -> Result<Tensor> {
    if border == 0 {
        return Ok(t.clone());
    }
    match *t.shape() {
        [n] => {
            if 2 * border >= n {
                return Err(Error::DimensionMismatch(format!(
                    "border {border} too large for length {n}"
                )));
            }
            let mut d = t.data().to_vec();
            d[..border].fill(0.0);
            d[n - border..].fill(0.0);
            Tensor::from_vec(vec![n], d)
        }
        [h, w] => {
            if 2 * border >= h || 2 * border >= w {
                return Err(Error::DimensionMismatch(format!(
                    "border {border} too large for shape {h}x{w}"
                )));
            }
            let mut d = t.data().to_vec();
            for i in 0..h {
                for j in 0..w {
                    if i < border || i >= h - border || j < border || j >= w - border {
                        d[i * w + j] = 0.0;
                    }
                }
            }
            Tensor::from_vec(vec![h, w], d)
        }
        _ => Err(Error::DimensionMismatch(
            "zero_border supports 1-d and 2-d tensors".into(),
        )),
    }
}

/// Upper bound on the Lipschitz constant of `grad log p(x|y)`:
/// `||A||^2 / sigma^2 + L_prior`.
pub fn posterior_lipschitz_bound(model: &BayesianModel) -> Result<f64> {
    let lk = &model.likelihood;
    Ok(lk.op.spectral_norm_sq()? / (lk.sigma * lk.sigma) + model.prior.lipschitz_bound())
}
