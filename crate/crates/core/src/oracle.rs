//! Closed-form references for the white-noise conjugate Gaussian model.
//!
//! The toy model is `y = x + e` with `x ~ N(0, sigma_x^2 I_m)` and
//! `e ~ N(0, sigma^2 I_m)`. After splitting, conditioning on `y-` (noise
//! level `sigma^2 / alpha`) gives the Gaussian posterior
//!
//! ```text
//! x | y-  ~  N( beta y-, v I ),   beta = alpha sigma_x^2 / (alpha sigma_x^2 + sigma^2)
//!                                 v    = sigma^2 sigma_x^2 / (sigma^2 + alpha sigma_x^2)
//! ```
//!
//! and the predictive density of the held-out half composes to
//! `y+ | y- ~ N( beta y-, (sigma^2/(1-alpha) + v) I )`. A 1-d trapezoidal
//! quadrature of the same integral acts as an independent arbiter for these
//! formulas, and a Monte Carlo convergence study measures how fast the
//! sampling estimator approaches the closed form.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fission::c_alpha;
use crate::linop::LinearOperator;
use crate::model::{BayesianModel, GaussianLikelihood, Prior};
use crate::rng::{gaussian_noise, SeedSpec};
use crate::sampler::SamplerConfig;
use crate::scoring::{logsumexp, phi3_realization_logliks, realization_split};
use crate::tensor::Tensor;

const LN_2PI: f64 = 1.8378770664093453;

/// White-noise conjugate Gaussian model `y = x + e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyModel {
    pub m: usize,
    pub sigma: f64,
    pub sigma_x: f64,
}

impl ToyModel {
    pub fn new(m: usize, sigma: f64, sigma_x: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("m", "dimension must be >= 1"));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(
                "sigma",
                format!("must be finite and > 0, got {sigma}"),
            ));
        }
        if !(sigma_x > 0.0) || !sigma_x.is_finite() {
            return Err(Error::invalid(
                "sigma_x",
                format!("must be finite and > 0, got {sigma_x}"),
            ));
        }
        Ok(ToyModel { m, sigma, sigma_x })
    }

    /// The same model as a general `BayesianModel` (identity operator).
    pub fn to_bayesian_model(&self) -> Result<BayesianModel> {
        Ok(BayesianModel::new(
            Prior::iid_gaussian(self.sigma_x)?,
            GaussianLikelihood::new(LinearOperator::identity(vec![self.m])?, self.sigma)?,
            format!("toy(sigma={},sigma_x={})", self.sigma, self.sigma_x),
        ))
    }

    /// Draw a measurement `y = x + e` from the model.
    pub fn draw_measurement(&self, seed: &SeedSpec) -> Result<Tensor> {
        let x = gaussian_noise(&[self.m], self.sigma_x, &seed.child(0))?;
        let e = gaussian_noise(&[self.m], self.sigma, &seed.child(1))?;
        x.add(&e)
    }

    fn posterior_coefficients(&self, alpha: f64) -> (f64, f64) {
        let s2 = self.sigma * self.sigma;
        let sx2 = self.sigma_x * self.sigma_x;
        let beta = alpha * sx2 / (alpha * sx2 + s2);
        let v = s2 * sx2 / (s2 + alpha * sx2);
        (beta, v)
    }
}

fn log_normal(y: f64, mean: f64, var: f64) -> f64 {
    let d = y - mean;
    -0.5 * (LN_2PI + var.ln() + d * d / var)
}

/// View a general model as a toy model when it is exactly the white-noise
/// conjugate configuration: identity operator, iid Gaussian prior, no crop.
pub fn toy_from_model(model: &BayesianModel) -> Option<ToyModel> {
    let Prior::IidGaussian { sigma_x } = model.prior else {
        return None;
    };
    if !model.likelihood.op.is_identity() || model.likelihood.valid.is_some() {
        return None;
    }
    let m = model.likelihood.op.shape().iter().product();
    ToyModel::new(m, model.likelihood.sigma, sigma_x).ok()
}

/// Posterior mean and (scalar) variance of `x | y-`.
pub fn analytic_posterior(toy: &ToyModel, y_minus: &Tensor, alpha: f64) -> Result<(Tensor, f64)> {
    c_alpha(alpha)?;
    if y_minus.len() != toy.m {
        return Err(Error::DimensionMismatch(format!(
            "y- has {} entries, model dimension is {}",
            y_minus.len(),
            toy.m
        )));
    }
    let (beta, v) = toy.posterior_coefficients(alpha);
    Ok((y_minus.scale(beta)?, v))
}

/// Closed-form `log p(y+ | y-)` for the splitting `(y, w, alpha)`:
/// the Gaussian composition `N(beta y-, (sigma^2/(1-alpha) + v) I)`
/// evaluated at `y+ = y + c w`.
pub fn log_predictive(toy: &ToyModel, y: &Tensor, w: &Tensor, alpha: f64) -> Result<f64> {
    let c = c_alpha(alpha)?;
    if y.len() != toy.m || w.len() != toy.m {
        return Err(Error::DimensionMismatch(format!(
            "y ({}) and w ({}) must both have model dimension {}",
            y.len(),
            w.len(),
            toy.m
        )));
    }
    let (beta, v) = toy.posterior_coefficients(alpha);
    let total_var = toy.sigma * toy.sigma / (1.0 - alpha) + v;
    let mut acc = 0.0;
    for (&yi, &wi) in y.data().iter().zip(w.data()) {
        let y_plus = yi + c * wi;
        let y_minus = yi - wi / c;
        acc += log_normal(y_plus, beta * y_minus, total_var);
    }
    Ok(acc)
}

/// Trapezoidal quadrature of `log ∫ p(y+ | x) p(x | y-) dx` for `m = 1`.
///
/// The posterior factor is built from its defining product
/// `N(y-; x, sigma^2/alpha) N(x; 0, sigma_x^2)` and normalized numerically,
/// so this path is independent of the conjugacy algebra and arbitrates it.
/// The grid spans ±10 posterior standard deviations around the posterior
/// mean; `nodes` of order 1e4 give ~1e-10 relative accuracy.
pub fn quadrature_predictive(
    toy: &ToyModel,
    y: &Tensor,
    w: &Tensor,
    alpha: f64,
    nodes: usize,
) -> Result<f64> {
    if toy.m != 1 {
        return Err(Error::Unsupported(format!(
            "quadrature reference is 1-d only, model dimension is {}",
            toy.m
        )));
    }
    let c = c_alpha(alpha)?;
    if y.len() != 1 || w.len() != 1 {
        return Err(Error::DimensionMismatch("y and w must be scalars".into()));
    }
    if nodes < 2 {
        return Err(Error::invalid("nodes", "need at least 2 quadrature nodes"));
    }
    let y0 = y.data()[0];
    let w0 = w.data()[0];
    let y_plus = y0 + c * w0;
    let y_minus = y0 - w0 / c;

    // Grid placement only; the integrand below never uses these numbers.
    let (beta, v) = toy.posterior_coefficients(alpha);
    let center = beta * y_minus;
    let halfwidth = 10.0 * v.sqrt();
    let step = 2.0 * halfwidth / (nodes - 1) as f64;

    let var_minus = toy.sigma * toy.sigma / alpha;
    let var_plus = toy.sigma * toy.sigma / (1.0 - alpha);
    let sx2 = toy.sigma_x * toy.sigma_x;

    // log of uvnormalized posterior factor and of the predictive integrand.
    let mut log_post = Vec::with_capacity(nodes);
    let mut log_joint = Vec::with_capacity(nodes);
    for i in 0..nodes {
        let x = center - halfwidth + i as f64 * step;
        let lp = log_normal(y_minus, x, var_minus) + log_normal(x, 0.0, sx2);
        log_post.push(lp);
        log_joint.push(lp + log_normal(y_plus, x, var_plus));
    }
    let log_trapz = |vals: &[f64]| -> Result<f64> {
        // log of trapezoid rule: endpoints weighted 1/2.
        let m = vals.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        if m == f64::NEG_INFINITY {
            return Err(Error::Numerical(
                "quadrature underflow: integrand vanished".into(),
            ));
        }
        let mut s = 0.0;
        for (i, &v) in vals.iter().enumerate() {
            let wgt = if i == 0 || i == vals.len() - 1 {
                0.5
            } else {
                1.0
            };
            s += wgt * (v - m).exp();
        }
        Ok(m + (s * step).ln())
    };
    Ok(log_trapz(&log_joint)? - log_trapz(&log_post)?)
}

/// One point of a model-discrimination curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscriminationPoint {
    pub sigma_x_prime: f64,
    pub mean_log_ratio: f64,
    pub stderr: f64,
}

/// The default prior-width grid for discrimination curves: 0.5 to 2.0 in
/// steps of 0.05.
pub fn default_sigma_x_grid() -> Vec<f64> {
    (0..=30).map(|i| 0.5 + 0.05 * i as f64).collect()
}

/// Draw one measurement from the true model, then for each candidate prior
/// width report `mean_k [ log p(y+|y-, sigma_x) - log p(y+|y-, sigma_x') ]`
/// over `k_realizations` fresh injected noises. Zero at the truth; positive
/// values mean the truth predicts the held-out half better.
pub fn discrimination_curve(
    toy_true: &ToyModel,
    sigma_x_grid: &[f64],
    alpha: f64,
    k_realizations: usize,
    y_seed: &SeedSpec,
) -> Result<Vec<DiscriminationPoint>> {
    if sigma_x_grid.is_empty() {
        return Err(Error::invalid("sigma_x_grid", "grid must be non-empty"));
    }
    if k_realizations == 0 {
        return Err(Error::invalid("k_realizations", "must be >= 1"));
    }
    c_alpha(alpha)?;
    let y = toy_true.draw_measurement(y_seed)?;
    let noises: Vec<Tensor> = (0..k_realizations)
        .map(|k| {
            gaussian_noise(
                &[toy_true.m],
                toy_true.sigma,
                &y_seed.child(2).child(k as u64),
            )
        })
        .collect::<Result<_>>()?;

    sigma_x_grid
        .iter()
        .map(|&sx_prime| {
            let candidate = ToyModel::new(toy_true.m, toy_true.sigma, sx_prime)?;
            let mut ratios = Vec::with_capacity(k_realizations);
            for w in &noises {
                let truth = log_predictive(toy_true, &y, w, alpha)?;
                let cand = log_predictive(&candidate, &y, w, alpha)?;
                ratios.push(truth - cand);
            }
            let mean = ratios.iter().sum::<f64>() / k_realizations as f64;
            let stderr = if k_realizations > 1 {
                let var = ratios.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>()
                    / (k_realizations - 1) as f64;
                (var / k_realizations as f64).sqrt()
            } else {
                0.0
            };
            Ok(DiscriminationPoint {
                sigma_x_prime: sx_prime,
                mean_log_ratio: mean,
                stderr,
            })
        })
        .collect()
}

/// Pointwise average of discrimination curves over several independent
/// measurement draws (`y_seed / draw index`).
pub fn averaged_discrimination_curve(
    toy_true: &ToyModel,
    sigma_x_grid: &[f64],
    alpha: f64,
    k_realizations: usize,
    y_draws: usize,
    seed: &SeedSpec,
) -> Result<Vec<DiscriminationPoint>> {
    if y_draws == 0 {
        return Err(Error::invalid("y_draws", "must be >= 1"));
    }
    let curves: Vec<Vec<DiscriminationPoint>> = (0..y_draws)
        .into_par_iter()
        .map(|d| {
            discrimination_curve(
                toy_true,
                sigma_x_grid,
                alpha,
                k_realizations,
                &seed.child(d as u64),
            )
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(sigma_x_grid.len());
    for (i, &sx) in sigma_x_grid.iter().enumerate() {
        let vals: Vec<f64> = curves.iter().map(|c| c[i].mean_log_ratio).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let stderr = if vals.len() > 1 {
            let var =
                vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (vals.len() - 1) as f64;
            (var / vals.len() as f64).sqrt()
        } else {
            curves[0][i].stderr
        };
        out.push(DiscriminationPoint {
            sigma_x_prime: sx,
            mean_log_ratio: mean,
            stderr,
        });
    }
    Ok(out)
}

/// One row of the Monte Carlo convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub alpha: f64,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    /// `mean_k | log p_hat_N - log p | / | log p |`
    pub rel_log_error: f64,
}

/// Sample-count checkpoints: powers of ten up to `n_max`, plus `n_max`.
pub fn convergence_checkpoints(n_max: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut n = 100usize;
    while n < n_max {
        out.push(n);
        n *= 10;
    }
    out.push(n_max);
    out.dedup();
    out
}

/// Relative log error of the sampling estimator of `p(y+|y-)` (exact
/// posterior draws, single realization each) against the closed form, at a
/// range of sample counts, averaged over `k_realizations` independent
/// splits per `(alpha, m)` pair.
pub fn mc_convergence_study(
    toy: &ToyModel,
    alpha_list: &[f64],
    m_list: &[usize],
    n_max: usize,
    k_realizations: usize,
    seed: &SeedSpec,
) -> Result<Vec<ConvergenceRow>> {
    if alpha_list.is_empty() || m_list.is_empty() {
        return Err(Error::invalid(
            "alpha_list",
            "alpha and m lists must be non-empty",
        ));
    }
    if n_max == 0 || k_realizations == 0 {
        return Err(Error::invalid(
            "n_max",
            "n_max and k_realizations must be >= 1",
        ));
    }
    let checkpoints = convergence_checkpoints(n_max);
    let mut rows = Vec::new();
    for (ai, &alpha) in alpha_list.iter().enumerate() {
        c_alpha(alpha)?;
        for (mi, &m) in m_list.iter().enumerate() {
            let cell = ToyModel::new(m, toy.sigma, toy.sigma_x)?;
            let model = cell.to_bayesian_model()?;
            let cell_seed = seed.child(ai as u64).child(mi as u64);
            let y = cell.draw_measurement(&cell_seed.child(1_000_000))?;
            let sampler = SamplerConfig::exact(cell_seed.clone());

            // Per split: per-sample log-densities, then prefix estimates.
            let errors: Vec<Vec<f64>> = (0..k_realizations)
                .into_par_iter()
                .map(|k| -> Result<Vec<f64>> {
                    let logliks =
                        phi3_realization_logliks(&model, &y, alpha, k, n_max, &sampler, &cell_seed)
                            .map_err(|e| e.in_realization(k))?;
                    let pair = realization_split(&model, &y, alpha, k, &cell_seed)?;
                    let truth = log_predictive(&cell, &y, &pair.noise, alpha)?;
                    checkpoints
                        .iter()
                        .map(|&n| {
                            let est = logsumexp(&logliks[..n])? - (n as f64).ln();
                            Ok((est - truth).abs() / truth.abs())
                        })
                        .collect()
                })
                .collect::<Result<_>>()?;

            for (ci, &n) in checkpoints.iter().enumerate() {
                let mean = errors.iter().map(|e| e[ci]).sum::<f64>() / k_realizations as f64;
                rows.push(ConvergenceRow {
                    alpha,
                    m,
                    n,
                    k: k_realizations,
                    rel_log_error: mean,
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> Tensor {
        Tensor::from_vec(vec![1], vec![v]).unwrap()
    }

    /// Quadrature moments of the posterior built only from density products.
    fn quadrature_posterior_moments(toy: &ToyModel, y_minus: f64, alpha: f64) -> (f64, f64) {
        let var_minus = toy.sigma * toy.sigma / alpha;
        let sx2 = toy.sigma_x * toy.sigma_x;
        let halfwidth = 10.0 * (sx2.min(var_minus)).sqrt() + y_minus.abs();
        let nodes = 200_001;
        let step = 2.0 * halfwidth / (nodes - 1) as f64;
        let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for i in 0..nodes {
            let x = -halfwidth + i as f64 * step;
            let q = (log_normal(y_minus, x, var_minus) + log_normal(x, 0.0, sx2)).exp();
            let wgt = if i == 0 || i == nodes - 1 { 0.5 } else { 1.0 };
            z += wgt * q;
            m1 += wgt * q * x;
            m2 += wgt * q * x * x;
        }
        let mean = m1 / z;
        (mean, m2 / z - mean * mean)
    }

    #[test]
    fn analytic_posterior_matches_quadrature_moments() {
        let toy = ToyModel::new(1, 1.0, 1.0).unwrap();
        let (mean, var) = analytic_posterior(&toy, &scalar(2.0), 0.5).unwrap();
        assert!((mean.data()[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((var - 2.0 / 3.0).abs() < 1e-12);
        let (qm, qv) = quadrature_posterior_moments(&toy, 2.0, 0.5);
        assert!((qm - mean.data()[0]).abs() < 1e-8, "quadrature mean {qm}");
        assert!((qv - var).abs() < 1e-8, "quadrature var {qv}");
    }

    #[test]
    fn full_information_limit() {
        let toy = ToyModel::new(1, 1.0, 1.0).unwrap();
        let (mean, var) = analytic_posterior(&toy, &scalar(2.0), 1.0 - 1e-12).unwrap();
        assert!((mean.data()[0] - 1.0).abs() < 1e-9);
        assert!((var - 0.5).abs() < 1e-9);
    }

    #[test]
    fn prior_dominates_as_sigma_x_vanishes() {
        let toy = ToyModel::new(1, 1.0, 1e-9).unwrap();
        let (mean, var) = analytic_posterior(&toy, &scalar(2.0), 0.5).unwrap();
        assert!(mean.data()[0].abs() < 1e-12);
        assert!(var < 1e-12);
    }

    #[test]
    fn log_predictive_symmetric_case() {
        // y = w = 0, sigma = sigma_x = 1, alpha = 0.5: total variance is
        // 2 + 2/3 = 8/3, so log p = -0.5 ln(2 pi 8/3).
        let toy = ToyModel::new(1, 1.0, 1.0).unwrap();
        let lp = log_predictive(&toy, &scalar(0.0), &scalar(0.0), 0.5).unwrap();
        let expect = -0.5 * (LN_2PI + (8.0f64 / 3.0).ln());
        assert!((lp - expect).abs() < 1e-12);
        let q = quadrature_predictive(&toy, &scalar(0.0), &scalar(0.0), 0.5, 20_001).unwrap();
        assert!((q - lp).abs() < 1e-8 * lp.abs());
    }

    #[test]
    fn closed_form_agrees_with_quadrature_over_random_parameters() {
        let seed = SeedSpec::new(90);
        let mut worst = 0.0f64;
        for i in 0..100 {
            let s = seed.child(i);
            let draw = |j: u64| gaussian_noise(&[1], 1.0, &s.child(j)).unwrap().data()[0];
            let sigma = 0.3 + draw(0).abs();
            let sigma_x = 0.3 + draw(1).abs();
            let alpha = 0.05 + 0.9 * (draw(2).abs() % 1.0);
            let toy = ToyModel::new(1, sigma, sigma_x).unwrap();
            let y = scalar(2.0 * draw(3));
            let w = scalar(sigma * draw(4));
            let cf = log_predictive(&toy, &y, &w, alpha).unwrap();
            let q = quadrature_predictive(&toy, &y, &w, alpha, 20_001).unwrap();
            worst = worst.max((cf - q).abs() / cf.abs().max(1e-12));
        }
        assert!(worst <= 1e-8, "worst relative disagreement {worst:.3e}");
    }

    #[test]
    fn predictive_factorizes_over_coordinates() {
        let toy2 = ToyModel::new(2, 0.7, 1.3).unwrap();
        let toy1 = ToyModel::new(1, 0.7, 1.3).unwrap();
        let y = Tensor::from_vec(vec![2], vec![0.4, -1.1]).unwrap();
        let w = Tensor::from_vec(vec![2], vec![-0.2, 0.9]).unwrap();
        let joint = log_predictive(&toy2, &y, &w, 0.3).unwrap();
        let split: f64 = (0..2)
            .map(|i| {
                log_predictive(&toy1, &scalar(y.data()[i]), &scalar(w.data()[i]), 0.3).unwrap()
            })
            .sum();
        assert!((joint - split).abs() < 1e-12);
    }

    #[test]
    fn small_alpha_recovers_marginal_likelihood() {
        let toy = ToyModel::new(1, 1.0, 1.0).unwrap();
        let y = scalar(0.7);
        let w = scalar(-0.4);
        let alpha = 1e-6;
        let lp = log_predictive(&toy, &y, &w, alpha).unwrap();
        let marginal = log_normal(0.7, 0.0, 2.0);
        assert!(
            (lp - marginal).abs() < 1e-3,
            "lp {lp} vs marginal {marginal}"
        );
    }

    #[test]
    fn coarse_grid_stays_finite() {
        let toy = ToyModel::new(1, 1.0, 1.0).unwrap();
        let coarse = quadrature_predictive(&toy, &scalar(0.3), &scalar(0.2), 0.5, 10).unwrap();
        let fine = quadrature_predictive(&toy, &scalar(0.3), &scalar(0.2), 0.5, 20_001).unwrap();
        assert!(coarse.is_finite());
        // Accuracy degrades but stays in the right region.
        assert!((coarse - fine).abs() < 0.1);
    }

    #[test]
    fn discrimination_zero_at_truth() {
        let toy = ToyModel::new(50, 1.0, 1.0).unwrap();
        let grid = [0.8, 1.0, 1.25];
        let curve = discrimination_curve(&toy, &grid, 0.5, 10, &SeedSpec::new(91)).unwrap();
        assert_eq!(curve[1].mean_log_ratio, 0.0);
        assert_eq!(curve[1].stderr, 0.0);
    }

    #[test]
    fn convergence_study_single_sample_is_finite() {
        let toy = ToyModel::new(4, 0.5, 1.0).unwrap();
        let rows = mc_convergence_study(&toy, &[0.5], &[4], 1, 3, &SeedSpec::new(92)).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].rel_log_error.is_finite());
        // K = 1 runs without averaging.
        let solo = mc_convergence_study(&toy, &[0.5], &[4], 50, 1, &SeedSpec::new(93)).unwrap();
        assert!(solo.iter().all(|r| r.rel_log_error.is_finite() && r.k == 1));
    }

    #[test]
    fn default_grid_shape() {
        let g = default_sigma_x_grid();
        assert_eq!(g.len(), 31);
        assert!((g[0] - 0.5).abs() < 1e-15);
        assert!((g[30] - 2.0).abs() < 1e-12);
    }
}
