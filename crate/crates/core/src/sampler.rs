//! Posterior samplers.
//!
//! Two kinds: an exact conjugate sampler for i.i.d.-Gaussian priors with
//! Fourier-diagonal operators (i.i.d. draws, no chain error), and an
//! unadjusted Langevin (ULA) chain for any smooth prior. Scoring code is
//! sampler-agnostic: new kinds can be added behind [`SamplerConfig`] without
//! touching the scorers.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::{fft2_unitary, ifft2_unitary, to_complex, to_real_with_residue};
use crate::model::{grad_log_posterior, posterior_lipschitz_bound, BayesianModel, Prior};
use crate::rng::{standard_normal_vec, SeedSpec};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    ExactConjugate,
    Ula,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    pub burn_in: usize,
    pub thinning: usize,
    /// Step size as a fraction of `1 / L`; must lie in `(0, 1]`.
    pub step_scale: f64,
    pub chain_seed: SeedSpec,
}

pub const DEFAULT_BURN_IN: usize = 200;
pub const DEFAULT_THINNING: usize = 20;
pub const DEFAULT_STEP_SCALE: f64 = 0.9;

impl SamplerConfig {
    pub fn exact(chain_seed: SeedSpec) -> Self {
        SamplerConfig {
            kind: SamplerKind::ExactConjugate,
            burn_in: 0,
            thinning: 1,
            step_scale: DEFAULT_STEP_SCALE,
            chain_seed,
        }
    }

    pub fn ula(chain_seed: SeedSpec) -> Self {
        SamplerConfig {
            kind: SamplerKind::Ula,
            burn_in: DEFAULT_BURN_IN,
            thinning: DEFAULT_THINNING,
            step_scale: DEFAULT_STEP_SCALE,
            chain_seed,
        }
    }

    pub fn with_chain_seed(&self, chain_seed: SeedSpec) -> Self {
        SamplerConfig {
            chain_seed,
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.thinning == 0 {
            return Err(Error::invalid("thinning", "must be >= 1"));
        }
        if !(self.step_scale > 0.0 && self.step_scale <= 1.0) {
            return Err(Error::invalid(
                "step_scale",
                format!("must lie in (0, 1], got {}", self.step_scale),
            ));
        }
        Ok(())
    }
}

/// Per-chain diagnostics retained with every sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleDiagnostics {
    /// Langevin step size, `None` for exact draws.
    pub step_size: Option<f64>,
    /// Whether the step satisfied `gamma <= 1 / L`.
    pub step_bound_ok: bool,
    pub mean: Tensor,
    pub variance: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub samples: Vec<Tensor>,
    pub model_label: String,
    /// Fingerprint of the conditioning measurement (shape and payload bits),
    /// so sample sets can be matched to the measurement they came from.
    pub measurement_id: u64,
    pub diagnostics: SampleDiagnostics,
}

/// FNV-1a over the measurement's shape and payload bit patterns.
fn measurement_fingerprint(y: &Tensor) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut absorb = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
    };
    for &d in y.shape() {
        absorb(&(d as u64).to_le_bytes());
    }
    for &v in y.data() {
        absorb(&v.to_bits().to_le_bytes());
    }
    h
}

impl SampleSet {
    fn assemble(
        samples: Vec<Tensor>,
        model_label: String,
        measurement_id: u64,
        step_size: Option<f64>,
    ) -> Result<Self> {
        let n = samples.len();
        let shape = samples[0].shape().to_vec();
        let dim = samples[0].len();
        let mut mean = vec![0.0; dim];
        for s in &samples {
            for (m, &v) in mean.iter_mut().zip(s.data()) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let mut var = vec![0.0; dim];
        if n > 1 {
            for s in &samples {
                for ((v, &x), &m) in var.iter_mut().zip(s.data()).zip(&mean) {
                    *v += (x - m) * (x - m);
                }
            }
            for v in &mut var {
                *v /= (n - 1) as f64;
            }
        }
        Ok(SampleSet {
            samples,
            model_label,
            measurement_id,
            diagnostics: SampleDiagnostics {
                step_size,
                step_bound_ok: true,
                mean: Tensor::from_vec(shape.clone(), mean)?,
                variance: Tensor::from_vec(shape, var)?,
            },
        })
    }

    /// Stack samples into one tensor with leading dim `n`, exportable as FT64.
    pub fn to_stacked_tensor(&self) -> Result<Tensor> {
        let mut shape = vec![self.samples.len()];
        shape.extend_from_slice(self.samples[0].shape());
        let mut data = Vec::with_capacity(self.samples.len() * self.samples[0].len());
        for s in &self.samples {
            data.extend_from_slice(s.data());
        }
        Tensor::from_vec(shape, data)
    }
}

/// Draw `n` i.i.d. exact posterior samples for an i.i.d.-Gaussian prior and
/// Fourier-diagonal operator.
///
/// In the unitary Fourier domain the posterior factorizes per coefficient
/// `i` with variance `v_i = (|d_i|^2 / sigma^2 + 1 / sigma_x^2)^-1` and mean
/// `v_i conj(d_i) y_hat_i / sigma^2`. Noise is generated as white pixel
/// noise and transformed, so the sampled spectrum is Hermitian and the
/// inverse transform is real.
pub fn sample_exact(
    model: &BayesianModel,
    y: &Tensor,
    n: usize,
    seed: &SeedSpec,
) -> Result<SampleSet> {
    let Prior::IidGaussian { sigma_x } = model.prior else {
        return Err(Error::Unsupported(format!(
            "exact conjugate sampling requires an iid Gaussian prior, got {}",
            model.prior.label()
        )));
    };
    if model.likelihood.valid.is_some() {
        return Err(Error::Unsupported(
            "exact conjugate sampling requires an uncropped likelihood; \
             drop the valid mask before sampling"
                .into(),
        ));
    }
    if n == 0 {
        return Err(Error::invalid("n", "must draw at least one sample"));
    }
    let op = &model.likelihood.op;
    if y.shape() != op.shape() {
        return Err(Error::DimensionMismatch(format!(
            "measurement shape {:?} vs operator shape {:?}",
            y.shape(),
            op.shape()
        )));
    }
    let sigma2 = model.likelihood.sigma * model.likelihood.sigma;
    let prior_prec = 1.0 / (sigma_x * sigma_x);
    let mut rng = seed.rng();

    let samples = if op.is_identity() {
        // Posterior is i.i.d. per pixel; no transform needed.
        let v = 1.0 / (1.0 / sigma2 + prior_prec);
        let sd = v.sqrt();
        let mean: Vec<f64> = y.data().iter().map(|&yi| v * yi / sigma2).collect();
        (0..n)
            .map(|_| {
                let noise = standard_normal_vec(mean.len(), &mut rng);
                let data = mean.iter().zip(&noise).map(|(&m, &z)| m + sd * z).collect();
                Tensor::from_vec(y.shape().to_vec(), data)
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        let spectrum = op
            .spectrum()
            .ok_or_else(|| Error::Unsupported("operator is not Fourier-diagonal".into()))?;
        let [h, w] = *op.shape() else {
            return Err(Error::DimensionMismatch(
                "Fourier sampling requires 2-d shapes".into(),
            ));
        };
        let mut y_hat = to_complex(y.data());
        fft2_unitary(&mut y_hat, h, w);
        let mut post_mean = Vec::with_capacity(y_hat.len());
        let mut post_sd = Vec::with_capacity(y_hat.len());
        for (d, yi) in spectrum.iter().zip(&y_hat) {
            let v = 1.0 / (d.norm_sqr() / sigma2 + prior_prec);
            post_mean.push(d.conj() * yi * (v / sigma2));
            post_sd.push(v.sqrt());
        }
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let noise = standard_normal_vec(h * w, &mut rng);
            let mut buf = to_complex(&noise);
            fft2_unitary(&mut buf, h, w);
            for ((b, m), sd) in buf.iter_mut().zip(&post_mean).zip(&post_sd) {
                *b = m + Complex64::new(*sd, 0.0) * *b;
            }
            ifft2_unitary(&mut buf, h, w);
            let (data, residue) = to_real_with_residue(&buf);
            if residue > 1e-9 {
                return Err(Error::Numerical(format!(
                    "exact sampler imaginary residue {residue:.3e}"
                )));
            }
            out.push(Tensor::from_vec(y.shape().to_vec(), data)?);
        }
        out
    };
    SampleSet::assemble(
        samples,
        model.label.clone(),
        measurement_fingerprint(y),
        None,
    )
}

/// Closed-form posterior mean for the conjugate configuration, computed in
/// the Fourier domain. Useful as a deterministic reference for chain
/// samplers.
pub fn exact_posterior_mean(model: &BayesianModel, y: &Tensor) -> Result<Tensor> {
    let Prior::IidGaussian { sigma_x } = model.prior else {
        return Err(Error::Unsupported(format!(
            "closed-form posterior mean requires an iid Gaussian prior, got {}",
            model.prior.label()
        )));
    };
    let op = &model.likelihood.op;
    let sigma2 = model.likelihood.sigma * model.likelihood.sigma;
    let prior_prec = 1.0 / (sigma_x * sigma_x);
    if op.is_identity() {
        let v = 1.0 / (1.0 / sigma2 + prior_prec);
        return y.scale(v / sigma2);
    }
    let spectrum = op
        .spectrum()
        .ok_or_else(|| Error::Unsupported("operator is not Fourier-diagonal".into()))?;
    let [h, w] = *op.shape() else {
        return Err(Error::DimensionMismatch(
            "Fourier path requires 2-d shapes".into(),
        ));
    };
    let mut buf = to_complex(y.data());
    fft2_unitary(&mut buf, h, w);
    for (b, d) in buf.iter_mut().zip(spectrum) {
        let v = 1.0 / (d.norm_sqr() / sigma2 + prior_prec);
        *b *= d.conj() * (v / sigma2);
    }
    ifft2_unitary(&mut buf, h, w);
    let (data, residue) = to_real_with_residue(&buf);
    if residue > 1e-9 {
        return Err(Error::Numerical(format!(
            "posterior mean imaginary residue {residue:.3e}"
        )));
    }
    Tensor::from_vec(y.shape().to_vec(), data)
}

/// Run an unadjusted Langevin chain
/// `x <- x + gamma grad log p(x|y) + sqrt(2 gamma) xi`,
/// initialized at `Aᵀ y`, discarding `burn_in` steps and keeping every
/// `thinning`-th state.
pub fn sample_ula(
    model: &BayesianModel,
    y: &Tensor,
    n: usize,
    config: &SamplerConfig,
) -> Result<SampleSet> {
    config.validate()?;
    if n == 0 {
        return Err(Error::invalid("n", "must draw at least one sample"));
    }
    let lipschitz = posterior_lipschitz_bound(model)?;
    let gamma = config.step_scale / lipschitz;
    let mut x = model.likelihood.op.apply_adjoint(y)?;
    let guard = 1e6 * x.norm() + 1e6;
    let noise_scale = (2.0 * gamma).sqrt();
    let mut rng = config.chain_seed.rng();
    let total = config.burn_in + n * config.thinning;
    let mut samples = Vec::with_capacity(n);
    for t in 1..=total {
        let grad = grad_log_posterior(model, y, &x)?;
        let noise = standard_normal_vec(x.len(), &mut rng);
        let data: Vec<f64> = x
            .data()
            .iter()
            .zip(grad.data())
            .zip(&noise)
            .map(|((&xi, &gi), &zi)| xi + gamma * gi + noise_scale * zi)
            .collect();
        x = Tensor::from_vec(x.shape().to_vec(), data)
            .map_err(|_| Error::Numerical(format!("ULA state became non-finite at step {t}")))?;
        if x.norm() > guard {
            return Err(Error::Numerical(format!(
                "ULA diverged at step {t}: state norm {:.3e} exceeds guard {guard:.3e}",
                x.norm()
            )));
        }
        if t > config.burn_in && (t - config.burn_in) % config.thinning == 0 {
            samples.push(x.clone());
        }
    }
    SampleSet::assemble(
        samples,
        model.label.clone(),
        measurement_fingerprint(y),
        Some(gamma),
    )
}

/// Dispatch to the configured sampler kind.
pub fn sample_posterior(
    model: &BayesianModel,
    y: &Tensor,
    n: usize,
    config: &SamplerConfig,
) -> Result<SampleSet> {
    match config.kind {
        SamplerKind::ExactConjugate => sample_exact(model, y, n, &config.chain_seed),
        SamplerKind::Ula => sample_ula(model, y, n, config),
    }
}
