//! Unsupervised Bayesian model selection and misspecification testing for
//! linear-Gaussian imaging inverse problems, from a single noisy measurement.
//!
//! The pipeline splits a measurement into two conditionally independent
//! halves by noise injection ([`fission`]), conditions a Bayesian model's
//! posterior on one half ([`sampler`]), and scores how well the model
//! predicts the other half ([`scoring`]). Three scoring rules are provided:
//! a squared-residual likelihood rule, an embedded sample-discrepancy rule,
//! and a log posterior-predictive density whose small-split limit is the
//! marginal likelihood. [`experiment`] builds model selection and
//! out-of-distribution testing on top; [`oracle`] holds closed-form
//! references for the white-noise conjugate Gaussian model used to validate
//! every estimator.

pub mod error;
pub mod experiment;
pub mod fission;
pub mod fourier;
pub mod io;
pub mod linop;
pub mod model;
pub mod oracle;
pub mod report;
pub mod rng;
pub mod sampler;
pub mod scoring;
pub mod tensor;

pub use error::{Error, Result};
pub use experiment::{
    alpha_sweep, calibrate_threshold, error_rates, few_shot_select, ood_decide, select_model,
    AlphaPopulation, AlphaSweepRow, CandidateSet, Decision, ErrorRates, Metric, OodTestSpec,
    RankedCandidate,
};
pub use fission::{c_alpha, split, split_with_noise, FissionPair};
pub use io::{read_pgm, read_tensor, write_pgm, write_tensor};
pub use linop::{
    make_kernel, make_mri_mask, valid_crop, BlurKernel, KernelFamily, LinearOperator, OperatorKind,
    ValidMask, DEFAULT_KERNEL_SUPPORT,
};
pub use model::{
    grad_log_posterior, log_likelihood, posterior_lipschitz_bound, squared_residual, BayesianModel,
    GaussianLikelihood, Prior,
};
pub use oracle::ToyModel;
pub use rng::{gaussian_noise, SeedSpec};
pub use sampler::{
    sample_exact, sample_posterior, sample_ula, SampleSet, SamplerConfig, SamplerKind,
};
pub use scoring::{embed, phi1, phi2, phi3_log, Embedding, ScoreParams, ScoreReport};
pub use tensor::Tensor;
