//! Shared fixtures for the pipeline benchmarks.

use splitscore_core::{
    gaussian_noise, make_kernel, BayesianModel, GaussianLikelihood, KernelFamily, LinearOperator,
    Prior, SeedSpec, Tensor,
};

/// A blurred, noisy measurement and its generating model on an `n x n` grid.
pub fn blur_fixture(n: usize) -> (BayesianModel, Tensor) {
    let kernel = make_kernel(KernelFamily::Gaussian { sigma: 2.0 }, 9).unwrap();
    let op = LinearOperator::circulant(vec![n, n], kernel).unwrap();
    let x = gaussian_noise(&[n, n], 0.3, &SeedSpec::new(1)).unwrap();
    let e = gaussian_noise(&[n, n], 0.1, &SeedSpec::new(2)).unwrap();
    let y = op.apply(&x).unwrap().add(&e).unwrap();
    let model = BayesianModel::new(
        Prior::iid_gaussian(0.3).unwrap(),
        GaussianLikelihood::new(op, 0.1).unwrap(),
        format!("blur{n}"),
    );
    (model, y)
}
