//! Build operators, models, samplers and scoring parameters from a
//! [`RunConfig`].

use splitscore_core::sampler::{DEFAULT_BURN_IN, DEFAULT_STEP_SCALE, DEFAULT_THINNING};
use splitscore_core::{
    make_kernel, make_mri_mask, BayesianModel, BlurKernel, Embedding, Error, GaussianLikelihood,
    KernelFamily, LinearOperator, Metric, Prior, Result, SamplerConfig, SamplerKind, ScoreParams,
    SeedSpec, ValidMask,
};

use crate::config::{parse_list, RunConfig};

/// Stream index reserved for deterministic mask construction, distinct from
/// the scoring stream (children of the bare master seed).
const MASK_STREAM: u64 = 900;

pub fn parse_kernel_family(family: &str, params: &[f64]) -> Result<KernelFamily> {
    let want = |n: usize| -> Result<()> {
        if params.len() == n {
            Ok(())
        } else {
            Err(Error::invalid(
                "kernel_params",
                format!(
                    "family {family} takes {n} parameter(s), got {}",
                    params.len()
                ),
            ))
        }
    };
    match family {
        "gaussian" => {
            want(1)?;
            Ok(KernelFamily::Gaussian { sigma: params[0] })
        }
        "moffat" => {
            want(2)?;
            Ok(KernelFamily::Moffat {
                sigma: params[0],
                mu: params[1],
            })
        }
        "laplace" => {
            want(1)?;
            Ok(KernelFamily::Laplace { sigma: params[0] })
        }
        "laplace_xy" => {
            want(1)?;
            Ok(KernelFamily::LaplaceXY { sigma: params[0] })
        }
        "uniform" => {
            want(1)?;
            Ok(KernelFamily::Uniform { s: params[0] })
        }
        other => Err(Error::invalid(
            "kernel_family",
            format!("unknown family {other:?}"),
        )),
    }
}

/// Parse a candidate kernel spec like `gaussian:2` or `moffat:0.5:1`.
pub fn parse_kernel_spec(spec: &str, support: usize) -> Result<BlurKernel> {
    let mut parts = spec.split(':');
    let family = parts.next().unwrap_or_default().trim();
    let params: Vec<f64> = parts
        .map(|p| {
            p.trim().parse::<f64>().map_err(|_| {
                Error::invalid("candidates", format!("bad parameter {p:?} in {spec:?}"))
            })
        })
        .collect::<Result<_>>()?;
    make_kernel(parse_kernel_family(family, &params)?, support)
}

pub fn build_operator(
    cfg: &RunConfig,
    shape: &[usize],
    master_seed: u64,
) -> Result<LinearOperator> {
    if let Some(family) = cfg.get_str("kernel_family") {
        let family = family.to_string();
        let params = parse_list::<f64>(&cfg.str_or("kernel_params", ""), "kernel_params")?;
        let support = cfg.usize_or("kernel_support", splitscore_core::DEFAULT_KERNEL_SUPPORT)?;
        let kernel = make_kernel(parse_kernel_family(&family, &params)?, support)?;
        return LinearOperator::circulant(shape.to_vec(), kernel);
    }
    if let Some(r) = cfg.f64_opt("mask_r")? {
        let center = cfg.f64_or("mask_center_fraction", 0.08)?;
        let seed = SeedSpec::with_path(master_seed, vec![MASK_STREAM]);
        return make_mri_mask(shape.to_vec(), r, center, &seed);
    }
    LinearOperator::identity(shape.to_vec())
}

pub fn build_prior(cfg: &RunConfig) -> Result<Prior> {
    match cfg.str_or("prior", "iid_gaussian").as_str() {
        "iid_gaussian" => Prior::iid_gaussian(cfg.f64_or("sigma_x", 1.0)?),
        "charbonnier_tv" => {
            Prior::charbonnier_tv(cfg.f64_or("lambda", 10.0)?, cfg.f64_or("epsilon", 0.01)?)
        }
        other => Err(Error::invalid("prior", format!("unknown prior {other:?}"))),
    }
}

/// Build the model described by the config for a measurement of `shape`.
/// Circulant models carry their own half-support crop, mirroring the
/// selection protocol's treatment of periodic padding.
pub fn build_model(cfg: &RunConfig, shape: &[usize], master_seed: u64) -> Result<BayesianModel> {
    let op = build_operator(cfg, shape, master_seed)?;
    let sigma = cfg.f64_or("sigma", 0.1)?;
    let border = op.kernel().map(|k| k.half_support()).unwrap_or(0);
    let mut likelihood = GaussianLikelihood::new(op, sigma)?;
    if border > 0 {
        likelihood = likelihood.with_valid_mask(ValidMask::new(border));
    }
    let prior = build_prior(cfg)?;
    let label = match cfg.get_str("kernel_family") {
        Some(f) => format!("{f}:{}", cfg.str_or("kernel_params", "")),
        None if cfg.is_set("mask_r") => format!("masked_fourier(r={})", cfg.str_or("mask_r", "")),
        None => "identity".to_string(),
    };
    Ok(BayesianModel::new(prior, likelihood, label))
}

pub fn build_sampler(cfg: &RunConfig, chain_seed: SeedSpec) -> Result<SamplerConfig> {
    let kind = match cfg.str_or("sampler", "exact").as_str() {
        "exact" | "exact_conjugate" => SamplerKind::ExactConjugate,
        "ula" => SamplerKind::Ula,
        other => {
            return Err(Error::invalid(
                "sampler",
                format!("unknown sampler {other:?}"),
            ))
        }
    };
    Ok(SamplerConfig {
        kind,
        burn_in: cfg.usize_or("burn_in", DEFAULT_BURN_IN)?,
        thinning: cfg.usize_or("thinning", DEFAULT_THINNING)?,
        step_scale: cfg.f64_or("step_scale", DEFAULT_STEP_SCALE)?,
        chain_seed,
    })
}

pub fn build_metric(cfg: &RunConfig) -> Result<Metric> {
    cfg.str_or("metric", "phi1").parse()
}

pub fn build_embedding(cfg: &RunConfig) -> Result<Embedding> {
    match cfg.str_or("embedding", "identity").as_str() {
        "identity" => Ok(Embedding::Identity),
        "pyramid" => Ok(Embedding::Pyramid {
            levels: cfg.usize_or("embedding_levels", 3)?,
        }),
        path if path.starts_with("external:") => {
            Embedding::external_from_file(path.trim_start_matches("external:"))
        }
        other => Err(Error::invalid(
            "embedding",
            format!("unknown embedding {other:?}"),
        )),
    }
}

/// Monte Carlo budget for the chosen metric. The posterior rule defaults to
/// the lighter `K=10, N=L=20, alpha=0.1` configuration; the others to
/// `K=10, N=100, alpha=0.5`.
pub fn build_score_params(cfg: &RunConfig, metric: Metric) -> Result<ScoreParams> {
    let master_seed = cfg.u64_or("master_seed", 0)?;
    let seed = SeedSpec::new(master_seed);
    let (default_alpha, default_n) = match metric {
        Metric::Phi2 => (0.1, 20),
        _ => (0.5, 100),
    };
    Ok(ScoreParams {
        alpha: cfg.f64_or("alpha", default_alpha)?,
        k_realizations: cfg.usize_or("k_realizations", 10)?,
        n_samples: cfg.usize_or("n_samples", default_n)?,
        l_samples: cfg.usize_or("l_samples", 20)?,
        sampler: build_sampler(cfg, seed.clone())?,
        seed,
    })
}
