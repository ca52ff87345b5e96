//! Subcommand implementations.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use splitscore_core::oracle::{averaged_discrimination_curve, mc_convergence_study, ToyModel};
use splitscore_core::report::{
    convergence_csv, discrimination_csv, per_item_csv, ranking_csv, rates_csv, score_report_detail,
    score_reports_csv, Provenance,
};
use splitscore_core::scoring::{
    phi1_realization, phi1_report_from_partials, phi2_realization, phi2_report_from_partials,
    phi3_realization, phi3_report_from_partials,
};
use splitscore_core::{
    calibrate_threshold, error_rates, few_shot_select, ood_decide, split, AlphaSweepRow,
    BayesianModel, CandidateSet, Decision, Embedding, Error, GaussianLikelihood, Metric, Result,
    ScoreParams, ScoreReport, SeedSpec, Tensor,
};

use crate::args;
use crate::config::{parse_list, RunConfig};
use crate::modelspec;
use crate::sink::{read_partials, OrderedSink};

const VERSION: &str = env!("CARGO_PKG_VERSION");

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::from_file(p),
        None => Ok(RunConfig::default()),
    }
}

fn read_measurement(path: &Path) -> Result<Tensor> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("pgm") => splitscore_core::read_pgm(path),
        _ => splitscore_core::read_tensor(path),
    }
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

pub fn init_threads(cfg: &RunConfig, flag: Option<usize>) -> Result<()> {
    let threads = match flag {
        Some(t) => t,
        None => cfg.usize_or("threads", 0)?,
    };
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::invalid("threads", e.to_string()))?;
    }
    Ok(())
}

pub fn cmd_split(a: &args::SplitArgs) -> Result<()> {
    let mut cfg = load_config(&a.config)?;
    cfg.override_with("sigma", a.sigma);
    cfg.override_with("alpha", a.alpha);
    cfg.override_with("master_seed", a.seed);
    init_threads(&cfg, a.threads)?;

    let y = read_measurement(&a.input)?;
    let sigma = cfg.f64_or("sigma", 0.1)?;
    let alpha = cfg.f64_or("alpha", 0.5)?;
    let seed = SeedSpec::new(cfg.u64_or("master_seed", 0)?);
    let pair = split(&y, sigma, alpha, &seed)?;

    std::fs::create_dir_all(&a.out_dir)?;
    splitscore_core::write_tensor(a.out_dir.join("y_plus.ft64"), &pair.y_plus)?;
    splitscore_core::write_tensor(a.out_dir.join("y_minus.ft64"), &pair.y_minus)?;
    splitscore_core::write_tensor(a.out_dir.join("w.ft64"), &pair.noise)?;
    eprintln!(
        "split: wrote y_plus.ft64, y_minus.ft64, w.ft64 to {} (alpha={alpha}, sigma={sigma})",
        a.out_dir.display()
    );
    Ok(())
}

pub fn cmd_oracle_check(a: &args::OracleCheckArgs) -> Result<()> {
    let mut cfg = load_config(&a.config)?;
    cfg.override_with("sigma", a.sigma);
    cfg.override_with("sigma_x", a.sigma_x);
    cfg.override_with("master_seed", a.seed);
    init_threads(&cfg, a.threads)?;

    let m_list = parse_list::<usize>(&a.m, "m")?;
    let alpha_list = parse_list::<f64>(&a.alpha, "alpha")?;
    let sigma = cfg.f64_or("sigma", 0.05)?;
    let sigma_x = cfg.f64_or("sigma_x", 1.0)?;
    let master_seed = cfg.u64_or("master_seed", 0)?;
    let toy = ToyModel::new(*m_list.first().unwrap_or(&1), sigma, sigma_x)?;
    let rows = mc_convergence_study(
        &toy,
        &alpha_list,
        &m_list,
        a.n_max,
        a.k,
        &SeedSpec::new(master_seed),
    )?;
    emit(
        &a.out,
        &convergence_csv(
            &rows,
            &Provenance {
                master_seed,
                version: VERSION,
            },
        ),
    )
}

pub fn cmd_discriminate(a: &args::DiscriminateArgs) -> Result<()> {
    let mut cfg = load_config(&a.config)?;
    cfg.override_with("sigma", a.sigma);
    cfg.override_with("sigma_x", a.sigma_x);
    cfg.override_with("master_seed", a.seed);
    init_threads(&cfg, a.threads)?;

    let alphas = parse_list::<f64>(&a.alpha, "alpha")?;
    if !(a.grid_step > 0.0) || a.grid_max < a.grid_min {
        return Err(Error::invalid(
            "grid",
            "need grid_min <= grid_max and grid_step > 0",
        ));
    }
    let mut grid = Vec::new();
    let mut i = 0usize;
    loop {
        let v = a.grid_min + a.grid_step * i as f64;
        if v > a.grid_max + 1e-12 {
            break;
        }
        grid.push(v);
        i += 1;
    }
    let sigma = cfg.f64_or("sigma", 1.0)?;
    let sigma_x = cfg.f64_or("sigma_x", 1.0)?;
    let master_seed = cfg.u64_or("master_seed", 0)?;
    let toy = ToyModel::new(a.m, sigma, sigma_x)?;
    let mut tables = Vec::new();
    for &alpha in &alphas {
        let curve = averaged_discrimination_curve(
            &toy,
            &grid,
            alpha,
            a.k,
            a.y_draws,
            &SeedSpec::new(master_seed),
        )?;
        tables.push((alpha, curve));
    }
    emit(
        &a.out,
        &discrimination_csv(
            &tables,
            &Provenance {
                master_seed,
                version: VERSION,
            },
        ),
    )
}

/// Compute one metric with per-realization partials flushed to an optional
/// sink, reusing any completed prefix when resuming.
fn score_with_partials(
    model: &BayesianModel,
    y: &Tensor,
    metric: Metric,
    embedding: &Embedding,
    params: &ScoreParams,
    partials_path: &Option<PathBuf>,
    resume: bool,
) -> Result<ScoreReport> {
    params.validate()?;
    let completed: Vec<f64> = match (partials_path, resume) {
        (Some(path), true) if path.exists() => {
            let mut p = read_partials(path)?;
            p.truncate(params.k_realizations);
            p
        }
        _ => Vec::new(),
    };
    let sink = match partials_path {
        Some(path) => Some(OrderedSink::open(path, completed.len())?),
        None => None,
    };

    let fresh: Vec<f64> = (completed.len()..params.k_realizations)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let partial = match metric {
                Metric::Phi1 => phi1_realization(
                    model,
                    y,
                    params.alpha,
                    k,
                    params.n_samples,
                    &params.sampler,
                    &params.seed,
                ),
                Metric::Phi2 => phi2_realization(
                    model,
                    y,
                    embedding,
                    params.alpha,
                    k,
                    params.n_samples,
                    params.l_samples,
                    &params.sampler,
                    &params.seed,
                ),
                Metric::Phi3 => phi3_realization(
                    model,
                    y,
                    params.alpha,
                    k,
                    params.n_samples,
                    &params.sampler,
                    &params.seed,
                ),
            }
            .map_err(|e| e.in_realization(k))?;
            if let Some(sink) = &sink {
                sink.push(k, partial)?;
            }
            Ok(partial)
        })
        .collect::<Result<_>>()?;
    if let Some(sink) = sink {
        sink.finish()?;
    }

    let mut partials = completed;
    partials.extend(fresh);
    Ok(match metric {
        Metric::Phi1 => phi1_report_from_partials(model.label.clone(), partials, params),
        Metric::Phi2 => phi2_report_from_partials(model.label.clone(), partials, params),
        Metric::Phi3 => phi3_report_from_partials(model.label.clone(), partials, params)?,
    })
}

pub fn cmd_score(a: &args::ScoreArgs) -> Result<()> {
    let mut cfg = load_config(&a.config)?;
    cfg.override_with("metric", a.metric.clone());
    cfg.override_with("alpha", a.alpha);
    cfg.override_with("master_seed", a.seed);
    init_threads(&cfg, a.threads)?;

    let y = read_measurement(&a.input)?;
    let metric = modelspec::build_metric(&cfg)?;
    let master_seed = cfg.u64_or("master_seed", 0)?;
    let model = modelspec::build_model(&cfg, y.shape(), master_seed)?;
    let embedding = modelspec::build_embedding(&cfg)?;
    let params = modelspec::build_score_params(&cfg, metric)?;

    let report = score_with_partials(
        &model,
        &y,
        metric,
        &embedding,
        &params,
        &a.partials,
        a.resume,
    )?;
    let provenance = Provenance {
        master_seed,
        version: VERSION,
    };
    if let Some(detail) = &a.report {
        std::fs::write(detail, score_report_detail(&report, &provenance))?;
    }
    emit(
        &a.out,
        &score_reports_csv(std::slice::from_ref(&report), &provenance),
    )
}

pub fn cmd_select_kernel(a: &args::SelectKernelArgs) -> Result<()> {
    let mut cfg = load_config(&a.config)?;
    cfg.override_with("metric", a.metric.clone());
    cfg.override_with("alpha", a.alpha);
    cfg.override_with("master_seed", a.seed);
    init_threads(&cfg, a.threads)?;

    let inputs = a
        .input
        .split(',')
        .map(|p| read_measurement(Path::new(p.trim())))
        .collect::<Result<Vec<_>>>()?;
    if inputs.is_empty() {
        return Err(Error::invalid("input", "need at least one measurement"));
    }
    let shape = inputs[0].shape().to_vec();
    let sigma = cfg.f64_or("sigma", 0.1)?;
    let support = cfg.usize_or("kernel_support", splitscore_core::DEFAULT_KERNEL_SUPPORT)?;
    let prior = modelspec::build_prior(&cfg)?;

    let models = a
        .candidates
        .split(',')
        .map(|spec| -> Result<BayesianModel> {
            let kernel = modelspec::parse_kernel_spec(spec.trim(), support)?;
            let label = kernel.family.label();
            let op = splitscore_core::LinearOperator::circulant(shape.clone(), kernel)?;
            Ok(BayesianModel::new(
                prior.clone(),
                GaussianLikelihood::new(op, sigma)?,
                label,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let candidates = CandidateSet::new(models)?.with_shared_crop();

    let metric = modelspec::build_metric(&cfg)?;
    let embedding = modelspec::build_embedding(&cfg)?;
    let params = modelspec::build_score_params(&cfg, metric)?;
    let ranked = few_shot_select(&candidates, &inputs, metric, &embedding, &params)?;
    let master_seed = cfg.u64_or("master_seed", 0)?;
    emit(
        &a.out,
        &ranking_csv(
            &ranked,
            &Provenance {
                master_seed,
                version: VERSION,
            },
        ),
    )
}

pub fn cmd_ood_test(a: &args::OodTestArgs) -> Result<()> {
    let mut cfg = load_config(&a.config)?;
    cfg.override_with("metric", a.metric.clone());
    cfg.override_with("alpha", a.alpha);
    cfg.override_with("master_seed", a.seed);
    init_threads(&cfg, a.threads)?;

    let metric = modelspec::build_metric(&cfg)?;
    if metric == Metric::Phi3 {
        return Err(Error::invalid(
            "metric",
            "the OOD statistic must be phi1 or phi2",
        ));
    }
    let master_seed = cfg.u64_or("master_seed", 0)?;
    let embedding = modelspec::build_embedding(&cfg)?;
    let params = modelspec::build_score_params(&cfg, metric)?;
    let percentile = cfg.f64_or("percentile", 95.0)?;

    // group index 0 = reference, 1 = in-distribution, 2 = out-of-distribution
    let groups: Vec<(usize, &str, bool)> = vec![
        (0, a.reference.as_str(), false),
        (1, a.id.as_str(), false),
        (2, a.ood.as_str(), true),
    ];
    let mut tasks: Vec<(usize, usize, String, bool)> = Vec::new();
    for (g, list, is_ood) in groups {
        for (i, path) in list.split(',').filter(|p| !p.trim().is_empty()).enumerate() {
            tasks.push((g, i, path.trim().to_string(), is_ood));
        }
    }
    if tasks.iter().filter(|t| t.0 == 0).count() == 0 {
        return Err(Error::invalid(
            "reference",
            "need at least one reference measurement",
        ));
    }

    let cfg_ref = &cfg;
    let params_ref = &params;
    let embedding_ref = &embedding;
    let scored: Vec<(usize, String, bool, f64)> = tasks
        .par_iter()
        .map(
            |(g, i, path, is_ood)| -> Result<(usize, String, bool, f64)> {
                let y = read_measurement(Path::new(path))?;
                let model = modelspec::build_model(cfg_ref, y.shape(), master_seed)?;
                let item_params = ScoreParams {
                    seed: params_ref.seed.child(*g as u64).child(*i as u64),
                    sampler: params_ref
                        .sampler
                        .with_chain_seed(params_ref.seed.child(*g as u64).child(*i as u64)),
                    ..params_ref.clone()
                };
                let value = match metric {
                    Metric::Phi1 => splitscore_core::phi1(&model, &y, &item_params)?.value(),
                    Metric::Phi2 => {
                        splitscore_core::phi2(&model, &y, embedding_ref, &item_params)?.value()
                    }
                    Metric::Phi3 => unreachable!("rejected above"),
                };
                Ok((*g, path.clone(), *is_ood, value))
            },
        )
        .collect::<Result<_>>()?;

    let reference_scores: Vec<f64> = scored.iter().filter(|s| s.0 == 0).map(|s| s.3).collect();
    let spec = calibrate_threshold(metric, reference_scores, percentile)?;

    let metric_name = metric.name();
    let mut items: Vec<(String, bool, &'static str, f64, &'static str)> = Vec::new();
    let mut labeled: Vec<(f64, bool)> = Vec::new();
    for (g, path, is_ood, value) in &scored {
        if *g == 0 {
            continue;
        }
        let decision = match ood_decide(&spec, *value) {
            Decision::Reject => "reject",
            Decision::Accept => "accept",
        };
        items.push((path.clone(), *is_ood, metric_name, *value, decision));
        labeled.push((*value, *is_ood));
    }

    let provenance = Provenance {
        master_seed,
        version: VERSION,
    };
    if let Some(items_path) = &a.items {
        std::fs::write(items_path, per_item_csv(&items, &provenance))?;
    }
    let rates = error_rates(&spec, &labeled)?;
    let row = AlphaSweepRow {
        alpha: params.alpha,
        type1: rates.type1,
        power: rates.power,
        n_id: rates.n_id,
        n_ood: rates.n_ood,
    };
    emit(&a.out, &rates_csv(&[row], &provenance))
}

pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Io(_) | Error::Format { .. } => 1,
        Error::Numerical(_) => 3,
        Error::InRealization { source, .. } => exit_code(source),
        _ => 2,
    }
}
