//! CSV emission and parsing for experiment artifacts.
//!
//! Every table is written with a header row and a trailing provenance
//! comment `# seed=..., version=...`, so a CSV is a self-describing,
//! byte-reproducible record of one run. Fields never contain commas, so
//! parsing is a plain split.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::experiment::{AlphaSweepRow, RankedCandidate};
use crate::oracle::{ConvergenceRow, DiscriminationPoint};
use crate::scoring::ScoreReport;

/// Provenance trailer appended to every CSV.
#[derive(Debug, Clone, Copy)]
pub struct Provenance<'a> {
    pub master_seed: u64,
    pub version: &'a str,
}

impl Provenance<'_> {
    fn trailer(&self) -> String {
        format!("# seed={}, version={}\n", self.master_seed, self.version)
    }
}

fn finish(mut body: String, provenance: &Provenance) -> String {
    body.push_str(&provenance.trailer());
    body
}

/// `model,metric,value,alpha,k,n,l,master_seed` summary rows.
pub fn score_reports_csv(reports: &[ScoreReport], provenance: &Provenance) -> String {
    let mut out = String::from("model,metric,value,alpha,k,n,l,master_seed\n");
    for r in reports {
        let l = r.l_samples.map(|l| l.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.model_label,
            r.metric_name(),
            fmt_f64(r.value()),
            fmt_f64(r.alpha),
            r.k_realizations,
            r.n_samples,
            l,
            r.master_seed
        )
        .expect("String write cannot fail");
    }
    finish(out, provenance)
}

/// Structured per-run report: metadata lines plus per-realization partials.
pub fn score_report_detail(report: &ScoreReport, provenance: &Provenance) -> String {
    let mut out = String::new();
    writeln!(out, "model={}", report.model_label).unwrap();
    writeln!(out, "metric={}", report.metric_name()).unwrap();
    writeln!(out, "value={}", fmt_f64(report.value())).unwrap();
    writeln!(out, "alpha={}", fmt_f64(report.alpha)).unwrap();
    writeln!(out, "k={}", report.k_realizations).unwrap();
    writeln!(out, "n={}", report.n_samples).unwrap();
    if let Some(l) = report.l_samples {
        writeln!(out, "l={l}").unwrap();
    }
    writeln!(out, "master_seed={}", report.master_seed).unwrap();
    for (k, partial) in report.per_realization.iter().enumerate() {
        writeln!(out, "partial[{k}]={}", fmt_f64(*partial)).unwrap();
    }
    out.push_str(&provenance.trailer());
    out
}

/// `candidate,score,rank,tied` ranking rows.
pub fn ranking_csv(ranked: &[RankedCandidate], provenance: &Provenance) -> String {
    let mut out = String::from("candidate,score,rank,tied\n");
    for r in ranked {
        writeln!(
            out,
            "{},{},{},{}",
            r.label,
            fmt_f64(r.score),
            r.rank,
            u8::from(r.tied_with_previous)
        )
        .expect("String write cannot fail");
    }
    finish(out, provenance)
}

/// `sigma_x_prime,alpha,mean_log_ratio,stderr` discrimination rows.
pub fn discrimination_csv(
    rows: &[(f64, Vec<DiscriminationPoint>)],
    provenance: &Provenance,
) -> String {
    let mut out = String::from("sigma_x_prime,alpha,mean_log_ratio,stderr\n");
    for (alpha, curve) in rows {
        for p in curve {
            writeln!(
                out,
                "{},{},{},{}",
                fmt_f64(p.sigma_x_prime),
                fmt_f64(*alpha),
                fmt_f64(p.mean_log_ratio),
                fmt_f64(p.stderr)
            )
            .expect("String write cannot fail");
        }
    }
    finish(out, provenance)
}

/// `alpha,m,N,K,rel_log_error` convergence rows.
pub fn convergence_csv(rows: &[ConvergenceRow], provenance: &Provenance) -> String {
    let mut out = String::from("alpha,m,N,K,rel_log_error\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(r.alpha),
            r.m,
            r.n,
            r.k,
            fmt_f64(r.rel_log_error)
        )
        .expect("String write cannot fail");
    }
    finish(out, provenance)
}

/// `item_id,label,metric,value,decision` per-item OOD rows.
pub fn per_item_csv(
    items: &[(String, bool, &'static str, f64, &'static str)],
    provenance: &Provenance,
) -> String {
    let mut out = String::from("item_id,label,metric,value,decision\n");
    for (id, is_ood, metric, value, decision) in items {
        writeln!(
            out,
            "{},{},{},{},{}",
            id,
            if *is_ood { "ood" } else { "id" },
            metric,
            fmt_f64(*value),
            decision
        )
        .expect("String write cannot fail");
    }
    finish(out, provenance)
}

/// `alpha,type1,power,n_id,n_ood` rate rows.
pub fn rates_csv(rows: &[AlphaSweepRow], provenance: &Provenance) -> String {
    let mut out = String::from("alpha,type1,power,n_id,n_ood\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(r.alpha),
            fmt_f64(r.type1),
            fmt_f64(r.power),
            r.n_id,
            r.n_ood
        )
        .expect("String write cannot fail");
    }
    finish(out, provenance)
}

/// Shortest round-trippable decimal form of an `f64`.
pub fn fmt_f64(v: f64) -> String {
    let mut s = format!("{v}");
    if s.parse::<f64>() != Ok(v) {
        s = format!("{v:e}");
    }
    s
}

/// Parse per-item rows back from [`per_item_csv`] output (provenance and
/// header lines are skipped). Returns `(score, is_ood)` pairs.
pub fn parse_labeled_scores(csv: &str) -> Result<Vec<(f64, bool)>> {
    let mut out = Vec::new();
    for (lineno, line) in csv.lines().enumerate() {
        if lineno == 0 || line.starts_with('#') || line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Format {
                offset: lineno as u64,
                message: format!("expected 5 fields, got {} in {line:?}", fields.len()),
            });
        }
        let is_ood = match fields[1] {
            "ood" => true,
            "id" => false,
            other => {
                return Err(Error::Format {
                    offset: lineno as u64,
                    message: format!("unknown label {other:?}"),
                })
            }
        };
        let value: f64 = fields[3].parse().map_err(|_| Error::Format {
            offset: lineno as u64,
            message: format!("bad value field {:?}", fields[3]),
        })?;
        out.push((value, is_ood));
    }
    Ok(out)
}
