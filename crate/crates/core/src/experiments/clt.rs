//! Pointwise limit distributions of the naive and isotonic estimators.

use super::{replicate, stats, ExperimentConfig, ExperimentReport, PerN};
use crate::error::Result;
use crate::lcm::{isotonic_psi, least_concave_majorant};
use crate::naive::NaiveCurve;
use crate::plummer::PlummerModel;

/// Standardized errors `√(n / log n)(estimate − Ψ(x))`, naive and isotonic,
/// from the same samples.
fn standardized(cfg: &ExperimentConfig, n: usize, model: &PlummerModel, truth: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let x = cfg.eval_x;
    let scale = (n as f64 / (n as f64).ln()).sqrt();
    let pairs = replicate(cfg, n, |rng| {
        let sample = model.sample(n, rng)?;
        let curve = NaiveCurve::new(sample.observations);
        let iso = isotonic_psi(&least_concave_majorant(&curve)).value(x);
        Ok((scale * (curve.psi(x) - truth), scale * (iso - truth)))
    })?;
    Ok(pairs.into_iter().unzip())
}

fn describe(entry: &mut PerN, prefix: &str, values: &[f64], sigma2: f64) {
    let var = stats::variance(values);
    let mean = stats::mean(values);
    let se = (var / values.len() as f64).sqrt();
    let robust = stats::robust_sd(values);
    let ks = stats::ks_normal(values);
    for (key, v) in [
        ("mean", mean),
        ("mean_se", se),
        ("variance", var),
        ("variance_over_sigma2", var / sigma2),
        ("robust_variance_over_sigma2", robust * robust / sigma2),
        ("ks_normal", ks),
        ("ks_critical_1e-3", stats::ks_critical(values.len(), 1e-3)),
    ] {
        entry.extra.insert(format!("{prefix}_{key}"), v);
    }
}

/// Both estimators; `per_n` order statistics describe the naive one.
pub fn clt(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run(cfg, "clt", true)
}

pub fn clt_naive(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run(cfg, "clt-naive", true)
}

pub fn clt_isotonic(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run(cfg, "clt-isotonic", false)
}

fn run(cfg: &ExperimentConfig, kind: &str, naive_primary: bool) -> Result<ExperimentReport> {
    cfg.validate()?;
    let model = PlummerModel::new(cfg.beta)?;
    let x = cfg.eval_x;
    let truth = model.psi_true(x)?;
    let sigma2 = model.sigma2_true(x)?;
    let mut report = ExperimentReport::new(kind, cfg);
    report.summary.insert("psi_true".into(), truth);
    report.summary.insert("sigma2_true".into(), sigma2);
    for &n in &cfg.n_grid {
        let (naive, iso) = standardized(cfg, n, &model, truth)?;
        let primary = if naive_primary { &naive } else { &iso };
        let entry = report.push(n, primary);
        describe(entry, "naive", &naive, sigma2);
        describe(entry, "isotonic", &iso, sigma2);
        let ratio = stats::variance(&iso) / stats::variance(&naive);
        entry.extra.insert("variance_ratio".into(), ratio);
        let robust = (stats::robust_sd(&iso) / stats::robust_sd(&naive)).powi(2);
        entry.extra.insert("robust_variance_ratio".into(), robust);
    }
    Ok(report)
}
