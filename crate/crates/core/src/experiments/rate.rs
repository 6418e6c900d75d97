//! Sup-gap rates between `U#` and its least concave majorant.

use super::{replicate, stats, ExperimentConfig, ExperimentReport};
use crate::error::Result;
use crate::lcm::{least_concave_majorant, sup_gap, SUP_GAP_TOL};
use crate::naive::NaiveCurve;
use crate::plummer::PlummerModel;

/// `ε_n = √(log n / n)`.
pub fn epsilon_n(n: f64) -> f64 {
    (n.ln() / n).sqrt()
}

fn gap_on(model: &PlummerModel, n: usize, rng: &mut rand_chacha::ChaCha12Rng, t0: f64, t1: f64) -> Result<f64> {
    let sample = model.sample(n, rng)?;
    let curve = NaiveCurve::new(sample.observations);
    let m = least_concave_majorant(&curve);
    sup_gap(&curve, &m, t0, t1, SUP_GAP_TOL)
}

/// Number of adjacent pairs where the sequence increases.
fn inversions(values: &[f64]) -> usize {
    values.windows(2).filter(|w| w[1] > w[0]).count()
}

/// Median sup-gap over `[t0, t1]` per n, with log–log fits.
pub fn kw_rate(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let model = PlummerModel::new(cfg.beta)?;
    let [t0, t1] = cfg.interval;
    let mut report = ExperimentReport::new("kw-rate", cfg);
    for &n in &cfg.n_grid {
        let gaps = replicate(cfg, n, |rng| gap_on(&model, n, rng, t0, t1))?;
        let entry = report.push(n, &gaps);
        entry.extra.insert("mean".into(), stats::mean(&gaps));
    }
    let medians = report.medians();
    report.summary.insert("inversions".into(), inversions(&medians) as f64);
    if inversions(&medians) > 1 {
        report.flags.push("ordering-violated".into());
    }
    let ns: Vec<f64> = cfg.n_grid.iter().map(|&n| n as f64).collect();
    if medians.iter().any(|&m| !(m > 0.0)) {
        report.flags.push("degenerate-fit".into());
        return Ok(report);
    }
    let log_med: Vec<f64> = medians.iter().map(|m| m.ln()).collect();
    let log_n: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    match stats::ols(&log_n, &log_med) {
        Some(fit) => {
            report.slope = Some(fit.slope);
            report.slope_stderr = Some(fit.slope_stderr);
        }
        None => report.flags.push("degenerate-fit".into()),
    }
    // Companion fit against log(log n / n); a pure n⁻¹ log n rate gives 1.
    let log_rate: Vec<f64> = ns.iter().map(|n| (n.ln() / n).ln()).collect();
    if let Some(fit) = stats::ols(&log_rate, &log_med) {
        report.summary.insert("log_rate_slope".into(), fit.slope);
        report.summary.insert("log_rate_slope_stderr".into(), fit.slope_stderr);
    }
    Ok(report)
}

/// Median sup-gap over `[x − ε_n, x + ε_n]`, normalized by `ε_n²`.
pub fn local_gap(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let model = PlummerModel::new(cfg.beta)?;
    let x = cfg.eval_x;
    let mut report = ExperimentReport::new("local-gap", cfg);
    for &n in &cfg.n_grid {
        let eps = epsilon_n(n as f64);
        let lo = (x - eps).max(0.0);
        let gaps = replicate(cfg, n, |rng| {
            Ok(gap_on(&model, n, rng, lo, x + eps)? / (eps * eps))
        })?;
        let entry = report.push(n, &gaps);
        entry.extra.insert("epsilon".into(), eps);
    }
    let medians = report.medians();
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    report
        .summary
        .insert("strictly_decreasing".into(), if decreasing { 1.0 } else { 0.0 });
    Ok(report)
}
