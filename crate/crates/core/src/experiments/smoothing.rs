//! Smoothed-estimator experiments and the figure data.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::{linear_grid, replicate, replication_rng, stats, ExperimentConfig, ExperimentReport};
use crate::error::{Error, Result};
use crate::formats::{write_curve, write_steps};
use crate::kernel::KernelSpec;
use crate::lcm::{isotonic_psi, least_concave_majorant};
use crate::naive::NaiveCurve;
use crate::plummer::PlummerModel;
use crate::smooth::{smooth, SmoothCurve, SmoothSource};

/// File names written by [`figure_reproduction`], in order.
pub const FIGURE_FILES: [&str; 6] = [
    "naive.csv",
    "isotonic_steps.csv",
    "smooth_psi.csv",
    "smooth_psi_prime.csv",
    "psi_true.csv",
    "psi_prime_true.csv",
];

#[derive(Debug, Clone)]
pub struct FigureFiles {
    pub paths: Vec<PathBuf>,
    pub sample_size: usize,
    /// Smoothed derivative of the isotonic estimate at `eval_x`.
    pub derivative_at_eval_x: f64,
}

/// Writes the six curve files for one seeded sample of size `n_grid[0]`.
pub fn figure_reproduction(cfg: &ExperimentConfig, out_dir: &Path) -> Result<FigureFiles> {
    cfg.validate()?;
    let model = PlummerModel::new(cfg.beta)?;
    let n = cfg.n_grid[0];
    let mut rng = replication_rng(cfg.master_seed, n, 0);
    let sample = model.sample(n, &mut rng)?;
    let curve = NaiveCurve::new(sample.observations);
    let steps = isotonic_psi(&least_concave_majorant(&curve));
    let iso = SmoothSource::Isotonic(steps.clone());
    let [b_psi, b_prime] = cfg.figure_bandwidths;
    let k_psi = KernelSpec::triweight(b_psi)?;
    let k_prime = KernelSpec::triweight(b_prime)?;
    let grid = linear_grid(cfg.figure_range[0], cfg.figure_range[1], cfg.grid_points);

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let paths: Vec<PathBuf> = FIGURE_FILES.iter().map(|f| out_dir.join(f)).collect();
    write_curve(&paths[0], &grid, &curve.psi_grid(&grid))?;
    write_steps(&paths[1], &steps)?;
    write_curve(&paths[2], &grid, &SmoothCurve::evaluate(&iso, &k_psi, 0, &grid)?.values)?;
    write_curve(&paths[3], &grid, &SmoothCurve::evaluate(&iso, &k_prime, 1, &grid)?.values)?;
    let truth = |f: &dyn Fn(f64) -> Result<f64>| grid.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>();
    write_curve(&paths[4], &grid, &truth(&|t| model.psi_true(t))?)?;
    write_curve(&paths[5], &grid, &truth(&|t| model.psi_prime_true(t))?)?;
    Ok(FigureFiles {
        paths,
        sample_size: n,
        derivative_at_eval_x: smooth(&iso, &k_prime, 1, cfg.eval_x)?,
    })
}

/// Mean squared error against `Ψ` over the `interval` grid, smoothed
/// isotonic versus naive, plus the spread of the smoothed derivative at
/// `eval_x` under the second figure bandwidth.
///
/// The per-replication statistic is `MSE(smooth) / MSE(naive)`.
pub fn smoothing_mse(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let model = PlummerModel::new(cfg.beta)?;
    let grid = linear_grid(cfg.interval[0], cfg.interval[1], cfg.grid_points);
    let truth: Vec<f64> = grid.iter().map(|&t| model.psi_true(t)).collect::<Result<_>>()?;
    let k_prime = KernelSpec::triweight(cfg.figure_bandwidths[1])?;
    let x = cfg.eval_x;
    let prime_true = model.psi_prime_true(x)?;
    let mut report = ExperimentReport::new("smoothing", cfg);
    report.summary.insert("psi_prime_true".into(), prime_true);
    for &n in &cfg.n_grid {
        let k = KernelSpec::triweight(cfg.bandwidth.at(n))?;
        let rows = replicate(cfg, n, |rng| {
            let sample = model.sample(n, rng)?;
            let curve = NaiveCurve::new(sample.observations);
            let iso = SmoothSource::isotonic_from(&curve);
            let mse = |est: &[f64]| {
                est.iter().zip(&truth).map(|(e, t)| (e - t).powi(2)).sum::<f64>() / est.len() as f64
            };
            let smooth_vals = grid.iter().map(|&t| smooth(&iso, &k, 0, t)).collect::<Result<Vec<_>>>()?;
            let ratio = mse(&smooth_vals) / mse(&curve.psi_grid(&grid));
            Ok((ratio, smooth(&iso, &k_prime, 1, x)?))
        })?;
        let (ratios, derivs): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
        let better = ratios.iter().filter(|&&r| r < 1.0).count() as f64 / ratios.len() as f64;
        let entry = report.push(n, &ratios);
        entry.extra.insert("fraction_smooth_better".into(), better);
        entry.extra.insert("derivative_mean".into(), stats::mean(&derivs));
        entry.extra.insert("derivative_sd".into(), stats::variance(&derivs).sqrt());
    }
    Ok(report)
}

/// `|Ψ̃′_s(x) − Ψ#′_s(x)| · n b² / log n`, both smooths from the same sample.
pub fn derivative_gap(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let model = PlummerModel::new(cfg.beta)?;
    let x = cfg.eval_x;
    let mut report = ExperimentReport::new("derivative-gap", cfg);
    for &n in &cfg.n_grid {
        let b = cfg.bandwidth.at(n);
        let k = KernelSpec::triweight(b)?;
        let norm = n as f64 * b * b / (n as f64).ln();
        let values = replicate(cfg, n, |rng| {
            let sample = model.sample(n, rng)?;
            let curve = Arc::new(NaiveCurve::new(sample.observations));
            let iso = SmoothSource::isotonic_from(&curve);
            let naive = SmoothSource::Naive(curve);
            Ok((smooth(&iso, &k, 1, x)? - smooth(&naive, &k, 1, x)?).abs() * norm)
        })?;
        report.push(n, &values).extra.insert("bandwidth".into(), b);
    }
    let medians = report.medians();
    let hi = medians.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = medians.iter().copied().fold(f64::INFINITY, f64::min);
    report.summary.insert("median_spread".into(), hi / lo);
    Ok(report)
}
