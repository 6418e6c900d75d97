//! Seeded Monte Carlo experiments over the Plummer model.
//!
//! Every replication draws from its own ChaCha stream keyed by
//! `(master_seed, n, replication)`, and results are gathered in replication
//! order, so a report depends only on its configuration whether or not the
//! replications run in parallel.

mod clt;
mod rate;
mod smoothing;
pub mod stats;

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use clt::{clt, clt_isotonic, clt_naive};
pub use rate::{epsilon_n, kw_rate, local_gap};
pub use smoothing::{derivative_gap, figure_reproduction, smoothing_mse, FigureFiles, FIGURE_FILES};

/// Bandwidth used at sample size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthSchedule {
    Fixed(f64),
    /// `c · n^{−1/6}`.
    Scaled(f64),
}

impl BandwidthSchedule {
    pub fn at(&self, n: usize) -> f64 {
        match *self {
            Self::Fixed(b) => b,
            Self::Scaled(c) => c * (n as f64).powf(-1.0 / 6.0),
        }
    }

    fn constant(&self) -> f64 {
        match *self {
            Self::Fixed(b) | Self::Scaled(b) => b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub beta: f64,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub interval: [f64; 2],
    pub eval_x: f64,
    pub bandwidth: BandwidthSchedule,
    /// Points in evaluation grids (MSE integrals, figure curves).
    pub grid_points: usize,
    /// Range of the figure curves.
    pub figure_range: [f64; 2],
    /// Bandwidths of the smooth curve and the smoothed derivative.
    pub figure_bandwidths: [f64; 2],
    pub parallel: bool,
    pub keep_raw: bool,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            master_seed: 7,
            beta: 200.0,
            n_grid: vec![1500],
            replications: 100,
            interval: [1.0, 9.0],
            eval_x: 4.0,
            bandwidth: BandwidthSchedule::Fixed(1.5),
            grid_points: 161,
            figure_range: [0.0, 12.0],
            figure_bandwidths: [1.5, 3.7],
            parallel: true,
            keep_raw: true,
            output: None,
        }
    }
}

fn config_err(field: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_owned(),
        reason: reason.into(),
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(config_err("beta", "must be positive and finite"));
        }
        if self.n_grid.is_empty() {
            return Err(config_err("n_grid", "must not be empty"));
        }
        if self.n_grid.contains(&0) || self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_err("n_grid", "must be strictly increasing positive integers"));
        }
        if self.replications < 2 {
            return Err(config_err("replications", "must be at least 2"));
        }
        let [t0, t1] = self.interval;
        if !(t0 >= 0.0 && t1 > t0 && t1.is_finite()) {
            return Err(config_err("interval", "need 0 ≤ t0 < t1"));
        }
        if !(self.eval_x > 0.0 && self.eval_x.is_finite()) {
            return Err(config_err("eval_x", "must be positive"));
        }
        let c = self.bandwidth.constant();
        if !(c > 0.0 && c.is_finite()) {
            return Err(config_err("bandwidth", "must be positive"));
        }
        if self.grid_points == 0 {
            return Err(config_err("grid_points", "must be positive"));
        }
        let [f0, f1] = self.figure_range;
        if !(f0 >= 0.0 && f1 > f0 && f1.is_finite()) {
            return Err(config_err("figure_range", "need 0 ≤ start < end"));
        }
        if self.figure_bandwidths.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
            return Err(config_err("figure_bandwidths", "must be positive"));
        }
        Ok(())
    }

    /// Parses and validates a JSON config.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let msg = e.inner().to_string();
            let field = if path.is_empty() || path == "." {
                // Unknown keys are reported at the root; serde names them in backticks.
                msg.split('`').nth(1).unwrap_or("config").to_owned()
            } else {
                path
            };
            Error::Config { field, reason: msg }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerN {
    pub n: usize,
    pub median: f64,
    pub q10: f64,
    pub q90: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: String,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub per_n: Vec<PerN>,
    pub slope: Option<f64>,
    pub slope_stderr: Option<f64>,
    /// Kind-specific scalars.
    #[serde(default)]
    pub summary: BTreeMap<String, f64>,
    #[serde(default)]
    pub flags: Vec<String>,
    /// Per-n, per-replication statistic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<Vec<Vec<f64>>>,
    pub version: String,
}

impl ExperimentReport {
    fn new(kind: &str, config: &ExperimentConfig) -> Self {
        Self {
            kind: kind.to_owned(),
            config: config.clone(),
            seed: config.master_seed,
            per_n: Vec::new(),
            slope: None,
            slope_stderr: None,
            summary: BTreeMap::new(),
            flags: Vec::new(),
            raw: config.keep_raw.then(Vec::new),
            version: env!("CARGO_PKG_VERSION").to_owned(),
        }
    }

    /// Appends the order summary of one n's statistic.
    fn push(&mut self, n: usize, values: &[f64]) -> &mut PerN {
        self.per_n.push(PerN {
            n,
            median: stats::median(values),
            q10: stats::quantile(values, 0.1),
            q90: stats::quantile(values, 0.9),
            extra: BTreeMap::new(),
        });
        if let Some(raw) = &mut self.raw {
            raw.push(values.to_vec());
        }
        self.per_n.last_mut().expect("just pushed")
    }

    pub fn medians(&self) -> Vec<f64> {
        self.per_n.iter().map(|p| p.median).collect()
    }
}

/// Stream for one replication.
pub fn replication_rng(master_seed: u64, n: usize, replication: usize) -> ChaCha12Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&(n as u64).to_le_bytes());
    seed[16..24].copy_from_slice(&(replication as u64).to_le_bytes());
    ChaCha12Rng::from_seed(seed)
}

/// Runs `f` for every replication at sample size `n`, in replication order.
fn replicate<T, F>(cfg: &ExperimentConfig, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha12Rng) -> Result<T> + Sync,
{
    let run = |rep: usize| {
        let mut rng = replication_rng(cfg.master_seed, n, rep);
        f(&mut rng).map_err(|e| Error::Replication {
            n,
            replication: rep,
            source: Box::new(e),
        })
    };
    if cfg.parallel {
        (0..cfg.replications).into_par_iter().map(run).collect()
    } else {
        (0..cfg.replications).map(run).collect()
    }
}

/// Evenly spaced grid of `m` points on `[a, b]`; a single point is `a`.
pub fn linear_grid(a: f64, b: f64, m: usize) -> Vec<f64> {
    if m == 1 {
        return vec![a];
    }
    (0..m)
        .map(|i| {
            if i + 1 == m {
                b
            } else {
                a + (b - a) * i as f64 / (m - 1) as f64
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn config_validation_names_fields() {
        let ok = ExperimentConfig::default();
        assert!(ok.validate().is_ok());
        let cases: Vec<(&str, ExperimentConfig)> = vec![
            ("n_grid", ExperimentConfig { n_grid: vec![], ..ok.clone() }),
            ("n_grid", ExperimentConfig { n_grid: vec![10, 5], ..ok.clone() }),
            ("replications", ExperimentConfig { replications: 1, ..ok.clone() }),
            ("interval", ExperimentConfig { interval: [2.0, 1.0], ..ok.clone() }),
            ("beta", ExperimentConfig { beta: -1.0, ..ok.clone() }),
            ("bandwidth", ExperimentConfig { bandwidth: BandwidthSchedule::Fixed(0.0), ..ok.clone() }),
        ];
        for (field, cfg) in cases {
            match cfg.validate() {
                Err(Error::Config { field: f, .. }) => assert_eq!(f, field),
                other => panic!("{field}: {other:?}"),
            }
        }
    }

    #[test]
    fn json_errors_name_the_field() {
        match ExperimentConfig::from_json(r#"{"replications": "many"}"#) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "replications"),
            other => panic!("{other:?}"),
        }
        match ExperimentConfig::from_json(r#"{"bogus": 1}"#) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "bogus"),
            other => panic!("{other:?}"),
        }
        let cfg = ExperimentConfig::from_json(r#"{"n_grid": [100, 200], "bandwidth": {"scaled": 1.0}}"#).unwrap();
        assert_eq!(cfg.n_grid, vec![100, 200]);
        assert!((cfg.bandwidth.at(64) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let a = replication_rng(7, 100, 0).next_u64();
        assert_eq!(a, replication_rng(7, 100, 0).next_u64());
        assert_ne!(a, replication_rng(7, 100, 1).next_u64());
        assert_ne!(a, replication_rng(7, 101, 0).next_u64());
        assert_ne!(a, replication_rng(8, 100, 0).next_u64());
    }

    #[test]
    fn grid_endpoints() {
        assert_eq!(linear_grid(1.0, 9.0, 1), vec![1.0]);
        let g = linear_grid(1.0, 9.0, 5);
        assert_eq!(g, vec![1.0, 3.0, 5.0, 7.0, 9.0]);
    }
}
