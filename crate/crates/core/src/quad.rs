//! Adaptive Gauss–Kronrod quadrature.
//!
//! Global adaptive bisection driven by the 7/15-point Gauss–Kronrod pair,
//! plus the two changes of variable the estimators need: a rational map for
//! `[a, ∞)` and the `x = a + s²` substitution that removes an inverse
//! square-root endpoint singularity.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of one 15-point Kronrod rule on `[a, b]`.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Applies the fixed 15-point Kronrod rule, returning the Kronrod value and
/// `|K15 − G7|` as the error estimate.
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Estimate {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Estimate {
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

#[derive(Debug)]
struct Segment {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.est.error.total_cmp(&other.est.error)
    }
}

/// Tolerances and limits for adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_segments: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_segments: 4000,
        }
    }
}

impl Quadrature {
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    /// `∫_a^b f` by global adaptive bisection.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> Result<f64> {
        self.integrate_estimate(&mut f, a, b).map(|e| e.value)
    }

    pub fn integrate_estimate<F: FnMut(f64) -> f64>(&self, f: &mut F, a: f64, b: f64) -> Result<Estimate> {
        if a == b {
            return Ok(Estimate {
                value: 0.0,
                error: 0.0,
            });
        }
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::invalid("bounds", "integration limits must be finite"));
        }
        let first = gk15(f, a, b);
        let mut total = first.value;
        let mut error = first.error;
        let mut heap = BinaryHeap::new();
        heap.push(Segment { a, b, est: first });
        loop {
            if error <= self.abs_tol.max(self.rel_tol * total.abs()) {
                break;
            }
            if !total.is_finite() || heap.len() >= self.max_segments {
                return Err(Error::Quadrature {
                    estimate: total,
                    residual: error,
                });
            }
            let worst = heap.pop().expect("heap never empties");
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a || mid >= worst.b {
                // Segment cannot be split any further in floating point.
                heap.push(worst);
                return Err(Error::Quadrature {
                    estimate: total,
                    residual: error,
                });
            }
            let left = gk15(f, worst.a, mid);
            let right = gk15(f, mid, worst.b);
            total += left.value + right.value - worst.est.value;
            error += left.error + right.error - worst.est.error;
            heap.push(Segment {
                a: worst.a,
                b: mid,
                est: left,
            });
            heap.push(Segment {
                a: mid,
                b: worst.b,
                est: right,
            });
        }
        // Re-sum to shed accumulated update roundoff.
        let (value, err) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), s| (v + s.est.value, e + s.est.error));
        Ok(Estimate { value, error: err })
    }

    /// `∫_a^∞ f` through `x = a + t/(1 − t)`.
    pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64) -> Result<f64> {
        let mapped = |t: f64| {
            let one_minus = 1.0 - t;
            let x = a + t / one_minus;
            let v = f(x) / (one_minus * one_minus);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        };
        self.integrate(mapped, 0.0, 1.0)
    }

    /// `∫_a^b h(x) / √(x − a) dx` via `x = a + s²`, which turns the
    /// integrand into the regular `2 h(a + s²)`.
    pub fn integrate_inv_sqrt_left<F: FnMut(f64) -> f64>(&self, mut h: F, a: f64, b: f64) -> Result<f64> {
        let top = (b - a).max(0.0).sqrt();
        self.integrate(|s| 2.0 * h(a + s * s), 0.0, top)
    }

    /// `∫_a^b h(x) / √(b − x) dx` via `x = b − s²`.
    pub fn integrate_inv_sqrt_right<F: FnMut(f64) -> f64>(&self, mut h: F, a: f64, b: f64) -> Result<f64> {
        let top = (b - a).max(0.0).sqrt();
        self.integrate(|s| 2.0 * h(b - s * s), 0.0, top)
    }

    /// Abel-type tail `∫_y^∞ h(x) / √(x − y) dx` via `x = y + s²`.
    pub fn abel_tail<F: FnMut(f64) -> f64>(&self, mut h: F, y: f64) -> Result<f64> {
        self.integrate_to_infinity(|s| 2.0 * h(y + s * s), 0.0)
    }
}
