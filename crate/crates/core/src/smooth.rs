//! Kernel-smoothed estimates of `Ψ`, `Ψ′` and `φ = −Ψ′/π²`.
//!
//! For a source function `f` the order-`m` smooth is
//!
//! ```text
//! S_m(x) = (−1)^m b^{−1−m} ∫ K^{(m)}((t − x)/b) f(t) dt,   m ∈ {0, 1}
//! ```
//!
//! so `S_0` smooths `f` and `S_1 = S_0′`. Sources are extended to `t < 0`
//! by their value at 0.
//!
//! Step sources integrate exactly through `K^{(m−1)}` (the kernel CDF for
//! `m = 0`). The naive source is a sum of `zᵢ/√(yᵢ − t)` terms; each is
//! integrated against the kernel in closed form when the kernel is a
//! polynomial, otherwise by quadrature after `t = yᵢ − b s²`.
//! [`smooth_naive_by_parts`] evaluates the same quantity through `U#`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::lcm::{isotonic_psi, least_concave_majorant, StepFunction};
use crate::naive::NaiveCurve;
use crate::quad::{gk15, Quadrature};
use crate::samples::ObservationSet;

/// Default lower limit for the `φ̂` denominator in [`conditional_mean_z`].
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Naive,
    Isotonic,
    Function,
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Naive => "naive",
            Self::Isotonic => "isotonic",
            Self::Function => "function",
        })
    }
}

/// What gets smoothed.
#[derive(Clone)]
pub enum SmoothSource {
    Naive(Arc<NaiveCurve>),
    Isotonic(StepFunction),
    /// An arbitrary function, integrated by adaptive quadrature.
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for SmoothSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Naive(c) => write!(f, "Naive(n = {})", c.len()),
            Self::Isotonic(s) => f.debug_tuple("Isotonic").field(s).finish(),
            Self::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl SmoothSource {
    /// Builds the requested estimator from a sample.
    pub fn from_sample(set: impl Into<Arc<ObservationSet>>, kind: SourceKind) -> Result<Self> {
        let curve = NaiveCurve::new(set);
        match kind {
            SourceKind::Naive => Ok(Self::Naive(Arc::new(curve))),
            SourceKind::Isotonic => Ok(Self::isotonic_from(&curve)),
            SourceKind::Function => Err(Error::invalid(
                "source",
                "a function source cannot be built from a sample",
            )),
        }
    }

    pub fn isotonic_from(curve: &NaiveCurve) -> Self {
        Self::Isotonic(isotonic_psi(&least_concave_majorant(curve)))
    }

    pub fn function(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Function(Arc::new(f))
    }

    pub fn kind(&self) -> SourceKind {
        match self {
            Self::Naive(_) => SourceKind::Naive,
            Self::Isotonic(_) => SourceKind::Isotonic,
            Self::Function(_) => SourceKind::Function,
        }
    }
}

/// Order-`order` smooth of `source` at `x`.
pub fn smooth(source: &SmoothSource, k: &KernelSpec, order: u8, x: f64) -> Result<f64> {
    if order > 1 {
        return Err(Error::invalid("derivative", format!("must be 0 or 1, got {order}")));
    }
    if !x.is_finite() {
        return Err(Error::invalid("x", "must be finite"));
    }
    let m = order as i32;
    match source {
        SmoothSource::Isotonic(s) => Ok(smooth_steps(s, k, m, x)),
        SmoothSource::Naive(c) => smooth_naive(c, k, m, x),
        SmoothSource::Function(f) => smooth_function(f.as_ref(), k, m, x),
    }
}

/// Smoothed `Ψ` at `x`.
pub fn smooth_psi(source: &SmoothSource, k: &KernelSpec, x: f64) -> Result<f64> {
    smooth(source, k, 0, x)
}

/// Smoothed `Ψ′` at `x`.
pub fn smooth_psi_prime(source: &SmoothSource, k: &KernelSpec, x: f64) -> Result<f64> {
    smooth(source, k, 1, x)
}

/// `φ̂(x) = −Ψ̂′(x)/π²`.
pub fn phi_hat(source: &SmoothSource, k: &KernelSpec, x: f64) -> Result<f64> {
    Ok(-smooth_psi_prime(source, k, x)? / (PI * PI))
}

fn sign(m: i32) -> f64 {
    if m % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `level · ∫_s^e (−1)^m b^{−1−m} K^{(m)}((t − x)/b) dt`.
fn constant_piece(k: &KernelSpec, m: i32, x: f64, start: f64, end: f64, level: f64) -> f64 {
    if level == 0.0 {
        return 0.0;
    }
    let b = k.bandwidth();
    let kern = k.kernel();
    let us = ((start - x) / b).clamp(-1.0, 1.0);
    let ue = ((end - x) / b).clamp(-1.0, 1.0);
    if ue <= us {
        return 0.0;
    }
    level * sign(m) * b.powi(-m) * (kern.derivative(m - 1, ue) - kern.derivative(m - 1, us))
}

fn smooth_steps(s: &StepFunction, k: &KernelSpec, m: i32, x: f64) -> f64 {
    let b = k.bandwidth();
    s.pieces()
        .filter(|&(start, end, _)| end > x - b && start < x + b)
        .map(|(start, end, level)| constant_piece(k, m, x, start, end, level))
        .sum()
}

fn smooth_function(f: &(dyn Fn(f64) -> f64 + Send + Sync), k: &KernelSpec, m: i32, x: f64) -> Result<f64> {
    let b = k.bandwidth();
    let kern = k.kernel();
    let q = Quadrature::with_tolerances(1e-13, 1e-11);
    let v = q.integrate(|u| kern.derivative(m, u) * f(x + b * u), -1.0, 1.0)?;
    Ok(sign(m) * b.powi(-m) * v)
}

fn smooth_naive(c: &NaiveCurve, k: &KernelSpec, m: i32, x: f64) -> Result<f64> {
    let b = k.bandwidth();
    let left = constant_piece(k, m, x, f64::NEG_INFINITY, 0.0, c.psi(0.0));
    let u_lo = (-x / b).max(-1.0);
    let lo_y = (x - b).max(0.0);
    let ys = c.ys();
    let zs = c.zs();
    let first = ys.partition_point(|&y| y <= lo_y);
    let integrator = KernelAbel::new(k, m);
    let mut sum = 0.0;
    for i in first..ys.len() {
        if zs[i] == 0.0 {
            continue;
        }
        let cc = (ys[i] - x) / b;
        sum += zs[i] * integrator.integrate(cc, u_lo)?;
    }
    let scale = sign(m) * b.powf(-0.5 - m as f64) / c.len() as f64;
    Ok(left + scale * sum)
}

/// `J(c, u₀) = ∫_{u₀}^{min(c, 1)} K^{(m)}(u) (c − u)^{−1/2} du`.
struct KernelAbel<'a> {
    k: &'a KernelSpec,
    m: i32,
    poly: Option<Vec<f64>>,
}

impl<'a> KernelAbel<'a> {
    fn new(k: &'a KernelSpec, m: i32) -> Self {
        let poly = k.kernel().polynomial().map(|p| {
            let mut p = p.to_vec();
            for _ in 0..m {
                p = crate::kernel::poly_derivative(&p);
            }
            p
        });
        Self { k, m, poly }
    }

    fn integrate(&self, c: f64, u0: f64) -> Result<f64> {
        let top = c.min(1.0);
        if top <= u0 {
            return Ok(0.0);
        }
        let kern = self.k.kernel();
        if c > 2.0 {
            // Smooth integrand: (c − u)^{−1/2} is analytic well beyond [−1, 1].
            let mut f = |u: f64| kern.derivative(self.m, u) / (c - u).sqrt();
            let mid = 0.5 * (u0 + top);
            return Ok(gk15(&mut f, u0, mid).value + gk15(&mut f, mid, top).value);
        }
        let (q_lo, q_hi) = (c - top, c - u0);
        match &self.poly {
            Some(p) => Ok(shifted_moments(p, c, q_lo, q_hi)),
            None => {
                let q = Quadrature::with_tolerances(1e-14, 1e-12);
                q.integrate(
                    |s| 2.0 * kern.derivative(self.m, c - s * s),
                    q_lo.sqrt(),
                    q_hi.sqrt(),
                )
            }
        }
    }
}

/// `∫_{q_lo}^{q_hi} P(c − q) q^{−1/2} dq` for a polynomial `P`.
fn shifted_moments(p: &[f64], c: f64, q_lo: f64, q_hi: f64) -> f64 {
    // P(c − q) = Σ_j β_j q^j via the binomial expansion of each (c − q)^k.
    let deg = p.len();
    let mut beta = vec![0.0; deg];
    for (k, &a) in p.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        let mut binom = 1.0;
        for (j, slot) in beta.iter_mut().enumerate().take(k + 1) {
            if j > 0 {
                binom = binom * (k + 1 - j) as f64 / j as f64;
            }
            *slot += a * binom * c.powi((k - j) as i32) * sign(j as i32);
        }
    }
    let (r_lo, r_hi) = (q_lo.sqrt(), q_hi.sqrt());
    beta.iter()
        .enumerate()
        .map(|(j, &bj)| {
            let e = 2 * j as i32 + 1;
            bj * (r_hi.powi(e) - r_lo.powi(e)) / (j as f64 + 0.5)
        })
        .sum()
}

/// The naive smooth through `U#`:
/// `S_m(x) = (−1)^{m+1} b^{−2−m} ∫ K^{(m+1)}((t − x)/b) U#(t) dt`,
/// with `U#` continued linearly left of 0. Quadrature is split at every
/// observation inside the window.
pub fn smooth_naive_by_parts(c: &NaiveCurve, k: &KernelSpec, order: u8, x: f64) -> Result<f64> {
    let m = order as i32;
    let b = k.bandwidth();
    let kern = k.kernel();
    let q = Quadrature::with_tolerances(1e-13, 1e-11);
    let (lo, hi) = (x - b, x + b);
    let mut edges = vec![lo];
    if lo < 0.0 && hi > 0.0 {
        edges.push(0.0);
    }
    edges.extend(c.knots().iter().copied().filter(|&y| y > lo && y < hi));
    edges.push(hi);
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let mut total = 0.0;
    for w in edges.windows(2) {
        let (a, e) = (w[0], w[1]);
        let f = |t: f64| kern.derivative(m + 1, (t - x) / b) * c.u(t);
        // U# has a square-root corner at each observation; substituting
        // t = a + s² straightens it.
        total += q.integrate(|s| 2.0 * s * f(a + s * s), 0.0, (e - a).sqrt())?;
    }
    Ok(sign(m + 1) * b.powi(-2 - m) * total)
}

/// A smooth evaluated on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothCurve {
    pub source: SourceKind,
    pub order: u8,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl SmoothCurve {
    /// Evaluates in parallel over the grid; output order follows `grid`.
    pub fn evaluate(source: &SmoothSource, k: &KernelSpec, order: u8, grid: &[f64]) -> Result<Self> {
        let values = grid
            .par_iter()
            .map(|&x| smooth(source, k, order, x))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            source: source.kind(),
            order,
            grid: grid.to_vec(),
            values,
        })
    }
}

/// `Ê(Z | X = x) = φ̂_z(x) / φ̂_1(x)`, the ratio of the `φ̂` estimates from
/// a sample with responses and one with unit responses.
///
/// A denominator at or below `floor` is an error.
pub fn conditional_mean_z(
    with_z: &SmoothSource,
    unit_z: &SmoothSource,
    k: &KernelSpec,
    x: f64,
    floor: f64,
) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::invalid("x", format!("must be positive, got {x}")));
    }
    let num = phi_hat(with_z, k, x)?;
    let den = phi_hat(unit_z, k, x)?;
    if !(den > floor) {
        return Err(Error::DegenerateDenominator { x, value: den, floor });
    }
    Ok(num / den)
}

/// `√(3 Ê(Z | X = r²))`.
pub fn velocity_dispersion(
    with_z: &SmoothSource,
    unit_z: &SmoothSource,
    k: &KernelSpec,
    r: f64,
    floor: f64,
) -> Result<f64> {
    let m = conditional_mean_z(with_z, unit_z, k, r * r, floor)?;
    Ok((3.0 * m).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{kernel_by_name, Kernel, KernelSpec};
    use crate::plummer::PlummerModel;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn spec(name: &str, b: f64) -> KernelSpec {
        KernelSpec::new(kernel_by_name(name).unwrap(), b).unwrap()
    }

    fn random_steps(rng: &mut ChaCha12Rng) -> StepFunction {
        let n = rng.random_range(1..12);
        let mut b: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        let mut l: Vec<f64> = (0..b.len()).map(|_| rng.random_range(0.0..5.0)).collect();
        l.sort_by(|a, b| b.total_cmp(a));
        StepFunction::new(b, l).unwrap()
    }

    #[test]
    fn constant_source() {
        let s = SmoothSource::Isotonic(StepFunction::constant(3.25).unwrap());
        for name in ["triweight", "biweight", "raised-cosine"] {
            let k = spec(name, 1.7);
            for x in [-2.0, 0.0, 0.3, 5.0] {
                assert!((smooth_psi(&s, &k, x).unwrap() - 3.25).abs() < 1e-14);
                assert!(smooth_psi_prime(&s, &k, x).unwrap().abs() < 1e-14);
                assert!(phi_hat(&s, &k, x).unwrap().abs() < 1e-15);
            }
        }
    }

    #[test]
    fn linear_source_is_reproduced() {
        let s = SmoothSource::function(|t| 4.0 - 0.75 * t);
        let k = KernelSpec::triweight(1.3).unwrap();
        for x in [0.5, 2.0, 3.3] {
            assert!((smooth_psi(&s, &k, x).unwrap() - (4.0 - 0.75 * x)).abs() < 1e-12);
            assert!((smooth_psi_prime(&s, &k, x).unwrap() + 0.75).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_order_rejected() {
        let s = SmoothSource::Isotonic(StepFunction::constant(1.0).unwrap());
        let k = KernelSpec::triweight(1.0).unwrap();
        assert!(smooth(&s, &k, 2, 1.0).is_err());
    }

    #[test]
    fn steps_match_quadrature() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let q = Quadrature::with_tolerances(1e-14, 1e-13);
        for name in ["triweight", "biweight", "raised-cosine"] {
            for _ in 0..100 {
                let steps = random_steps(&mut rng);
                let b = rng.random_range(0.2..3.0);
                let k = spec(name, b);
                let x = rng.random_range(-1.0..12.0);
                let src = SmoothSource::Isotonic(steps.clone());
                for m in [0u8, 1] {
                    let fast = smooth(&src, &k, m, x).unwrap();
                    // Brute force, split at the breakpoints in the window.
                    let mut edges = vec![x - b];
                    edges.extend(steps.breakpoints().iter().copied().filter(|&t| t > x - b && t < x + b));
                    edges.push(x + b);
                    let slow: f64 = edges
                        .windows(2)
                        .map(|w| {
                            q.integrate(
                                |t| k.kernel().derivative(m as i32, (t - x) / b) * steps.value(t),
                                w[0],
                                w[1],
                            )
                            .unwrap()
                        })
                        .sum::<f64>()
                        * sign(m as i32)
                        * b.powi(-1 - m as i32);
                    assert!((fast - slow).abs() < 1e-9, "{name} m={m}: {fast} vs {slow}");
                }
            }
        }
    }

    fn small_curve(rng: &mut ChaCha12Rng, n: usize) -> NaiveCurve {
        let rows: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.random_range(0.0..8.0), rng.random_range(0.0..3.0)))
            .collect();
        NaiveCurve::new(ObservationSet::from_pairs(rows).unwrap())
    }

    #[test]
    fn naive_closed_form_matches_by_parts() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for name in ["triweight", "biweight", "raised-cosine"] {
            for _ in 0..30 {
                let n = rng.random_range(1..30);
                let c = small_curve(&mut rng, n);
                let b = rng.random_range(0.3..4.0);
                let k = spec(name, b);
                let x = rng.random_range(-0.5..10.0);
                let src = SmoothSource::Naive(Arc::new(c.clone()));
                for m in [0u8, 1] {
                    let fast = smooth(&src, &k, m, x).unwrap();
                    let slow = smooth_naive_by_parts(&c, &k, m, x).unwrap();
                    let scale = 1.0 + slow.abs();
                    assert!((fast - slow).abs() < 1e-8 * scale, "{name} m={m} x={x}: {fast} vs {slow}");
                }
            }
        }
    }

    #[test]
    fn shifted_moments_against_quadrature() {
        let q = Quadrature::with_tolerances(1e-15, 1e-14);
        let k = crate::kernel::Triweight::default();
        let p = k.polynomial().unwrap();
        for &(c, lo, hi) in &[(0.5, 0.0, 1.5), (1.7, 0.7, 2.7), (2.0, 1.0, 2.5)] {
            let exact = shifted_moments(p, c, lo, hi);
            let numeric = q
                .integrate(|s| 2.0 * k.value(c - s * s), lo.sqrt(), hi.sqrt())
                .unwrap();
            assert!((exact - numeric).abs() < 1e-12, "{c}: {exact} vs {numeric}");
        }
    }

    proptest! {
        #[test]
        fn isotonic_smooth_is_nonincreasing(seed in 0u64..1000, b in 0.2f64..3.0, a in -1.0f64..12.0, d in 1e-6f64..3.0) {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let src = SmoothSource::Isotonic(random_steps(&mut rng));
            let k = KernelSpec::triweight(b).unwrap();
            let lo = smooth_psi(&src, &k, a).unwrap();
            let hi = smooth_psi(&src, &k, a + d).unwrap();
            prop_assert!(hi <= lo + 1e-12);
            prop_assert!(phi_hat(&src, &k, a).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn doubling_z_doubles_conditional_mean_exactly() {
        let model = PlummerModel::new(200.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let set = model.sample(3000, &mut rng).unwrap().observations;
        let unit = SmoothSource::from_sample(set.with_unit_z(), SourceKind::Isotonic).unwrap();
        let k = KernelSpec::triweight(3.7).unwrap();
        for kind in [SourceKind::Naive, SourceKind::Isotonic] {
            let one = SmoothSource::from_sample(set.clone(), kind).unwrap();
            let two = SmoothSource::from_sample(set.scaled_z(2.0), kind).unwrap();
            let a = conditional_mean_z(&one, &unit, &k, 4.0, DENOMINATOR_FLOOR).unwrap();
            let b = conditional_mean_z(&two, &unit, &k, 4.0, DENOMINATOR_FLOOR).unwrap();
            assert_eq!(b, 2.0 * a, "{kind}");
        }
    }

    #[test]
    fn unit_responses_give_unit_mean() {
        let model = PlummerModel::new(200.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let set = model.sample(2000, &mut rng).unwrap().observations.with_unit_z();
        let k = KernelSpec::triweight(2.0).unwrap();
        let src = SmoothSource::from_sample(set, SourceKind::Isotonic).unwrap();
        let v = conditional_mean_z(&src, &src, &k, 3.0, DENOMINATOR_FLOOR).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn degenerate_denominator_is_an_error() {
        let zero = SmoothSource::Isotonic(StepFunction::constant(0.0).unwrap());
        let k = KernelSpec::triweight(1.0).unwrap();
        let err = conditional_mean_z(&zero, &zero, &k, 2.0, DENOMINATOR_FLOOR).unwrap_err();
        assert!(matches!(err, Error::DegenerateDenominator { .. }));
    }

    #[test]
    fn grid_evaluation_keeps_order() {
        let src = SmoothSource::function(|t| t * t);
        let k = KernelSpec::triweight(0.5).unwrap();
        let grid: Vec<f64> = (0..50).map(|i| i as f64 * 0.2).collect();
        let curve = SmoothCurve::evaluate(&src, &k, 1, &grid).unwrap();
        for (x, v) in grid.iter().zip(&curve.values) {
            assert!((v - 2.0 * x).abs() < 1e-10);
        }
    }
}
