//! Least concave majorant of `U#` and the isotonized estimator `Ψ̃`.
//!
//! `U#` is convex between consecutive distinct observations and constant
//! past the largest one, so its least concave majorant is the upper hull of
//! `(0, 0)` and the points `(Yᵢ, U#(Yᵢ))`, followed by a flat tail. The hull
//! is a monotone chain over those points.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::naive::NaiveCurve;

/// Relative slope difference under which adjacent hull segments merge.
pub const SLOPE_TIE: f64 = 1e-12;

/// Default absolute tolerance for [`sup_gap`].
pub const SUP_GAP_TOL: f64 = 1e-9;

const MAX_BISECTIONS: usize = 200;

/// Piecewise-linear concave function with a flat tail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcaveMajorant {
    knots: Vec<f64>,
    values: Vec<f64>,
    terminal: f64,
}

impl ConcaveMajorant {
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn terminal(&self) -> f64 {
        self.terminal
    }

    /// Chord slopes, one per segment between consecutive knots.
    pub fn slopes(&self) -> Vec<f64> {
        (1..self.knots.len())
            .map(|j| self.slope(j - 1))
            .collect()
    }

    fn slope(&self, seg: usize) -> f64 {
        (self.values[seg + 1] - self.values[seg]) / (self.knots[seg + 1] - self.knots[seg])
    }

    /// Value at `t`; linear continuation of the first segment below the
    /// first knot and the terminal constant past the last.
    pub fn value(&self, t: f64) -> f64 {
        let last = self.knots.len() - 1;
        if t >= self.knots[last] {
            return self.terminal;
        }
        if self.knots.len() == 1 {
            return self.values[0];
        }
        let seg = self
            .knots
            .partition_point(|&k| k <= t)
            .saturating_sub(1)
            .min(last - 1);
        if t == self.knots[seg] {
            return self.values[seg];
        }
        self.values[seg] + self.slope(seg) * (t - self.knots[seg])
    }

    /// Right derivative at `t`, zero past the last knot.
    pub fn right_slope(&self, t: f64) -> f64 {
        let last = self.knots.len() - 1;
        if t >= self.knots[last] {
            return 0.0;
        }
        let seg = self.knots.partition_point(|&k| k <= t).saturating_sub(1);
        self.slope(seg)
    }
}

/// Right-continuous, nonincreasing, nonnegative step function.
///
/// `levels[j]` holds on `[breakpoints[j], breakpoints[j+1])`, the last level
/// holds to infinity, and `levels[0]` is continued to the left of the first
/// breakpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
}

impl StepFunction {
    pub fn new(breakpoints: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != levels.len() {
            return Err(Error::invalid(
                "breakpoints",
                "need one level per breakpoint and at least one breakpoint",
            ));
        }
        if breakpoints.iter().chain(&levels).any(|v| !v.is_finite()) {
            return Err(Error::invalid("levels", "values must be finite"));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("breakpoints", "must be strictly increasing"));
        }
        if levels.windows(2).any(|w| w[1] > w[0]) || levels.iter().any(|&l| l < 0.0) {
            return Err(Error::invalid("levels", "must be nonincreasing and nonnegative"));
        }
        Ok(Self::pooled(breakpoints, levels))
    }

    /// A single level on the whole line.
    pub fn constant(level: f64) -> Result<Self> {
        Self::new(vec![0.0], vec![level])
    }

    fn pooled(breakpoints: Vec<f64>, levels: Vec<f64>) -> Self {
        let mut b = Vec::with_capacity(breakpoints.len());
        let mut l: Vec<f64> = Vec::with_capacity(levels.len());
        for (x, v) in breakpoints.into_iter().zip(levels) {
            if l.last() != Some(&v) {
                b.push(x);
                l.push(v);
            }
        }
        Self {
            breakpoints: b,
            levels: l,
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn value(&self, t: f64) -> f64 {
        let j = self.breakpoints.partition_point(|&b| b <= t).saturating_sub(1);
        self.levels[j]
    }

    /// Constant pieces as `(start, end, level)`, ends possibly infinite.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let n = self.levels.len();
        (0..n).map(move |j| {
            let start = if j == 0 { f64::NEG_INFINITY } else { self.breakpoints[j] };
            let end = if j + 1 < n { self.breakpoints[j + 1] } else { f64::INFINITY };
            (start, end, self.levels[j])
        })
    }
}

/// Upper hull of `points` (increasing abscissae), pooling slope ties.
fn upper_hull(points: impl IntoIterator<Item = (f64, f64)>) -> Vec<(f64, f64)> {
    let slope = |a: (f64, f64), b: (f64, f64)| (b.1 - a.1) / (b.0 - a.0);
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in points {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let s1 = slope(a, b);
            let s2 = slope(b, p);
            if s2 >= s1 - SLOPE_TIE * s1.abs().max(s2.abs()) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

fn from_hull(hull: Vec<(f64, f64)>, terminal: f64) -> ConcaveMajorant {
    let (knots, values) = hull.into_iter().unzip();
    ConcaveMajorant {
        knots,
        values,
        terminal,
    }
}

/// Least concave majorant of `U#` on `[0, ∞)`.
pub fn least_concave_majorant(curve: &NaiveCurve) -> ConcaveMajorant {
    let knots = curve.knots();
    let values = curve.u_at_knots();
    let points = std::iter::once((0.0, 0.0)).chain(
        knots
            .iter()
            .copied()
            .zip(values)
            .filter(|&(k, _)| k > 0.0),
    );
    let mut hull = upper_hull(points);
    // U# is flat at the end and the tail is flat too, so a trailing
    // zero-slope segment is absorbed into the tail.
    let terminal = curve.terminal();
    while hull.len() >= 2 && hull[hull.len() - 2].1 >= terminal {
        hull.pop();
    }
    from_hull(hull, terminal)
}

/// Least concave majorant of `U#` restricted to `[z0, z1]`.
///
/// The result starts at `z0` and is flat past `z1`.
pub fn restricted_majorant(curve: &NaiveCurve, z0: f64, z1: f64) -> Result<ConcaveMajorant> {
    if !(z0 >= 0.0 && z1 > z0) {
        return Err(Error::invalid("interval", format!("need 0 ≤ z0 < z1, got [{z0}, {z1}]")));
    }
    let inner = curve
        .knots()
        .iter()
        .copied()
        .filter(|&k| k > z0 && k < z1)
        .map(|k| (k, curve.u(k)));
    let end = curve.u(z1);
    let points = std::iter::once((z0, curve.u(z0)))
        .chain(inner)
        .chain(std::iter::once((z1, end)));
    Ok(from_hull(upper_hull(points), end))
}

/// Evaluates `m` at `t`.
pub fn majorant_value(m: &ConcaveMajorant, t: f64) -> f64 {
    m.value(t)
}

/// Right derivative of `m` as a step function.
pub fn isotonic_psi(m: &ConcaveMajorant) -> StepFunction {
    let mut levels = m.slopes();
    levels.push(0.0);
    // Floating-point chords can be marginally negative when the data are
    // flat; slopes of a nondecreasing function are never below zero.
    for l in &mut levels {
        *l = l.max(0.0);
    }
    StepFunction::pooled(m.knots.clone(), levels)
}

/// Values at `ts` of the least concave majorant of the piecewise-linear
/// interpolant through `(ts, vs)`, by quadratic-time gift wrapping.
pub fn grid_lcm_oracle(ts: &[f64], vs: &[f64]) -> Result<Vec<f64>> {
    if ts.len() < 2 || ts.len() != vs.len() {
        return Err(Error::invalid("ts", "need at least two points and matching values"));
    }
    if ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("ts", "must be strictly increasing"));
    }
    let mut vertices = vec![0];
    let mut j = 0;
    while j + 1 < ts.len() {
        // Steepest chord from j; farthest point wins ties.
        let mut best = j + 1;
        let mut best_slope = (vs[best] - vs[j]) / (ts[best] - ts[j]);
        for k in j + 2..ts.len() {
            let s = (vs[k] - vs[j]) / (ts[k] - ts[j]);
            if s >= best_slope {
                best = k;
                best_slope = s;
            }
        }
        vertices.push(best);
        j = best;
    }
    let mut out = Vec::with_capacity(ts.len());
    for w in vertices.windows(2) {
        let (a, b) = (w[0], w[1]);
        let s = (vs[b] - vs[a]) / (ts[b] - ts[a]);
        for i in a..b {
            out.push(vs[a] + s * (ts[i] - ts[a]));
        }
    }
    out.push(vs[ts.len() - 1]);
    Ok(out)
}

/// `sup_{t0 ≤ t ≤ t1} (Ũ(t) − U#(t))` to absolute tolerance `tol`.
///
/// Between consecutive observations the gap is concave, with derivative
/// `Ũ′ − Ψ#` decreasing. Each such interval is bounded above by the tangent
/// at its left end, intervals that cannot beat the running maximum are
/// skipped, and the rest are searched by bisection on the derivative.
pub fn sup_gap(curve: &NaiveCurve, m: &ConcaveMajorant, t0: f64, t1: f64, tol: f64) -> Result<f64> {
    if !(t0 >= 0.0 && t1 > t0) {
        return Err(Error::invalid("interval", format!("need 0 ≤ t0 < t1, got [{t0}, {t1}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    let hi = t1.min(curve.max_y());
    if t0 >= hi {
        return Ok(0.0);
    }
    let gap = |x: f64| m.value(x) - curve.u(x);

    let mut edges = vec![t0];
    let knots = curve.knots();
    let from = knots.partition_point(|&k| k <= t0);
    let to = knots.partition_point(|&k| k < hi);
    edges.extend_from_slice(&knots[from..to]);
    edges.push(hi);

    // (upper bound, left, right, gap at left)
    let mut candidates = Vec::with_capacity(edges.len() - 1);
    let mut best = gap(hi).max(0.0);
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (u, psi) = curve.u_and_psi(a);
        let ga = m.value(a) - u;
        best = best.max(ga);
        let da = m.right_slope(a) - psi;
        if da > 0.0 {
            candidates.push((ga + da * (b - a), a, b, ga));
        }
    }
    candidates.sort_by(|p, q| q.0.total_cmp(&p.0));
    for (bound, a, b, ga) in candidates {
        if bound <= best + tol {
            break;
        }
        best = best.max(interval_max(curve, m, a, b, ga, tol, best));
    }
    Ok(best.max(0.0))
}

/// Maximum of the concave gap on `[a, b]`, given the gap at `a` and that
/// its right derivative there is positive.
fn interval_max(
    curve: &NaiveCurve,
    m: &ConcaveMajorant,
    a: f64,
    b: f64,
    ga: f64,
    tol: f64,
    floor: f64,
) -> f64 {
    let slope = m.right_slope(a);
    let eval = |x: f64| {
        let (u, psi) = curve.u_and_psi(x);
        (m.value(x) - u, slope - psi)
    };
    let (mut l, mut gl, mut dl) = (a, ga, slope - curve.psi(a));
    let (mut r, mut gr, mut dr) = {
        let (g, d) = eval(b);
        // The left limit of Ψ# at an observation is infinite.
        let d = if curve.knots().binary_search_by(|k| k.total_cmp(&b)).is_ok() {
            f64::NEG_INFINITY
        } else {
            d
        };
        (b, g, d)
    };
    if dr >= 0.0 {
        return gr;
    }
    let mut lower = gl.max(gr);
    for _ in 0..MAX_BISECTIONS {
        // Tangents at l and r bound the concave gap from above.
        let upper = if dr.is_finite() {
            let x = ((gr - dr * r) - (gl - dl * l)) / (dl - dr);
            gl + dl * (x.clamp(l, r) - l)
        } else {
            gl + dl * (r - l)
        };
        if upper - lower <= tol || upper <= floor {
            break;
        }
        let mid = 0.5 * (l + r);
        if mid <= l || mid >= r {
            break;
        }
        let (gm, dm) = eval(mid);
        lower = lower.max(gm);
        if dm > 0.0 {
            (l, gl, dl) = (mid, gm, dm);
        } else {
            (r, gr, dr) = (mid, gm, dm);
        }
    }
    lower
}
