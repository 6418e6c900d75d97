//! The unbiased, non-monotone estimators.
//!
//! ```text
//! Ψ#(y) = (1/n) Σ_{Yᵢ > y} Zᵢ / √(Yᵢ − y)
//! U#(x) = ∫₀ˣ Ψ# = (1/n) Σ 2Zᵢ (√Yᵢ − √(Yᵢ − x)₊)
//! ```
//!
//! Both are extended to negative arguments by `Ψ#(t) = Ψ#(0)` and the
//! matching linear continuation of `U#`.
//!
//! Point evaluation costs O(n) directly. For larger samples the curve
//! carries a [`FarField`] index: a binary tree over blocks of sorted
//! observations where every cell stores Chebyshev interpolants of the
//! contributions of all observations lying well to its right. Those
//! contributions are analytic on the cell, so a query only sums its own
//! block and a handful of neighbours exactly and interpolates the rest.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::samples::ObservationSet;

/// Observation count above which the far-field index is built.
pub const FAR_FIELD_THRESHOLD: usize = 256;

/// `h_t(y, z) = 2z (√y − √(y − t)₊)`, the contribution of one observation
/// to `n·U#(t)`.
pub fn contribution(t: f64, y: f64, z: f64) -> Result<f64> {
    if !(y >= 0.0) {
        return Err(Error::invalid("y", format!("must be ≥ 0, got {y}")));
    }
    if !(z >= 0.0) {
        return Err(Error::invalid("z", format!("must be ≥ 0, got {z}")));
    }
    Ok(2.0 * z * (y.sqrt() - (y - t).max(0.0).sqrt()))
}

/// Naive curve over a shared, sorted sample.
#[derive(Debug, Clone)]
pub struct NaiveCurve {
    source: Arc<ObservationSet>,
    y: Vec<f64>,
    z: Vec<f64>,
    root: Vec<f64>,
    inv_n: f64,
    // full_prefix[k] = Σ_{i<k} 2 zᵢ √yᵢ (not yet divided by n)
    full_prefix: Vec<f64>,
    knots: Vec<f64>,
    far: Option<FarField>,
}

impl NaiveCurve {
    pub fn new(source: impl Into<Arc<ObservationSet>>) -> Self {
        let source = source.into();
        let y: Vec<f64> = source.ys().collect();
        let z: Vec<f64> = source.zs().collect();
        let root: Vec<f64> = y.iter().map(|v| v.sqrt()).collect();
        let mut full_prefix = Vec::with_capacity(y.len() + 1);
        let mut acc = 0.0;
        full_prefix.push(0.0);
        for i in 0..y.len() {
            acc += 2.0 * z[i] * root[i];
            full_prefix.push(acc);
        }
        let mut knots: Vec<f64> = y.clone();
        knots.dedup();
        let mut curve = Self {
            inv_n: 1.0 / y.len() as f64,
            source,
            y,
            z,
            root,
            full_prefix,
            knots,
            far: None,
        };
        if curve.y.len() > FAR_FIELD_THRESHOLD {
            curve.far = Some(FarField::build(&curve));
        }
        curve
    }

    /// Same curve but always evaluated by direct summation.
    pub fn without_index(mut self) -> Self {
        self.far = None;
        self
    }

    pub fn source(&self) -> &Arc<ObservationSet> {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn ys(&self) -> &[f64] {
        &self.y
    }

    pub fn zs(&self) -> &[f64] {
        &self.z
    }

    /// Distinct observation values of `y`, ascending.
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn max_y(&self) -> f64 {
        *self.y.last().expect("nonempty sample")
    }

    /// Flat tail value `U#(t)` for `t ≥ max Y`.
    pub fn terminal(&self) -> f64 {
        self.full_prefix[self.y.len()] * self.inv_n
    }

    /// `Ψ#(y)`. Observations with `Yᵢ = y` are excluded, so the value is
    /// finite everywhere; it is the right limit at a knot.
    pub fn psi(&self, y: f64) -> f64 {
        let y = y.max(0.0);
        if y >= self.max_y() {
            return 0.0;
        }
        match &self.far {
            Some(far) => far.eval(self, y).1,
            None => self.psi_direct(y),
        }
    }

    /// `U#(x)`, linearly continued left of 0.
    pub fn u(&self, x: f64) -> f64 {
        if x < 0.0 {
            return x * self.psi(0.0);
        }
        if x >= self.max_y() {
            return self.terminal();
        }
        match &self.far {
            Some(far) => far.eval(self, x).0,
            None => self.u_direct(x),
        }
    }

    /// `(U#(x), Ψ#(x))` in one pass for `x ≥ 0`.
    pub fn u_and_psi(&self, x: f64) -> (f64, f64) {
        if x < 0.0 {
            let p = self.psi(0.0);
            return (x * p, p);
        }
        if x >= self.max_y() {
            return (self.terminal(), 0.0);
        }
        match &self.far {
            Some(far) => far.eval(self, x),
            None => (self.u_direct(x), self.psi_direct(x)),
        }
    }

    pub fn psi_direct(&self, y: f64) -> f64 {
        let y = y.max(0.0);
        let start = self.y.partition_point(|&v| v <= y);
        let s: f64 = (start..self.y.len())
            .map(|i| self.z[i] / (self.y[i] - y).sqrt())
            .sum();
        s * self.inv_n
    }

    pub fn u_direct(&self, x: f64) -> f64 {
        if x < 0.0 {
            return x * self.psi_direct(0.0);
        }
        let start = self.y.partition_point(|&v| v <= x);
        let s: f64 = (start..self.y.len())
            .map(|i| 2.0 * self.z[i] * x / (self.root[i] + (self.y[i] - x).sqrt()))
            .sum();
        (self.full_prefix[start] + s) * self.inv_n
    }

    /// `U#` at every distinct knot.
    pub fn u_at_knots(&self) -> Vec<f64> {
        self.knots.iter().map(|&k| self.u(k)).collect()
    }

    /// `Ψ#` over a grid.
    pub fn psi_grid(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|&t| self.psi(t)).collect()
    }
}

const NODES: usize = 24;
const LEAF: usize = 32;
// Far observations sit at least this many cell widths past the cell.
const SEPARATION: f64 = 1.0;

#[derive(Debug, Clone)]
struct Cell {
    lo: f64,
    hi: f64,
    start: usize,
    cut: usize,
    u_far: [f64; NODES],
    psi_far: [f64; NODES],
}

impl Cell {
    fn node(&self, j: usize) -> f64 {
        let mid = 0.5 * (self.lo + self.hi);
        let half = 0.5 * (self.hi - self.lo);
        mid + half * (PI * j as f64 / (NODES - 1) as f64).cos()
    }

    /// Barycentric interpolation on Chebyshev points of the second kind.
    fn interpolate(&self, x: f64) -> (f64, f64) {
        if self.hi <= self.lo {
            return (self.u_far[0], self.psi_far[0]);
        }
        let mut num_u = 0.0;
        let mut num_p = 0.0;
        let mut den = 0.0;
        for j in 0..NODES {
            let d = x - self.node(j);
            if d == 0.0 {
                return (self.u_far[j], self.psi_far[j]);
            }
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == NODES - 1 {
                w *= 0.5;
            }
            let c = w / d;
            num_u += c * self.u_far[j];
            num_p += c * self.psi_far[j];
            den += c;
        }
        (num_u / den, num_p / den)
    }
}

/// Hierarchical far-field index over a sorted sample.
#[derive(Debug, Clone)]
struct FarField {
    // levels[0] are the leaves; the last level holds the root.
    levels: Vec<Vec<Cell>>,
    leaf_lo: Vec<f64>,
}

impl FarField {
    fn build(curve: &NaiveCurve) -> Self {
        let y = &curve.y;
        let n = y.len();
        let cut_of = |lo: f64, hi: f64| {
            let threshold = hi + SEPARATION * (hi - lo);
            y.partition_point(|&v| v <= threshold)
        };
        let blank = |lo: f64, hi: f64, start: usize| Cell {
            lo,
            hi,
            start,
            cut: cut_of(lo, hi),
            u_far: [0.0; NODES],
            psi_far: [0.0; NODES],
        };

        let leaves = n.div_ceil(LEAF);
        let mut level: Vec<Cell> = (0..leaves)
            .map(|k| {
                let start = k * LEAF;
                let lo = if k == 0 { 0.0 } else { y[start] };
                let hi = if k + 1 < leaves { y[start + LEAF] } else { y[n - 1] };
                blank(lo, hi, start)
            })
            .collect();
        let leaf_lo = level.iter().map(|c| c.lo).collect();
        let mut levels = Vec::new();
        while level.len() > 1 {
            let parent: Vec<Cell> = level
                .chunks(2)
                .map(|pair| {
                    let last = pair.last().expect("chunk nonempty");
                    blank(pair[0].lo, last.hi, pair[0].start)
                })
                .collect();
            levels.push(level);
            level = parent;
        }
        levels.push(level);

        // Top-down: each cell = its own middle band summed exactly plus the
        // parent's interpolant.
        let top = levels.len() - 1;
        for l in (0..=top).rev() {
            let (lower, upper) = levels.split_at_mut(l + 1);
            let cells = &mut lower[l];
            for (idx, cell) in cells.iter_mut().enumerate() {
                let parent = upper.first().map(|p| &p[idx / 2]);
                let band_end = parent.map_or(n, |p| p.cut);
                for j in 0..NODES {
                    let x = cell.node(j);
                    let (mut su, mut sp) = parent.map_or((0.0, 0.0), |p| p.interpolate(x));
                    for i in cell.cut..band_end {
                        let d = (y[i] - x).sqrt();
                        su += 2.0 * curve.z[i] * x / (curve.root[i] + d);
                        sp += curve.z[i] / d;
                    }
                    cell.u_far[j] = su;
                    cell.psi_far[j] = sp;
                }
            }
        }
        Self { levels, leaf_lo }
    }

    /// `(U#(x), Ψ#(x))` for `0 ≤ x < max Y`.
    fn eval(&self, curve: &NaiveCurve, x: f64) -> (f64, f64) {
        let k = self.leaf_lo.partition_point(|&lo| lo <= x).saturating_sub(1);
        let cell = &self.levels[0][k];
        let (mut su, mut sp) = cell.interpolate(x);
        su += curve.full_prefix[cell.start];
        for i in cell.start..cell.cut {
            let yi = curve.y[i];
            if yi > x {
                let d = (yi - x).sqrt();
                su += 2.0 * curve.z[i] * x / (curve.root[i] + d);
                sp += curve.z[i] / d;
            } else {
                su += 2.0 * curve.z[i] * curve.root[i];
            }
        }
        (su * curve.inv_n, sp * curve.inv_n)
    }
}
