//! Plummer-model simulator and its ground truth.
//!
//! The joint density of position `X ∈ ℝ³` and `Z = V₃²` is
//!
//! ```text
//! c₀ / (β⁵ √z) · [a(r) − z/2]₊^{9/2},    a(r) = β / √(1 + r²/3),
//! ```
//!
//! so that, given `R = r`, `Z = 2 a(r) B` with `B ~ Beta(1/2, 11/2)` and
//! `E[Z | R = r] = a(r)/6`. The radial law has the closed-form CDF
//! `F(r) = r³ / (r² + 3)^{3/2}` and `Ψ(y) = (√3 π β / 48)(1 + y/3)⁻²`.
//!
//! Closed forms are used where they exist; everything else (`c₀`, the
//! transform `g`, `σ²`) is computed by adaptive quadrature with the
//! `x' = x + s²` substitution at square-root singularities.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::Quadrature;
use crate::samples::ObservationSet;

const SQRT3: f64 = 1.732_050_807_568_877_2;
const DENSITY_EXPONENT: f64 = 4.5;

#[derive(Debug, Clone)]
pub struct PlummerModel {
    beta: f64,
    c0: f64,
    gamma_half: Gamma<f64>,
    gamma_tail: Gamma<f64>,
}

/// One exact draw, with both the latent and the observed coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlummerDraw {
    pub r: f64,
    pub z: f64,
    /// Sign of the line-of-sight velocity, ±1.
    pub sign: f64,
    pub x1: f64,
    pub x2: f64,
    pub v3: f64,
    pub y: f64,
}

#[derive(Debug, Clone)]
pub struct PlummerSample {
    pub observations: ObservationSet,
    pub draws: Vec<PlummerDraw>,
}

impl PlummerSample {
    pub fn triples(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.draws.iter().map(|d| (d.x1, d.x2, d.v3))
    }
}

/// Radial CDF `r³ / (r² + 3)^{3/2}`.
pub fn radial_cdf(r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let s = r * r + 3.0;
    r * r * r / (s * s.sqrt())
}

/// Exact inverse of [`radial_cdf`]: `r = √3 (p^{-2/3} − 1)^{-1/2}`.
pub fn radius_from_uniform(p: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    SQRT3 / (p.powf(-2.0 / 3.0) - 1.0).sqrt()
}

fn require_nonnegative(name: &'static str, v: f64) -> Result<()> {
    if v.is_nan() || v < 0.0 {
        Err(Error::invalid(name, format!("must be ≥ 0, got {v}")))
    } else {
        Ok(())
    }
}

impl PlummerModel {
    /// Builds the model and normalizes it by quadrature.
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::invalid("beta", format!("must be positive, got {beta}")));
        }
        let mut model = Self {
            beta,
            c0: 1.0,
            gamma_half: Gamma::new(0.5, 1.0).expect("valid shape"),
            gamma_tail: Gamma::new(5.5, 1.0).expect("valid shape"),
        };
        let q = Quadrature::default();
        let mut inner_err = None;
        let mass = q.integrate_to_infinity(
            |r| match model.z_moment(r, 0) {
                Ok(m) => 4.0 * PI * r * r * m,
                Err(e) => {
                    inner_err.get_or_insert(e);
                    0.0
                }
            },
            0.0,
        )?;
        if let Some(e) = inner_err {
            return Err(e);
        }
        model.c0 = 1.0 / mass;
        Ok(model)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// `a(r) = β / √(1 + r²/3)`, half the upper end of the support of `Z | R = r`.
    pub fn a(&self, r: f64) -> f64 {
        self.beta / (1.0 + r * r / 3.0).sqrt()
    }

    /// Joint density of `(X, Z)` at `‖X‖ = r`.
    pub fn joint_density(&self, r: f64, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        let gap = self.a(r) - 0.5 * z;
        if gap <= 0.0 {
            return 0.0;
        }
        self.c0 / (self.beta.powi(5) * z.sqrt()) * gap.powf(DENSITY_EXPONENT)
    }

    /// `∫ zᵏ ρ(r, z) dz` by quadrature in `w = √z`.
    pub fn z_moment(&self, r: f64, k: i32) -> Result<f64> {
        let a = self.a(r);
        let scale = 2.0 * self.c0 / self.beta.powi(5);
        let q = Quadrature::with_tolerances(1e-300, 1e-12);
        let v = q.integrate(
            |w| {
                let gap = (a - 0.5 * w * w).max(0.0);
                w.powi(2 * k) * gap.powf(DENSITY_EXPONENT)
            },
            0.0,
            (2.0 * a).sqrt(),
        )?;
        Ok(scale * v)
    }

    /// Marginal density of `X` at radius `r` (per unit volume).
    pub fn rho_marginal(&self, r: f64) -> Result<f64> {
        require_nonnegative("r", r)?;
        self.z_moment(r, 0)
    }

    /// `Ψ(y) = (√3 π β / 48)(1 + y/3)⁻²`.
    pub fn psi_true(&self, y: f64) -> Result<f64> {
        require_nonnegative("y", y)?;
        Ok(self.psi_zero() / (1.0 + y / 3.0).powi(2))
    }

    pub(crate) fn psi_zero(&self) -> f64 {
        SQRT3 * PI * self.beta / 48.0
    }

    /// `U(y) = ∫₀ʸ Ψ = (√3 π β / 48) · 3y / (3 + y)`.
    pub fn u_true(&self, y: f64) -> Result<f64> {
        require_nonnegative("y", y)?;
        Ok(self.psi_zero() * 3.0 * y / (3.0 + y))
    }

    /// `Ψ′(y) = −(√3 π β / 72)(1 + y/3)⁻³`.
    pub fn psi_prime_true(&self, y: f64) -> Result<f64> {
        require_nonnegative("y", y)?;
        Ok(-SQRT3 * PI * self.beta / 72.0 / (1.0 + y / 3.0).powi(3))
    }

    /// `φ(x) = −Ψ′(x)/π²`.
    pub fn phi_true(&self, x: f64) -> Result<f64> {
        Ok(-self.psi_prime_true(x)? / (PI * PI))
    }

    /// `φ(x) = ∫ z ρ(√x, z) dz` by quadrature.
    pub fn phi_quadrature(&self, x: f64) -> Result<f64> {
        require_nonnegative("x", x)?;
        self.z_moment(x.sqrt(), 1)
    }

    /// `E[Z | R = r] = β / (6 √(1 + r²/3))`.
    pub fn ez_given_r(&self, r: f64) -> Result<f64> {
        require_nonnegative("r", r)?;
        Ok(self.a(r) / 6.0)
    }

    /// Joint density `g(y, z)` of `(Y, Z)`:
    /// `π ∫_y^∞ ρ(√x, z) / √(x − y) dx`.
    pub fn g(&self, y: f64, z: f64) -> Result<f64> {
        require_nonnegative("y", y)?;
        let q = Quadrature::with_tolerances(1e-300, 1e-10);
        Ok(PI * q.abel_tail(|x| self.joint_density(x.sqrt(), z), y)?)
    }

    /// `∫ zᵏ g(x, z) dz`, as a double quadrature: the Abel integral over
    /// `x' = x + s²` outside, the `z`-moment of `ρ` inside.
    pub fn moment_transform(&self, k: i32, x: f64) -> Result<f64> {
        require_nonnegative("x", x)?;
        let q = Quadrature::with_tolerances(1e-300, 1e-10);
        let mut inner_err = None;
        let v = q.abel_tail(
            |xp| match self.z_moment(xp.sqrt(), k) {
                Ok(m) => m,
                Err(e) => {
                    inner_err.get_or_insert(e);
                    0.0
                }
            },
            x,
        )?;
        match inner_err {
            Some(e) => Err(e),
            None => Ok(PI * v),
        }
    }

    /// `σ²(x) = ∫ z² g(x, z) dz`.
    pub fn sigma2_true(&self, x: f64) -> Result<f64> {
        self.moment_transform(2, x)
    }

    /// `ψ(y) = ∫ z g(y, z) dz`.
    pub fn psi_lower(&self, y: f64) -> Result<f64> {
        self.moment_transform(1, y)
    }

    /// Marginal density of `Y`, i.e. `ψ` for unit responses.
    pub fn y_density(&self, y: f64) -> Result<f64> {
        self.moment_transform(0, y)
    }

    /// `π ∫_y^∞ φ(x) / √(x − y) dx` from the closed-form `φ`.
    pub fn abel_of_phi(&self, y: f64) -> Result<f64> {
        require_nonnegative("y", y)?;
        let q = Quadrature::with_tolerances(1e-300, 1e-11);
        Ok(PI * q.abel_tail(|x| self.phi_true(x).unwrap_or(0.0), y)?)
    }

    /// `π² ∫_y^∞ φ(x) dx` by quadrature.
    pub fn psi_from_phi(&self, y: f64) -> Result<f64> {
        require_nonnegative("y", y)?;
        let q = Quadrature::with_tolerances(1e-300, 1e-11);
        Ok(PI * PI * q.integrate_to_infinity(|x| self.phi_true(x).unwrap_or(0.0), y)?)
    }

    /// `∫_y^∞ ψ(t) / √(t − y) dt` with `ψ` itself from [`Self::psi_lower`].
    pub fn psi_from_psi_lower(&self, y: f64) -> Result<f64> {
        require_nonnegative("y", y)?;
        let q = Quadrature::with_tolerances(1e-300, 1e-9);
        let mut inner_err = None;
        let v = q.abel_tail(
            |t| match self.psi_lower(t) {
                Ok(v) => v,
                Err(e) => {
                    inner_err.get_or_insert(e);
                    0.0
                }
            },
            y,
        )?;
        match inner_err {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }

    /// One exact draw.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> PlummerDraw {
        let r = radius_from_uniform(rng.random::<f64>());
        let g1 = self.gamma_half.sample(rng);
        let g2 = self.gamma_tail.sample(rng);
        let b = g1 / (g1 + g2);
        let z = 2.0 * self.a(r) * b;
        let w = 2.0 * rng.random::<f64>() - 1.0;
        let y = r * r * ((1.0 - w) * (1.0 + w));
        let theta = 2.0 * PI * rng.random::<f64>();
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let rho = y.sqrt();
        PlummerDraw {
            r,
            z,
            sign,
            x1: rho * theta.cos(),
            x2: rho * theta.sin(),
            v3: sign * z.sqrt(),
            y,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<PlummerSample> {
        if n == 0 {
            return Err(Error::invalid("n", "sample size must be at least 1"));
        }
        let draws: Vec<PlummerDraw> = (0..n).map(|_| self.draw(rng)).collect();
        let observations = ObservationSet::from_pairs(draws.iter().map(|d| (d.y, d.z)))?;
        Ok(PlummerSample {
            observations,
            draws,
        })
    }

    /// Tabulates one of the ground-truth functions on a grid.
    pub fn ground_truth(&self, kind: TruthKind, grid: &[f64]) -> Result<GroundTruth> {
        let values = grid
            .iter()
            .map(|&t| match kind {
                TruthKind::Psi => self.psi_true(t),
                TruthKind::U => self.u_true(t),
                TruthKind::PsiPrime => self.psi_prime_true(t),
                TruthKind::Phi => self.phi_true(t),
                TruthKind::Sigma2 => self.sigma2_true(t),
                TruthKind::EzGivenR => self.ez_given_r(t),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GroundTruth {
            kind,
            grid: grid.to_vec(),
            values,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthKind {
    Psi,
    U,
    PsiPrime,
    Phi,
    Sigma2,
    EzGivenR,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub kind: TruthKind,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}
