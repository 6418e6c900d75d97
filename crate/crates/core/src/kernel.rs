//! Smoothing kernels supported on `[−1, 1]`.

use std::f64::consts::PI;
use std::fmt::Debug;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A symmetric probability kernel supported on `[−1, 1]`.
pub trait Kernel: Debug + Send + Sync {
    fn name(&self) -> &'static str;
    fn value(&self, u: f64) -> f64;
    fn d1(&self, u: f64) -> f64;
    fn d2(&self, u: f64) -> f64;
    /// `∫_{−1}^{u} K`.
    fn cdf(&self, u: f64) -> f64;

    /// Coefficients of `K` on `[−1, 1]` in ascending powers of `u`, for
    /// kernels that are polynomial there.
    fn polynomial(&self) -> Option<&[f64]> {
        None
    }

    /// `K^{(m)}(u)` for `m ∈ {−1, 0, 1, 2}`, with `K^{(−1)}` the CDF.
    fn derivative(&self, m: i32, u: f64) -> f64 {
        match m {
            -1 => self.cdf(u),
            0 => self.value(u),
            1 => self.d1(u),
            2 => self.d2(u),
            _ => panic!("kernel derivative order {m} unsupported"),
        }
    }
}

fn horner(coeffs: &[f64], u: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c)
}

/// Coefficients of the derivative of a polynomial.
pub fn poly_derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| k as f64 * c)
        .collect()
}

/// A kernel that is a polynomial on `[−1, 1]` and zero outside.
#[derive(Debug, Clone)]
struct PolynomialKernel {
    name: &'static str,
    k: Vec<f64>,
    k1: Vec<f64>,
    k2: Vec<f64>,
    antiderivative: Vec<f64>,
}

impl PolynomialKernel {
    fn new(name: &'static str, k: Vec<f64>) -> Self {
        let k1 = poly_derivative(&k);
        let k2 = poly_derivative(&k1);
        let mut antiderivative = vec![0.0];
        antiderivative.extend(k.iter().enumerate().map(|(j, c)| c / (j + 1) as f64));
        Self {
            name,
            k,
            k1,
            k2,
            antiderivative,
        }
    }

    fn inside(u: f64, f: impl FnOnce() -> f64) -> f64 {
        if u.abs() < 1.0 {
            f()
        } else {
            0.0
        }
    }

    fn cdf(&self, u: f64) -> f64 {
        if u <= -1.0 {
            0.0
        } else if u >= 1.0 {
            1.0
        } else {
            horner(&self.antiderivative, u) - horner(&self.antiderivative, -1.0)
        }
    }
}

macro_rules! polynomial_kernel {
    ($ty:ident, $name:literal, $coeffs:expr) => {
        #[derive(Debug, Clone)]
        pub struct $ty(PolynomialKernel);

        impl Default for $ty {
            fn default() -> Self {
                Self(PolynomialKernel::new($name, $coeffs))
            }
        }

        impl Kernel for $ty {
            fn name(&self) -> &'static str {
                self.0.name
            }
            fn value(&self, u: f64) -> f64 {
                PolynomialKernel::inside(u, || horner(&self.0.k, u))
            }
            fn d1(&self, u: f64) -> f64 {
                PolynomialKernel::inside(u, || horner(&self.0.k1, u))
            }
            fn d2(&self, u: f64) -> f64 {
                PolynomialKernel::inside(u, || horner(&self.0.k2, u))
            }
            fn cdf(&self, u: f64) -> f64 {
                self.0.cdf(u)
            }
            fn polynomial(&self) -> Option<&[f64]> {
                Some(&self.0.k)
            }
        }
    };
}

const TRIWEIGHT_C: f64 = 35.0 / 32.0;
const BIWEIGHT_C: f64 = 15.0 / 16.0;

polynomial_kernel!(
    Triweight,
    "triweight",
    vec![TRIWEIGHT_C, 0.0, -3.0 * TRIWEIGHT_C, 0.0, 3.0 * TRIWEIGHT_C, 0.0, -TRIWEIGHT_C]
);

// Only once differentiable at ±1.
polynomial_kernel!(
    Biweight,
    "biweight",
    vec![BIWEIGHT_C, 0.0, -2.0 * BIWEIGHT_C, 0.0, BIWEIGHT_C]
);

/// `cos²(πu/2)` on `[−1, 1]`. Not polynomial, so smoothing with it goes
/// through quadrature.
#[derive(Debug, Clone, Copy, Default)]
pub struct RaisedCosine;

impl Kernel for RaisedCosine {
    fn name(&self) -> &'static str {
        "raised-cosine"
    }
    fn value(&self, u: f64) -> f64 {
        if u.abs() < 1.0 {
            (0.5 * PI * u).cos().powi(2)
        } else {
            0.0
        }
    }
    fn d1(&self, u: f64) -> f64 {
        if u.abs() < 1.0 {
            -0.5 * PI * (PI * u).sin()
        } else {
            0.0
        }
    }
    fn d2(&self, u: f64) -> f64 {
        if u.abs() < 1.0 {
            -0.5 * PI * PI * (PI * u).cos()
        } else {
            0.0
        }
    }
    fn cdf(&self, u: f64) -> f64 {
        if u <= -1.0 {
            0.0
        } else if u >= 1.0 {
            1.0
        } else {
            0.5 * (u + 1.0) + (PI * u).sin() / (2.0 * PI)
        }
    }
}

/// A kernel with a bandwidth.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    kernel: Arc<dyn Kernel>,
    bandwidth: f64,
}

impl KernelSpec {
    pub fn new(kernel: Arc<dyn Kernel>, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::invalid(
                "bandwidth",
                format!("must be positive and finite, got {bandwidth}"),
            ));
        }
        Ok(Self { kernel, bandwidth })
    }

    /// Triweight kernel, the default.
    pub fn triweight(bandwidth: f64) -> Result<Self> {
        Self::new(Arc::new(Triweight::default()), bandwidth)
    }

    pub fn kernel(&self) -> &dyn Kernel {
        self.kernel.as_ref()
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn with_bandwidth(&self, bandwidth: f64) -> Result<Self> {
        Self::new(self.kernel.clone(), bandwidth)
    }
}

/// Looks a kernel up by name.
pub fn kernel_by_name(name: &str) -> Result<Arc<dyn Kernel>> {
    match name {
        "triweight" => Ok(Arc::new(Triweight::default())),
        "biweight" => Ok(Arc::new(Biweight::default())),
        "raised-cosine" => Ok(Arc::new(RaisedCosine)),
        other => Err(Error::invalid(
            "kernel",
            format!("unknown kernel {other:?}; expected triweight, biweight or raised-cosine"),
        )),
    }
}
