//! Isotonic and kernel-smoothed estimation for Wicksell's problem with
//! responses.
//!
//! Observations are pairs `(y, z)` where `y = x1² + x2²` is a squared
//! projected radius and `z ≥ 0` a response (for example a squared
//! line-of-sight velocity). From them the crate builds
//!
//! * the unbiased naive estimator `Ψ#` and its integral `U#` ([`naive`]),
//! * the least concave majorant of `U#` and its right derivative, the
//!   isotonized estimator ([`lcm`]),
//! * kernel-smoothed estimates of `Ψ`, `Ψ′` and `φ = −Ψ′/π²` ([`smooth`]),
//!
//! together with an exact Plummer-model simulator ([`plummer`]) and a
//! seeded Monte Carlo harness ([`experiments`]).

pub mod error;
pub mod experiments;
pub mod formats;
pub mod kernel;
pub mod lcm;
pub mod naive;
pub mod plummer;
pub mod quad;
pub mod samples;
pub mod smooth;

pub use error::{Error, ErrorClass, Result};
pub use kernel::{Kernel, KernelSpec, Triweight};
pub use lcm::{least_concave_majorant, ConcaveMajorant, StepFunction};
pub use naive::NaiveCurve;
pub use plummer::PlummerModel;
pub use samples::{Observation, ObservationSet};
pub use smooth::SmoothSource;
