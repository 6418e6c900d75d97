//! Observations `(y, z)` and their canonical sorted container.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One observation: squared projected radius `y` and response `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub y: f64,
    pub z: f64,
}

/// A nonempty sample sorted ascending by `y`.
///
/// Ties in `y` are kept as separate observations. The optional `z_bound`
/// is metadata only; nothing is clamped to it.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    observations: Vec<Observation>,
    z_bound: Option<f64>,
}

impl ObservationSet {
    /// Projects raw `(x1, x2, v3)` rows to `y = x1² + x2²`, `z = v3²`.
    pub fn from_raw_triples<I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64, f64)>,
    {
        let observations = rows
            .into_iter()
            .enumerate()
            .map(|(row, (x1, x2, v3))| {
                if !(x1.is_finite() && x2.is_finite() && v3.is_finite()) {
                    return Err(Error::NonFinite { row });
                }
                Ok(Observation {
                    y: x1 * x1 + x2 * x2,
                    z: v3 * v3,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_observations(observations)
    }

    pub fn from_pairs<I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let observations = rows
            .into_iter()
            .enumerate()
            .map(|(row, (y, z))| {
                if !(y.is_finite() && z.is_finite()) {
                    return Err(Error::NonFinite { row });
                }
                if y < 0.0 {
                    return Err(Error::Negative {
                        row,
                        field: "y",
                        value: y,
                    });
                }
                if z < 0.0 {
                    return Err(Error::Negative {
                        row,
                        field: "z",
                        value: z,
                    });
                }
                Ok(Observation { y, z })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_observations(observations)
    }

    fn from_observations(mut observations: Vec<Observation>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::EmptyInput);
        }
        // Sorting on (y, z) makes the result independent of input order.
        observations.sort_by(|a, b| a.y.total_cmp(&b.y).then(a.z.total_cmp(&b.z)));
        Ok(Self {
            observations,
            z_bound: None,
        })
    }

    /// Density-estimation mode: every response replaced by 1.
    pub fn with_unit_z(&self) -> Self {
        let mut observations = self.observations.clone();
        for o in &mut observations {
            o.z = 1.0;
        }
        observations.sort_by(|a, b| a.y.total_cmp(&b.y));
        Self {
            observations,
            z_bound: Some(1.0),
        }
    }

    /// Multiplies every response by `factor ≥ 0`.
    pub fn scaled_z(&self, factor: f64) -> Self {
        let observations = self
            .observations
            .iter()
            .map(|o| Observation {
                y: o.y,
                z: o.z * factor,
            })
            .collect();
        Self {
            observations,
            z_bound: self.z_bound.map(|c| c * factor),
        }
    }

    /// Attaches a known upper bound for `z`, rejecting it if any response
    /// exceeds it.
    pub fn with_z_bound(mut self, bound: f64) -> Result<Self> {
        if !(bound.is_finite() && bound >= 0.0) {
            return Err(Error::invalid("z_bound", "must be finite and nonnegative"));
        }
        if let Some((row, o)) = self
            .observations
            .iter()
            .enumerate()
            .find(|(_, o)| o.z > bound)
        {
            return Err(Error::invalid(
                "z_bound",
                format!("row {row} has z = {} above the bound {bound}", o.z),
            ));
        }
        self.z_bound = Some(bound);
        Ok(self)
    }

    pub fn z_bound(&self) -> Option<f64> {
        self.z_bound
    }

    /// Whether every response lies below `bound`.
    pub fn check_z_bound(&self, bound: f64) -> bool {
        self.observations.iter().all(|o| o.z <= bound)
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn ys(&self) -> impl Iterator<Item = f64> + '_ {
        self.observations.iter().map(|o| o.y)
    }

    pub fn zs(&self) -> impl Iterator<Item = f64> + '_ {
        self.observations.iter().map(|o| o.z)
    }

    pub fn max_y(&self) -> f64 {
        self.observations.last().map(|o| o.y).unwrap_or(0.0)
    }
}
