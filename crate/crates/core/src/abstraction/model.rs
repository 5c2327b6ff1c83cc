use crate::geometry::{ConvexPolygon, Point2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dynamics: {0}")]
    InvalidDynamics(String),
    #[error("state bounds: {0}")]
    InvalidBounds(String),
    #[error("auxiliary dimension {dim}: range {range} is not a multiple of epsilon {epsilon}")]
    NonDivisibleBounds { dim: usize, range: f64, epsilon: f64 },
    #[error("parse error: {0}")]
    ParseError(String),
}

/// `x⁺ = A x + B u`; coordinates 0 and 1 of `x` are the workspace position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dynamics {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
}

impl Dynamics {
    pub fn new(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let d = Self { a, b };
        d.validate()?;
        Ok(d)
    }

    /// `A = a·I`, `B = b·I` with `n = m = 2`.
    pub fn planar(a: f64, b: f64) -> Self {
        Self {
            a: vec![vec![a, 0.0], vec![0.0, a]],
            b: vec![vec![b, 0.0], vec![0.0, b]],
        }
    }

    pub fn state_dim(&self) -> usize {
        self.a.len()
    }

    pub fn input_dim(&self) -> usize {
        self.b.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.a.len();
        if n < 2 {
            return Err(ModelError::InvalidDynamics(format!("state dimension {n} < 2")));
        }
        if let Some(i) = self.a.iter().position(|r| r.len() != n) {
            return Err(ModelError::InvalidDynamics(format!("A row {i} has {} entries, expected {n}", self.a[i].len())));
        }
        if self.b.len() != n {
            return Err(ModelError::InvalidDynamics(format!("B has {} rows, expected {n}", self.b.len())));
        }
        let m = self.input_dim();
        if m == 0 {
            return Err(ModelError::InvalidDynamics("B has no columns".into()));
        }
        if let Some(i) = self.b.iter().position(|r| r.len() != m) {
            return Err(ModelError::InvalidDynamics(format!("B row {i} has {} entries, expected {m}", self.b[i].len())));
        }
        if self.a.iter().chain(&self.b).flatten().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidDynamics("non-finite entry".into()));
        }
        Ok(())
    }

    pub fn step(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(ra, rb)| {
                ra.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + rb.iter().zip(u).map(|(b, v)| b * v).sum::<f64>()
            })
            .collect()
    }
}

/// Bounds and grid step of the auxiliary coordinates `x_2..x_{n-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub epsilon: f64,
}

impl StateBounds {
    pub fn none() -> Self {
        Self {
            lower: Vec::new(),
            upper: Vec::new(),
            epsilon: 1.0,
        }
    }

    pub fn aux_dims(&self) -> usize {
        self.lower.len()
    }

    /// Cells per auxiliary dimension.
    pub fn counts(&self) -> Result<Vec<usize>, ModelError> {
        if self.lower.len() != self.upper.len() {
            return Err(ModelError::InvalidBounds("lower and upper lengths differ".into()));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(ModelError::InvalidBounds(format!("epsilon {} must be positive", self.epsilon)));
        }
        self.lower
            .iter()
            .zip(&self.upper)
            .enumerate()
            .map(|(i, (&lo, &hi))| {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(ModelError::InvalidBounds(format!("dimension {i}: [{lo}, {hi}]")));
                }
                let range = hi - lo;
                let k = (range / self.epsilon).round();
                if k < 1.0 || (k * self.epsilon - range).abs() > 1e-9 * range.max(1.0) {
                    return Err(ModelError::NonDivisibleBounds {
                        dim: i,
                        range,
                        epsilon: self.epsilon,
                    });
                }
                Ok(k as usize)
            })
            .collect()
    }

    /// Interval of cell `k` (0-based) in auxiliary dimension `dim`.
    pub fn interval(&self, dim: usize, k: usize) -> (f64, f64) {
        let lo = self.lower[dim] + self.epsilon * k as f64;
        (lo, (lo + self.epsilon).min(self.upper[dim]))
    }

    pub fn contains(&self, aux: &[f64], tol: f64) -> bool {
        aux.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&v, (&lo, &hi))| v >= lo - tol && v <= hi + tol)
    }
}

/// `{x : ζ(x) ∈ region, aux_i ∈ [lo_i, hi_i]}`, closed.
#[derive(Debug, Clone, PartialEq)]
pub struct StateCell {
    pub region: ConvexPolygon,
    pub aux: Vec<(f64, f64)>,
}

impl StateCell {
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.region.contains(Point2::new(x[0], x[1]), tol)
            && self
                .aux
                .iter()
                .zip(&x[2..])
                .all(|(&(lo, hi), &v)| v >= lo - tol && v <= hi + tol)
    }

    pub fn centroid(&self) -> Vec<f64> {
        let c = self.region.centroid();
        let mut x = vec![c.x, c.y];
        x.extend(self.aux.iter().map(|&(lo, hi)| 0.5 * (lo + hi)));
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_counts() {
        let b = StateBounds {
            lower: vec![0.0],
            upper: vec![1.0],
            epsilon: 0.5,
        };
        assert_eq!(b.counts().unwrap(), vec![2]);
        let b = StateBounds {
            lower: vec![0.0],
            upper: vec![1.0],
            epsilon: 0.3,
        };
        assert!(matches!(b.counts(), Err(ModelError::NonDivisibleBounds { dim: 0, .. })));
        let b = StateBounds {
            lower: vec![0.0, -1.0],
            upper: vec![0.3, 0.2],
            epsilon: 0.1,
        };
        assert_eq!(b.counts().unwrap(), vec![3, 12]);
    }

    #[test]
    fn dynamics_validation() {
        assert!(Dynamics::new(vec![vec![1.0]], vec![vec![1.0]]).is_err());
        assert!(Dynamics::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![1.0], vec![0.0, 1.0]]).is_err());
        let d = Dynamics::planar(1.0, 0.5);
        assert_eq!(d.step(&[1.0, 2.0], &[2.0, -2.0]), vec![2.0, 1.0]);
    }
}
