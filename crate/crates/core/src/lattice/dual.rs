use serde::{Deserialize, Serialize};

use super::space::AtomicMeasureSpace;
use super::spec::LatticeSpec;
use crate::error::{input, Error, Result};

/// Norm slack allowed when admitting a density into a dual unit ball.
pub const BALL_TOL: f64 = 1e-9;

/// A nonnegative density `h` in the unit ball of a Köthe dual, acting by `f -> int f h dmu`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualFunctional {
    density: Vec<f64>,
    norm_bound: f64,
}

impl DualFunctional {
    /// Admits `density` into the nonnegative unit ball of `ball`.
    pub fn new(density: Vec<f64>, ball: &LatticeSpec) -> Result<Self> {
        if let Some(v) = density.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return input(format!("dual density entry {v} is negative or non-finite"));
        }
        let norm = ball.norm(&density)?;
        if norm > 1.0 + BALL_TOL {
            return Err(Error::Precondition(format!("dual density has norm {norm} > 1")));
        }
        Ok(Self { density, norm_bound: norm })
    }

    /// `density / ||density||`, the point of the unit sphere in the same direction.
    pub fn normalized(density: Vec<f64>, ball: &LatticeSpec) -> Result<Self> {
        let norm = ball.norm(&density)?;
        if norm == 0.0 {
            return input("cannot normalize the zero density");
        }
        let d: Vec<f64> = density.iter().map(|v| v.max(0.0) / norm).collect();
        Self::new(d, ball)
    }

    pub(crate) fn from_parts(density: Vec<f64>, norm_bound: f64) -> Self {
        Self { density, norm_bound }
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.density.iter().all(|v| *v > 0.0)
    }
}

/// Probability weights on finitely many dual densities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub struct DiscreteDualMeasure {
    atom_weights: Vec<f64>,
    weights: Vec<f64>,
    support: Vec<DualFunctional>,
}

#[derive(Serialize, Deserialize)]
struct RawMeasure {
    weights: Vec<f64>,
    support: Vec<Vec<f64>>,
    atom_weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    norm_bounds: Option<Vec<f64>>,
}

impl TryFrom<RawMeasure> for DiscreteDualMeasure {
    type Error = Error;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        let space = AtomicMeasureSpace::new(raw.atom_weights)?;
        let bounds = raw.norm_bounds.unwrap_or_else(|| vec![f64::NAN; raw.support.len()]);
        if bounds.len() != raw.support.len() {
            return input("norm_bounds length differs from support length");
        }
        let support = raw
            .support
            .into_iter()
            .zip(bounds)
            .map(|(d, b)| DualFunctional::from_parts(d, b))
            .collect();
        DiscreteDualMeasure::new(&space, support, raw.weights)
    }
}

impl From<DiscreteDualMeasure> for RawMeasure {
    fn from(m: DiscreteDualMeasure) -> Self {
        let norm_bounds = if m.support.iter().all(|h| h.norm_bound.is_finite()) {
            Some(m.support.iter().map(|h| h.norm_bound).collect())
        } else {
            None
        };
        RawMeasure {
            weights: m.weights,
            support: m.support.into_iter().map(|h| h.density).collect(),
            atom_weights: m.atom_weights,
            norm_bounds,
        }
    }
}

impl DiscreteDualMeasure {
    pub fn new(space: &AtomicMeasureSpace, support: Vec<DualFunctional>, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return input("a discrete measure needs a nonempty support");
        }
        if support.len() != weights.len() {
            return input(format!("{} support points but {} weights", support.len(), weights.len()));
        }
        if let Some(h) = support.iter().find(|h| h.density.len() != space.len()) {
            return input(format!("support density of length {} on {} atoms", h.density.len(), space.len()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return input(format!("measure weight {w} is negative or non-finite"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return input(format!("measure weights sum to {total}, not 1"));
        }
        Ok(Self { atom_weights: space.weights().to_vec(), weights, support })
    }

    pub fn dirac(space: &AtomicMeasureSpace, h: DualFunctional) -> Result<Self> {
        Self::new(space, vec![h], vec![1.0])
    }

    /// Uniform weights over `support`.
    pub fn uniform(space: &AtomicMeasureSpace, support: Vec<DualFunctional>) -> Result<Self> {
        let n = support.len().max(1);
        Self::new(space, support, vec![1.0 / n as f64; n])
    }

    pub fn atom_weights(&self) -> &[f64] {
        &self.atom_weights
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn support(&self) -> &[DualFunctional] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// `sum_j w_j <|x|^p, h_j>^{q/p}`.
    pub fn moment(&self, x: &[f64], p: f64, q: f64) -> f64 {
        let xp: Vec<f64> = x.iter().map(|v| v.abs().powf(p)).collect();
        self.weights
            .iter()
            .zip(&self.support)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, h)| {
                let pair: f64 = self
                    .atom_weights
                    .iter()
                    .zip(&xp)
                    .zip(&h.density)
                    .map(|((m, a), b)| m * a * b)
                    .sum();
                w * pair.powf(q / p)
            })
            .sum()
    }

    /// `(sum_j w_j <|x|^p, h_j>^{q/p})^{1/q}`.
    pub fn seminorm(&self, x: &[f64], p: f64, q: f64) -> f64 {
        self.moment(x, p, q).powf(1.0 / q)
    }

    /// `lambda * self + (1 - lambda) * other`, merging identical densities.
    pub fn mixture(&self, other: &Self, lambda: f64) -> Result<Self> {
        if self.atom_weights != other.atom_weights {
            return input("cannot mix measures on different spaces");
        }
        let mut support: Vec<DualFunctional> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let parts = self
            .support
            .iter()
            .zip(self.weights.iter().map(|w| w * lambda))
            .chain(other.support.iter().zip(other.weights.iter().map(|w| w * (1.0 - lambda))));
        for (h, w) in parts {
            match support.iter().position(|g| g.density == h.density) {
                Some(i) => weights[i] += w,
                None => {
                    support.push(h.clone());
                    weights.push(w);
                }
            }
        }
        let space = AtomicMeasureSpace::new(self.atom_weights.clone())?;
        Self::new(&space, support, weights)
    }

    /// Whether the seminorm vanishes only at zero: every atom is charged by some
    /// support density of positive weight.
    pub fn is_definite(&self) -> bool {
        (0..self.atom_weights.len()).all(|i| {
            self.weights
                .iter()
                .zip(&self.support)
                .any(|(w, h)| *w > 0.0 && h.density[i] > 0.0)
        })
    }
}
