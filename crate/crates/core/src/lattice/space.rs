use serde::{Deserialize, Serialize};

use crate::error::{input, Result};

/// A finite measure space: atoms `0..n` with strictly positive masses and an
/// optional partition of the atoms into blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpace", into = "RawSpace")]
pub struct AtomicMeasureSpace {
    weights: Vec<f64>,
    blocks: Option<Vec<Vec<usize>>>,
}

#[derive(Serialize, Deserialize)]
struct RawSpace {
    weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    blocks: Option<Vec<Vec<usize>>>,
}

impl TryFrom<RawSpace> for AtomicMeasureSpace {
    type Error = crate::Error;

    fn try_from(raw: RawSpace) -> Result<Self> {
        match raw.blocks {
            Some(b) => Self::with_blocks(raw.weights, b),
            None => Self::new(raw.weights),
        }
    }
}

impl From<AtomicMeasureSpace> for RawSpace {
    fn from(s: AtomicMeasureSpace) -> Self {
        RawSpace { weights: s.weights, blocks: s.blocks }
    }
}

impl AtomicMeasureSpace {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return input("a measure space needs at least one atom");
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
            return input(format!("atom {i} has non-positive or non-finite mass {w}"));
        }
        Ok(Self { weights, blocks: None })
    }

    /// `n` atoms of mass one (counting measure).
    pub fn counting(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n])
    }

    pub fn uniform(n: usize, mass: f64) -> Result<Self> {
        Self::new(vec![mass; n])
    }

    pub fn with_blocks(weights: Vec<f64>, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut space = Self::new(weights)?;
        let n = space.weights.len();
        let mut seen = vec![false; n];
        for (k, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return input(format!("block {k} is empty"));
            }
            for &i in block {
                if i >= n {
                    return input(format!("block {k} references atom {i} out of {n}"));
                }
                if seen[i] {
                    return input(format!("atom {i} appears in more than one block"));
                }
                seen[i] = true;
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return input(format!("atom {i} is not covered by the block partition"));
        }
        space.blocks = Some(blocks);
        Ok(space)
    }

    /// `blocks` consecutive blocks of `per_block` atoms, each atom of mass `mass`.
    pub fn uniform_blocks(blocks: usize, per_block: usize, mass: f64) -> Result<Self> {
        let partition = (0..blocks)
            .map(|k| (k * per_block..(k + 1) * per_block).collect())
            .collect();
        Self::with_blocks(vec![mass; blocks * per_block], partition)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn blocks(&self) -> Option<&[Vec<usize>]> {
        self.blocks.as_deref()
    }

    pub fn block_mass(&self, k: usize) -> Option<f64> {
        self.blocks
            .as_ref()
            .and_then(|b| b.get(k))
            .map(|b| b.iter().map(|&i| self.weights[i]).sum())
    }

    /// Pairing `<f, g> = sum_i mu_i f_i g_i`.
    pub fn pairing(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights.iter().zip(f).zip(g).map(|((w, a), b)| w * a * b).sum()
    }

    /// Integral of `f` over the whole space.
    pub fn integral(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, a)| w * a).sum()
    }

    pub(crate) fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.len() {
            return input(format!("vector of length {} on a space of {} atoms", f.len(), self.len()));
        }
        Ok(())
    }

    /// Product measure space; atoms are ordered row-major over the factors.
    pub fn product(factors: &[AtomicMeasureSpace]) -> Result<Self> {
        let mut weights = vec![1.0];
        for f in factors {
            weights = weights
                .iter()
                .flat_map(|a| f.weights.iter().map(move |b| a * b))
                .collect();
        }
        Self::new(weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_partitions() {
        assert!(AtomicMeasureSpace::with_blocks(vec![1.0; 3], vec![vec![0, 1]]).is_err());
        assert!(AtomicMeasureSpace::with_blocks(vec![1.0; 3], vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(AtomicMeasureSpace::with_blocks(vec![1.0; 3], vec![vec![0, 1], vec![2, 3]]).is_err());
        assert!(AtomicMeasureSpace::with_blocks(vec![1.0; 3], vec![vec![0, 2], vec![1]]).is_ok());
    }

    #[test]
    fn rejects_nonpositive_mass() {
        assert!(AtomicMeasureSpace::new(vec![1.0, 0.0]).is_err());
        assert!(AtomicMeasureSpace::new(vec![]).is_err());
        assert!(AtomicMeasureSpace::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn uniform_blocks_have_requested_mass() {
        let s = AtomicMeasureSpace::uniform_blocks(3, 4, 0.25).unwrap();
        assert_eq!(s.len(), 12);
        for k in 0..3 {
            assert!((s.block_mass(k).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn json_round_trip_keeps_validation() {
        let s = AtomicMeasureSpace::uniform_blocks(2, 2, 0.5).unwrap();
        let js = serde_json::to_string(&s).unwrap();
        assert_eq!(js, r#"{"weights":[0.5,0.5,0.5,0.5],"blocks":[[0,1],[2,3]]}"#);
        let back: AtomicMeasureSpace = serde_json::from_str(&js).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<AtomicMeasureSpace>(r#"{"weights":[1,-1]}"#).is_err());
    }

    #[test]
    fn product_weights_multiply() {
        let a = AtomicMeasureSpace::new(vec![1.0, 2.0]).unwrap();
        let b = AtomicMeasureSpace::new(vec![3.0, 5.0]).unwrap();
        let p = AtomicMeasureSpace::product(&[a, b]).unwrap();
        assert_eq!(p.weights(), &[3.0, 5.0, 6.0, 10.0]);
    }
}
