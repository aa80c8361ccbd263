//! Axis-aligned boxes and the isometries that preserve them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed axis-aligned box `[min_1, max_1] × … × [min_d, max_d]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Aabb {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<Self> {
        if min.is_empty() || min.len() != max.len() {
            return Err(Error::InvalidParameter("box corners must have equal, positive dimension".into()));
        }
        if min.iter().zip(&max).any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
            return Err(Error::InvalidParameter("box must satisfy min < max in every coordinate".into()));
        }
        Ok(Self { min, max })
    }

    pub fn unit(dim: usize) -> Self {
        Self { min: vec![0.0; dim], max: vec![1.0; dim] }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self { min: vec![lo], max: vec![hi] }
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn side(&self, i: usize) -> f64 {
        self.max[i] - self.min[i]
    }

    /// Euclidean diameter (length of the main diagonal).
    pub fn diam(&self) -> f64 {
        (0..self.dim()).map(|i| self.side(i).powi(2)).sum::<f64>().sqrt()
    }

    pub fn center(&self) -> Vec<f64> {
        self.min.iter().zip(&self.max).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn contains_point(&self, p: &[f64], tol: f64) -> bool {
        p.iter().enumerate().all(|(i, x)| *x >= self.min[i] - tol && *x <= self.max[i] + tol)
    }

    pub fn contains_box(&self, other: &Aabb, tol: f64) -> bool {
        (0..self.dim()).all(|i| other.min[i] >= self.min[i] - tol && other.max[i] <= self.max[i] + tol)
    }

    /// True when the open interiors intersect.
    pub fn interiors_overlap(&self, other: &Aabb) -> bool {
        (0..self.dim()).all(|i| self.min[i] < other.max[i] && other.min[i] < self.max[i])
    }

    pub fn hull(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.iter().zip(&other.min).map(|(a, b)| a.min(*b)).collect(),
            max: self.max.iter().zip(&other.max).map(|(a, b)| a.max(*b)).collect(),
        }
    }
}

/// Signed permutation `x ↦ (±x_{perm[0]}, …, ±x_{perm[d-1]})`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Isometry {
    pub perm: Vec<usize>,
    pub flip: Vec<bool>,
}

impl Isometry {
    pub fn identity(dim: usize) -> Self {
        Self { perm: (0..dim).collect(), flip: vec![false; dim] }
    }

    pub fn reflection(dim: usize, axis: usize) -> Self {
        let mut iso = Self::identity(dim);
        iso.flip[axis] = true;
        iso
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.perm.len() != dim || self.flip.len() != dim {
            return Err(Error::InvalidParameter("isometry dimension mismatch".into()));
        }
        let mut seen = vec![false; dim];
        for &p in &self.perm {
            if p >= dim || seen[p] {
                return Err(Error::InvalidParameter("isometry perm is not a permutation".into()));
            }
            seen[p] = true;
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p) && self.flip.iter().all(|f| !f)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        Isometry {
            perm: self.perm.iter().map(|&p| other.perm[p]).collect(),
            flip: self.perm.iter().zip(&self.flip).map(|(&p, &f)| f ^ other.flip[p]).collect(),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.perm
            .iter()
            .zip(&self.flip)
            .map(|(&p, &f)| if f { -x[p] } else { x[p] })
            .collect()
    }

    pub fn apply_box(&self, b: &Aabb) -> Aabb {
        let mut min = Vec::with_capacity(b.dim());
        let mut max = Vec::with_capacity(b.dim());
        for (&p, &f) in self.perm.iter().zip(&self.flip) {
            if f {
                min.push(-b.max[p]);
                max.push(-b.min[p]);
            } else {
                min.push(b.min[p]);
                max.push(b.max[p]);
            }
        }
        Aabb { min, max }
    }

    /// Dense matrix form, row-major.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let d = self.perm.len();
        let mut m = vec![vec![0.0; d]; d];
        for i in 0..d {
            m[i][self.perm[i]] = if self.flip[i] { -1.0 } else { 1.0 };
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_is_strict() {
        let a = Aabb::interval(0.0, 0.5);
        let b = Aabb::interval(0.5, 1.0);
        assert!(!a.interiors_overlap(&b));
        let c = Aabb::interval(0.2, 0.7);
        assert!(a.interiors_overlap(&c));
    }

    #[test]
    fn rotation_maps_boxes() {
        let rot = Isometry { perm: vec![1, 0], flip: vec![true, false] };
        let b = Aabb::new(vec![0.0, 1.0], vec![2.0, 4.0]).unwrap();
        let img = rot.apply_box(&b);
        assert_eq!(img.min, vec![-4.0, 0.0]);
        assert_eq!(img.max, vec![-1.0, 2.0]);
        assert_eq!(rot.apply(&[2.0, 4.0]), vec![-4.0, 2.0]);
    }

    #[test]
    fn diag_diam() {
        assert!((Aabb::unit(2).diam() - 2f64.sqrt()).abs() < 1e-15);
    }
}
