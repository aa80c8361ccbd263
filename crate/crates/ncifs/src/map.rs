//! Single conformal contractions and exact composition in dimension one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Isometry};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MapKind {
    /// `x ↦ scale · R x + translation` with `R` a signed permutation.
    Similarity { scale: f64, isometry: Isometry, translation: Vec<f64> },
    /// `x ↦ 1 / (index + x)` on a subinterval of `[0, ∞)`.
    Moebius { index: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformalContraction {
    pub kind: MapKind,
    pub deriv_sup: f64,
    pub deriv_inf: f64,
    pub image: Aabb,
}

impl ConformalContraction {
    pub fn similarity(scale: f64, isometry: Isometry, translation: Vec<f64>, domain: &Aabb) -> Result<Self> {
        let d = domain.dim();
        if !(scale > 0.0 && scale < 1.0) {
            return Err(Error::InvalidParameter(format!("similarity scale {scale} outside (0, 1)")));
        }
        if translation.len() != d {
            return Err(Error::InvalidParameter("translation dimension mismatch".into()));
        }
        isometry.validate(d)?;
        let rotated = isometry.apply_box(domain);
        let image = Aabb {
            min: rotated.min.iter().zip(&translation).map(|(m, b)| scale * m + b).collect(),
            max: rotated.max.iter().zip(&translation).map(|(m, b)| scale * m + b).collect(),
        };
        Ok(Self { kind: MapKind::Similarity { scale, isometry, translation }, deriv_sup: scale, deriv_inf: scale, image })
    }

    /// One-dimensional similarity `x ↦ scale·x + shift`.
    pub fn affine_1d(scale: f64, shift: f64, domain: &Aabb) -> Result<Self> {
        Self::similarity(scale, Isometry::identity(1), vec![shift], domain)
    }

    pub fn moebius(index: u64, domain: &Aabb) -> Result<Self> {
        if index < 2 {
            return Err(Error::InvalidParameter(format!("moebius index {index} must be at least 2")));
        }
        if domain.dim() != 1 || domain.min[0] < 0.0 {
            return Err(Error::InvalidParameter("moebius maps need a one-dimensional domain in [0, ∞)".into()));
        }
        let j = index as f64;
        let (lo, hi) = (domain.min[0], domain.max[0]);
        Ok(Self {
            kind: MapKind::Moebius { index },
            deriv_sup: (j + lo).powi(-2),
            deriv_inf: (j + hi).powi(-2),
            image: Aabb::interval(1.0 / (j + hi), 1.0 / (j + lo)),
        })
    }

    /// `self ∘ other` for two similarities of the same domain.
    pub fn compose_similarity(&self, other: &ConformalContraction, domain: &Aabb) -> Result<Self> {
        match (&self.kind, &other.kind) {
            (MapKind::Similarity { scale: s1, isometry: r1, .. }, MapKind::Similarity { scale: s2, isometry: r2, translation: b2 }) => {
                let translation = self.apply(b2);
                Self::similarity(s1 * s2, r1.compose(r2), translation, domain)
            }
            _ => Err(Error::InvalidParameter("compose_similarity needs two similarities".into())),
        }
    }

    pub fn is_similarity(&self) -> bool {
        matches!(self.kind, MapKind::Similarity { .. })
    }

    pub fn log_deriv_sup(&self) -> f64 {
        self.deriv_sup.ln()
    }

    pub fn log_deriv_inf(&self) -> f64 {
        self.deriv_inf.ln()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            MapKind::Similarity { scale, isometry, translation } => isometry
                .apply(x)
                .iter()
                .zip(translation)
                .map(|(y, b)| scale * y + b)
                .collect(),
            MapKind::Moebius { index } => vec![1.0 / (*index as f64 + x[0])],
        }
    }

    /// Image of an arbitrary sub-box of the domain.
    pub fn apply_box(&self, b: &Aabb) -> Aabb {
        match &self.kind {
            MapKind::Similarity { scale, isometry, translation } => {
                let r = isometry.apply_box(b);
                Aabb {
                    min: r.min.iter().zip(translation).map(|(m, t)| scale * m + t).collect(),
                    max: r.max.iter().zip(translation).map(|(m, t)| scale * m + t).collect(),
                }
            }
            MapKind::Moebius { index } => {
                let j = *index as f64;
                Aabb::interval(1.0 / (j + b.max[0]), 1.0 / (j + b.min[0]))
            }
        }
    }

    /// Signed derivative in dimension one.
    pub fn derivative_1d(&self, x: f64) -> f64 {
        match &self.kind {
            MapKind::Similarity { scale, isometry, .. } => {
                if isometry.flip[0] {
                    -scale
                } else {
                    *scale
                }
            }
            MapKind::Moebius { index } => -(*index as f64 + x).powi(-2),
        }
    }

    /// Projective matrix in dimension one.
    pub fn mobius_matrix(&self) -> Mobius {
        match &self.kind {
            MapKind::Similarity { scale, isometry, translation } => {
                let sign = if isometry.flip[0] { -1.0 } else { 1.0 };
                Mobius::from_coefficients([sign * scale, translation[0], 0.0, 1.0], scale.ln())
            }
            MapKind::Moebius { index } => Mobius::from_coefficients([0.0, 1.0, 1.0, *index as f64], 0.0),
        }
    }
}

/// Normalised real Möbius transformation `x ↦ (a x + b)/(c x + d)`.
///
/// The stored coefficients are rescaled to unit max-norm after every product.
/// `log_det_scaled` is `ln|det M| − 2 ln s` where `M = s · [a b; c d]` is the
/// unnormalised product, so `ln|M'(x)| = log_det_scaled − 2 ln|c x + d|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mobius {
    pub coeff: [f64; 4],
    pub log_det_scaled: f64,
}

impl Mobius {
    pub fn identity() -> Self {
        Self { coeff: [1.0, 0.0, 0.0, 1.0], log_det_scaled: 0.0 }
    }

    fn from_coefficients(coeff: [f64; 4], log_abs_det: f64) -> Self {
        Self { coeff, log_det_scaled: log_abs_det }.normalised()
    }

    fn normalised(mut self) -> Self {
        let f = self.coeff.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for v in &mut self.coeff {
            *v /= f;
        }
        self.log_det_scaled -= 2.0 * f.ln();
        self
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Mobius) -> Mobius {
        let [a, b, c, d] = self.coeff;
        let [e, f, g, h] = other.coeff;
        Mobius {
            coeff: [a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h],
            log_det_scaled: self.log_det_scaled + other.log_det_scaled,
        }
        .normalised()
    }

    pub fn apply(&self, x: f64) -> f64 {
        let [a, b, c, d] = self.coeff;
        (a * x + b) / (c * x + d)
    }

    pub fn log_abs_derivative(&self, x: f64) -> f64 {
        let [_, _, c, d] = self.coeff;
        self.log_det_scaled - 2.0 * (c * x + d).abs().ln()
    }

    /// `(ln sup |M'|, ln inf |M'|)` over `[lo, hi]`; the denominator is affine
    /// and nonvanishing there, so the extrema sit at the endpoints.
    pub fn log_deriv_extrema(&self, lo: f64, hi: f64) -> (f64, f64) {
        let a = self.log_abs_derivative(lo);
        let b = self.log_abs_derivative(hi);
        (a.max(b), a.min(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moebius_derivative_bounds() {
        let x = Aabb::unit(1);
        let m = ConformalContraction::moebius(2, &x).unwrap();
        assert_eq!(m.deriv_sup, 0.25);
        assert!((m.deriv_inf - 1.0 / 9.0).abs() < 1e-16);
        assert_eq!(m.image, Aabb::interval(1.0 / 3.0, 0.5));
    }

    #[test]
    fn composed_moebius_matches_chain_rule() {
        let x = Aabb::unit(1);
        let m2 = ConformalContraction::moebius(2, &x).unwrap();
        let m3 = ConformalContraction::moebius(3, &x).unwrap();
        let comp = m2.mobius_matrix().compose(&m3.mobius_matrix());
        for i in 0..=10 {
            let p = i as f64 / 10.0;
            let chain = m2.derivative_1d(m3.apply(&[p])[0]) * m3.derivative_1d(p);
            assert!((comp.log_abs_derivative(p) - chain.abs().ln()).abs() < 1e-13);
            assert!((comp.apply(p) - 1.0 / (2.0 + 1.0 / (3.0 + p))).abs() < 1e-15);
        }
    }

    #[test]
    fn similarity_matrix_has_scale_derivative() {
        let x = Aabb::unit(1);
        let s = ConformalContraction::affine_1d(0.25, 0.5, &x).unwrap();
        let m = s.mobius_matrix();
        assert!((m.log_abs_derivative(0.3) - 0.25f64.ln()).abs() < 1e-15);
        assert!((m.apply(0.4) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        let x = Aabb::unit(1);
        assert!(ConformalContraction::moebius(1, &x).is_err());
        assert!(ConformalContraction::affine_1d(1.2, 0.0, &x).is_err());
    }
}
