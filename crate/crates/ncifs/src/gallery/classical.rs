use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Isometry};
use crate::level::Level;
use crate::map::ConformalContraction;
use crate::system::{LevelSource, System};

pub fn cantor() -> System {
    custom_similarity(&[1.0 / 3.0, 1.0 / 3.0]).expect("cantor scales fit").with_expected("bowen", 2f64.ln() / 3f64.ln())
}

/// The `2^d` half-size subcubes of `[0,1]^d`.
pub fn cube_subdivision(dim: usize) -> Result<System> {
    if dim == 0 || dim > 12 {
        return Err(Error::InvalidParameter(format!("cube subdivision dimension {dim} outside 1..=12")));
    }
    let x = Aabb::unit(dim);
    let maps = (0..1usize << dim)
        .map(|mask| {
            let shift = (0..dim).map(|i| if mask >> i & 1 == 1 { 0.5 } else { 0.0 }).collect();
            ConformalContraction::similarity(0.5, Isometry::identity(dim), shift, &x)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(System::autonomous(x, Level::explicit(maps)?)?.with_expected("bowen", dim as f64))
}

/// Maps of the given scales on `[0,1]`, first left-anchored, last
/// right-anchored, equal gaps in between.
pub fn custom_similarity(scales: &[f64]) -> Result<System> {
    if scales.is_empty() {
        return Err(Error::InvalidParameter("need at least one scale".into()));
    }
    let total: f64 = scales.iter().sum();
    if total > 1.0 + 1e-12 {
        let mut acc = 0.0;
        let second = scales.iter().position(|s| {
            acc += s;
            acc > 1.0 + 1e-12
        });
        return Err(Error::OscViolation { level: 1, first: 0, second: second.unwrap_or(1) as u64 });
    }
    let x = Aabb::unit(1);
    let gap = if scales.len() > 1 { (1.0 - total).max(0.0) / (scales.len() - 1) as f64 } else { 0.0 };
    let mut at = 0.0;
    let mut maps = Vec::with_capacity(scales.len());
    for &s in scales {
        maps.push(ConformalContraction::affine_1d(s, at, &x)?);
        at += s + gap;
    }
    System::autonomous(x, Level::explicit(maps)?)
}

/// Cantor maps, except at square levels `n = k²` where both scales are
/// `(s/2)^{1/h0}`, `h0 = ln 2/ln 3`; so `Z_n(h0) = s^{⌊√n⌋}`.
pub fn cantor_family(s: f64, horizon: usize) -> Result<System> {
    let h0 = 2f64.ln() / 3f64.ln();
    let r = (s / 2.0).powf(1.0 / h0);
    if !(s > 0.0 && r < 0.5) {
        return Err(Error::InvalidParameter(format!("cantor family needs 0 < s < {:.4}", 2.0 * 0.5f64.powf(h0))));
    }
    let x = Aabb::unit(1);
    let pair = |r: f64| -> Result<Arc<Level>> {
        Ok(Arc::new(Level::explicit(vec![ConformalContraction::affine_1d(r, 0.0, &x)?, ConformalContraction::affine_1d(r, 1.0 - r, &x)?])?))
    };
    let (plain, bumped) = (pair(1.0 / 3.0)?, pair(r)?);
    let levels: Vec<Arc<Level>> = (1..=horizon)
        .map(|n| {
            let k = (n as f64).sqrt().round() as usize;
            if k * k == n {
                bumped.clone()
            } else {
                plain.clone()
            }
        })
        .collect();
    Ok(System::new(x, LevelSource::List(levels.into()), horizon, None, None)?.with_expected("bowen", h0))
}

/// Autonomous countable system with scales `first · ratio^i`.
pub fn geometric(first: f64, ratio: f64) -> Result<System> {
    if !(first > 0.0 && ratio > 0.0 && ratio < 1.0 && first / (1.0 - ratio) <= 1.0 + 1e-12) {
        return Err(Error::InvalidParameter("geometric system needs 0 < ratio < 1 and first/(1 − ratio) ≤ 1".into()));
    }
    System::autonomous(Aabb::unit(1), Level::geometric(first.ln(), ratio.ln(), None)?)
}
