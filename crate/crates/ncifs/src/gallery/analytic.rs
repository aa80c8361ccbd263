use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::Aabb;
use crate::level::{Level, MoebiusRange};
use crate::system::{LevelGenerator, LevelSource, System};

const EXACT_LIMIT: f64 = 4.0e15;

#[derive(Debug)]
struct ContinuedFraction {
    log_base: f64,
    alpha: f64,
}

impl LevelGenerator for ContinuedFraction {
    fn level(&self, n: usize) -> Arc<Level> {
        let lo = self.alpha.powi(n as i32) * self.log_base;
        let hi = lo * self.alpha;
        let range = if hi.exp() < EXACT_LIMIT {
            let first = (lo.exp() - 1e-9).ceil() as u64;
            let end = (hi.exp() - 1e-9).ceil() as u64;
            MoebiusRange::exact(first, end.max(first + 1) - 1)
        } else {
            MoebiusRange::from_logs(lo, hi)
        };
        Arc::new(Level::moebius_range(range.expect("continued-fraction range is valid")))
    }
}

/// Digits `j` of level `n` range over `K^{α^n} ≤ j < K^{α^{n+1}}`.
pub fn build_continued_fraction(cf_base: u64, alpha: f64) -> Result<System> {
    if cf_base < 2 || !(alpha > 1.0) {
        return Err(Error::InvalidParameter("continued-fraction system needs base ≥ 2 and alpha > 1".into()));
    }
    let log_base = (cf_base as f64).ln();
    // keep the running partition sums below 1e300
    let mut horizon = 1usize;
    while alpha.powi(horizon as i32 + 3) * log_base / (alpha - 1.0) < 1e300 {
        horizon += 1;
    }
    let gen = ContinuedFraction { log_base, alpha };
    let eta = gen.level(1).log_c_max().exp();
    Ok(System::new(Aabb::unit(1), LevelSource::Generator(Arc::new(gen)), horizon, Some(eta), Some(4.0))?
        .with_expected("hd", 1.0 / (1.0 + alpha))
        .with_expected("bowen", 0.5))
}

#[derive(Debug)]
struct JordanRams {
    log_lambda: f64,
    offset: usize,
}

impl LevelGenerator for JordanRams {
    fn level(&self, i: usize) -> Arc<Level> {
        let n = (i + self.offset) as f64;
        let (lo, hi) = (n * self.log_lambda, (n + 1.0) * self.log_lambda);
        let range = if hi.exp() < EXACT_LIMIT {
            let first = lo.exp().floor() as u64 + 1;
            let last = hi.exp().ceil() as u64 - 1;
            MoebiusRange::exact(first, last)
        } else {
            MoebiusRange::from_logs(lo, hi)
        };
        Arc::new(Level::moebius_range(range.expect("Jordan-Rams range is valid")))
    }
}

/// Digits of level `n` range over the integers strictly between `λ^n` and
/// `λ^{n+1}`; levels start at the first `n` with `λ^n(λ − 1) > 1`.
pub fn build_jordan_rams(lambda: f64) -> Result<System> {
    if !(lambda > 1.0) {
        return Err(Error::InvalidParameter("Jordan-Rams system needs lambda > 1".into()));
    }
    let log_lambda = lambda.ln();
    let mut n0 = 1usize;
    while lambda.powi(n0 as i32) * (lambda - 1.0) <= 1.0 {
        n0 += 1;
    }
    let offset = n0 - 1;
    let horizon = ((690.0 / log_lambda).floor() as usize).saturating_sub(n0).max(1);
    let gen = JordanRams { log_lambda, offset };
    let eta = gen.level(1).log_c_max().exp();
    Ok(System::new(Aabb::unit(1), LevelSource::Generator(Arc::new(gen)), horizon, Some(eta), Some(4.0))?
        .with_expected("a", log_lambda)
        .with_expected("b", 2.0 * log_lambda)
        .with_expected("hd", 0.5))
}
