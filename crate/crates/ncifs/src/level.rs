//! One time step of a system: an explicit list of maps or an analytic family.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Aabb;
use crate::logsum::{log_add_exp, log_power_integral, log_sub_exp, log_sum_exp, ln_one_minus_exp};
use crate::map::ConformalContraction;

/// Index ranges up to this size are summed term by term.
pub const DIRECT_SUM_LIMIT: u64 = 4096;

/// Largest integer below which `f64` represents every integer exactly.
const EXACT_INT: f64 = 9_007_199_254_740_992.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplicitLevel {
    maps: Vec<ConformalContraction>,
    log_c_min: f64,
    log_c_max: f64,
}

impl ExplicitLevel {
    pub fn maps(&self) -> &[ConformalContraction] {
        &self.maps
    }
}

/// Möbius maps `x ↦ 1/(j+x)` on `[0,1]` for every integer `j` in a range.
///
/// Endpoints are carried as `ln(first)` and `ln(last + 1)` so that ranges like
/// `2^{2^{900}}` stay representable; exact integers are kept when they fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoebiusRange {
    pub log_first: f64,
    pub log_end: f64,
    pub first: Option<u64>,
    pub last: Option<u64>,
}

impl MoebiusRange {
    pub fn exact(first: u64, last: u64) -> Result<Self> {
        if first < 2 || last < first {
            return Err(Error::InvalidParameter(format!("moebius range [{first}, {last}] needs 2 ≤ first ≤ last")));
        }
        Ok(Self { log_first: (first as f64).ln(), log_end: ((last + 1) as f64).ln(), first: Some(first), last: Some(last) })
    }

    /// Range given only on the log scale; exact endpoints are recovered when small.
    pub fn from_logs(log_first: f64, log_end: f64) -> Result<Self> {
        if !(log_first >= 2f64.ln() - 1e-12 && log_end > log_first && log_end.is_finite()) {
            return Err(Error::InvalidParameter("moebius log range must satisfy ln 2 ≤ log_first < log_end < ∞".into()));
        }
        if log_end.exp() < EXACT_INT / 2.0 {
            let first = log_first.exp().round() as u64;
            let end = log_end.exp().round() as u64;
            return Self::exact(first, end - 1);
        }
        Ok(Self { log_first, log_end, first: None, last: None })
    }

    fn exact_count(&self) -> Option<u64> {
        match (self.first, self.last) {
            (Some(a), Some(b)) => Some(b - a + 1),
            _ => None,
        }
    }

    fn log_last(&self) -> f64 {
        match self.last {
            Some(l) => (l as f64).ln(),
            None => self.log_end + ln_one_minus_exp(-self.log_end),
        }
    }

    pub fn log_count(&self) -> f64 {
        match self.exact_count() {
            Some(c) => (c as f64).ln(),
            None => log_sub_exp(self.log_end, self.log_first),
        }
    }

    /// Two-sided bounds on `ln Σ_j j^{-2t}`.
    pub fn log_sum_bounds(&self, t: f64) -> (f64, f64) {
        if let (Some(a), Some(b)) = (self.first, self.last) {
            if b - a < DIRECT_SUM_LIMIT {
                let v = if t == 0.0 {
                    ((b - a + 1) as f64).ln()
                } else {
                    log_sum_exp((a..=b).map(|j| -2.0 * t * (j as f64).ln()))
                };
                return (v, v);
            }
        }
        if t == 0.0 {
            let c = self.log_count();
            return (c, c);
        }
        let a = self.log_first;
        let lower = log_power_integral(a, self.log_end, t);
        let upper = log_add_exp(-2.0 * t * a, log_power_integral(a, self.log_last(), t));
        (lower.min(upper), upper)
    }

    /// The first `k` indices (at least one, at most all).
    pub fn prefix(&self, k: f64) -> Self {
        if let (Some(a), Some(c)) = (self.first, self.exact_count()) {
            let k = k.max(1.0).min(c as f64) as u64;
            return Self::exact(a, a + k - 1).expect("prefix of a valid range");
        }
        let log_end = log_add_exp(self.log_first, k.max(1.0).ln()).min(self.log_end);
        Self::from_logs(self.log_first, log_end).unwrap_or_else(|_| self.clone())
    }

    /// Indices `j` with `j^{-2} ≥ e^{log_eps}` (always keeps the first index).
    pub fn keep_above(&self, log_eps: f64) -> Self {
        let log_jmax = -0.5 * log_eps;
        if let (Some(a), Some(b)) = (self.first, self.last) {
            if log_jmax >= (b as f64).ln() {
                return self.clone();
            }
            let mut jmax = log_jmax.exp().floor() as u64;
            while jmax > a && -2.0 * (jmax as f64).ln() < log_eps {
                jmax -= 1;
            }
            while jmax < b && -2.0 * ((jmax + 1) as f64).ln() >= log_eps {
                jmax += 1;
            }
            return Self::exact(a, jmax.max(a)).expect("sub-range of a valid range");
        }
        if log_jmax >= self.log_last() {
            return self.clone();
        }
        let end = log_add_exp(log_jmax, 0.0).max(log_add_exp(self.log_first, 0.0));
        Self::from_logs(self.log_first, end).unwrap_or_else(|_| self.clone())
    }
}

/// Closed-form families on a one-dimensional domain `[a, a + L]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    /// `count` maps `x ↦ a + i·step + scale·(x − a)`, all of the same scale.
    Uniform { log_count: f64, count: Option<u64>, log_scale: f64, log_step: f64 },
    /// Scales `first · ratio^i`, laid out contiguously from the left end.
    Geometric { log_first: f64, log_ratio: f64, count: Option<u64> },
    MoebiusRange(MoebiusRange),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Level {
    Explicit(ExplicitLevel),
    Analytic(Family),
}

impl Level {
    pub fn explicit(maps: Vec<ConformalContraction>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::InvalidParameter("a level needs at least one map".into()));
        }
        let log_c_max = maps.iter().map(|m| m.log_deriv_sup()).fold(f64::NEG_INFINITY, f64::max);
        let log_c_min = maps.iter().map(|m| m.log_deriv_sup()).fold(f64::INFINITY, f64::min);
        Ok(Level::Explicit(ExplicitLevel { maps, log_c_min, log_c_max }))
    }

    /// `count` equally spaced maps of scale `e^{log_scale}` with spacing `e^{log_step}`.
    pub fn uniform(log_count: f64, log_scale: f64, log_step: f64) -> Result<Self> {
        if !(log_count >= 0.0 && log_count.is_finite() && log_scale < 0.0 && log_step >= log_scale - 1e-12) {
            return Err(Error::InvalidParameter("uniform family needs count ≥ 1, scale < 1 and step ≥ scale".into()));
        }
        let count = if log_count < 53.0 * std::f64::consts::LN_2 {
            Some(log_count.exp().round() as u64)
        } else {
            None
        };
        let log_count = count.map(|c| (c as f64).ln()).unwrap_or(log_count);
        Ok(Level::Analytic(Family::Uniform { log_count, count, log_scale, log_step }))
    }

    pub fn geometric(log_first: f64, log_ratio: f64, count: Option<u64>) -> Result<Self> {
        if !(log_first < 0.0 && log_ratio < 0.0) || count == Some(0) {
            return Err(Error::InvalidParameter("geometric family needs first < 1, ratio < 1, count ≥ 1".into()));
        }
        Ok(Level::Analytic(Family::Geometric { log_first, log_ratio, count }))
    }

    pub fn moebius_range(range: MoebiusRange) -> Self {
        Level::Analytic(Family::MoebiusRange(range))
    }

    pub fn is_explicit(&self) -> bool {
        matches!(self, Level::Explicit(_))
    }

    pub fn is_similarity(&self) -> bool {
        match self {
            Level::Explicit(e) => e.maps.iter().all(|m| m.is_similarity()),
            Level::Analytic(Family::MoebiusRange(_)) => false,
            Level::Analytic(_) => true,
        }
    }

    /// Exact number of maps when it fits in a `u64`; `None` for huge or infinite levels.
    pub fn count(&self) -> Option<u64> {
        match self {
            Level::Explicit(e) => Some(e.maps.len() as u64),
            Level::Analytic(Family::Uniform { count, .. }) => *count,
            Level::Analytic(Family::Geometric { count, .. }) => *count,
            Level::Analytic(Family::MoebiusRange(r)) => r.exact_count(),
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Level::Analytic(Family::Geometric { count: None, .. }))
    }

    /// `ln #I^(n)`; `+∞` for countable alphabets.
    pub fn log_count(&self) -> f64 {
        match self {
            Level::Explicit(e) => (e.maps.len() as f64).ln(),
            Level::Analytic(Family::Uniform { log_count, .. }) => *log_count,
            Level::Analytic(Family::Geometric { count, .. }) => count.map_or(f64::INFINITY, |c| (c as f64).ln()),
            Level::Analytic(Family::MoebiusRange(r)) => r.log_count(),
        }
    }

    /// `ln c̄_n`, the largest derivative norm.
    pub fn log_c_max(&self) -> f64 {
        match self {
            Level::Explicit(e) => e.log_c_max,
            Level::Analytic(Family::Uniform { log_scale, .. }) => *log_scale,
            Level::Analytic(Family::Geometric { log_first, .. }) => *log_first,
            Level::Analytic(Family::MoebiusRange(r)) => -2.0 * r.log_first,
        }
    }

    /// `ln c̲_n`, the smallest derivative norm (`−∞` for countable alphabets).
    pub fn log_c_min(&self) -> f64 {
        match self {
            Level::Explicit(e) => e.log_c_min,
            Level::Analytic(Family::Uniform { log_scale, .. }) => *log_scale,
            Level::Analytic(Family::Geometric { log_first, log_ratio, count }) => match count {
                Some(c) => log_first + (*c as f64 - 1.0) * log_ratio,
                None => f64::NEG_INFINITY,
            },
            Level::Analytic(Family::MoebiusRange(r)) => -2.0 * r.log_last(),
        }
    }

    /// `ln ρ_n = ln c̄_n − ln c̲_n`.
    pub fn log_rho(&self) -> f64 {
        self.log_c_max() - self.log_c_min()
    }

    /// `ln Σ_i ‖Dφ_i‖^t`; for index ranges this is the upper side of the
    /// integral sandwich (see [`Level::log_sum_bounds`]).
    pub fn log_sum(&self, t: f64) -> f64 {
        self.log_sum_bounds(t).1
    }

    /// Rigorous two-sided bounds on the level sum; equal for all families but
    /// large Möbius ranges.
    pub fn log_sum_bounds(&self, t: f64) -> (f64, f64) {
        let v = match self {
            Level::Explicit(e) => {
                if t == 0.0 {
                    (e.maps.len() as f64).ln()
                } else {
                    log_sum_exp(e.maps.iter().map(|m| t * m.log_deriv_sup()))
                }
            }
            Level::Analytic(Family::Uniform { log_count, log_scale, .. }) => log_count + t * log_scale,
            Level::Analytic(Family::Geometric { log_first, log_ratio, count }) => geometric_log_sum(*log_first, *log_ratio, count.map(|c| c as f64), t),
            Level::Analytic(Family::MoebiusRange(r)) => return r.log_sum_bounds(t),
        };
        (v, v)
    }

    /// `ln` of the sum over the `k` largest derivative norms.
    pub fn log_partial_sum(&self, t: f64, k: f64) -> f64 {
        match self {
            Level::Explicit(e) => {
                let mut logs: Vec<f64> = e.maps.iter().map(|m| t * m.log_deriv_sup()).collect();
                logs.sort_by(|a, b| b.total_cmp(a));
                let k = (k.max(0.0) as usize).min(logs.len());
                log_sum_exp(logs[..k].iter().copied())
            }
            Level::Analytic(Family::Uniform { log_count, log_scale, .. }) => k.max(0.0).ln().min(*log_count) + t * log_scale,
            Level::Analytic(Family::Geometric { log_first, log_ratio, count }) => {
                let k = count.map_or(k, |c| k.min(c as f64));
                if k < 1.0 {
                    return f64::NEG_INFINITY;
                }
                geometric_log_sum(*log_first, *log_ratio, Some(k.floor()), t)
            }
            Level::Analytic(Family::MoebiusRange(r)) => {
                if k < 1.0 {
                    return f64::NEG_INFINITY;
                }
                r.prefix(k).log_sum_bounds(t).1
            }
        }
    }

    /// `ln ‖Dφ_k‖` for the map with ordinal `k` in descending-derivative order
    /// (explicit levels use list order).
    pub fn log_deriv_of(&self, k: u64) -> Option<f64> {
        if let Some(c) = self.count() {
            if k >= c {
                return None;
            }
        }
        match self {
            Level::Explicit(e) => Some(e.maps[k as usize].log_deriv_sup()),
            Level::Analytic(Family::Uniform { log_scale, .. }) => Some(*log_scale),
            Level::Analytic(Family::Geometric { log_first, log_ratio, .. }) => Some(log_first + k as f64 * log_ratio),
            Level::Analytic(Family::MoebiusRange(r)) => r.first.map(|a| -2.0 * ((a + k) as f64).ln()),
        }
    }

    /// The map with ordinal `k`, when indices fit machine integers.
    pub fn map(&self, k: u64, domain: &Aabb) -> Result<ConformalContraction> {
        let not = |reason: &str| Error::NotSampleable { level: 0, reason: reason.to_string() };
        if let Some(c) = self.count() {
            if k >= c {
                return Err(not("ordinal beyond level size"));
            }
        }
        match self {
            Level::Explicit(e) => Ok(e.maps[k as usize].clone()),
            Level::Analytic(Family::Uniform { log_scale, log_step, count, .. }) => {
                if count.is_none() {
                    return Err(not("uniform level too large for machine indices"));
                }
                let a = domain.min[0];
                let scale = log_scale.exp();
                let shift = a + k as f64 * log_step.exp() - scale * a;
                ConformalContraction::affine_1d(scale, shift, domain)
            }
            Level::Analytic(Family::Geometric { log_first, log_ratio, .. }) => {
                let a = domain.min[0];
                let len = domain.side(0);
                let scale = (log_first + k as f64 * log_ratio).exp();
                let r = log_ratio.exp();
                let offset = log_first.exp() * (-(k as f64 * log_ratio).exp_m1()) / (1.0 - r) * len;
                ConformalContraction::affine_1d(scale, a + offset - scale * a, domain)
            }
            Level::Analytic(Family::MoebiusRange(r)) => match r.first {
                Some(first) => ConformalContraction::moebius(first + k, domain),
                None => Err(not("moebius range too large for machine indices")),
            },
        }
    }

    /// All maps, refusing levels larger than `budget`.
    pub fn materialize(&self, domain: &Aabb, budget: u64) -> Result<Vec<ConformalContraction>> {
        match self.count() {
            Some(c) if c <= budget => (0..c).map(|k| self.map(k, domain)).collect(),
            _ => Err(Error::NotMaterializable { level: 0, reason: "level larger than enumeration budget".into() }),
        }
    }

    /// Smallest box containing every image of the level.
    pub fn hull(&self, domain: &Aabb) -> Aabb {
        match self {
            Level::Explicit(e) => e.maps.iter().skip(1).fold(e.maps[0].image.clone(), |h, m| h.hull(&m.image)),
            Level::Analytic(_) => {
                let a = domain.min[0];
                Aabb::interval(a, a + self.log_hull_diam(domain).exp())
            }
        }
    }

    /// `ln diam` of [`Level::hull`], computed in log space for analytic families.
    pub fn log_hull_diam(&self, domain: &Aabb) -> f64 {
        let log_len = domain.side(0).ln();
        match self {
            Level::Explicit(_) => self.hull(domain).diam().ln(),
            Level::Analytic(Family::Uniform { log_count, log_scale, log_step, .. }) => {
                let spread = log_sub_exp(*log_count, 0.0) + log_step;
                log_add_exp(spread, log_scale + log_len)
            }
            Level::Analytic(Family::Geometric { log_first, log_ratio, count }) => {
                let tail = count.map_or(0.0, |c| -(c as f64 * log_ratio).exp_m1());
                log_first + tail.ln() - ln_one_minus_exp(*log_ratio) + log_len
            }
            Level::Analytic(Family::MoebiusRange(r)) => log_sub_exp(-r.log_first, -r.log_end),
        }
    }

    /// The `k` maps with largest derivative norm.
    pub fn prefix(&self, k: f64) -> Level {
        let k = k.max(1.0);
        match self {
            Level::Explicit(e) => {
                let mut maps = e.maps.clone();
                maps.sort_by(|a, b| b.deriv_sup.total_cmp(&a.deriv_sup));
                maps.truncate((k as usize).min(maps.len()));
                Level::explicit(maps).expect("non-empty prefix")
            }
            Level::Analytic(Family::Uniform { log_count, log_scale, log_step, .. }) => {
                Level::uniform(k.ln().min(*log_count), *log_scale, *log_step).expect("prefix of a valid family")
            }
            Level::Analytic(Family::Geometric { log_first, log_ratio, count }) => {
                let c = count.map_or(k, |c| k.min(c as f64));
                Level::Analytic(Family::Geometric { log_first: *log_first, log_ratio: *log_ratio, count: Some(c as u64) })
            }
            Level::Analytic(Family::MoebiusRange(r)) => Level::moebius_range(r.prefix(k)),
        }
    }

    /// Maps with `ln ‖Dφ‖ ≥ log_eps`; keeps the largest map if none qualify.
    pub fn keep_above(&self, log_eps: f64) -> Level {
        match self {
            Level::Explicit(e) => {
                let kept: Vec<_> = e.maps.iter().filter(|m| m.log_deriv_sup() >= log_eps).cloned().collect();
                if kept.is_empty() {
                    self.prefix(1.0)
                } else {
                    Level::explicit(kept).expect("non-empty")
                }
            }
            Level::Analytic(Family::Uniform { log_scale, .. }) => {
                if *log_scale >= log_eps {
                    self.clone()
                } else {
                    self.prefix(1.0)
                }
            }
            Level::Analytic(Family::Geometric { log_first, log_ratio, count }) => {
                let k = ((log_eps - log_first) / log_ratio).floor() + 1.0;
                let k = count.map_or(k, |c| k.min(c as f64)).max(1.0);
                Level::Analytic(Family::Geometric { log_first: *log_first, log_ratio: *log_ratio, count: Some(k as u64) })
            }
            Level::Analytic(Family::MoebiusRange(r)) => Level::moebius_range(r.keep_above(log_eps)),
        }
    }
}

fn geometric_log_sum(log_first: f64, log_ratio: f64, count: Option<f64>, t: f64) -> f64 {
    if t == 0.0 {
        return count.map_or(f64::INFINITY, f64::ln);
    }
    let head = match count {
        Some(c) => ln_one_minus_exp(c * t * log_ratio),
        None => 0.0,
    };
    t * log_first + head - ln_one_minus_exp(t * log_ratio)
}
