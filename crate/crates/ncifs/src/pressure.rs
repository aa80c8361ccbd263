//! Partition sums, pressure estimates, Bowen dimension and dimension certificates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logsum::{log_sum_exp, KahanSum};
use crate::system::{relevel, Composer, System};

pub const DEFAULT_ENUMERATION_BUDGET: u64 = 10_000_000;
pub const DEFAULT_HORIZON: usize = 10_000;
pub const DEFAULT_TOL: f64 = 1e-6;

/// Trailing window used for liminf/limsup estimates.
pub fn default_window(horizon: usize) -> usize {
    (horizon / 5).max(1)
}

/// `ln Σ_i ‖Dφ_i^(n)‖^t` (`+∞` when divergent).
pub fn level_log_sum(system: &System, n: usize, t: f64) -> f64 {
    system.level(n).log_sum(t)
}

/// Cumulative factorized bounds on `ln Z_n(t)` for `n = 1..=horizon`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogZSeries {
    pub t: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub divergent: bool,
}

impl LogZSeries {
    /// `(lower, upper)` for `ln Z_n`; `n = 0` gives `(0, 0)`.
    pub fn at(&self, n: usize) -> (f64, f64) {
        if n == 0 {
            (0.0, 0.0)
        } else {
            (self.lower[n - 1], self.upper[n - 1])
        }
    }

    pub fn len(&self) -> usize {
        self.upper.len()
    }

    pub fn is_empty(&self) -> bool {
        self.upper.is_empty()
    }
}

pub fn log_z_series(system: &System, t: f64, horizon: usize) -> LogZSeries {
    let h = system.clamp_horizon(horizon);
    let log_k = system.distortion_k().ln();
    let mut acc = KahanSum::new();
    let mut lower = Vec::with_capacity(h);
    let mut upper = Vec::with_capacity(h);
    let mut divergent = false;
    for n in 1..=h {
        let s = level_log_sum(system, n, t);
        if s == f64::INFINITY {
            divergent = true;
        }
        acc.add(s);
        let u = if divergent { f64::INFINITY } else { acc.value() };
        let l = if divergent || t == 0.0 { u } else { u - t * (n as f64 - 1.0) * log_k };
        upper.push(u);
        lower.push(l);
    }
    LogZSeries { t, lower, upper, divergent }
}

/// Factorized `(lower, upper)` bounds on `ln Z_n(t)`.
pub fn partition_log_sum_bounds(system: &System, n: usize, t: f64) -> (f64, f64) {
    log_z_series(system, t, n).at(n.min(system.horizon()))
}

/// Exact `ln Z_n(t)` by enumerating every word of length `n`.
pub fn partition_log_sum_exact(system: &System, n: usize, t: f64, budget: u64) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    let n = system.clamp_horizon(n);
    let mut needed = 1.0f64;
    for j in 1..=n {
        needed *= system.level(j).count().map_or(f64::INFINITY, |c| c as f64);
    }
    if needed > budget as f64 {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let domain = system.domain();
    let mut levels = Vec::with_capacity(n);
    for j in 1..=n {
        levels.push(system.level(j).materialize(domain, budget).map_err(|e| relevel(e, j))?);
    }
    let reference: f64 = levels.iter().map(|maps| maps.iter().map(|m| m.log_deriv_sup()).fold(f64::NEG_INFINITY, f64::max)).sum::<f64>() * t;
    let per_first: Vec<f64> = levels[0]
        .par_iter()
        .map(|m| {
            let mut acc = KahanSum::new();
            let mut terms = Vec::new();
            enumerate(&levels[1..], Composer::new().push(m), t, reference, domain, &mut acc, &mut terms);
            let s = acc.value();
            if s > 0.0 {
                reference + s.ln()
            } else {
                log_sum_exp(terms.iter().copied())
            }
        })
        .collect();
    Ok(log_sum_exp(per_first.iter().copied()))
}

fn enumerate(
    rest: &[Vec<crate::map::ConformalContraction>],
    comp: Composer,
    t: f64,
    reference: f64,
    domain: &crate::geometry::Aabb,
    acc: &mut KahanSum,
    terms: &mut Vec<f64>,
) {
    match rest.split_first() {
        None => {
            let v = t * comp.log_extrema(domain).0;
            acc.add((v - reference).exp());
            if terms.len() < 1 << 20 {
                terms.push(v);
            }
        }
        Some((maps, tail)) => {
            for m in maps {
                enumerate(tail, comp.push(m), t, reference, domain, acc, terms);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct PressureEstimate {
    pub t: f64,
    pub horizon_n: usize,
    pub window: usize,
    pub log_Z_lower: f64,
    pub log_Z_upper: f64,
    pub lP_hat: f64,
    pub uP_hat: f64,
    pub divergent: bool,
}

impl PressureEstimate {
    pub fn band_width(&self) -> f64 {
        self.uP_hat - self.lP_hat
    }
}

/// Window estimates of `liminf`/`limsup (1/n) ln Z_n(t)`.
pub fn pressure_estimate(system: &System, t: f64, horizon: usize, window: Option<usize>) -> PressureEstimate {
    let series = log_z_series(system, t, horizon);
    estimate_from_series(&series, window)
}

pub fn estimate_from_series(series: &LogZSeries, window: Option<usize>) -> PressureEstimate {
    let h = series.len();
    let w = window.unwrap_or_else(|| default_window(h)).clamp(1, h);
    let mut lp = f64::INFINITY;
    let mut up = f64::NEG_INFINITY;
    for n in (h - w + 1)..=h {
        let (l, u) = series.at(n);
        lp = lp.min(l / n as f64);
        up = up.max(u / n as f64);
    }
    let (log_z_lower, log_z_upper) = series.at(h);
    PressureEstimate { t: series.t, horizon_n: h, window: w, log_Z_lower: log_z_lower, log_Z_upper: log_z_upper, lP_hat: lp, uP_hat: up, divergent: series.divergent }
}

/// Estimates on a grid of `t` values, evaluated in parallel.
pub fn pressure_curve(system: &System, ts: &[f64], horizon: usize, window: Option<usize>) -> Vec<PressureEstimate> {
    ts.par_iter().map(|&t| pressure_estimate(system, t, horizon, window)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BowenOptions {
    pub horizon: usize,
    pub window: Option<usize>,
    pub tol: f64,
}

impl Default for BowenOptions {
    fn default() -> Self {
        Self { horizon: DEFAULT_HORIZON, window: None, tol: DEFAULT_TOL }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BowenResult {
    pub t_star: f64,
    pub bracket: (f64, f64),
    pub horizon: usize,
    pub window: usize,
    pub evaluations: usize,
    pub ambiguous_steps: usize,
}

/// Sign of a pressure band: `lP_hat` decides when it clears the band width,
/// otherwise the band midpoint decides and the step is flagged ambiguous.
/// Exactly zero counts as non-positive.
pub fn band_sign(lp: f64, up: f64, divergent: bool) -> (bool, bool) {
    if divergent || lp == f64::INFINITY {
        return (true, false);
    }
    let band = up - lp;
    if lp.abs() > band {
        (lp > 0.0, false)
    } else {
        (0.5 * (lp + up) > 0.0, true)
    }
}

/// Bisection on `[lo, hi]` for the last `t` with positive band sign.
/// `eval` returns `(lP_hat, uP_hat, divergent)`.
pub fn bisect_band<F>(lo: f64, hi: f64, tol: f64, mut eval: F) -> Result<(f64, (f64, f64), usize, usize)>
where
    F: FnMut(f64) -> (f64, f64, bool),
{
    let (l0, u0, d0) = eval(lo);
    if !band_sign(l0, u0, d0).0 {
        return Ok((lo, (lo, lo), 1, 0));
    }
    let (l1, u1, d1) = eval(hi);
    if band_sign(l1, u1, d1).0 {
        return Ok((hi, (hi, hi), 2, 0));
    }
    let (mut a, mut b) = (lo, hi);
    let mut evals = 2;
    let mut ambiguous = 0;
    let mut mids = 0;
    while b - a > tol {
        let m = 0.5 * (a + b);
        let (l, u, d) = eval(m);
        evals += 1;
        mids += 1;
        let (pos, amb) = band_sign(l, u, d);
        if amb {
            ambiguous += 1;
        }
        if pos {
            a = m;
        } else {
            b = m;
        }
    }
    if mids > 0 && ambiguous == mids {
        return Err(Error::SignAmbiguous { lo: a, hi: b });
    }
    Ok((0.5 * (a + b), (a, b), evals, ambiguous))
}

/// Bisection for the zero of the estimated lower pressure on `[0, d]`.
pub fn bowen_dimension(system: &System, opts: &BowenOptions) -> Result<BowenResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    let h = system.clamp_horizon(opts.horizon);
    let w = opts.window.unwrap_or_else(|| default_window(h)).clamp(1, h);
    let (t_star, bracket, evaluations, ambiguous_steps) = bisect_band(0.0, system.dim() as f64, opts.tol, |t| {
        let e = pressure_estimate(system, t, h, Some(w));
        (e.lP_hat, e.uP_hat, e.divergent)
    })?;
    Ok(BowenResult { t_star, bracket, horizon: h, window: w, evaluations, ambiguous_steps })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct ModifiedSums {
    pub n: usize,
    pub t: f64,
    pub log_Z_lower: f64,
    pub log_Z_upper: f64,
    pub log_Ztilde: f64,
    pub log_rho_n: f64,
    pub rho_n: f64,
    pub log_rho_running_max: f64,
    pub tildeP_hat: f64,
}

/// `ln Z̃_n(t) = ln Z_{n−1}(t) + (t/d) ln #I^(n) + t ln c̲_n` with the lower
/// factorized bound for `Z_{n−1}`, together with `ρ_n`, for `n = 1..=horizon`.
pub fn modified_series(system: &System, t: f64, horizon: usize) -> Vec<ModifiedSums> {
    let series = log_z_series(system, t, horizon);
    let d = system.dim() as f64;
    let mut running = 0.0f64;
    (1..=series.len())
        .map(|n| {
            let lvl = system.level(n);
            let log_rho = lvl.log_rho();
            running = running.max(log_rho);
            let prev = series.at(n - 1).0;
            let log_zt = if t == 0.0 { prev } else { prev + (t / d) * lvl.log_count() + t * lvl.log_c_min() };
            let (lo, up) = series.at(n);
            ModifiedSums {
                n,
                t,
                log_Z_lower: lo,
                log_Z_upper: up,
                log_Ztilde: log_zt,
                log_rho_n: log_rho,
                rho_n: log_rho.exp(),
                log_rho_running_max: running,
                tildeP_hat: log_zt / n as f64,
            }
        })
        .collect()
}

pub fn modified_sums(system: &System, n: usize, t: f64) -> ModifiedSums {
    modified_series(system, t, n).pop().expect("n ≥ 1")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Upper,
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverStrategy {
    /// `U_n = {X}`.
    Natural,
    /// `U_n` = one box covering every level-`n` image.
    LevelHull,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Evidence {
    /// Tail window on which `ln Z̃_n − ln(1 + ln max_{j≤n} ρ_j)` stays above `margin`.
    Lower { horizon: usize, window: usize, argmin_n: usize },
    /// Level `witness_n` in the tail where `ln(Z_{n−1}·S(U_n, t)) ≤ log_bound`.
    Upper { horizon: usize, window: usize, strategy: CoverStrategy, log_bound: f64, witness_n: usize, log_value: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionCertificate {
    pub t: f64,
    pub direction: Direction,
    pub margin: f64,
    pub evidence: Evidence,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum CertificateOutcome {
    Certified(DimensionCertificate),
    Refused { t: f64, direction: Direction, margin: f64, reason: String },
}

impl CertificateOutcome {
    pub fn is_certified(&self) -> bool {
        matches!(self, CertificateOutcome::Certified(_))
    }

    pub fn margin(&self) -> f64 {
        match self {
            CertificateOutcome::Certified(c) => c.margin,
            CertificateOutcome::Refused { margin, .. } => *margin,
        }
    }
}

fn lower_margin(system: &System, t: f64, horizon: usize, window: usize) -> (f64, usize) {
    let rows = modified_series(system, t, horizon);
    let h = rows.len();
    let mut best = (f64::INFINITY, h);
    for r in &rows[h - window..] {
        let v = r.log_Ztilde - r.log_rho_running_max.ln_1p();
        let v = if v.is_nan() { f64::NEG_INFINITY } else { v };
        if v < best.0 {
            best = (v, r.n);
        }
    }
    best
}

/// Numerical lower bound `hdim ≥ t` from the growth of `Z̃_n(t)` against `ρ_n`.
pub fn lower_bound_certificate(system: &System, t: f64, horizon: usize, window: Option<usize>) -> CertificateOutcome {
    let h = system.clamp_horizon(horizon);
    let w = window.unwrap_or_else(|| default_window(h)).clamp(1, h);
    if !(t > 0.0 && t <= system.dim() as f64) {
        return CertificateOutcome::Refused { t, direction: Direction::Lower, margin: f64::NEG_INFINITY, reason: "t must lie in (0, d]".into() };
    }
    let (margin, argmin_n) = lower_margin(system, t, h, w);
    if margin > 0.0 {
        CertificateOutcome::Certified(DimensionCertificate { t, direction: Direction::Lower, margin, evidence: Evidence::Lower { horizon: h, window: w, argmin_n } })
    } else {
        CertificateOutcome::Refused { t, direction: Direction::Lower, margin, reason: format!("ln Z̃_n − ln(1 + ln ρ*) ≤ 0 at n = {argmin_n}") }
    }
}

/// Default bound on `ln(Z_{n−1}·S(U_n, t))` for upper certificates.
pub const UPPER_LOG_BOUND: f64 = 1e-9;

fn upper_values(system: &System, t: f64, horizon: usize, strategy: CoverStrategy) -> Vec<f64> {
    let series = log_z_series(system, t, horizon);
    let domain = system.domain();
    let log_x = domain.diam().ln();
    (1..=series.len())
        .map(|n| {
            let log_s = match strategy {
                CoverStrategy::Natural => t * log_x,
                CoverStrategy::LevelHull => t * system.level(n).log_hull_diam(domain),
            };
            series.at(n - 1).1 + log_s
        })
        .collect()
}

/// Numerical upper bound `hdim ≤ t`: some late `n` has `Z_{n−1}(t)·S(U_n, t) ≤ e^{log_bound}`.
pub fn upper_bound_certificate(system: &System, t: f64, horizon: usize, strategy: CoverStrategy, window: Option<usize>) -> CertificateOutcome {
    let h = system.clamp_horizon(horizon);
    let w = window.unwrap_or_else(|| default_window(h)).clamp(1, h);
    let values = upper_values(system, t, h, strategy);
    let (mut best, mut witness) = (f64::INFINITY, h);
    for n in (h - w + 1)..=h {
        if values[n - 1] < best {
            best = values[n - 1];
            witness = n;
        }
    }
    let margin = UPPER_LOG_BOUND - best;
    if best <= UPPER_LOG_BOUND {
        CertificateOutcome::Certified(DimensionCertificate {
            t,
            direction: Direction::Upper,
            margin,
            evidence: Evidence::Upper { horizon: h, window: w, strategy, log_bound: UPPER_LOG_BOUND, witness_n: witness, log_value: best },
        })
    } else {
        CertificateOutcome::Refused { t, direction: Direction::Upper, margin, reason: format!("cover sums exceed the bound on the tail (min at n = {witness})") }
    }
}

/// Recomputes a certificate's margin from the system alone.
pub fn recheck_certificate(system: &System, cert: &DimensionCertificate) -> f64 {
    match &cert.evidence {
        Evidence::Lower { horizon, window, .. } => lower_margin(system, cert.t, *horizon, *window).0,
        Evidence::Upper { horizon, strategy, log_bound, witness_n, .. } => log_bound - upper_values(system, cert.t, *horizon, *strategy)[witness_n - 1],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Aabb;
    use crate::level::Level;
    use crate::map::ConformalContraction;

    fn cantor() -> System {
        let x = Aabb::unit(1);
        let maps = vec![
            ConformalContraction::affine_1d(1.0 / 3.0, 0.0, &x).unwrap(),
            ConformalContraction::affine_1d(1.0 / 3.0, 2.0 / 3.0, &x).unwrap(),
        ];
        System::autonomous(x, Level::explicit(maps).unwrap()).unwrap()
    }

    #[test]
    fn cantor_level_sums() {
        let c = cantor();
        let b = 2f64.ln() / 3f64.ln();
        assert!(level_log_sum(&c, 1, b).abs() < 1e-15);
        assert!((level_log_sum(&c, 1, 0.0) - 2f64.ln()).abs() < 1e-15);
        let (lo, hi) = partition_log_sum_bounds(&c, 2, 0.5);
        assert!((lo - (4.0f64 / 3.0).ln()).abs() < 1e-14 && lo == hi);
        assert!(partition_log_sum_exact(&c, 4, b, 1000).unwrap().abs() < 1e-14);
    }

    #[test]
    fn cantor_estimates() {
        let c = cantor();
        let e = pressure_estimate(&c, 0.0, 100, None);
        assert!((e.lP_hat - 2f64.ln()).abs() < 1e-14 && (e.uP_hat - 2f64.ln()).abs() < 1e-14);
        let r = bowen_dimension(&c, &BowenOptions::default()).unwrap();
        assert!((r.t_star - 2f64.ln() / 3f64.ln()).abs() < 1e-6);
        assert!(r.bracket.1 - r.bracket.0 <= 1e-6);
    }

    #[test]
    fn cantor_certificates() {
        let c = cantor();
        let cert = lower_bound_certificate(&c, 0.6, 1000, None);
        assert!(cert.is_certified());
        if let CertificateOutcome::Certified(ref k) = cert {
            assert!((recheck_certificate(&c, k) - k.margin).abs() < 1e-12);
        }
        assert!(!lower_bound_certificate(&c, 0.7, 1000, None).is_certified());
        assert!(upper_bound_certificate(&c, 0.64, 1000, CoverStrategy::Natural, None).is_certified());
        assert!(upper_bound_certificate(&c, 2f64.ln() / 3f64.ln(), 1000, CoverStrategy::Natural, None).is_certified());
        assert!(!upper_bound_certificate(&c, 0.62, 1000, CoverStrategy::Natural, None).is_certified());
    }

    #[test]
    fn budget_enforced() {
        assert!(matches!(partition_log_sum_exact(&cantor(), 10, 1.0, 100), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn perfect_system_has_unit_rho() {
        for r in modified_series(&cantor(), 0.5, 20) {
            assert_eq!(r.rho_n, 1.0);
        }
    }
}
