//! Growth and balance classes, theorem applicability, class M / EV checks,
//! the Hausdorff-measure trichotomy and distances between systems.
//!
//! Limits are judged on finite horizons. Rates of growth of a series `f(n)`
//! are estimated by the half-horizon secant `(f(n) − f(⌊n/2⌋))/(n − ⌊n/2⌋)`,
//! which has the same liminf/limsup as `f(n)/n` but no `O(1/n)` offset bias.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Aabb;
use crate::map::{ConformalContraction, MapKind};
use crate::pressure::{bowen_dimension, default_window, log_z_series, BowenOptions};
use crate::system::{System, VALIDATION_BUDGET};

/// Tolerance for "limit exists / equals zero" judgments.
pub const LIMIT_TOL: f64 = 1e-3;

/// Half-horizon secant rates; entry `n − 1` holds the rate at level `n` (`n ≥ 2`).
pub fn secant_rates(f: &[f64]) -> Vec<f64> {
    let mut out = vec![f64::NAN; f.len()];
    for n in 2..=f.len() {
        let m = n / 2;
        out[n - 1] = (f[n - 1] - f[m - 1]) / (n - m) as f64;
    }
    out
}

fn window_extrema(values: &[f64], from: usize, to: usize) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in &values[from.max(1) - 1..to] {
        if !v.is_nan() {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    (lo, hi)
}

fn tail_start(h: usize) -> usize {
    (h + 1 - default_window(h)).max(2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum GrowthClass {
    UniformlyFinite { q: u64 },
    Subexponential,
    Exponential,
    Superexponential,
    InfiniteAlphabet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub a_minus: f64,
    pub a_plus: f64,
    pub b_minus: f64,
    pub b_plus: f64,
    pub klass: GrowthClass,
    pub horizon: usize,
    pub window: usize,
    pub log_counts: Vec<f64>,
}

pub fn classify_growth(system: &System, horizon: usize) -> Result<GrowthReport> {
    let h = system.clamp_horizon(horizon);
    if h < 10 {
        return Err(Error::InvalidParameter(format!("growth classification needs horizon ≥ 10, got {h}")));
    }
    let mut log_counts = Vec::with_capacity(h);
    let mut inv_cmax = Vec::with_capacity(h);
    let mut inv_cmin = Vec::with_capacity(h);
    for n in 1..=h {
        let lvl = system.level(n);
        log_counts.push(lvl.log_count());
        inv_cmax.push(-lvl.log_c_max());
        inv_cmin.push(-lvl.log_c_min());
    }
    let w = default_window(h);
    let from = tail_start(h);
    let (b_minus, _) = window_extrema(&secant_rates(&inv_cmax), from, h);
    let (_, b_plus) = window_extrema(&secant_rates(&inv_cmin), from, h);
    let b_plus = b_plus.max(b_minus);
    if log_counts.iter().any(|c| c.is_infinite()) {
        return Ok(GrowthReport { a_minus: f64::INFINITY, a_plus: f64::INFINITY, b_minus, b_plus, klass: GrowthClass::InfiniteAlphabet, horizon: h, window: w, log_counts });
    }
    let rates = secant_rates(&log_counts);
    let (a_minus, a_plus) = window_extrema(&rates, from, h);
    let klass = if a_plus < LIMIT_TOL {
        let half = h / 2;
        let early = log_counts[..half].iter().cloned().fold(0.0, f64::max);
        let late = log_counts[half..].iter().cloned().fold(0.0, f64::max);
        if late <= early + 1e-12 {
            GrowthClass::UniformlyFinite { q: log_counts.iter().cloned().fold(0.0, f64::max).exp().round() as u64 }
        } else {
            GrowthClass::Subexponential
        }
    } else {
        let (_, earlier) = window_extrema(&rates, (h / 4).max(2), (h / 2).max(2));
        if a_minus > LIMIT_TOL && earlier.is_finite() && a_minus >= 1.25 * earlier {
            GrowthClass::Superexponential
        } else {
            GrowthClass::Exponential
        }
    };
    Ok(GrowthReport { a_minus, a_plus, b_minus, b_plus, klass, horizon: h, window: w, log_counts })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum BalanceClass {
    Perfect,
    Balanced { kappa: f64 },
    Weakly,
    Barely,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub klass: BalanceClass,
    pub horizon: usize,
    /// `(1/n) ln ρ_n`.
    pub log_rho_rate: Vec<f64>,
    /// `(1/n) ln(1 + ln ρ_n)`.
    pub barely_rate: Vec<f64>,
}

impl BalanceReport {
    pub fn is_balanced(&self) -> bool {
        matches!(self.klass, BalanceClass::Perfect | BalanceClass::Balanced { .. })
    }
}

pub fn classify_balance(system: &System, horizon: usize) -> BalanceReport {
    let h = system.clamp_horizon(horizon);
    let log_rho: Vec<f64> = (1..=h).map(|n| system.level(n).log_rho().max(0.0)).collect();
    let log_rho_rate = log_rho.iter().enumerate().map(|(i, r)| r / (i + 1) as f64).collect();
    let log1p: Vec<f64> = log_rho.iter().map(|r| r.ln_1p()).collect();
    let barely_rate = log1p.iter().enumerate().map(|(i, r)| r / (i + 1) as f64).collect();
    let max_all = log_rho.iter().cloned().fold(0.0, f64::max);
    let klass = if max_all <= 1e-12 && system.is_similarity(h) {
        BalanceClass::Perfect
    } else {
        let half = (h / 2).max(1);
        let early = log_rho[..half].iter().cloned().fold(0.0, f64::max);
        let late = log_rho[half..].iter().cloned().fold(0.0, f64::max);
        let from = tail_start(h);
        if h >= 2 && late <= early + LIMIT_TOL {
            BalanceClass::Balanced { kappa: max_all.exp() }
        } else if h >= 2 && window_extrema(&secant_rates(&log_rho), from, h).1 < LIMIT_TOL {
            BalanceClass::Weakly
        } else if h >= 2 && window_extrema(&secant_rates(&log1p), from, h).1 < LIMIT_TOL {
            BalanceClass::Barely
        } else {
            BalanceClass::None
        }
    };
    BalanceReport { klass, horizon: h, log_rho_rate, barely_rate }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub theorem: String,
    pub applies: bool,
    pub reason: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formula {
    #[serde(rename = "a/b")]
    AOverB,
    Bisection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApplicabilityReport {
    pub verdicts: Vec<Verdict>,
    pub predicted_dimension: Option<f64>,
    pub formula: Option<Formula>,
    pub growth: GrowthReport,
    pub balance: BalanceReport,
}

impl ApplicabilityReport {
    pub fn applies(&self, theorem: &str) -> bool {
        self.verdicts.iter().any(|v| v.theorem == theorem && v.applies)
    }
}

pub fn applicability(system: &System, horizon: usize) -> Result<ApplicabilityReport> {
    let growth = classify_growth(system, horizon)?;
    let balance = classify_balance(system, horizon);
    let h = growth.horizon;
    let d = system.dim() as f64;
    let subexp = matches!(growth.klass, GrowthClass::UniformlyFinite { .. } | GrowthClass::Subexponential);
    let at_most_exp = subexp || growth.klass == GrowthClass::Exponential;

    let mut verdicts = vec![Verdict {
        theorem: "thm-1.1".into(),
        applies: subexp,
        reason: format!("limsup (1/n) ln #I^(n) ≈ {:.6} ({})", growth.a_plus, if subexp { "sub-exponential" } else { "not sub-exponential" }),
    }];

    let inv_cmax: Vec<f64> = (1..=h).map(|n| -system.level(n).log_c_max()).collect();
    let w = default_window(h);
    let head = inv_cmax[..w].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tail = inv_cmax[h - w..].iter().cloned().fold(f64::INFINITY, f64::min);
    let small_pieces = tail > head + 1.0;
    let mut bowen = None;
    let full_dim = if at_most_exp && !small_pieces {
        let b = bowen_dimension(system, &BowenOptions { horizon: h, window: None, tol: LIMIT_TOL / 10.0 }).ok();
        bowen = b.as_ref().map(|b| b.t_star);
        b.map(|b| b.t_star >= d - LIMIT_TOL).unwrap_or(false)
    } else {
        false
    };
    let thm12 = at_most_exp && (small_pieces || full_dim);
    verdicts.push(Verdict {
        theorem: "thm-1.2".into(),
        applies: thm12,
        reason: if !at_most_exp {
            "growth faster than exponential".into()
        } else if small_pieces {
            "at most exponential growth and c̄_n → 0".into()
        } else if full_dim {
            "at most exponential growth and B = d".into()
        } else {
            "c̄_n does not tend to 0 and B < d".into()
        },
    });

    let a_conv = (growth.a_plus - growth.a_minus).abs() < LIMIT_TOL;
    let b_conv = (growth.b_plus - growth.b_minus).abs() < LIMIT_TOL;
    let a = 0.5 * (growth.a_minus + growth.a_plus);
    let b = 0.5 * (growth.b_minus + growth.b_plus);
    let prop = a_conv && b_conv && a.is_finite() && b.is_finite() && a > LIMIT_TOL && b > LIMIT_TOL;
    verdicts.push(Verdict {
        theorem: "prop-1.3".into(),
        applies: prop,
        reason: format!("a ∈ [{:.6}, {:.6}], b ∈ [{:.6}, {:.6}]", growth.a_minus, growth.a_plus, growth.b_minus, growth.b_plus),
    });

    let (predicted_dimension, formula) = if prop {
        (Some(a / b), Some(Formula::AOverB))
    } else if subexp || thm12 {
        let t = match bowen {
            Some(t) => Some(t),
            None => bowen_dimension(system, &BowenOptions { horizon: h, window: None, tol: LIMIT_TOL / 10.0 }).ok().map(|b| b.t_star),
        };
        (t, t.map(|_| Formula::Bisection))
    } else {
        (None, None)
    };
    Ok(ApplicabilityReport { verdicts, predicted_dimension, formula, growth, balance })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureClass {
    Zero,
    FinitePositive,
    Infinite,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrichotomyResult {
    pub klass: MeasureClass,
    pub h: f64,
    /// Window minimum of `ln Z_n(h)` (upper bound side).
    pub log_liminf: f64,
    pub liminf: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub zero: f64,
    pub infinite: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { zero: 1e-6, infinite: 1e6 }
    }
}

/// Classifies the `h`-dimensional Hausdorff measure of the limit set by the
/// window liminf of `Z_n(h)`.
pub fn measure_trichotomy(system: &System, h: f64, horizon: usize, thresholds: Thresholds) -> Result<TrichotomyResult> {
    let growth = classify_growth(system, horizon)?;
    if !matches!(growth.klass, GrowthClass::UniformlyFinite { .. }) {
        return Err(Error::HypothesisViolated("system is not uniformly finite".into()));
    }
    if !classify_balance(system, horizon).is_balanced() {
        return Err(Error::HypothesisViolated("system is not balanced".into()));
    }
    let series = log_z_series(system, h, horizon);
    let n = series.len();
    let from = n + 1 - default_window(n);
    let lo_up = (from..=n).map(|k| series.at(k).1).fold(f64::INFINITY, f64::min);
    let lo_lo = (from..=n).map(|k| series.at(k).0).fold(f64::INFINITY, f64::min);
    let klass = if lo_up < thresholds.zero.ln() {
        MeasureClass::Zero
    } else if lo_lo > thresholds.infinite.ln() {
        MeasureClass::Infinite
    } else {
        MeasureClass::FinitePositive
    };
    Ok(TrichotomyResult { klass, h, log_liminf: lo_up, liminf: lo_up.exp() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipOptions {
    pub index_budget: usize,
    pub c_threshold: f64,
    pub t_grid: Vec<f64>,
    pub eps_grid: Vec<f64>,
}

impl Default for MembershipOptions {
    fn default() -> Self {
        Self { index_budget: 64, c_threshold: 1e3, t_grid: vec![0.25, 0.5, 0.75], eps_grid: vec![0.1, 0.5] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvWitness {
    pub log_gammas: Vec<f64>,
    pub c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCheck {
    pub t: f64,
    pub eps: f64,
    pub ok: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    /// "Consistent with membership" at the sampled `(t, ε)` grid, or implied by EV.
    pub in_m: bool,
    pub m_from_ev: bool,
    pub m_checks: Vec<MCheck>,
    pub in_ev: bool,
    /// Smallest admissible EV constant for the geometric-mean witness.
    pub c_estimate: f64,
    pub ev: Option<EvWitness>,
}

pub fn class_membership(system: &System, horizon: usize, opts: &MembershipOptions) -> Result<MembershipReport> {
    let h = system.clamp_horizon(horizon);
    let levels: Vec<_> = (1..=h).map(|n| system.level(n)).collect();
    let min_count = levels.iter().map(|l| l.count().unwrap_or(u64::MAX)).min().unwrap_or(0);
    let idx = (opts.index_budget as u64).min(min_count) as usize;
    if idx == 0 {
        return Err(Error::BudgetExceeded { needed: 0.0, budget: opts.index_budget as u64 });
    }
    let mut table = vec![vec![0.0; h]; idx];
    for (n, lvl) in levels.iter().enumerate() {
        for (i, row) in table.iter_mut().enumerate() {
            row[n] = lvl.log_deriv_of(i as u64).ok_or(Error::NotMaterializable { level: n + 1, reason: "no per-index derivative data".into() })?;
        }
    }
    let log_gammas: Vec<f64> = table.iter().map(|row| row.iter().sum::<f64>() / h as f64).collect();
    let log_c = table
        .iter()
        .zip(&log_gammas)
        .flat_map(|(row, g)| row.iter().map(move |v| (v - g).abs()))
        .fold(0.0, f64::max);
    let c = log_c.exp();
    let in_ev = c <= opts.c_threshold;

    let d = system.dim() as f64;
    let mut m_checks = Vec::new();
    for &tf in &opts.t_grid {
        let t = tf * d;
        let sums: Vec<f64> = levels.iter().map(|l| l.log_sum(t)).collect();
        let finite = sums.iter().all(|s| s.is_finite());
        let infinite = sums.iter().all(|s| s.is_infinite());
        for &eps in &opts.eps_grid {
            let half = (h / 2).max(1);
            let keep = |n: usize| (eps * n as f64).exp().floor().max(1.0);
            let (ok, detail) = if !(finite || infinite) {
                (false, "level sums mix finite and infinite values".to_string())
            } else if finite {
                let deficit = |n: usize| -(levels[n - 1].log_partial_sum(t, keep(n)) - sums[n - 1]).exp_m1();
                let (dh, dm) = (deficit(h), deficit(half));
                (dh <= dm + 1e-12, format!("head-mass deficit {dm:.3e} at n={half}, {dh:.3e} at n={h}"))
            } else {
                let (ph, pm) = (levels[h - 1].log_partial_sum(t, keep(h)), levels[half - 1].log_partial_sum(t, keep(half)));
                (ph >= pm - 1e-12 && ph > 0.0, format!("ln head sum {pm:.3e} at n={half}, {ph:.3e} at n={h}"))
            };
            m_checks.push(MCheck { t, eps, ok, detail });
        }
    }
    let grid_ok = m_checks.iter().all(|c| c.ok);
    Ok(MembershipReport {
        in_m: in_ev || grid_ok,
        m_from_ev: in_ev,
        m_checks,
        in_ev,
        c_estimate: c,
        ev: in_ev.then(|| EvWitness { log_gammas, c }),
    })
}

/// `κ`: the minimum of `inf |Dφ|` over materialized maps.
pub fn kappa(system: &System, horizon: usize) -> f64 {
    let h = system.clamp_horizon(horizon);
    let domain = system.domain();
    (1..=h)
        .map(|n| {
            let lvl = system.level(n);
            match lvl.materialize(domain, VALIDATION_BUDGET) {
                Ok(maps) => maps.iter().map(|m| m.deriv_inf).fold(f64::INFINITY, f64::min),
                Err(_) => lvl.log_c_min().exp() / system.distortion_k(),
            }
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceMode {
    Uniform,
    Pointwise,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    pub mode: DistanceMode,
    pub value: f64,
    pub tail_error: f64,
    pub horizon: usize,
    pub per_level: Vec<f64>,
}

/// `d_u` (sup over levels) or `d_p` (`Σ 2^{-n} d_n`) between two systems on the same domain.
pub fn system_distance(phi: &System, psi: &System, mode: DistanceMode, grid: usize, horizon: usize) -> Result<Distance> {
    if phi.domain() != psi.domain() {
        return Err(Error::InvalidParameter("systems live on different domains".into()));
    }
    let h = phi.clamp_horizon(psi.clamp_horizon(horizon));
    let domain = phi.domain();
    let mut per_level = Vec::with_capacity(h);
    for n in 1..=h {
        let (a, b) = (phi.level(n), psi.level(n));
        if a.count() != b.count() || a.count().is_none() {
            return Err(Error::AlphabetMismatch { level: n });
        }
        let ma = a.materialize(domain, VALIDATION_BUDGET).map_err(|_| Error::AlphabetMismatch { level: n })?;
        let mb = b.materialize(domain, VALIDATION_BUDGET).map_err(|_| Error::AlphabetMismatch { level: n })?;
        let d = ma.iter().zip(&mb).map(|(x, y)| map_distance(x, y, domain, grid)).fold(0.0, f64::max);
        per_level.push(d);
    }
    let (value, tail_error) = match mode {
        DistanceMode::Uniform => (per_level.iter().cloned().fold(0.0, f64::max), 0.0),
        DistanceMode::Pointwise => {
            let v = per_level.iter().enumerate().map(|(i, d)| d * 0.5f64.powi(i as i32 + 1)).sum();
            (v, domain.diam().max(2.0) * 0.5f64.powi(h as i32))
        }
    };
    Ok(Distance { mode, value, tail_error, horizon: h, per_level })
}

/// `max(sup_X |φ − ψ|, sup_X ‖Dφ − Dψ‖)`.
pub fn map_distance(a: &ConformalContraction, b: &ConformalContraction, domain: &Aabb, grid: usize) -> f64 {
    if let (MapKind::Similarity { scale: s, isometry: r, translation: p }, MapKind::Similarity { scale: s2, isometry: r2, translation: p2 }) = (&a.kind, &b.kind) {
        let d = domain.dim();
        let (m1, m2) = (r.matrix(), r2.matrix());
        let diff: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| s * m1[i][j] - s2 * m2[i][j]).collect()).collect();
        let shift: Vec<f64> = p.iter().zip(p2).map(|(x, y)| x - y).collect();
        let mut sup = 0.0f64;
        for mask in 0..(1usize << d) {
            let v: Vec<f64> = (0..d).map(|i| if mask >> i & 1 == 1 { domain.max[i] } else { domain.min[i] }).collect();
            let norm = (0..d).map(|i| (0..d).map(|j| diff[i][j] * v[j]).sum::<f64>() + shift[i]).map(|x| x * x).sum::<f64>().sqrt();
            sup = sup.max(norm);
        }
        return sup.max(spectral_norm(&diff));
    }
    let (lo, hi) = (domain.min[0], domain.max[0]);
    let steps = grid.max(1);
    (0..=steps)
        .map(|k| {
            let x = lo + (hi - lo) * k as f64 / steps as f64;
            let dv = (a.apply(&[x])[0] - b.apply(&[x])[0]).abs();
            let dd = (a.derivative_1d(x) - b.derivative_1d(x)).abs();
            dv.max(dd)
        })
        .fold(0.0, f64::max)
}

fn spectral_norm(m: &[Vec<f64>]) -> f64 {
    let d = m.len();
    if d == 1 {
        return m[0][0].abs();
    }
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    let mut norm = 0.0;
    for _ in 0..200 {
        let mv: Vec<f64> = (0..d).map(|i| (0..d).map(|j| m[i][j] * v[j]).sum()).collect();
        let mtmv: Vec<f64> = (0..d).map(|j| (0..d).map(|i| m[i][j] * mv[i]).sum()).collect();
        let len = mtmv.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len == 0.0 {
            return 0.0;
        }
        norm = len.sqrt();
        v = mtmv.iter().map(|x| x / len).collect();
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::level::Level;
    use crate::geometry::Isometry;

    fn cantor() -> System {
        let x = Aabb::unit(1);
        let maps = vec![
            ConformalContraction::affine_1d(1.0 / 3.0, 0.0, &x).unwrap(),
            ConformalContraction::affine_1d(1.0 / 3.0, 2.0 / 3.0, &x).unwrap(),
        ];
        System::autonomous(x, Level::explicit(maps).unwrap()).unwrap()
    }

    #[test]
    fn cantor_growth_and_balance() {
        let g = classify_growth(&cantor(), 100).unwrap();
        assert_eq!(g.klass, GrowthClass::UniformlyFinite { q: 2 });
        assert_eq!((g.a_minus, g.a_plus), (0.0, 0.0));
        assert_eq!(classify_balance(&cantor(), 100).klass, BalanceClass::Perfect);
        let app = applicability(&cantor(), 200).unwrap();
        assert!(app.applies("thm-1.1"));
        assert_eq!(app.formula, Some(Formula::Bisection));
    }

    #[test]
    fn cantor_trichotomy() {
        let b = 2f64.ln() / 3f64.ln();
        let r = measure_trichotomy(&cantor(), b, 500, Thresholds::default()).unwrap();
        assert_eq!(r.klass, MeasureClass::FinitePositive);
        assert!((r.liminf - 1.0).abs() < 1e-10);
        let r = measure_trichotomy(&cantor(), 0.7, 500, Thresholds::default()).unwrap();
        assert_eq!(r.klass, MeasureClass::Zero);
    }

    #[test]
    fn secant_is_exact_on_affine() {
        let f: Vec<f64> = (1..=30).map(|n| 2.0 * n as f64 + 5.0).collect();
        let r = secant_rates(&f);
        assert!(r[1..].iter().all(|v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn translation_distance() {
        let x = Aabb::unit(1);
        let a = ConformalContraction::affine_1d(1.0 / 3.0, 0.0, &x).unwrap();
        let b = ConformalContraction::affine_1d(1.0 / 3.0, 1e-3, &x).unwrap();
        assert!((map_distance(&a, &b, &x, 10) - 1e-3).abs() < 1e-15);
        let c = ConformalContraction::affine_1d(1.0 / 3.0 + 1e-3, 0.0, &x).unwrap();
        assert!((map_distance(&a, &c, &x, 10) - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn rotated_distance_uses_operator_norm() {
        let x = Aabb::unit(2);
        let a = ConformalContraction::similarity(0.5, Isometry::identity(2), vec![0.0, 0.0], &x).unwrap();
        let b = ConformalContraction::similarity(0.5, Isometry { perm: vec![0, 1], flip: vec![false, true] }, vec![0.0, 0.5], &x).unwrap();
        // A = diag(0, 1), shift (0, -0.5): sup over vertices is 0.5, operator norm 1.
        assert!((map_distance(&a, &b, &x, 10) - 1.0).abs() < 1e-12);
    }
}
