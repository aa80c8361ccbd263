//! Non-autonomous systems, words, composition and axiom checks.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Aabb;
use crate::level::Level;
use crate::map::{ConformalContraction, Mobius};

/// Horizon reported by periodic systems, which are defined at every level.
pub const UNBOUNDED_HORIZON: usize = 1 << 30;

/// Levels enumerated in full by validation; larger analytic levels are checked structurally.
pub const VALIDATION_BUDGET: u64 = 100_000;

/// Pure level program for generator-backed systems.
pub trait LevelGenerator: Send + Sync + fmt::Debug {
    fn level(&self, n: usize) -> Arc<Level>;
}

#[derive(Clone, Debug)]
pub enum LevelSource {
    List(Arc<[Arc<Level>]>),
    Periodic(Arc<[Arc<Level>]>),
    Generator(Arc<dyn LevelGenerator>),
}

/// Name and parameters a gallery system was built from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GalleryRef {
    pub name: String,
    pub params: serde_json::Value,
}

#[derive(Clone, Debug)]
pub struct System {
    domain: Aabb,
    eta: f64,
    distortion_k: f64,
    horizon: usize,
    source: LevelSource,
    origin: Option<GalleryRef>,
    expected: BTreeMap<String, f64>,
}

impl System {
    /// Builds a system. `eta` defaults to the largest `c̄_n` over the first
    /// levels and `distortion_k` to 1 for similarity systems, 4 otherwise.
    pub fn new(domain: Aabb, source: LevelSource, horizon: usize, eta: Option<f64>, distortion_k: Option<f64>) -> Result<Self> {
        let horizon = match &source {
            LevelSource::List(l) => {
                if l.is_empty() {
                    return Err(Error::InvalidParameter("system needs at least one level".into()));
                }
                horizon.min(l.len())
            }
            LevelSource::Periodic(p) => {
                if p.is_empty() {
                    return Err(Error::InvalidParameter("periodic system needs a non-empty period".into()));
                }
                horizon
            }
            LevelSource::Generator(_) => horizon,
        };
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be positive".into()));
        }
        let mut sys = Self { domain, eta: 0.5, distortion_k: 1.0, horizon, source, origin: None, expected: BTreeMap::new() };
        let probe = horizon.min(256);
        let mut max_c = f64::NEG_INFINITY;
        let mut all_similar = true;
        for n in 1..=probe {
            let lvl = sys.level(n);
            max_c = max_c.max(lvl.log_c_max());
            all_similar &= lvl.is_similarity();
        }
        sys.eta = match eta {
            Some(e) if e > 0.0 && e < 1.0 => e,
            Some(e) => return Err(Error::InvalidParameter(format!("eta {e} outside (0, 1)"))),
            None => max_c.exp(),
        };
        if !(sys.eta < 1.0) {
            return Err(Error::ContractionViolation { level: 1, index: 0, reason: "derivative norm not below 1".into() });
        }
        sys.distortion_k = match distortion_k {
            Some(k) if k >= 1.0 => k,
            Some(k) => return Err(Error::InvalidParameter(format!("distortion K {k} below 1"))),
            None if all_similar => 1.0,
            None => 4.0,
        };
        Ok(sys)
    }

    pub fn from_levels(domain: Aabb, levels: Vec<Level>) -> Result<Self> {
        let n = levels.len();
        Self::new(domain, LevelSource::List(levels.into_iter().map(Arc::new).collect()), n, None, None)
    }

    pub fn periodic(domain: Aabb, period: Vec<Level>) -> Result<Self> {
        Self::new(domain, LevelSource::Periodic(period.into_iter().map(Arc::new).collect()), UNBOUNDED_HORIZON, None, None)
    }

    /// Autonomous system repeating one level forever.
    pub fn autonomous(domain: Aabb, level: Level) -> Result<Self> {
        Self::periodic(domain, vec![level])
    }

    pub fn with_origin(mut self, origin: GalleryRef) -> Self {
        self.origin = Some(origin);
        self
    }

    pub fn with_expected(mut self, key: &str, value: f64) -> Self {
        self.expected.insert(key.to_string(), value);
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_distortion(mut self, k: f64) -> Self {
        self.distortion_k = k;
        self
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = match &self.source {
            LevelSource::List(l) => horizon.min(l.len()),
            _ => horizon,
        }
        .max(1);
        self
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &Aabb {
        &self.domain
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn distortion_k(&self) -> f64 {
        self.distortion_k
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn source(&self) -> &LevelSource {
        &self.source
    }

    pub fn origin(&self) -> Option<&GalleryRef> {
        self.origin.as_ref()
    }

    pub fn expected(&self) -> &BTreeMap<String, f64> {
        &self.expected
    }

    /// Level `n` (1-based). Panics outside `1..=horizon`.
    pub fn level(&self, n: usize) -> Arc<Level> {
        assert!(n >= 1 && n <= self.horizon, "level {n} outside 1..={}", self.horizon);
        match &self.source {
            LevelSource::List(l) => l[n - 1].clone(),
            LevelSource::Periodic(p) => p[(n - 1) % p.len()].clone(),
            LevelSource::Generator(g) => g.level(n),
        }
    }

    /// Clamps a requested horizon to what the system can materialize.
    pub fn clamp_horizon(&self, requested: usize) -> usize {
        requested.clamp(1, self.horizon)
    }

    pub fn is_similarity(&self, upto: usize) -> bool {
        (1..=self.clamp_horizon(upto)).all(|n| self.level(n).is_similarity())
    }

    /// True when every level up to `upto` is the same level.
    pub fn is_autonomous(&self) -> bool {
        match &self.source {
            LevelSource::Periodic(p) => p.iter().all(|l| **l == *p[0]),
            _ => false,
        }
    }

    /// Materializes the first `upto` levels into a list-backed system.
    pub fn materialized(&self, upto: usize) -> System {
        let h = self.clamp_horizon(upto);
        let levels: Arc<[Arc<Level>]> = (1..=h).map(|n| self.level(n)).collect();
        System { source: LevelSource::List(levels), horizon: h, origin: None, ..self.clone() }
    }
}

/// Word `(ω_m, …, ω_n)` of ordinals starting at level `start`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word {
    pub start: usize,
    pub symbols: Vec<u64>,
}

impl Word {
    pub fn initial(symbols: Vec<u64>) -> Self {
        Self { start: 1, symbols }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn end(&self) -> usize {
        self.start + self.symbols.len() - 1
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut symbols = self.symbols.clone();
        symbols.extend_from_slice(&other.symbols);
        Word { start: self.start, symbols }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.symbols.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", s.join("."))
    }
}

/// Derivative and image data of a composed map `φ_ω`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComposedMap {
    pub log_deriv_sup: f64,
    pub log_deriv_inf: f64,
    pub image: Aabb,
}

/// Incremental composition state; extending by a map on the right.
#[derive(Clone, Debug)]
pub(crate) struct Composer {
    log_scale: f64,
    mobius: Option<Mobius>,
}

impl Composer {
    pub(crate) fn new() -> Self {
        Self { log_scale: 0.0, mobius: None }
    }

    pub(crate) fn push(&self, map: &ConformalContraction) -> Self {
        match (&self.mobius, map.is_similarity()) {
            (None, true) => Self { log_scale: self.log_scale + map.log_deriv_sup(), mobius: None },
            (None, false) => {
                let prefix = Mobius { coeff: [1.0, 0.0, 0.0, 1.0], log_det_scaled: self.log_scale };
                Self { log_scale: 0.0, mobius: Some(prefix.compose(&map.mobius_matrix())) }
            }
            (Some(m), _) => Self { log_scale: 0.0, mobius: Some(m.compose(&map.mobius_matrix())) },
        }
    }

    /// `(ln sup_X |Dφ|, ln inf_X |Dφ|)`.
    pub(crate) fn log_extrema(&self, domain: &Aabb) -> (f64, f64) {
        match &self.mobius {
            None => (self.log_scale, self.log_scale),
            Some(m) => m.log_deriv_extrema(domain.min[0], domain.max[0]),
        }
    }
}

/// Composes the maps named by `word`; the empty word gives the identity.
pub fn compose_word(system: &System, word: &Word) -> Result<ComposedMap> {
    let domain = system.domain();
    if word.is_empty() {
        return Ok(ComposedMap { log_deriv_sup: 0.0, log_deriv_inf: 0.0, image: domain.clone() });
    }
    if word.start == 0 || word.end() > system.horizon() {
        return Err(Error::InvalidParameter(format!("word levels {}..={} outside the horizon", word.start, word.end())));
    }
    let mut maps = Vec::with_capacity(word.len());
    for (i, &s) in word.symbols.iter().enumerate() {
        let n = word.start + i;
        maps.push(system.level(n).map(s, domain).map_err(|e| relevel(e, n))?);
    }
    let mut comp = Composer::new();
    for m in &maps {
        comp = comp.push(m);
    }
    let (log_deriv_sup, log_deriv_inf) = comp.log_extrema(domain);
    let image = maps.iter().rev().fold(domain.clone(), |b, m| m.apply_box(&b));
    Ok(ComposedMap { log_deriv_sup, log_deriv_inf, image })
}

pub(crate) fn relevel(e: Error, level: usize) -> Error {
    match e {
        Error::NotSampleable { reason, .. } => Error::NotSampleable { level, reason },
        Error::NotMaterializable { reason, .. } => Error::NotMaterializable { level, reason },
        other => other,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum ViolationKind {
    Overlap { first: u64, second: u64 },
    Contraction { index: u64, deriv_sup: f64 },
    ImageOutside { index: u64 },
    Distortion { estimate: f64, configured: f64 },
    Skipped { detail: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub level: usize,
    #[serde(flatten)]
    pub kind: ViolationKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub osc_ok: bool,
    pub contraction_ok: bool,
    pub distortion_ok: bool,
    pub measured_eta: f64,
    pub distortion_estimate: f64,
    pub levels_checked: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.osc_ok && self.contraction_ok && self.distortion_ok
    }
}

const MAX_VIOLATIONS_PER_LEVEL: usize = 8;

/// Checks the open set condition, uniform contraction and bounded distortion
/// on levels `1..=max_level`.
pub fn validate_system(system: &System, max_level: usize) -> ValidationReport {
    let max_level = system.clamp_horizon(max_level);
    let domain = system.domain();
    let log_eta = system.eta().ln();
    let mut violations = Vec::new();
    let mut measured = f64::NEG_INFINITY;
    let mut osc_ok = true;
    let mut contraction_ok = true;
    for n in 1..=max_level {
        let lvl = system.level(n);
        measured = measured.max(lvl.log_c_max());
        match lvl.materialize(domain, VALIDATION_BUDGET) {
            Ok(maps) => {
                for (i, m) in maps.iter().enumerate() {
                    if !(m.deriv_sup < 1.0) || m.log_deriv_sup() > log_eta + 1e-12 {
                        contraction_ok = false;
                        violations.push(Violation { level: n, kind: ViolationKind::Contraction { index: i as u64, deriv_sup: m.deriv_sup } });
                    }
                    if !domain.contains_box(&m.image, 1e-12) {
                        osc_ok = false;
                        violations.push(Violation { level: n, kind: ViolationKind::ImageOutside { index: i as u64 } });
                    }
                }
                let pairs = overlapping_pairs(&maps, MAX_VIOLATIONS_PER_LEVEL);
                if !pairs.is_empty() {
                    osc_ok = false;
                }
                for (a, b) in pairs {
                    violations.push(Violation { level: n, kind: ViolationKind::Overlap { first: a, second: b } });
                }
            }
            Err(_) => {
                // Analytic families are disjoint by layout; check they fit and contract.
                if lvl.log_c_max() > log_eta + 1e-12 || lvl.log_c_max() >= 0.0 {
                    contraction_ok = false;
                    violations.push(Violation { level: n, kind: ViolationKind::Contraction { index: 0, deriv_sup: lvl.log_c_max().exp() } });
                }
                if domain.dim() != 1 || lvl.log_hull_diam(domain) > domain.side(0).ln() + 1e-12 {
                    osc_ok = false;
                    violations.push(Violation { level: n, kind: ViolationKind::ImageOutside { index: 0 } });
                }
            }
        }
    }
    let distortion_estimate = if system.is_similarity(max_level) { 1.0 } else { sampled_distortion(system, max_level) };
    let distortion_ok = distortion_estimate <= system.distortion_k() * (1.0 + 1e-12);
    if !distortion_ok {
        violations.push(Violation { level: max_level, kind: ViolationKind::Distortion { estimate: distortion_estimate, configured: system.distortion_k() } });
    }
    ValidationReport {
        osc_ok,
        contraction_ok,
        distortion_ok,
        measured_eta: measured.exp(),
        distortion_estimate,
        levels_checked: max_level,
        violations,
    }
}

/// Pairs of maps whose images have intersecting interiors, found by a sweep
/// along the first axis.
pub fn overlapping_pairs(maps: &[ConformalContraction], limit: usize) -> Vec<(u64, u64)> {
    let mut order: Vec<usize> = (0..maps.len()).collect();
    order.sort_by(|&a, &b| maps[a].image.min[0].total_cmp(&maps[b].image.min[0]));
    let mut out = Vec::new();
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            if maps[j].image.min[0] >= maps[i].image.max[0] {
                break;
            }
            if overlap_beyond_rounding(&maps[i].image, &maps[j].image) {
                out.push((i.min(j) as u64, i.max(j) as u64));
                if out.len() >= limit {
                    return out;
                }
            }
        }
    }
    out
}

/// Interiors intersect by more than a few ulps of the coordinates, so images
/// that touch exactly are not reported after rounding.
fn overlap_beyond_rounding(a: &Aabb, b: &Aabb) -> bool {
    (0..a.dim()).all(|i| {
        let scale = a.min[i].abs().max(a.max[i].abs()).max(b.min[i].abs()).max(b.max[i].abs());
        a.max[i].min(b.max[i]) - a.min[i].max(b.min[i]) > 4.0 * f64::EPSILON * scale
    })
}

const DISTORTION_ENUMERATION: f64 = 20_000.0;
const DISTORTION_SAMPLES: usize = 2_000;

/// `sup/inf |Dφ_ω|` over compositions starting at every level up to `max_level`.
fn sampled_distortion(system: &System, max_level: usize) -> f64 {
    let domain = system.domain();
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(0x6469_7374);
    for start in 1..=max_level {
        let mut comp = vec![(Composer::new(), 1.0f64)];
        let mut total = 1.0f64;
        for n in start..=max_level {
            let lvl = system.level(n);
            let count = match lvl.count() {
                Some(c) => c,
                None => break,
            };
            total *= count as f64;
            let mut next = Vec::new();
            if total <= DISTORTION_ENUMERATION {
                for (c, _) in &comp {
                    for k in 0..count {
                        if let Ok(m) = lvl.map(k, domain) {
                            next.push((c.push(&m), 1.0));
                        }
                    }
                }
            } else {
                for _ in 0..DISTORTION_SAMPLES {
                    let (c, _) = &comp[rng.gen_range(0..comp.len())];
                    if let Ok(m) = lvl.map(rng.gen_range(0..count), domain) {
                        next.push((c.push(&m), 1.0));
                    }
                }
            }
            for (c, _) in &next {
                let (hi, lo) = c.log_extrema(domain);
                worst = worst.max(hi - lo);
            }
            comp = next;
        }
    }
    worst.exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::level::Level;

    fn cantor() -> System {
        let x = Aabb::unit(1);
        let maps = vec![
            ConformalContraction::affine_1d(1.0 / 3.0, 0.0, &x).unwrap(),
            ConformalContraction::affine_1d(1.0 / 3.0, 2.0 / 3.0, &x).unwrap(),
        ];
        System::autonomous(x, Level::explicit(maps).unwrap()).unwrap()
    }

    #[test]
    fn cantor_validates() {
        let r = validate_system(&cantor(), 3);
        assert!(r.osc_ok && r.contraction_ok);
        assert!((r.measured_eta - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(cantor().distortion_k(), 1.0);
    }

    #[test]
    fn overlap_detected() {
        let x = Aabb::unit(1);
        let maps = vec![
            ConformalContraction::affine_1d(0.5, 0.0, &x).unwrap(),
            ConformalContraction::affine_1d(0.5, 0.2, &x).unwrap(),
        ];
        let sys = System::from_levels(x, vec![Level::explicit(maps).unwrap()]).unwrap();
        let r = validate_system(&sys, 1);
        assert!(!r.osc_ok);
        assert_eq!(r.violations[0], Violation { level: 1, kind: ViolationKind::Overlap { first: 0, second: 1 } });
    }

    #[test]
    fn cantor_word_composition() {
        let c = compose_word(&cantor(), &Word::initial(vec![0, 0])).unwrap();
        assert_eq!(c.image, Aabb::interval(0.0, 1.0 / 9.0));
        assert!((c.log_deriv_sup - 2.0 * (1.0f64 / 3.0).ln()).abs() < 1e-15);
        let id = compose_word(&cantor(), &Word::initial(vec![])).unwrap();
        assert_eq!(id.log_deriv_sup, 0.0);
    }

    #[test]
    fn moebius_word_oracle() {
        let x = Aabb::unit(1);
        let lvl = Level::explicit(vec![ConformalContraction::moebius(2, &x).unwrap(), ConformalContraction::moebius(3, &x).unwrap()]).unwrap();
        let sys = System::autonomous(x, lvl).unwrap();
        let c = compose_word(&sys, &Word::initial(vec![0, 1])).unwrap();
        // chain rule on a fine grid
        let f = |p: f64| 1.0 / (2.0 + 1.0 / (3.0 + p));
        let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..=10_000 {
            let p = i as f64 / 10_000.0;
            let d = (3.0 + p).powi(-2) * (2.0 + 1.0 / (3.0 + p)).powi(-2);
            hi = hi.max(d);
            lo = lo.min(d);
        }
        assert!((c.log_deriv_sup - hi.ln()).abs() < 1e-12);
        assert!((c.log_deriv_inf - lo.ln()).abs() < 1e-12);
        assert!((c.image.min[0] - f(0.0)).abs() < 1e-15 && (c.image.max[0] - f(1.0)).abs() < 1e-15);
        let r = validate_system(&sys, 2);
        assert!(r.ok());
        assert!(r.distortion_estimate <= 2.26);
        assert_eq!(sys.distortion_k(), 4.0);
    }
}
