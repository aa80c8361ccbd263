//! Finite and balanced subsystems, and the dense interleaving of an
//! autonomous system with its composed maps.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::level::Level;
use crate::sequence::SequenceSpec;
use crate::system::{LevelGenerator, LevelSource, System};

#[derive(Clone, Debug)]
pub struct TruncationResult {
    pub subsystem: System,
    pub delta: f64,
    pub t: f64,
    /// Kept count per stored level (one period for periodic systems).
    pub per_level_kept: Vec<u64>,
    /// `δ·K^{2d}`.
    pub pressure_drop_bound: f64,
}

/// Smallest descending prefix `I_f` with `Σ_I ‖Dφ‖^t ≤ (1+δ) Σ_{I_f} ‖Dφ‖^t`.
pub fn truncate_level(level: &Level, t: f64, delta: f64, n: usize) -> Result<(Level, u64)> {
    let total = level.log_sum(t);
    if !total.is_finite() {
        return Err(Error::DivergentLevel { level: n, t });
    }
    let slack = delta.ln_1p();
    let ok = |k: f64| slack + level.log_partial_sum(t, k) >= total;
    let k = match level.count() {
        Some(c) => {
            let (mut lo, mut hi) = (1u64, c);
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                if ok(mid as f64) {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            lo
        }
        None if level.is_infinite() => {
            let mut hi = 1u64;
            while !ok(hi as f64) {
                hi = hi.checked_mul(2).ok_or(Error::NotMaterializable { level: n, reason: "prefix exceeds machine integers".into() })?;
            }
            let mut lo = hi / 2 + 1;
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                if ok(mid as f64) {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            lo.max(1)
        }
        None => {
            let (mut lo, mut hi) = (0.0f64, level.log_count());
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if ok(mid.exp()) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let k = hi.exp().ceil();
            if k >= 9.2e18 {
                return Err(Error::NotMaterializable { level: n, reason: "kept prefix exceeds machine integers".into() });
            }
            k as u64
        }
    };
    Ok((level.prefix(k as f64), k))
}

/// Keeps, level by level, the smallest descending prefix carrying all but a
/// `δ/(1+δ)` fraction of the level sum at `t`.
pub fn truncate_by_mass(system: &System, t: f64, delta: f64) -> Result<TruncationResult> {
    if !(delta > 0.0 && t >= 0.0) {
        return Err(Error::InvalidParameter("truncation needs δ > 0 and t ≥ 0".into()));
    }
    let (stored, periodic): (Vec<Arc<Level>>, bool) = match system.source() {
        LevelSource::Periodic(p) => (p.to_vec(), true),
        _ => ((1..=system.horizon()).map(|n| system.level(n)).collect(), false),
    };
    let mut kept = Vec::with_capacity(stored.len());
    let mut levels = Vec::with_capacity(stored.len());
    for (i, lvl) in stored.iter().enumerate() {
        let (l, k) = truncate_level(lvl, t, delta, i + 1)?;
        levels.push(Arc::new(l));
        kept.push(k);
    }
    let source = if periodic { LevelSource::Periodic(levels.into()) } else { LevelSource::List(levels.into()) };
    let subsystem = System::new(system.domain().clone(), source, system.horizon(), Some(system.eta()), Some(system.distortion_k()))?;
    let k2d = system.distortion_k().powi(2 * system.dim() as i32);
    Ok(TruncationResult { subsystem, delta, t, per_level_kept: kept, pressure_drop_bound: delta * k2d })
}

#[derive(Debug)]
struct BalanceTruncation {
    base: System,
    t0: f64,
    alpha: SequenceSpec,
}

impl LevelGenerator for BalanceTruncation {
    fn level(&self, n: usize) -> Arc<Level> {
        let lvl = self.base.level(n);
        Arc::new(lvl.keep_above(balance_threshold(&lvl, self.t0, &self.alpha, n)))
    }
}

/// `ln ε_n = ln c̄_n − ln α_n − (1/t0) ln #I^(n)`.
pub fn balance_threshold(level: &Level, t0: f64, alpha: &SequenceSpec, n: usize) -> f64 {
    level.log_c_max() - alpha.log_value(n) - level.log_count() / t0
}

/// Drops maps with `‖Dφ‖ < ε_n`, so that `ρ_n ≤ α_n (#I^(n))^{1/t0}`.
pub fn truncate_for_balance(system: &System, t0: f64, alpha: SequenceSpec) -> Result<System> {
    if !(t0 > 0.0) {
        return Err(Error::InvalidParameter("t0 must be positive".into()));
    }
    let gen = BalanceTruncation { base: system.clone(), t0, alpha };
    System::new(system.domain().clone(), LevelSource::Generator(Arc::new(gen)), system.horizon(), Some(system.eta()), Some(system.distortion_k()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduledWord {
    pub position: u128,
    pub word: Vec<u64>,
    pub log_deriv: f64,
}

/// All finite words over `{0, …, alphabet−1}` (unbounded when `None`), by
/// weight `len + Σ (ω_i + 1)`, then length, then lexicographically.
#[derive(Clone, Debug)]
pub struct WordEnumerator {
    alphabet: Option<u64>,
    weight: u64,
    pending: std::vec::IntoIter<Vec<u64>>,
}

impl WordEnumerator {
    pub fn new(alphabet: Option<u64>) -> Self {
        Self { alphabet, weight: 1, pending: Vec::new().into_iter() }
    }

    fn words_of_weight(&self, w: u64) -> Vec<Vec<u64>> {
        fn rec(rest: u64, max_part: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
            if rest == 0 {
                out.push(cur.clone());
                return;
            }
            for part in 2..=rest.min(max_part) {
                if rest - part == 1 {
                    continue;
                }
                cur.push(part - 2);
                rec(rest - part, max_part, cur, out);
                cur.pop();
            }
        }
        let max_part = self.alphabet.map_or(u64::MAX, |a| a + 1);
        let mut out = Vec::new();
        rec(w, max_part, &mut Vec::new(), &mut out);
        out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        out
    }
}

impl Iterator for WordEnumerator {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        loop {
            if let Some(w) = self.pending.next() {
                return Some(w);
            }
            if self.weight > 128 {
                return None;
            }
            self.weight += 1;
            self.pending = self.words_of_weight(self.weight).into_iter();
        }
    }
}

fn smallest_position(log_bound: f64) -> u128 {
    let approx = log_bound.exp();
    if approx > 1e15 {
        return (approx * (1.0 + 1e-14)).ceil() as u128;
    }
    let mut n = approx.ceil().max(1.0) as u128;
    while ((n as f64).ln()) < log_bound {
        n += 1;
    }
    while n > 1 && ((n - 1) as f64).ln() >= log_bound {
        n -= 1;
    }
    n
}

/// The first `count` schedule entries: `n_k` is the smallest integer with
/// `ln n_k ≥ max(k, |ln ‖Dφ_{ω^k}‖|)` and `n_k ≥ n_{k−1} + k`.
pub fn dense_schedule(level: &Level, count: usize) -> Result<Vec<ScheduledWord>> {
    let mut out: Vec<ScheduledWord> = Vec::with_capacity(count);
    for (i, word) in WordEnumerator::new(level.count()).take(count).enumerate() {
        let k = i + 1;
        let log_deriv = word.iter().map(|&s| level.log_deriv_of(s).ok_or(Error::NotMaterializable { level: 1, reason: "symbol outside alphabet".into() })).sum::<Result<f64>>()?;
        let bound = (k as f64).max(log_deriv.abs());
        if bound > 88.0 {
            break;
        }
        let mut position = smallest_position(bound);
        if let Some(prev) = out.last() {
            position = position.max(prev.position + k as u128);
        }
        out.push(ScheduledWord { position, word, log_deriv });
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct DenseInterleave {
    pub system: System,
    /// Schedule entries inside the horizon.
    pub schedule: Vec<ScheduledWord>,
}

/// `Θ^(n) = {φ_1, …, φ_n}` off the schedule and the single composed map
/// `φ_{ω^k}` at `n = n_k`.
pub fn interleave_dense(system: &System, horizon: usize) -> Result<DenseInterleave> {
    if !system.is_autonomous() {
        return Err(Error::InvalidParameter("dense interleaving needs an autonomous system".into()));
    }
    let base = system.level(1);
    if !base.is_similarity() {
        return Err(Error::InvalidParameter("dense interleaving supports similarity systems".into()));
    }
    let domain = system.domain();
    let schedule: Vec<ScheduledWord> = dense_schedule(&base, 128)?.into_iter().take_while(|s| s.position <= horizon as u128).collect();
    let full = base.count().map(|c| Arc::new(base.prefix(c as f64)));
    let mut levels: Vec<Arc<Level>> = Vec::with_capacity(horizon);
    let mut next = schedule.iter().peekable();
    for n in 1..=horizon {
        if next.peek().map(|s| s.position) == Some(n as u128) {
            let entry = next.next().expect("peeked");
            let mut map = base.map(entry.word[0], domain)?;
            for &s in &entry.word[1..] {
                map = map.compose_similarity(&base.map(s, domain)?, domain)?;
            }
            levels.push(Arc::new(Level::explicit(vec![map])?));
        } else {
            match &full {
                Some(f) if base.count().is_some_and(|c| n as u64 >= c) => levels.push(f.clone()),
                _ => levels.push(Arc::new(base.prefix(n as f64))),
            }
        }
    }
    let theta = System::new(domain.clone(), LevelSource::List(levels.into()), horizon, Some(system.eta()), Some(1.0))?;
    Ok(DenseInterleave { system: theta, schedule })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Aabb;
    use crate::map::ConformalContraction;
    use crate::pressure::{bowen_dimension, log_z_series, partition_log_sum_exact, BowenOptions};
    use std::collections::BTreeSet;

    fn geometric2() -> System {
        System::autonomous(Aabb::unit(1), Level::geometric(-2f64.ln(), -2f64.ln(), None).unwrap()).unwrap()
    }

    #[test]
    fn geometric_mass_truncation_keeps_four() {
        let r = truncate_by_mass(&geometric2(), 1.0, 0.1).unwrap();
        assert_eq!(r.per_level_kept, vec![4]);
        assert_eq!(r.subsystem.level(7).count(), Some(4));
        let r = truncate_by_mass(&geometric2(), 1.0, 1.5).unwrap();
        assert_eq!(r.per_level_kept, vec![1]);
    }

    #[test]
    fn explicit_truncation_is_minimal_prefix() {
        let x = Aabb::unit(1);
        let scales = [0.05, 0.4, 0.02, 0.3];
        let mut at = 0.0;
        let maps: Vec<_> = scales
            .iter()
            .map(|&s| {
                let m = ConformalContraction::affine_1d(s, at, &x).unwrap();
                at += s;
                m
            })
            .collect();
        let sys = System::autonomous(x, Level::explicit(maps).unwrap()).unwrap();
        let r = truncate_by_mass(&sys, 1.0, 0.05).unwrap();
        assert_eq!(r.per_level_kept, vec![3]);
        let kept: Vec<f64> = match &*r.subsystem.level(1) {
            Level::Explicit(e) => e.maps().iter().map(|m| m.deriv_sup).collect(),
            _ => unreachable!(),
        };
        assert_eq!(kept, vec![0.4, 0.3, 0.05]);
    }

    #[test]
    fn balance_threshold_example() {
        let x = Aabb::unit(1);
        let maps = vec![
            ConformalContraction::affine_1d(0.5, 0.0, &x).unwrap(),
            ConformalContraction::affine_1d(0.25, 0.5, &x).unwrap(),
            ConformalContraction::affine_1d(1.0 / 1024.0, 0.8, &x).unwrap(),
        ];
        let sys = System::autonomous(x, Level::explicit(maps).unwrap()).unwrap();
        let f = truncate_for_balance(&sys, 1.0, "const:1".parse().unwrap()).unwrap();
        assert_eq!(f.level(1).count(), Some(2));
        assert_eq!(f.level(1).log_c_min(), 0.25f64.ln());
    }

    #[test]
    fn enumeration_weight_order() {
        let first: Vec<Vec<u64>> = WordEnumerator::new(None).take(6).collect();
        assert_eq!(first, vec![vec![0], vec![1], vec![2], vec![0, 0], vec![3], vec![0, 1]]);
        let capped: Vec<Vec<u64>> = WordEnumerator::new(Some(1)).take(3).collect();
        assert_eq!(capped, vec![vec![0], vec![0, 0], vec![0, 0, 0]]);
    }

    #[test]
    fn schedule_positions_are_singletons() {
        let base = System::autonomous(Aabb::unit(1), Level::geometric(-3f64.ln(), -3f64.ln(), None).unwrap()).unwrap();
        let d = interleave_dense(&base, 2000).unwrap();
        assert!(d.schedule.len() >= 3);
        for s in &d.schedule {
            assert_eq!(d.system.level(s.position as usize).count(), Some(1));
            assert!((s.position as f64).ln() >= s.log_deriv.abs());
        }
        assert_eq!(d.system.level(2).count(), Some(2));
    }

    #[test]
    fn dense_bowen_matches_base() {
        let base = System::autonomous(Aabb::unit(1), Level::geometric(-3f64.ln(), -3f64.ln(), None).unwrap()).unwrap();
        let d = interleave_dense(&base, 10_000).unwrap();
        let opts = BowenOptions { horizon: 10_000, window: None, tol: 1e-3 };
        let a = bowen_dimension(&base, &opts).unwrap().t_star;
        let b = bowen_dimension(&d.system, &opts).unwrap().t_star;
        assert!((a - 2f64.ln() / 3f64.ln()).abs() < 1e-3);
        assert!((a - b).abs() <= 2e-3, "{a} vs {b}");
    }

    #[test]
    fn dense_pressure_agreement_bound() {
        let geo = Level::geometric(-3f64.ln(), -3f64.ln(), None).unwrap();
        let base = System::autonomous(Aabb::unit(1), geo.clone()).unwrap();
        let h = 5000;
        let d = interleave_dense(&base, h).unwrap();
        let psi = System::from_levels(Aabb::unit(1), (1..=h).map(|n| geo.prefix(n as f64)).collect()).unwrap();
        let t = 0.6;
        let (a, b) = (log_z_series(&d.system, t, h), log_z_series(&psi, t, h));
        for n in 1..=h {
            let k = d.schedule.iter().filter(|s| s.position <= n as u128).count();
            if k == 0 {
                assert!((a.at(n).1 - b.at(n).1).abs() < 1e-9);
                continue;
            }
            let nk = d.schedule[k - 1].position as f64;
            let bound = 2.0 * k as f64 * nk.ln();
            assert!((a.at(n).1 - b.at(n).1).abs() <= bound);
        }
    }

    #[test]
    fn truncation_inequality_small() {
        let x = Aabb::unit(1);
        let lvl = |s: &[f64]| {
            let mut at = 0.0;
            Level::explicit(s.iter().map(|&v| {
                let m = ConformalContraction::affine_1d(v, at, &x).unwrap();
                at += v;
                m
            }).collect()).unwrap()
        };
        let sys = System::from_levels(x.clone(), vec![lvl(&[0.3, 0.2, 0.1]), lvl(&[0.5, 0.05]), lvl(&[0.25, 0.25, 0.2, 0.01])]).unwrap();
        let (t, delta) = (0.7, 0.2);
        let f = truncate_by_mass(&sys, t, delta).unwrap();
        for n in 1..=3 {
            let z = partition_log_sum_exact(&sys, n, t, 1000).unwrap();
            let zf = partition_log_sum_exact(&f.subsystem, n, t, 1000).unwrap();
            assert!(z <= n as f64 * delta.ln_1p() + zf + 1e-12);
        }
    }

    #[test]
    fn first_words_are_complete() {
        let words: Vec<Vec<u64>> = WordEnumerator::new(None).take(50).collect();
        let set: BTreeSet<_> = words.iter().cloned().collect();
        assert_eq!(set.len(), 50);
        let weight = |w: &Vec<u64>| w.len() as u64 + w.iter().map(|s| s + 1).sum::<u64>();
        let top = words.iter().map(weight).max().unwrap();
        // every word of weight below the last one reached is present
        for len in 1..top {
            let mut stack = vec![vec![]];
            while let Some(w) = stack.pop() {
                if w.len() as u64 == len {
                    if weight(&w) < top {
                        assert!(set.contains(&w), "{w:?} missing");
                    }
                    continue;
                }
                for s in 0..top {
                    let mut v = w.clone();
                    v.push(s);
                    if weight(&v) < top {
                        stack.push(v);
                    }
                }
            }
        }
    }
}
