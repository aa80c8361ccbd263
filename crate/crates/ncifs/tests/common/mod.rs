#![allow(dead_code)]

use ncifs::{Aabb, ConformalContraction, Level, System};
use proptest::prelude::*;

/// Scales of one interval level laid out left to right with equal gaps.
pub fn similarity_level(weights: &[f64], fill: f64) -> Level {
    let x = Aabb::unit(1);
    let total: f64 = weights.iter().sum();
    let scales: Vec<f64> = weights.iter().map(|w| w / total * fill).collect();
    let gap = if scales.len() > 1 { (1.0 - fill) / (scales.len() - 1) as f64 } else { 0.0 };
    let mut at = 0.0f64;
    let maps = scales
        .iter()
        .map(|&s| {
            let m = ConformalContraction::affine_1d(s, at.min(1.0 - s), &x).unwrap();
            at += s + gap;
            m
        })
        .collect();
    Level::explicit(maps).unwrap()
}

pub fn moebius_level(indices: &[u64]) -> Level {
    let x = Aabb::unit(1);
    Level::explicit(indices.iter().map(|&j| ConformalContraction::moebius(j, &x).unwrap()).collect()).unwrap()
}

pub fn level_strategy() -> impl Strategy<Value = Level> {
    (prop::collection::vec(0.1f64..1.0, 1..=4), 0.05f64..0.95).prop_map(|(w, fill)| similarity_level(&w, fill))
}

pub fn moebius_strategy() -> impl Strategy<Value = Level> {
    prop::collection::btree_set(2u64..20, 1..=4).prop_map(|s| moebius_level(&s.into_iter().collect::<Vec<_>>()))
}

pub fn similarity_system(levels: usize) -> impl Strategy<Value = System> {
    prop::collection::vec(level_strategy(), levels).prop_map(|l| System::from_levels(Aabb::unit(1), l).unwrap())
}

pub fn moebius_system(levels: usize) -> impl Strategy<Value = System> {
    prop::collection::vec(moebius_strategy(), levels).prop_map(|l| System::from_levels(Aabb::unit(1), l).unwrap())
}

pub fn any_system(levels: usize) -> impl Strategy<Value = System> {
    prop_oneof![similarity_system(levels), moebius_system(levels)]
}

pub fn periodic_system() -> impl Strategy<Value = System> {
    prop::collection::vec(level_strategy(), 1..=3).prop_map(|p| System::periodic(Aabb::unit(1), p).unwrap())
}

/// Every word of length `n` starting at level 1.
pub fn all_words(sys: &System, n: usize) -> Vec<Vec<u64>> {
    let mut words = vec![vec![]];
    for k in 1..=n {
        let c = sys.level(k).count().unwrap();
        words = words.into_iter().flat_map(|w| (0..c).map(move |s| [w.clone(), vec![s]].concat())).collect();
    }
    words
}
