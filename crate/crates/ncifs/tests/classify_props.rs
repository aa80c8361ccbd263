mod common;

use common::*;
use ncifs::classify::{classify_growth, GrowthClass};
use ncifs::LevelSource;
use proptest::prelude::*;

const H: usize = 20_000;

/// Secant rates of a bounded series are at most its range over half the tail start.
fn secant_bound(values: &[f64]) -> f64 {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (hi - lo) / (0.4 * H as f64) + 1e-12
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Level alphabets of a periodic system are bounded, so the per-level rates vanish;
    // the per-period average shows up in the word count instead.
    #[test]
    fn periodic_growth_rates(sys in periodic_system()) {
        let g = classify_growth(&sys, H).unwrap();
        let LevelSource::Periodic(period) = sys.source() else { unreachable!() };
        let counts: Vec<f64> = period.iter().map(|l| l.log_count()).collect();
        prop_assert!(g.a_minus.abs() <= secant_bound(&counts));
        prop_assert!(g.a_plus.abs() <= secant_bound(&counts));
        let q = period.iter().map(|l| l.count().unwrap()).max().unwrap();
        prop_assert_eq!(g.klass, GrowthClass::UniformlyFinite { q });
        let m = period.len();
        let per_period = counts.iter().sum::<f64>() / m as f64;
        let cumulative = g.log_counts[..6 * m].iter().sum::<f64>() / (6 * m) as f64;
        prop_assert!((cumulative - per_period).abs() <= 1e-12);
    }

    #[test]
    fn periodic_contraction_rates(sys in periodic_system()) {
        let g = classify_growth(&sys, H).unwrap();
        let LevelSource::Periodic(period) = sys.source() else { unreachable!() };
        let inv: Vec<f64> = period.iter().flat_map(|l| [-l.log_c_max(), -l.log_c_min()]).collect();
        prop_assert!(g.b_minus.abs() <= secant_bound(&inv));
        prop_assert!(g.b_plus.abs() <= secant_bound(&inv));
    }
}
