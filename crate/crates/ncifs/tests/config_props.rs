mod common;

use common::*;
use ncifs::config::{parse_config, serialize_config};
use ncifs::gallery;
use ncifs::limit_set::{sample_points, SampleStrategy};
use ncifs::pressure::level_log_sum;
use ncifs::System;
use proptest::prelude::*;
use serde_json::json;

fn same_sums(a: &System, b: &System, levels: usize) -> bool {
    (1..=levels).all(|n| [0.0, 0.3, 0.7, 1.0].iter().all(|&t| level_log_sum(a, n, t) == level_log_sum(b, n, t)))
        && a.horizon() == b.horizon()
        && a.eta() == b.eta()
        && a.distortion_k() == b.distortion_k()
}

proptest! {
    #[test]
    fn explicit_configs_round_trip(sys in any_system(6)) {
        let back = parse_config(&serialize_config(&sys).unwrap()).unwrap();
        prop_assert!(same_sums(&sys, &back, 6));
    }

    #[test]
    fn periodic_configs_round_trip(sys in periodic_system()) {
        let back = parse_config(&serialize_config(&sys).unwrap()).unwrap();
        prop_assert!(same_sums(&sys, &back, 12));
    }

    #[test]
    fn serialization_is_deterministic(sys in any_system(4)) {
        prop_assert_eq!(serialize_config(&sys).unwrap(), serialize_config(&sys).unwrap());
    }

    #[test]
    fn sampling_is_reproducible(sys in similarity_system(10), seed in any::<u64>()) {
        let a = sample_points(&sys, 10, 1500, SampleStrategy::UniformSymbolic, seed).unwrap();
        let b = sample_points(&sys, 10, 1500, SampleStrategy::UniformSymbolic, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn gallery_configs_round_trip() {
    let cases = [
        ("cantor", json!({})),
        ("cube-subdivision", json!({"dim": 3})),
        ("custom-similarity", json!({"scales": [0.2, 0.5]})),
        ("cantor-family", json!({"s": 1.1, "horizon": 100})),
        ("geometric", json!({"ratio": 0.25})),
        ("counterexample", json!({"t1": 0.3, "t2": 0.6, "eps": 0.5})),
        ("superexp", json!({})),
        ("continued-fraction", json!({"base": 3, "alpha": 1.5})),
        ("jordan-rams", json!({"lambda": 3.0})),
    ];
    for (name, params) in cases {
        let sys = gallery::build(name, &params).unwrap();
        let back = parse_config(&serialize_config(&sys).unwrap()).unwrap();
        assert!(same_sums(&sys, &back, sys.horizon().min(30)), "{name}");
    }
}
