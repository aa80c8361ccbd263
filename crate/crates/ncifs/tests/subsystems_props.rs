mod common;

use common::*;
use ncifs::pressure::partition_log_sum_exact;
use ncifs::subsystems::{truncate_by_mass, WordEnumerator};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn truncation_loses_at_most_the_stated_factor(sys in any_system(5), n in 1usize..=5, t in 0.0f64..1.0, delta in 0.01f64..1.0) {
        let r = truncate_by_mass(&sys, t, delta).unwrap();
        let k = sys.distortion_k();
        let full = partition_log_sum_exact(&sys, n, t, 1 << 16).unwrap();
        let kept = partition_log_sum_exact(&r.subsystem, n, t, 1 << 16).unwrap();
        prop_assert!(full <= n as f64 * (delta * k.powf(2.0 * t)).ln_1p() + kept + 1e-12);
    }

    #[test]
    fn truncation_keeps_a_minimal_prefix(sys in similarity_system(3), t in 0.0f64..1.0, delta in 0.01f64..1.0) {
        let r = truncate_by_mass(&sys, t, delta).unwrap();
        for n in 1..=3 {
            let lvl = sys.level(n);
            let mut terms: Vec<f64> = (0..lvl.count().unwrap()).map(|k| t * lvl.log_deriv_of(k).unwrap()).collect();
            terms.sort_by(|a, b| b.total_cmp(a));
            let total: f64 = terms.iter().map(|x| x.exp()).sum();
            let k = r.per_level_kept[n - 1] as usize;
            let kept: f64 = terms[..k].iter().map(|x| x.exp()).sum();
            prop_assert!(total <= (1.0 + delta) * kept * (1.0 + 1e-12));
            if k > 1 {
                let fewer: f64 = terms[..k - 1].iter().map(|x| x.exp()).sum();
                prop_assert!(total > (1.0 + delta) * fewer);
            }
        }
    }

    #[test]
    fn enumeration_reaches_every_short_word(alphabet in 1u64..4, len in 1usize..4, seed in any::<u64>()) {
        let target: Vec<u64> = (0..len).map(|i| (seed >> (8 * i)) % alphabet).collect();
        prop_assert!(WordEnumerator::new(Some(alphabet)).take(10_000).any(|w| w == target));
        prop_assert!(WordEnumerator::new(None).take(100_000).any(|w| w == target));
    }
}
