mod common;

use common::*;
use ncifs::gallery::build_continued_fraction;
use ncifs::{compose_word, Word};
use proptest::prelude::*;

proptest! {
    #[test]
    fn words_contract_at_rate_eta(sys in any_system(5)) {
        let eta = sys.eta().ln();
        for n in 1..=4 {
            for w in all_words(&sys, n) {
                let c = compose_word(&sys, &Word::initial(w)).unwrap();
                prop_assert!(c.log_deriv_sup <= n as f64 * eta + 1e-12);
            }
        }
    }

    #[test]
    fn derivatives_are_submultiplicative_within_distortion(sys in moebius_system(6)) {
        let log_k = sys.distortion_k().ln();
        for split in 1..6 {
            for w in all_words(&sys, 6).into_iter().step_by(7) {
                let whole = compose_word(&sys, &Word::initial(w.clone())).unwrap().log_deriv_sup;
                let head = compose_word(&sys, &Word::initial(w[..split].to_vec())).unwrap().log_deriv_sup;
                let tail = compose_word(&sys, &Word { start: split + 1, symbols: w[split..].to_vec() }).unwrap().log_deriv_sup;
                prop_assert!(whole <= head + tail + 1e-12);
                prop_assert!(whole >= head + tail - log_k - 1e-12);
            }
        }
    }

    #[test]
    fn images_nest(sys in any_system(4)) {
        for w in all_words(&sys, 4) {
            let long = compose_word(&sys, &Word::initial(w.clone())).unwrap().image;
            let short = compose_word(&sys, &Word::initial(w[..3].to_vec())).unwrap().image;
            prop_assert!(short.contains_box(&long, 1e-12));
        }
    }

    #[test]
    fn generated_levels_are_deterministic(n in 1usize..900) {
        let a = build_continued_fraction(2, 2.0).unwrap();
        let b = build_continued_fraction(2, 2.0).unwrap();
        prop_assert_eq!(a.level(n), a.level(n));
        prop_assert_eq!(a.level(n), b.level(n));
    }
}
