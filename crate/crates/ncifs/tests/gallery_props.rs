use ncifs::classify::{class_membership, MembershipOptions};
use ncifs::gallery::{build_continued_fraction, build_counterexample, build_jordan_rams, counterexample_base, realize_random, RandomDriver};
use ncifs::logsum::log_sum_exp;
use ncifs::pressure::log_z_series;
use ncifs::{Aabb, ConformalContraction, Level};
use proptest::prelude::*;

fn counterexample_params() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.2f64..0.5, 0.1f64..0.3, 0.3f64..0.9).prop_map(|(t1, gap, eps)| (t1, t1 + gap, eps))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn schedule_doubles_against_the_base((t1, t2, eps) in counterexample_params()) {
        let (phi, data) = build_counterexample(t1, t2, eps, 3000).unwrap();
        let psi = counterexample_base(t1, t2, eps).unwrap();
        let h = phi.horizon();
        let zp = log_z_series(&phi, t1, h);
        let zq = log_z_series(&psi, t1, h);
        for s in data.schedule.iter().skip(1) {
            let (q, p) = (zq.at(s.n_k - 1).1, zp.at(s.n_k - 1).1);
            prop_assert!(q / 2.0 < p && p < 2.0 * q, "n_k = {}: ψ {q}, φ {p}", s.n_k);
        }
    }

    #[test]
    fn base_sums_return_to_one((t1, t2, eps) in counterexample_params()) {
        let psi = counterexample_base(t1, t2, eps).unwrap();
        let ncifs::LevelSource::Periodic(period) = psi.source() else { unreachable!() };
        let m = period.len();
        let z = log_z_series(&psi, t2, 10 * m);
        for k in 1..=10 {
            prop_assert!(z.at(k * m).1.abs() <= 1e-12 * (k * m) as f64);
        }
    }

    #[test]
    fn scheduled_alphabets_grow_slowly((t1, t2, eps) in counterexample_params()) {
        let (_, data) = build_counterexample(t1, t2, eps, 3000).unwrap();
        for s in &data.schedule {
            prop_assert!(s.log_m_k / s.n_k as f64 <= eps + 1e-12);
        }
    }

    #[test]
    fn random_realizations_are_ev(seed in any::<u64>(), p in 0.2f64..0.8) {
        let x = Aabb::unit(1);
        let fiber = |s: f64| Level::explicit(vec![ConformalContraction::affine_1d(s, 0.0, &x).unwrap(), ConformalContraction::affine_1d(s, 1.0 - s, &x).unwrap()]).unwrap();
        let driver = RandomDriver::bernoulli(x.clone(), vec![fiber(0.3), fiber(0.2)], vec![p, 1.0 - p]).unwrap();
        let sys = realize_random(&driver, 400, seed).unwrap();
        prop_assert!(class_membership(&sys, 400, &MembershipOptions::default()).unwrap().in_ev);
    }
}

/// Direct `ln Σ_i ‖Dφ_i‖^t` over a materializable level.
fn direct(level: &Level, t: f64) -> f64 {
    let n = level.count().unwrap();
    log_sum_exp((0..n).map(|k| t * level.log_deriv_of(k).unwrap()))
}

#[test]
fn analytic_sums_sandwich_direct_summation() {
    for sys in [build_continued_fraction(2, 2.0).unwrap(), build_continued_fraction(3, 1.5).unwrap(), build_jordan_rams(2.0).unwrap(), build_jordan_rams(3.0).unwrap()] {
        let mut checked = 0;
        for n in 1..=sys.horizon().min(40) {
            let lvl = sys.level(n);
            if lvl.count().map_or(true, |c| c > 200_000) {
                continue;
            }
            for t in [0.3, 0.5, 0.7, 1.0] {
                let (lo, hi) = lvl.log_sum_bounds(t);
                let d = direct(&lvl, t);
                assert!(lo <= d + 1e-12 && d <= hi + 1e-12, "level {n}, t {t}: {lo} ≤ {d} ≤ {hi}");
            }
            checked += 1;
        }
        assert!(checked >= 2);
    }
}
