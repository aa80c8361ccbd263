//! Log-domain summation kernels.
//!
//! Every partition sum in this crate is carried as a natural logarithm.
//! `f64::INFINITY` is the explicit divergence signal and `f64::NEG_INFINITY`
//! stands for an empty sum.

/// `ln(e^a + e^b)` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::INFINITY || b == f64::INFINITY {
        return f64::INFINITY;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(e^a - e^b)` for `a >= b`; returns NaN when `b > a`.
pub fn log_sub_exp(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    if b > a {
        return f64::NAN;
    }
    if b == a {
        return f64::NEG_INFINITY;
    }
    a + ln_one_minus_exp(b - a)
}

/// `ln(1 - e^x)` for `x < 0`, accurate near both ends.
pub fn ln_one_minus_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// Compensated `ln Σ e^{x_i}`.
///
/// The terms are shifted by their maximum and the shifted exponentials are
/// accumulated with Neumaier summation, so the result is accurate even when
/// the inputs span hundreds of orders of magnitude.
pub fn log_sum_exp<I>(values: I) -> f64
where
    I: IntoIterator<Item = f64>,
    I::IntoIter: Clone,
{
    let iter = values.into_iter();
    let mut max = f64::NEG_INFINITY;
    for v in iter.clone() {
        if v == f64::INFINITY {
            return f64::INFINITY;
        }
        if v > max {
            max = v;
        }
    }
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in iter {
        let term = (v - max).exp();
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    max + (sum + comp).ln()
}

/// Neumaier-compensated running sum of finite values with an infinity flag.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        if !x.is_finite() || !self.sum.is_finite() {
            self.sum += x;
            return;
        }
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        if self.sum.is_finite() {
            self.sum + self.comp
        } else {
            self.sum
        }
    }
}

/// `ln ∫_{e^a}^{e^b} x^{-2t} dx` with the logarithmic branch at `t = 1/2`.
pub fn log_power_integral(a: f64, b: f64, t: f64) -> f64 {
    if !(b > a) {
        return f64::NEG_INFINITY;
    }
    let s = 1.0 - 2.0 * t;
    let width = b - a;
    if s == 0.0 {
        return width.ln();
    }
    let u = s.abs();
    let top = if s > 0.0 { b } else { a };
    s * top + ln_one_minus_exp(-u * width) - u.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn add_exp_basic() {
        assert!((log_add_exp(0.0, 0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 3.0), 3.0);
        assert_eq!(log_add_exp(1.0, f64::INFINITY), f64::INFINITY);
    }

    #[test]
    fn sum_exp_handles_extremes() {
        assert_eq!(log_sum_exp(Vec::<f64>::new()), f64::NEG_INFINITY);
        let v = [1000.0, 1000.0];
        assert!((log_sum_exp(v) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        let v = [-1e300, 0.0];
        assert_eq!(log_sum_exp(v), 0.0);
        assert_eq!(log_sum_exp([0.0, f64::INFINITY]), f64::INFINITY);
    }

    #[test]
    fn integral_branches() {
        // ∫_1^e x^{-1} dx = 1
        assert!(log_power_integral(0.0, 1.0, 0.5).abs() < 1e-15);
        // ∫_1^4 dx = 3
        let v = log_power_integral(0.0, 4f64.ln(), 0.0);
        assert!((v - 3f64.ln()).abs() < 1e-14);
        // ∫_2^3 x^{-2} dx = 1/6
        let v = log_power_integral(2f64.ln(), 3f64.ln(), 1.0);
        assert!((v - (1.0f64 / 6.0).ln()).abs() < 1e-14);
        // continuity across the log branch
        let a = log_power_integral(1.0, 5.0, 0.5 - 1e-9);
        let b = log_power_integral(1.0, 5.0, 0.5);
        assert!((a - b).abs() < 1e-8);
    }

    proptest! {
        #[test]
        fn sum_exp_matches_naive(xs in proptest::collection::vec(-30.0f64..30.0, 1..40)) {
            let naive: f64 = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
            let got = log_sum_exp(xs.iter().copied());
            prop_assert!((naive - got).abs() <= 1e-12 * naive.abs().max(1.0));
        }

        #[test]
        fn sum_exp_shift_invariant(xs in proptest::collection::vec(-30.0f64..30.0, 1..20), c in -500.0f64..500.0) {
            let a = log_sum_exp(xs.iter().copied()) + c;
            let b = log_sum_exp(xs.iter().map(|x| x + c));
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }

        #[test]
        fn sub_inverts_add(a in -50.0f64..50.0, d in 1e-6f64..40.0) {
            let b = a - d;
            let s = log_add_exp(a, b);
            prop_assert!((log_sub_exp(s, b) - a).abs() < 1e-9);
        }
    }
}
