use std::sync::Arc;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Aabb;
use crate::level::Level;
use crate::pressure::bisect_band;
use crate::system::{LevelSource, System};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DriverKind {
    Bernoulli { probs: Vec<f64> },
    Markov { transition: Vec<Vec<f64>> },
    /// Rotation by `angle` on `[0,1)`; `cuts` split the circle into one arc per fiber.
    RotationCoded { angle: f64, cuts: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomDriver {
    pub domain: Aabb,
    pub fibers: Vec<Level>,
    #[serde(flatten)]
    pub kind: DriverKind,
}

impl RandomDriver {
    pub fn bernoulli(domain: Aabb, fibers: Vec<Level>, probs: Vec<f64>) -> Result<Self> {
        let d = Self { domain, fibers, kind: DriverKind::Bernoulli { probs } };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        let k = self.fibers.len();
        if k == 0 {
            return bad("driver needs at least one fiber");
        }
        let c0 = self.fibers[0].count();
        if c0.is_none() || self.fibers.iter().any(|f| f.count() != c0) {
            return bad("fibers must share one finite alphabet");
        }
        let stochastic = |row: &[f64]| row.len() == k && row.iter().all(|p| *p >= 0.0) && (row.iter().sum::<f64>() - 1.0).abs() < 1e-9;
        match &self.kind {
            DriverKind::Bernoulli { probs } => {
                if !stochastic(probs) {
                    return bad("probabilities must be non-negative, one per fiber, summing to 1");
                }
            }
            DriverKind::Markov { transition } => {
                if transition.len() != k || !transition.iter().all(|r| stochastic(r)) {
                    return bad("transition matrix must be square and row-stochastic");
                }
                let mut seen = vec![false; k];
                let mut stack = vec![0];
                seen[0] = true;
                while let Some(i) = stack.pop() {
                    for j in 0..k {
                        if transition[i][j] > 0.0 && !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
                let back = (0..k).all(|s| {
                    let mut seen = vec![false; k];
                    let mut stack = vec![s];
                    seen[s] = true;
                    while let Some(i) = stack.pop() {
                        for j in 0..k {
                            if transition[i][j] > 0.0 && !seen[j] {
                                seen[j] = true;
                                stack.push(j);
                            }
                        }
                    }
                    seen[0]
                });
                if !(seen.iter().all(|s| *s) && back) {
                    return bad("transition matrix must be irreducible");
                }
            }
            DriverKind::RotationCoded { angle, cuts } => {
                if cuts.len() + 1 != k || cuts.windows(2).any(|w| w[0] >= w[1]) || cuts.iter().any(|c| !(*c > 0.0 && *c < 1.0)) || !angle.is_finite() {
                    return bad("rotation needs fibers − 1 increasing cut points in (0, 1)");
                }
            }
        }
        Ok(())
    }

    /// Fiber indices `f(T^n λ)` for `n = 1..=horizon`.
    pub fn orbit(&self, horizon: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        match &self.kind {
            DriverKind::Bernoulli { probs } => {
                let w = WeightedIndex::new(probs).expect("validated");
                (0..horizon).map(|_| w.sample(rng)).collect()
            }
            DriverKind::Markov { transition } => {
                let k = transition.len();
                let mut pi = vec![1.0 / k as f64; k];
                for _ in 0..1000 {
                    let next: Vec<f64> = (0..k).map(|j| (0..k).map(|i| pi[i] * transition[i][j]).sum::<f64>()).collect();
                    pi = next.iter().zip(&pi).map(|(a, b)| 0.5 * (a + b)).collect();
                }
                let rows: Vec<WeightedIndex<f64>> = transition.iter().map(|r| WeightedIndex::new(r).expect("validated")).collect();
                let mut state = WeightedIndex::new(&pi).expect("stationary").sample(rng);
                (0..horizon)
                    .map(|_| {
                        state = rows[state].sample(rng);
                        state
                    })
                    .collect()
            }
            DriverKind::RotationCoded { angle, cuts } => {
                let mut x: f64 = rng.gen();
                (0..horizon)
                    .map(|_| {
                        x = (x + angle).rem_euclid(1.0);
                        cuts.iter().take_while(|c| **c <= x).count()
                    })
                    .collect()
            }
        }
    }
}

/// One realization `Φ_λ^{(n)} = fiber(T^n λ)`.
pub fn realize_random(driver: &RandomDriver, horizon: usize, seed: u64) -> Result<System> {
    driver.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fibers: Vec<Arc<Level>> = driver.fibers.iter().cloned().map(Arc::new).collect();
    let levels: Vec<Arc<Level>> = driver.orbit(horizon, &mut rng).into_iter().map(|i| fibers[i].clone()).collect();
    System::new(driver.domain.clone(), LevelSource::List(levels.into()), horizon, None, None)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectedPressure {
    pub t: f64,
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
    pub horizon: usize,
}

/// Fiber visit counts per sample; sample `i` uses ChaCha stream `i` of `seed`.
fn visit_counts(driver: &RandomDriver, horizon: usize, samples: usize, seed: u64) -> Vec<Vec<u64>> {
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut counts = vec![0u64; driver.fibers.len()];
            for f in driver.orbit(horizon, &mut rng) {
                counts[f] += 1;
            }
            counts
        })
        .collect()
}

fn summarize(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn sample_pressures(driver: &RandomDriver, counts: &[Vec<u64>], t: f64, horizon: usize) -> Vec<f64> {
    let sums: Vec<f64> = driver.fibers.iter().map(|f| f.log_sum(t)).collect();
    counts.iter().map(|c| c.iter().zip(&sums).map(|(k, s)| *k as f64 * s).sum::<f64>() / horizon as f64).collect()
}

/// Mean over `samples` realizations of `(1/horizon) ln Z_horizon(t)`, using
/// the factorized upper bound (exact for similarity fibers).
pub fn expected_pressure(driver: &RandomDriver, t: f64, horizon: usize, samples: usize, seed: u64) -> Result<ExpectedPressure> {
    driver.validate()?;
    if samples == 0 || horizon == 0 {
        return Err(Error::InvalidParameter("samples and horizon must be positive".into()));
    }
    let counts = visit_counts(driver, horizon, samples, seed);
    let (mean, stderr) = summarize(&sample_pressures(driver, &counts, t, horizon));
    Ok(ExpectedPressure { t, mean, stderr, samples, horizon })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectedRoot {
    pub t_star: f64,
    pub bracket: (f64, f64),
    pub samples: usize,
    pub horizon: usize,
}

/// Zero of the sample-mean expected pressure, with common random numbers
/// across `t`.
pub fn expected_pressure_root(driver: &RandomDriver, horizon: usize, samples: usize, seed: u64, tol: f64) -> Result<ExpectedRoot> {
    driver.validate()?;
    if samples == 0 || horizon == 0 {
        return Err(Error::InvalidParameter("samples and horizon must be positive".into()));
    }
    let counts = visit_counts(driver, horizon, samples, seed);
    let d = driver.domain.dim() as f64;
    let (t_star, bracket, _, _) = bisect_band(0.0, d, tol, |t| {
        let (m, _) = summarize(&sample_pressures(driver, &counts, t, horizon));
        (m, m, false)
    })?;
    Ok(ExpectedRoot { t_star, bracket, samples, horizon })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::ConformalContraction;
    use crate::pressure::pressure_estimate;

    fn fiber(s: f64) -> Level {
        let x = Aabb::unit(1);
        Level::explicit(vec![ConformalContraction::affine_1d(s, 0.0, &x).unwrap(), ConformalContraction::affine_1d(s, 1.0 - s, &x).unwrap()]).unwrap()
    }

    #[test]
    fn bernoulli_two_fiber_root() {
        let d = RandomDriver::bernoulli(Aabb::unit(1), vec![fiber(1.0 / 3.0), fiber(1.0 / 9.0)], vec![0.5, 0.5]).unwrap();
        let r = expected_pressure_root(&d, 1000, 64, 11, 1e-6).unwrap();
        assert!((r.t_star - 2.0 * 2f64.ln() / (3.0 * 3f64.ln())).abs() < 5e-3);
        let a = expected_pressure(&d, 0.3, 1000, 64, 1).unwrap();
        let b = expected_pressure(&d, 0.3, 1000, 64, 2).unwrap();
        assert!((a.mean - b.mean).abs() < 3.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt());
    }

    #[test]
    fn single_fiber_is_autonomous() {
        let d = RandomDriver::bernoulli(Aabb::unit(1), vec![fiber(0.25)], vec![1.0]).unwrap();
        let ep = expected_pressure(&d, 0.7, 200, 4, 3).unwrap();
        let sys = System::autonomous(Aabb::unit(1), fiber(0.25)).unwrap();
        let p = pressure_estimate(&sys, 0.7, 200, None);
        assert!((ep.mean - p.lP_hat).abs() < 1e-12);
        assert_eq!(ep.stderr, 0.0);
    }

    #[test]
    fn drivers_validate() {
        let fibers = vec![fiber(0.3), fiber(0.2)];
        let markov = RandomDriver { domain: Aabb::unit(1), fibers: fibers.clone(), kind: DriverKind::Markov { transition: vec![vec![0.0, 1.0], vec![1.0, 0.0]] } };
        assert!(markov.validate().is_ok());
        let reducible = RandomDriver { domain: Aabb::unit(1), fibers: fibers.clone(), kind: DriverKind::Markov { transition: vec![vec![1.0, 0.0], vec![0.5, 0.5]] } };
        assert!(reducible.validate().is_err());
        let rot = RandomDriver { domain: Aabb::unit(1), fibers, kind: DriverKind::RotationCoded { angle: 0.5f64.sqrt(), cuts: vec![0.5] } };
        let s = realize_random(&rot, 100, 5).unwrap();
        assert_eq!(s.horizon(), 100);
    }
}
