//! Limit-set geometry: projections, point sampling, natural covers and
//! box counting.

use std::collections::HashSet;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Aabb;
use crate::level::{Family, Level};
use crate::logsum::log_sum_exp;
use crate::map::ConformalContraction;
use crate::system::{compose_word, relevel, System, Word};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectedPoint {
    pub point: Vec<f64>,
    pub radius: f64,
}

/// Center of `φ_{ω|depth}(X)`; `radius` is the half-diagonal of that image.
pub fn project(system: &System, prefix: &Word, depth: usize) -> Result<ProjectedPoint> {
    if depth > prefix.len() {
        return Err(Error::InvalidParameter(format!("depth {depth} exceeds word length {}", prefix.len())));
    }
    let w = Word { start: prefix.start, symbols: prefix.symbols[..depth].to_vec() };
    let img = compose_word(system, &w)?.image;
    Ok(ProjectedPoint { point: img.center(), radius: 0.5 * img.diam() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "kebab-case")]
pub enum SampleStrategy {
    UniformSymbolic,
    WeightedByDerivative { t: f64 },
}

/// Points per independently seeded chunk.
const CHUNK: usize = 1024;
const SAMPLING_BUDGET: u64 = 1_000_000;

enum Sampler {
    Uniform(u64),
    Table(WeightedIndex<f64>),
    /// `P(k) ∝ r^k`; stores `ln r`.
    Geometric(f64),
}

impl Sampler {
    fn draw(&self, rng: &mut ChaCha8Rng) -> u64 {
        match self {
            Sampler::Uniform(c) => rng.gen_range(0..*c),
            Sampler::Table(w) => w.sample(rng) as u64,
            Sampler::Geometric(log_r) => {
                let u: f64 = rng.gen();
                ((1.0 - u).ln() / log_r).floor().max(0.0) as u64
            }
        }
    }
}

fn sampler(level: &Level, domain: &Aabb, strategy: SampleStrategy, n: usize) -> Result<Sampler> {
    let not = |reason: &str| Error::NotSampleable { level: n, reason: reason.into() };
    match strategy {
        SampleStrategy::UniformSymbolic => match level.count() {
            Some(c) => Ok(Sampler::Uniform(c)),
            None => Err(not("no uniform distribution on this index set")),
        },
        SampleStrategy::WeightedByDerivative { t } => match level {
            Level::Analytic(Family::Uniform { count: Some(c), .. }) => Ok(Sampler::Uniform(*c)),
            Level::Analytic(Family::Geometric { log_ratio, count: None, .. }) => Ok(Sampler::Geometric(t * log_ratio)),
            _ => {
                let maps = level.materialize(domain, SAMPLING_BUDGET).map_err(|e| relevel(e, n))?;
                let logs: Vec<f64> = maps.iter().map(|m| t * m.log_deriv_sup()).collect();
                let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                WeightedIndex::new(logs.iter().map(|l| (l - top).exp())).map(Sampler::Table).map_err(|_| not("degenerate weights"))
            }
        },
    }
}

/// `count` points `φ_{ω|depth}(c)` for random words, `c` the center of `X`.
/// Output depends only on the arguments; chunks use derived ChaCha streams.
pub fn sample_points(system: &System, depth: usize, count: usize, strategy: SampleStrategy, seed: u64) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    if depth == 0 || depth > system.horizon() {
        return Err(Error::InvalidParameter(format!("depth {depth} outside 1..={}", system.horizon())));
    }
    let domain = system.domain();
    let levels: Vec<_> = (1..=depth).map(|n| system.level(n)).collect();
    let samplers = levels.iter().enumerate().map(|(i, l)| sampler(l, domain, strategy, i + 1)).collect::<Result<Vec<_>>>()?;
    let cached: Vec<Option<Vec<ConformalContraction>>> = levels.iter().map(|l| l.materialize(domain, SAMPLING_BUDGET).ok()).collect();
    let chunks = count.div_ceil(CHUNK);
    let out: Vec<Vec<Vec<f64>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let n_here = CHUNK.min(count - c * CHUNK);
            let mut pts = Vec::with_capacity(n_here);
            let mut symbols = vec![0u64; depth];
            for _ in 0..n_here {
                for (s, smp) in symbols.iter_mut().zip(&samplers) {
                    *s = smp.draw(&mut rng);
                }
                let mut x = domain.center();
                for i in (0..depth).rev() {
                    x = match &cached[i] {
                        Some(maps) => maps[symbols[i] as usize].apply(&x),
                        None => levels[i].map(symbols[i], domain).map_err(|e| relevel(e, i + 1))?.apply(&x),
                    };
                }
                pts.push(x);
            }
            Ok(pts)
        })
        .collect::<Result<_>>()?;
    Ok(out.into_iter().flatten().collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverCell {
    pub word: Word,
    pub image: Aabb,
    pub log_diam: f64,
}

/// The cylinder images `φ_ω(X)`, `|ω| = n`, refusing more than `budget` cells.
pub fn natural_cover(system: &System, n: usize, budget: u64) -> Result<Vec<CoverCell>> {
    if n == 0 || n > system.horizon() {
        return Err(Error::InvalidParameter(format!("cover level {n} outside 1..={}", system.horizon())));
    }
    let domain = system.domain();
    let mut log_cells = 0.0;
    let mut levels = Vec::with_capacity(n);
    for k in 1..=n {
        let lvl = system.level(k);
        log_cells += lvl.log_count();
        if log_cells > (budget as f64).ln() + 1e-9 {
            return Err(Error::BudgetExceeded { needed: log_cells.exp(), budget });
        }
        levels.push(lvl.materialize(domain, budget).map_err(|e| relevel(e, k))?);
    }
    let mut cells = vec![(Vec::<u64>::new(), domain.clone())];
    for maps in levels.iter().rev() {
        cells = cells
            .into_iter()
            .flat_map(|(word, img)| {
                maps.iter().enumerate().map(move |(i, m)| {
                    let mut w = Vec::with_capacity(word.len() + 1);
                    w.push(i as u64);
                    w.extend_from_slice(&word);
                    (w, m.apply_box(&img))
                })
            })
            .collect();
    }
    let mut out: Vec<CoverCell> = cells
        .into_iter()
        .map(|(symbols, image)| CoverCell { log_diam: image.diam().ln(), word: Word::initial(symbols), image })
        .collect();
    out.sort_by(|a, b| a.word.symbols.cmp(&b.word.symbols));
    Ok(out)
}

/// `ln Σ diam(cell)^t`.
pub fn log_hausdorff_sum(cover: &[CoverCell], t: f64) -> f64 {
    if t == 0.0 {
        return (cover.len() as f64).ln();
    }
    log_sum_exp(cover.iter().map(|c| t * c.log_diam))
}

pub fn hausdorff_sum(cover: &[CoverCell], t: f64) -> f64 {
    log_hausdorff_sum(cover, t).exp()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxCountFit {
    pub scales: Vec<f64>,
    pub counts: Vec<u64>,
    pub slope: f64,
    pub r_squared: f64,
}

pub const MIN_BOX_POINTS: usize = 1000;
pub const DEFAULT_SCALE_COUNT: usize = 8;

/// Geometric ladder from `side/2` down to `side·(N/10)^{-1/d}`.
pub fn default_scales(domain: &Aabb, points: usize, count: usize) -> Vec<f64> {
    let side = (0..domain.dim()).map(|i| domain.side(i)).fold(0.0, f64::max);
    let hi = side / 2.0;
    let lo = side * (points as f64 / 10.0).powf(-1.0 / domain.dim() as f64);
    let count = count.max(2);
    (0..count).map(|i| hi * (lo / hi).powf(i as f64 / (count - 1) as f64)).collect()
}

/// Least-squares slope of `ln N(r)` against `ln(1/r)`, grids anchored at the
/// lower corner of `domain`.
pub fn box_dimension(points: &[Vec<f64>], domain: &Aabb, scales: Option<&[f64]>, scale_count: usize) -> Result<BoxCountFit> {
    if points.len() < MIN_BOX_POINTS {
        return Err(Error::InvalidParameter(format!("box counting needs at least {MIN_BOX_POINTS} points, got {}", points.len())));
    }
    if points.iter().all(|p| p == &points[0]) {
        return Err(Error::Degenerate("all points coincide".into()));
    }
    let scales: Vec<f64> = match scales {
        Some(s) => s.to_vec(),
        None => default_scales(domain, points.len(), scale_count),
    };
    if scales.len() < 2 || scales.windows(2).any(|w| !(w[1] < w[0])) || scales.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidParameter("scales must be positive and strictly decreasing".into()));
    }
    let counts: Vec<u64> = scales
        .par_iter()
        .map(|&r| {
            let cells: HashSet<Vec<i64>> = points
                .iter()
                .map(|p| p.iter().zip(&domain.min).map(|(x, m)| ((x - m) / r).floor() as i64).collect())
                .collect();
            cells.len() as u64
        })
        .collect();
    let xs: Vec<f64> = scales.iter().map(|r| -r.ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(BoxCountFit { scales, counts, slope: slope.clamp(0.0, domain.dim() as f64), r_squared })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pressure::log_z_series;

    fn cantor() -> System {
        let x = Aabb::unit(1);
        let maps = vec![
            ConformalContraction::affine_1d(1.0 / 3.0, 0.0, &x).unwrap(),
            ConformalContraction::affine_1d(1.0 / 3.0, 2.0 / 3.0, &x).unwrap(),
        ];
        System::autonomous(x, Level::explicit(maps).unwrap()).unwrap()
    }

    #[test]
    fn projections_of_periodic_words() {
        let c = cantor();
        let p = project(&c, &Word::initial(vec![0; 30]), 30).unwrap();
        assert!(p.point[0].abs() <= p.radius && p.radius < 1e-14);
        let p = project(&c, &Word::initial(vec![1; 30]), 30).unwrap();
        assert!((p.point[0] - 1.0).abs() <= p.radius);
        let w: Vec<u64> = (0..30).map(|i| i % 2).collect();
        let p = project(&c, &Word::initial(w), 30).unwrap();
        assert!((p.point[0] - 0.25).abs() < 1e-13);
    }

    #[test]
    fn samples_avoid_middle_third_and_repeat() {
        let c = cantor();
        let a = sample_points(&c, 20, 5000, SampleStrategy::UniformSymbolic, 7).unwrap();
        assert!(a.iter().all(|p| (0.0..=1.0).contains(&p[0]) && !(p[0] > 1.0 / 3.0 && p[0] < 2.0 / 3.0)));
        assert_eq!(a, sample_points(&c, 20, 5000, SampleStrategy::UniformSymbolic, 7).unwrap());
        assert!(sample_points(&c, 20, 0, SampleStrategy::UniformSymbolic, 7).unwrap().is_empty());
    }

    #[test]
    fn cover_sums() {
        let c = cantor();
        let cover = natural_cover(&c, 6, 1 << 20).unwrap();
        assert_eq!(cover.len(), 64);
        let b = 2f64.ln() / 3f64.ln();
        assert!((hausdorff_sum(&cover, b) - 1.0).abs() < 1e-12);
        assert_eq!(hausdorff_sum(&cover, 0.0).round(), 64.0);
        let z = log_z_series(&c, 0.4, 6).at(6).1;
        assert!((log_hausdorff_sum(&cover, 0.4) - z).abs() < 1e-12);
        assert!(matches!(natural_cover(&c, 30, 1000), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn cantor_box_dimension() {
        let c = cantor();
        let pts = sample_points(&c, 20, 10_000, SampleStrategy::UniformSymbolic, 1).unwrap();
        let scales: Vec<f64> = (2..=8).map(|k| 3f64.powi(-k)).collect();
        let fit = box_dimension(&pts, c.domain(), Some(&scales), 0).unwrap();
        assert!((fit.slope - 2f64.ln() / 3f64.ln()).abs() < 0.05, "{fit:?}");
        assert!(fit.r_squared > 0.99);
    }

    #[test]
    fn box_dimension_refusals() {
        let x = Aabb::unit(1);
        assert_eq!(box_dimension(&vec![vec![0.5]; 2000], &x, None, 8).unwrap_err(), Error::Degenerate("all points coincide".into()));
        assert!(box_dimension(&vec![vec![0.5]; 10], &x, None, 8).is_err());
        let line: Vec<Vec<f64>> = (0..10_000).map(|i| vec![(i as f64 + 0.5) / 10_000.0]).collect();
        assert!((box_dimension(&line, &x, None, 8).unwrap().slope - 1.0).abs() < 0.05);
    }
}
