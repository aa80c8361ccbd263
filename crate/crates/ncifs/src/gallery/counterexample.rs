use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Aabb;
use crate::level::Level;
use crate::map::ConformalContraction;
use crate::system::{LevelSource, System};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub n_k: usize,
    pub lambda_k: f64,
    pub log_lambda_k: f64,
    /// `M_k` when it fits a `u64`.
    pub m_k: Option<u64>,
    pub log_m_k: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleData {
    pub t1: f64,
    pub t2: f64,
    pub eps: f64,
    pub m: usize,
    pub lambda: f64,
    pub schedule: Vec<ScheduleEntry>,
}

fn params(t1: f64, t2: f64, eps: f64) -> Result<(usize, f64)> {
    if !(0.0 < t1 && t1 < t2 && t2 < 1.0 && eps > 0.0) {
        return Err(Error::InvalidParameter("need 0 < t1 < t2 < 1 and eps > 0".into()));
    }
    let m = (4.0 * t2 / (eps * t1 * (1.0 - t2)) - 1e-9).ceil().max(2.0) as usize;
    let lambda = 2f64.powf(-(1.0 - t2) / (t2 * (m as f64 - 1.0)));
    Ok((m, lambda))
}

fn base_levels(lambda: f64) -> Result<(Arc<Level>, Arc<Level>)> {
    let x = Aabb::unit(1);
    let halves = Level::explicit(vec![ConformalContraction::affine_1d(0.5, 0.0, &x)?, ConformalContraction::affine_1d(0.5, 0.5, &x)?])?;
    let shrink = Level::explicit(vec![ConformalContraction::affine_1d(lambda, 0.0, &x)?])?;
    Ok((Arc::new(halves), Arc::new(shrink)))
}

/// The periodic base `Ψ`: two halves at multiples of `m`, `x ↦ λx` otherwise.
pub fn counterexample_base(t1: f64, t2: f64, eps: f64) -> Result<System> {
    let (m, lambda) = params(t1, t2, eps)?;
    let (halves, shrink) = base_levels(lambda)?;
    let period: Vec<Arc<Level>> = (1..=m).map(|l| if l % m == 0 { halves.clone() } else { shrink.clone() }).collect();
    System::new(Aabb::unit(1), LevelSource::Periodic(period.into()), crate::system::UNBOUNDED_HORIZON, None, Some(1.0))
}

/// Linear system with `HD(J) = t1` and `B = t2`. The horizon of the result
/// is the last schedule point `n_k` not beyond `horizon`.
pub fn build_counterexample(t1: f64, t2: f64, eps: f64, horizon: usize) -> Result<(System, CounterexampleData)> {
    let (m, lambda) = params(t1, t2, eps)?;
    let (halves, shrink) = base_levels(lambda)?;
    let mut levels: Vec<Arc<Level>> = Vec::new();
    let mut schedule: Vec<ScheduleEntry> = Vec::new();
    let (mut lz_phi, mut lz_psi) = (0.0f64, 0.0f64);
    let mut next_min = m + 1;
    for n in 1..=horizon {
        let psi = if n % m == 0 { halves.clone() } else { shrink.clone() };
        let due = n >= next_min && (schedule.is_empty() || (lz_psi / 2.0 < lz_phi && lz_phi < 2.0 * lz_psi));
        let lvl = if due && lz_phi > 0.0 {
            let log_lambda_k = -lz_phi / t1;
            let log_m_real = -t2 / (1.0 - t2) * log_lambda_k;
            let (m_k, log_m_k) = if log_m_real < 52.0 * std::f64::consts::LN_2 {
                let mk = (log_m_real.exp() * (1.0 + 1e-14)).floor().max(1.0) as u64;
                (Some(mk), (mk as f64).ln())
            } else {
                (None, log_m_real)
            };
            let log_c = log_lambda_k - log_m_k;
            let k = schedule.len() + 1;
            schedule.push(ScheduleEntry { n_k: n, lambda_k: log_lambda_k.exp(), log_lambda_k, m_k, log_m_k });
            next_min = n + k + 1;
            Arc::new(Level::uniform(log_m_k, log_c, log_c)?)
        } else {
            psi.clone()
        };
        lz_phi += lvl.log_sum(t1);
        lz_psi += psi.log_sum(t1);
        levels.push(lvl);
    }
    if schedule.len() < 2 {
        return Err(Error::HorizonTooSmall(format!("horizon {horizon} holds {} schedule points, need 2", schedule.len())));
    }
    let h = schedule.last().expect("non-empty").n_k;
    levels.truncate(h);
    let sys = System::new(Aabb::unit(1), LevelSource::List(levels.into()), h, Some(lambda.max(0.5)), Some(1.0))?
        .with_expected("hd", t1)
        .with_expected("bowen", t2);
    Ok((sys, CounterexampleData { t1, t2, eps, m, lambda, schedule }))
}
