use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Aabb;
use crate::level::Level;
use crate::sequence::SequenceSpec;
use crate::system::{LevelSource, System};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperexpBlock {
    pub k: usize,
    pub eps: f64,
    /// Branch count `L = ⌈e^{1/ε}⌉` of the base system.
    pub branches: u64,
    pub start: usize,
    pub end: Option<usize>,
    pub schedule: Vec<usize>,
    /// `d − 2ε`, where finite-horizon pressure was positive at the block end.
    pub positive_at: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperexpData {
    pub alpha: SequenceSpec,
    pub blocks: Vec<SuperexpBlock>,
    /// Concrete block-length rule (one admissible choice among many).
    pub rule: String,
}

struct Block {
    info: SuperexpBlock,
    base: Arc<Level>,
    lz: [f64; 3],
}

impl Block {
    fn ts(&self) -> [f64; 3] {
        let e = self.info.eps;
        [e, 2.0 * e, 1.0 - 2.0 * e]
    }
}

fn start_block(k: usize, n: usize, levels: &[Arc<Level>]) -> Result<Block> {
    let eps = 1.0 / k as f64;
    let t2 = 1.0 - eps;
    let branches = (1.0 / eps).exp().ceil() as u64;
    let log_rho = -(branches as f64).ln() / t2;
    let base = Arc::new(Level::uniform((branches as f64).ln(), log_rho, log_rho)?);
    let info = SuperexpBlock { k, eps, branches, start: n, end: None, schedule: Vec::new(), positive_at: 1.0 - 2.0 * eps };
    let mut b = Block { info, base, lz: [0.0; 3] };
    let ts = b.ts();
    for lvl in levels {
        for (z, t) in b.lz.iter_mut().zip(ts) {
            *z += lvl.log_sum(t);
        }
    }
    Ok(b)
}

/// Concatenates counterexample blocks `Θ(1/k)`, `k = 3, 4, …`, keeping
/// `#I^(n) ≤ α_n`. Every level is a family of equal similarities.
pub fn build_superexp_counterexample(alpha: SequenceSpec, horizon: usize) -> Result<(System, SuperexpData)> {
    let mut levels: Vec<Arc<Level>> = Vec::with_capacity(horizon);
    let mut blocks: Vec<SuperexpBlock> = Vec::new();
    let mut current: Option<Block> = None;
    let mut k = 3;
    let lead = Arc::new(Level::uniform(0.0, -2f64.ln(), -2f64.ln())?);
    for n in 1..=horizon {
        let log_alpha = alpha.log_value(n);
        let waiting = current.as_ref().is_none_or(|b| b.info.end.is_some());
        if waiting && log_alpha >= ((1.0 / (1.0 / k as f64)).exp().ceil()).ln() {
            if let Some(b) = current.take() {
                blocks.push(b.info);
            }
            current = Some(start_block(k, n, &levels)?);
            k += 1;
        }
        let lvl = match current.as_mut() {
            None => lead.clone(),
            Some(b) if b.info.end.is_some() => b.base.clone(),
            Some(b) => {
                let j = b.info.schedule.len();
                let last = b.info.schedule.last().copied().unwrap_or(b.info.start);
                let t1 = b.info.eps;
                let t2 = 1.0 - t1;
                let log_lambda = -b.lz[0] / t1;
                let log_m = (-t2 / (1.0 - t2) * log_lambda).max(0.0);
                let log_m = if log_m < 50.0 { log_m.exp().floor().max(1.0).ln() } else { log_m };
                if n >= last + j + 1 && b.lz[0] > 0.0 && log_m <= log_alpha {
                    let log_c = log_lambda - log_m;
                    let l = Arc::new(Level::uniform(log_m, log_c, log_c)?);
                    b.info.schedule.push(n);
                    let hull = l.log_hull_diam(&Aabb::unit(1));
                    let covered = b.lz[1] + 2.0 * t1 * hull < -(b.info.k as f64) * 2f64.ln();
                    let ts = b.ts();
                    let positive = b.lz[2] + l.log_sum(ts[2]) > 0.0;
                    if covered && positive {
                        b.info.end = Some(n);
                    }
                    l
                } else {
                    b.base.clone()
                }
            }
        };
        if let Some(b) = current.as_mut() {
            let ts = b.ts();
            for (z, t) in b.lz.iter_mut().zip(ts) {
                *z += lvl.log_sum(t);
            }
        }
        levels.push(lvl);
    }
    if let Some(b) = current.take() {
        blocks.push(b.info);
    }
    if blocks.len() < 2 {
        return Err(Error::HorizonTooSmall(format!("horizon {horizon} reaches {} blocks, need 2", blocks.len())));
    }
    let sys = System::new(Aabb::unit(1), LevelSource::List(levels.into()), horizon, Some(0.5), Some(1.0))?
        .with_expected("hd", 0.0)
        .with_expected("bowen", 1.0);
    let rule = "block k uses eps = 1/k, L = ceil(e^k); schedule points at the earliest n ≥ previous + j + 1 with M ≤ alpha_n; \
                the block ends at the first schedule point where the level-hull sum at 2eps is below 2^-k and ln Z_n(1 - 2eps) > 0"
        .to_string();
    Ok((sys, SuperexpData { alpha, blocks, rule }))
}
