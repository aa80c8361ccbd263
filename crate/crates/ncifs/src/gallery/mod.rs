//! Named example systems.

mod analytic;
mod classical;
mod counterexample;
mod random;
mod superexp;

pub use analytic::{build_continued_fraction, build_jordan_rams};
pub use classical::{cantor, cantor_family, cube_subdivision, custom_similarity, geometric};
pub use counterexample::{build_counterexample, counterexample_base, CounterexampleData, ScheduleEntry};
pub use random::{expected_pressure, expected_pressure_root, realize_random, DriverKind, ExpectedPressure, ExpectedRoot, RandomDriver};
pub use superexp::{build_superexp_counterexample, SuperexpBlock, SuperexpData};

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::sequence::SequenceSpec;
use crate::system::{GalleryRef, System};

pub const GALLERY_NAMES: &[&str] = &[
    "cantor",
    "cube-subdivision",
    "custom-similarity",
    "cantor-family",
    "geometric",
    "counterexample",
    "superexp",
    "continued-fraction",
    "jordan-rams",
    "random",
];

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Empty {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Cube {
    #[serde(default = "two")]
    dim: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Custom {
    scales: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CantorFamily {
    s: f64,
    #[serde(default = "family_horizon")]
    horizon: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Geometric {
    #[serde(default = "third")]
    ratio: f64,
    first: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Counter {
    t1: f64,
    t2: f64,
    eps: f64,
    #[serde(default = "counter_horizon")]
    horizon: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Superexp {
    #[serde(default = "tower")]
    alpha: SequenceSpec,
    #[serde(default = "superexp_horizon")]
    horizon: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Cf {
    #[serde(default = "two_u")]
    base: u64,
    #[serde(default = "two_f")]
    alpha: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Jr {
    #[serde(default = "two_f")]
    lambda: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Random {
    driver: crate::config::DriverConfig,
    horizon: usize,
    seed: u64,
}

fn two() -> usize {
    2
}
fn two_u() -> u64 {
    2
}
fn two_f() -> f64 {
    2.0
}
fn third() -> f64 {
    1.0 / 3.0
}
fn family_horizon() -> usize {
    40_000
}
fn counter_horizon() -> usize {
    4_000
}
fn superexp_horizon() -> usize {
    3_000
}
fn tower() -> SequenceSpec {
    SequenceSpec::Tower { base: 2.0, power: 2.0 }
}

fn parse<T: DeserializeOwned>(params: &Value) -> Result<T> {
    let v = if params.is_null() { Value::Object(Default::default()) } else { params.clone() };
    serde_path_to_error::deserialize(v).map_err(|e| {
        let path = match e.path().to_string().as_str() {
            "." => "params".to_string(),
            p => format!("params.{p}"),
        };
        Error::Schema { path, message: e.inner().to_string() }
    })
}

/// Builds a gallery system by name; the result remembers its origin.
pub fn build(name: &str, params: &Value) -> Result<System> {
    build_with_data(name, params).map(|(sys, _)| sys)
}

/// As [`build`], also returning the construction record of the
/// counterexample-type systems as JSON.
pub fn build_with_data(name: &str, params: &Value) -> Result<(System, Option<Value>)> {
    let mut data = None;
    let sys = match name {
        "cantor" => {
            parse::<Empty>(params)?;
            cantor()
        }
        "cube-subdivision" => cube_subdivision(parse::<Cube>(params)?.dim)?,
        "custom-similarity" => custom_similarity(&parse::<Custom>(params)?.scales)?,
        "cantor-family" => {
            let p: CantorFamily = parse(params)?;
            cantor_family(p.s, p.horizon)?
        }
        "geometric" => {
            let p: Geometric = parse(params)?;
            geometric(p.first.unwrap_or(p.ratio), p.ratio)?
        }
        "counterexample" => {
            let p: Counter = parse(params)?;
            let (sys, d) = build_counterexample(p.t1, p.t2, p.eps, p.horizon)?;
            data = serde_json::to_value(d).ok();
            sys
        }
        "superexp" => {
            let p: Superexp = parse(params)?;
            let (sys, d) = build_superexp_counterexample(p.alpha, p.horizon)?;
            data = serde_json::to_value(d).ok();
            sys
        }
        "continued-fraction" => {
            let p: Cf = parse(params)?;
            build_continued_fraction(p.base, p.alpha)?
        }
        "jordan-rams" => build_jordan_rams(parse::<Jr>(params)?.lambda)?,
        "random" => {
            let p: Random = parse(params)?;
            realize_random(&crate::config::driver_from_config(&p.driver)?, p.horizon, p.seed)?
        }
        other => return Err(Error::UnknownGallery(other.to_string())),
    };
    Ok((sys.with_origin(GalleryRef { name: name.to_string(), params: params.clone() }), data))
}
