//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each exported function takes a system config as JSON text and returns
//! JSON text. The `*_json` functions hold the logic and run natively too.

use ncifs::config::{parse_config, serialize_config};
use ncifs::gallery;
use ncifs::limit_set::{self, SampleStrategy};
use ncifs::pressure::{self, BowenOptions};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Config text for a gallery system with default parameters.
pub fn gallery_config_json(name: &str, params: &str) -> Result<String, String> {
    let params: Value = serde_json::from_str(params).map_err(err)?;
    let sys = gallery::build(name, &params).map_err(err)?;
    serialize_config(&sys).map_err(err)
}

/// `[{t, lP_hat, uP_hat}, …]` on `steps` evenly spaced values of `t`.
pub fn pressure_curve_json(config: &str, t_min: f64, t_max: f64, steps: usize, horizon: usize) -> Result<String, String> {
    let sys = parse_config(config).map_err(err)?;
    if steps < 2 || !(t_min < t_max) {
        return Err("need at least two steps and t_min < t_max".into());
    }
    let ts: Vec<f64> = (0..steps).map(|i| t_min + (t_max - t_min) * i as f64 / (steps - 1) as f64).collect();
    let rows: Vec<Value> = pressure::pressure_curve(&sys, &ts, sys.clamp_horizon(horizon), None)
        .into_iter()
        .map(|e| json!({ "t": e.t, "lP_hat": e.lP_hat, "uP_hat": e.uP_hat }))
        .collect();
    Ok(Value::Array(rows).to_string())
}

pub fn bowen_json(config: &str, tol: f64, horizon: usize) -> Result<String, String> {
    let sys = parse_config(config).map_err(err)?;
    let r = pressure::bowen_dimension(&sys, &BowenOptions { horizon: sys.clamp_horizon(horizon), window: None, tol }).map_err(err)?;
    serde_json::to_string(&r).map_err(err)
}

/// Sampled points as `[[x, …], …]`.
pub fn sample_points_json(config: &str, depth: usize, count: usize, seed: u64) -> Result<String, String> {
    let sys = parse_config(config).map_err(err)?;
    let pts = limit_set::sample_points(&sys, depth, count, SampleStrategy::UniformSymbolic, seed).map_err(err)?;
    serde_json::to_string(&pts).map_err(err)
}

fn js<T>(r: Result<T, String>) -> Result<T, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn gallery_config(name: &str, params: &str) -> Result<String, JsValue> {
    js(gallery_config_json(name, params))
}

#[wasm_bindgen]
pub fn pressure_curve(config: &str, t_min: f64, t_max: f64, steps: usize, horizon: usize) -> Result<String, JsValue> {
    js(pressure_curve_json(config, t_min, t_max, steps, horizon))
}

#[wasm_bindgen]
pub fn bowen(config: &str, tol: f64, horizon: usize) -> Result<String, JsValue> {
    js(bowen_json(config, tol, horizon))
}

/// The seed is a `u32` so that JavaScript can pass a plain number.
#[wasm_bindgen]
pub fn sample_points(config: &str, depth: usize, count: usize, seed: u32) -> Result<String, JsValue> {
    js(sample_points_json(config, depth, count, seed.into()))
}
