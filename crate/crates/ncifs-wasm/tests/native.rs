use ncifs_wasm::{bowen_json, gallery_config_json, pressure_curve_json, sample_points_json};
use serde_json::Value;

fn cantor() -> String {
    gallery_config_json("cantor", "{}").unwrap()
}

#[test]
fn bowen_of_cantor() {
    let v: Value = serde_json::from_str(&bowen_json(&cantor(), 1e-6, 2000).unwrap()).unwrap();
    assert!((v["t_star"].as_f64().unwrap() - 2f64.ln() / 3f64.ln()).abs() < 1e-5);
}

#[test]
fn pressure_curve_is_decreasing() {
    let v: Value = serde_json::from_str(&pressure_curve_json(&cantor(), 0.0, 1.0, 11, 500).unwrap()).unwrap();
    let lp: Vec<f64> = v.as_array().unwrap().iter().map(|r| r["lP_hat"].as_f64().unwrap()).collect();
    assert_eq!(lp.len(), 11);
    assert!(lp.windows(2).all(|w| w[1] < w[0]));
    assert!((lp[0] - 2f64.ln()).abs() < 1e-9);
}

#[test]
fn samples_are_reproducible() {
    let a = sample_points_json(&cantor(), 12, 200, 5).unwrap();
    assert_eq!(a, sample_points_json(&cantor(), 12, 200, 5).unwrap());
    let pts: Vec<Vec<f64>> = serde_json::from_str(&a).unwrap();
    assert_eq!(pts.len(), 200);
    assert!(pts.iter().all(|p| p[0] < 1.0 / 3.0 + 1e-9 || p[0] > 2.0 / 3.0 - 1e-9));
}

#[test]
fn bad_input_is_an_error() {
    assert!(bowen_json("{", 1e-6, 100).is_err());
    assert!(pressure_curve_json(&cantor(), 1.0, 0.0, 5, 100).is_err());
    assert!(gallery_config_json("nope", "{}").is_err());
}
