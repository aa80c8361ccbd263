//! JSON system configurations.

use std::sync::Arc;

use serde::de::value::{MapAccessDeserializer, SeqAccessDeserializer};
use serde::de::{MapAccess, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::gallery::{self, DriverKind, RandomDriver};
use crate::geometry::{Aabb, Isometry};
use crate::level::{Family, Level};
use crate::map::{ConformalContraction, MapKind};
use crate::system::{validate_system, LevelSource, System, ViolationKind, UNBOUNDED_HORIZON};

/// Levels validated by [`parse_config`].
pub const CONFIG_VALIDATION_DEPTH: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambient_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(rename = "distortion_K", default, skip_serializing_if = "Option::is_none")]
    pub distortion_k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    pub levels: LevelsSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LevelsSpec {
    Explicit { levels: Vec<LevelSpec> },
    Periodic { period: Vec<LevelSpec> },
    Gallery {
        name: String,
        #[serde(default)]
        params: Value,
    },
}

/// A list of maps, or a closed-form family object.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum LevelSpec {
    Maps(Vec<MapSpec>),
    Family(Family),
}

// Dispatch on the JSON shape instead of `untagged`, which would hide the
// path of an error inside the chosen variant.
impl<'de> Deserialize<'de> for LevelSpec {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = LevelSpec;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a list of maps or a family object")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, seq: A) -> std::result::Result<LevelSpec, A::Error> {
                Vec::deserialize(SeqAccessDeserializer::new(seq)).map(LevelSpec::Maps)
            }

            fn visit_map<A: MapAccess<'de>>(self, map: A) -> std::result::Result<LevelSpec, A::Error> {
                Family::deserialize(MapAccessDeserializer::new(map)).map(LevelSpec::Family)
            }
        }
        de.deserialize_any(V)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MapSpec {
    Similarity {
        scale: f64,
        translation: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        isometry: Option<Isometry>,
    },
    Moebius { index: u64 },
}

/// `$`-rooted path; syntax errors carry no usable path.
fn json_path(path: &str) -> String {
    match path {
        "." | "?" | "" => "$".into(),
        p => format!("$.{p}"),
    }
}

pub fn parse_config_value(text: &str) -> Result<SystemConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = json_path(&e.path().to_string());
        Error::Schema { path, message: e.into_inner().to_string() }
    })
}

fn build_map(spec: &MapSpec, domain: &Aabb, level: usize, index: usize) -> Result<ConformalContraction> {
    let contraction = |reason: String| Error::ContractionViolation { level, index: index as u64, reason };
    match spec {
        MapSpec::Similarity { scale, translation, isometry } => {
            if !(*scale > 0.0 && *scale < 1.0) {
                return Err(contraction(format!("scale {scale} outside (0, 1)")));
            }
            let iso = isometry.clone().unwrap_or_else(|| Isometry::identity(domain.dim()));
            ConformalContraction::similarity(*scale, iso, translation.clone(), domain)
                .map_err(|e| Error::Schema { path: format!("$.levels[{}][{index}]", level - 1), message: e.to_string() })
        }
        MapSpec::Moebius { index: j } => {
            if *j < 2 {
                return Err(contraction(format!("moebius index {j} gives |Dφ(0)| = 1")));
            }
            ConformalContraction::moebius(*j, domain)
        }
    }
}

fn build_level(spec: &LevelSpec, domain: &Aabb, level: usize) -> Result<Level> {
    match spec {
        LevelSpec::Maps(maps) => {
            if maps.is_empty() {
                return Err(Error::Schema { path: format!("$.levels[{}]", level - 1), message: "empty level".into() });
            }
            let maps = maps.iter().enumerate().map(|(i, m)| build_map(m, domain, level, i)).collect::<Result<Vec<_>>>()?;
            Level::explicit(maps)
        }
        LevelSpec::Family(f) => {
            if domain.dim() != 1 {
                return Err(Error::Schema { path: format!("$.levels[{}]", level - 1), message: "families need a one-dimensional domain".into() });
            }
            Ok(Level::Analytic(f.clone()))
        }
    }
}

fn build_domain(ambient_dim: Option<usize>, spec: Option<&DomainSpec>) -> Result<Aabb> {
    let domain = match spec {
        Some(d) => Aabb::new(d.min.clone(), d.max.clone()).map_err(|e| Error::Schema { path: "$.domain".into(), message: e.to_string() })?,
        None => Aabb::unit(ambient_dim.unwrap_or(1)),
    };
    if let Some(d) = ambient_dim {
        if d != domain.dim() {
            return Err(Error::Schema { path: "$.ambient_dim".into(), message: format!("ambient_dim {d} disagrees with domain dimension {}", domain.dim()) });
        }
    }
    Ok(domain)
}

/// Random driver document: fibers use the same level specs as system configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriverConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambient_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    pub fibers: Vec<LevelSpec>,
    #[serde(flatten)]
    pub kind: DriverKind,
}

pub fn driver_from_config(cfg: &DriverConfig) -> Result<RandomDriver> {
    let domain = build_domain(cfg.ambient_dim, cfg.domain.as_ref())?;
    let fibers = cfg.fibers.iter().enumerate().map(|(i, f)| build_level(f, &domain, i + 1)).collect::<Result<Vec<_>>>()?;
    let driver = RandomDriver { domain, fibers, kind: cfg.kind.clone() };
    driver.validate()?;
    Ok(driver)
}

pub fn parse_driver(text: &str) -> Result<RandomDriver> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: DriverConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = json_path(&e.path().to_string());
        Error::Schema { path, message: e.into_inner().to_string() }
    })?;
    driver_from_config(&cfg)
}

/// Builds and validates the system described by a config document.
pub fn parse_config(text: &str) -> Result<System> {
    system_from_config(&parse_config_value(text)?)
}

pub fn system_from_config(cfg: &SystemConfig) -> Result<System> {
    let system = match &cfg.levels {
        LevelsSpec::Gallery { name, params } => {
            let mut s = gallery::build(name, params)?;
            if let Some(e) = cfg.eta {
                s = s.with_eta(e);
            }
            if let Some(k) = cfg.distortion_k {
                s = s.with_distortion(k);
            }
            if let Some(h) = cfg.horizon {
                let cap = s.horizon();
                s = s.with_horizon(h.min(cap));
            }
            s
        }
        LevelsSpec::Explicit { levels: specs } | LevelsSpec::Periodic { period: specs } => {
            let domain = build_domain(cfg.ambient_dim, cfg.domain.as_ref())?;
            if specs.is_empty() {
                return Err(Error::Schema { path: "$.levels".into(), message: "no levels".into() });
            }
            let levels = specs.iter().enumerate().map(|(i, s)| build_level(s, &domain, i + 1).map(Arc::new)).collect::<Result<Vec<_>>>()?;
            let (source, default_h) = match &cfg.levels {
                LevelsSpec::Periodic { .. } => (LevelSource::Periodic(levels.into()), UNBOUNDED_HORIZON),
                _ => {
                    let n = levels.len();
                    (LevelSource::List(levels.into()), n)
                }
            };
            System::new(domain, source, cfg.horizon.unwrap_or(default_h).min(default_h), cfg.eta, cfg.distortion_k)?
        }
    };
    let report = validate_system(&system, system.horizon().min(CONFIG_VALIDATION_DEPTH));
    for v in &report.violations {
        return Err(match &v.kind {
            ViolationKind::Overlap { first, second } => Error::OscViolation { level: v.level, first: *first, second: *second },
            ViolationKind::Contraction { index, deriv_sup } => Error::ContractionViolation { level: v.level, index: *index, reason: format!("sup |Dφ| = {deriv_sup} ≥ 1") },
            ViolationKind::ImageOutside { index } => Error::ContractionViolation { level: v.level, index: *index, reason: "image leaves the domain".into() },
            ViolationKind::Distortion { estimate, configured } => Error::InvalidParameter(format!("distortion estimate {estimate} exceeds configured K = {configured}")),
            ViolationKind::Skipped { .. } => continue,
        });
    }
    Ok(system)
}

fn level_spec(level: &Level) -> LevelSpec {
    match level {
        Level::Explicit(e) => LevelSpec::Maps(
            e.maps()
                .iter()
                .map(|m| match &m.kind {
                    MapKind::Similarity { scale, isometry, translation } => MapSpec::Similarity {
                        scale: *scale,
                        translation: translation.clone(),
                        isometry: (!isometry.is_identity()).then(|| isometry.clone()),
                    },
                    MapKind::Moebius { index } => MapSpec::Moebius { index: *index },
                })
                .collect(),
        ),
        Level::Analytic(f) => LevelSpec::Family(f.clone()),
    }
}

/// Config reproducing `system`; gallery systems serialize by name.
pub fn config_for(system: &System) -> Result<SystemConfig> {
    let d = system.domain();
    let levels = match (system.origin(), system.source()) {
        (Some(o), _) => LevelsSpec::Gallery { name: o.name.clone(), params: o.params.clone() },
        (None, LevelSource::List(l)) => LevelsSpec::Explicit { levels: l.iter().take(system.horizon()).map(|l| level_spec(l)).collect() },
        (None, LevelSource::Periodic(p)) => LevelsSpec::Periodic { period: p.iter().map(|l| level_spec(l)).collect() },
        (None, LevelSource::Generator(_)) => return Err(Error::InvalidParameter("generator-backed systems without a gallery origin cannot be serialized".into())),
    };
    Ok(SystemConfig {
        ambient_dim: Some(d.dim()),
        domain: Some(DomainSpec { min: d.min.clone(), max: d.max.clone() }),
        eta: Some(system.eta()),
        distortion_k: Some(system.distortion_k()),
        horizon: Some(system.horizon()),
        levels,
    })
}

pub fn serialize_config(system: &System) -> Result<String> {
    serde_json::to_string_pretty(&config_for(system)?).map_err(|e| Error::InvalidParameter(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cantor_gallery() {
        let s = parse_config(r#"{"levels": {"kind": "gallery", "name": "cantor"}}"#).unwrap();
        assert_eq!(s.level(1).count(), Some(2));
    }

    #[test]
    fn rejects_expanding_map() {
        let doc = r#"{"ambient_dim": 1, "domain": {"min": [0], "max": [1]},
            "levels": {"kind": "explicit", "levels": [[{"kind": "similarity", "scale": 1.2, "translation": [0]}]]}}"#;
        assert!(matches!(parse_config(doc), Err(Error::ContractionViolation { level: 1, index: 0, .. })));
    }

    #[test]
    fn rejects_overlap() {
        let doc = r#"{"levels": {"kind": "periodic", "period": [[
            {"kind": "similarity", "scale": 0.5, "translation": [0]},
            {"kind": "similarity", "scale": 0.5, "translation": [0.25]}]]}}"#;
        assert_eq!(parse_config(doc).unwrap_err(), Error::OscViolation { level: 1, first: 0, second: 1 });
    }

    #[test]
    fn schema_errors_carry_paths() {
        let doc = r#"{"levels": {"kind": "explicit", "levels": []}, "bogus": 1}"#;
        match parse_config(doc) {
            Err(Error::Schema { path, .. }) => assert!(path.contains("bogus") || path == "$", "{path}"),
            other => panic!("{other:?}"),
        }
        let doc = r#"{"levels": {"kind": "gallery", "name": "cantor-family", "params": {"s": "x"}}}"#;
        match parse_config(doc) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "params.s"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trip() {
        let doc = r#"{"levels": {"kind": "explicit", "levels": [
            [{"kind": "similarity", "scale": 0.25, "translation": [0]}, {"kind": "similarity", "scale": 0.5, "translation": [1.0], "isometry": {"perm": [0], "flip": [true]}}],
            [{"kind": "moebius", "index": 2}, {"kind": "moebius", "index": 3}],
            {"family": "geometric", "log_first": -1.0, "log_ratio": -0.5, "count": null}]}}"#;
        let s = parse_config(doc).unwrap();
        let back = parse_config(&serialize_config(&s).unwrap()).unwrap();
        for n in 1..=3 {
            for t in [0.0, 0.3, 0.9] {
                assert_eq!(s.level(n).log_sum_bounds(t), back.level(n).log_sum_bounds(t));
            }
        }
        assert_eq!(s.eta(), back.eta());
    }
}
