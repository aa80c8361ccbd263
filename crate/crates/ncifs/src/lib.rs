//! Non-autonomous conformal iterated function systems.
//!
//! A system is a sequence of levels `Φ^(n)`, each a family of conformal
//! contractions of a box `X`. This crate evaluates partition sums
//! `Z_n(t) = Σ_{|ω|=n} ‖Dφ_ω‖^t` in log space, estimates lower/upper pressure
//! and the Bowen dimension, issues finite-horizon dimension certificates, and
//! builds the standard example systems.

pub mod classify;
pub mod config;
pub mod error;
pub mod gallery;
pub mod geometry;
pub mod level;
pub mod limit_set;
pub mod logsum;
pub mod map;
pub mod pressure;
pub mod sequence;
pub mod subsystems;
pub mod system;

pub use error::{Error, Result};
pub use geometry::{Aabb, Isometry};
pub use level::{Family, Level, MoebiusRange};
pub use map::{ConformalContraction, MapKind};
pub use system::{compose_word, validate_system, GalleryRef, LevelGenerator, LevelSource, System, ValidationReport, Word};
