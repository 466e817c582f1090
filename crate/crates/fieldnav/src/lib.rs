//! Grid-world testbed for frontier potential-field object-goal navigation.
//!
//! The crate covers the full loop: semantic occupancy grids with per-cell
//! object categories ([`grid`]), geodesic distance fields and path extraction
//! ([`geodesics`]), frontier potential functions ([`potentials`]), procedural
//! indoor scenes ([`scenegen`]), training-tuple datasets ([`dataset`]),
//! potential predictors ([`predictor`]) and an episodic simulator with
//! standard navigation metrics ([`sim`]).
//!
//! All metric quantities (resolutions, distances, potentials) are generic over
//! the scalar type via [`Scalar`]; `f64` is the default everywhere and `f32`
//! aliases are provided at the crate root.

pub mod dataset;
pub mod error;
pub mod geodesics;
pub mod grid;
pub mod mapfile;
pub mod potentials;
pub mod predictor;
pub mod raycast;
pub mod scalar;
pub mod scenegen;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Single-precision variants of the core map and field types.
pub type SemanticGridF32 = grid::SemanticGrid<f32>;
pub type DistanceFieldF32 = geodesics::DistanceField<f32>;
pub type PathPlanF32 = geodesics::PathPlan<f32>;
pub type PotentialFieldF32 = potentials::PotentialField<f32>;

/// Double-precision aliases; these match the default type parameters and are
/// spelled out for symmetry with the `F32` family.
pub type SemanticGridF64 = grid::SemanticGrid<f64>;
pub type DistanceFieldF64 = geodesics::DistanceField<f64>;
pub type PathPlanF64 = geodesics::PathPlan<f64>;
pub type PotentialFieldF64 = potentials::PotentialField<f64>;
