//! Unstable entropies of linear partially hyperbolic toral automorphisms.

pub mod config;
pub mod covers;
pub mod descriptor;
pub mod error;
pub mod harness;
pub mod hdim;
pub mod leaf;
pub mod params;
pub mod poly;
pub mod stats;
pub mod systems;
pub mod torus;
pub mod umetric;
pub mod utop;

pub use covers::{BowenCount, GridCover};
pub use error::{Error, Result};
pub use leaf::{AmbientSet, LeafSegment, LeafSubset};
pub use params::EstimatorParams;
pub use systems::{Bundle, LabelRule, PartiallyHyperbolic, Splitting, ToralAutomorphism};
pub use torus::TorusPoint;
