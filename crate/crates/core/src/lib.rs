//! Transport paths between finite atomic measures, modelled as weighted
//! directed graphs with coordinates.
//!
//! The crate covers the chain algebra on such networks (boundary, mass,
//! `M_alpha` cost), cycle certificates, good and better curve decompositions,
//! stair-shaped representing matrices, and the splittings of a path into
//! map-compatible and plan-compatible parts.

pub mod chains;
pub mod decomposition;
pub mod error;
pub mod fixtures;
pub mod generate;
pub mod io;
pub mod matrix;
pub mod model;
pub mod rational;
pub mod splitting;
pub mod stairshape;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use model::{
    Atom, AtomicMeasure, Edge, EdgeChain, PathCurve, Point, SignedNodeMeasure, TransportNetwork,
    VertexId, Violation,
};
pub use rational::Rational;
