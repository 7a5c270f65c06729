//! Immersed isogeometric Stokes and Navier-Stokes solver on tensor-product
//! B-splines, with skeleton and ghost penalties and Nitsche boundary
//! conditions.
//!
//! Geometry, basis and assembly are generic over the scalar type; the
//! aliases below fix it to `f64`, which the sparse solvers require.

pub mod analysis;
pub mod cases;
pub mod error;
pub mod gauss;
pub mod immersion;
pub mod levelset;
pub mod mesh;
pub mod scalar;
pub mod solver;
pub mod sparse;
pub mod splines;
pub mod weakform;

pub use error::{Error, Result};

pub type KnotVector = splines::KnotVector<f64>;
pub type Basis = splines::TensorBSplineBasis<f64>;
pub type AmbientGrid = mesh::AmbientGrid<f64>;
pub type BackgroundMesh = mesh::BackgroundMesh<f64>;
pub type CutQuadrature = immersion::CutQuadrature<f64>;
pub type Space = weakform::Space<f64>;
pub type SystemBlocks = weakform::SystemBlocks<f64>;
pub type FlowSolution = weakform::FlowSolution<f64>;
pub type PhysicalSetup = weakform::PhysicalSetup<f64>;
pub type StabilizationParams = weakform::StabilizationParams<f64>;
pub type CsrMatrix = sparse::CsrMatrix<f64>;
