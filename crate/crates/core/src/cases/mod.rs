//! Executable case definitions: quarter annulus, sliver cuts, manufactured
//! cylinder flow and the channel benchmark.

pub mod config;
pub mod geometry;
pub mod pipeline;

pub use config::{CaseConfig, ExportSpec, GeometrySpec, PhysicsSpec, StabilizationSpec, StudySpec};
pub use geometry::TurekData;
pub use pipeline::{run_case, run_infsup, run_quadcheck, run_sweep, CaseSummary, MeshResult, SweepParameter};
