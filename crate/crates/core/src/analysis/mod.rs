//! Manufactured solutions, error norms and derived quantities.

pub mod export;
pub mod jet;
pub mod manufactured;
pub mod norms;
pub mod qoi;
