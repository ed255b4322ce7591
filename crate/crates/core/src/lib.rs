//! Weighted b-Sobolev norms, smoothing operators, resonance analysis and a
//! Nash-Moser engine for quasilinear wave and Klein-Gordon toy problems on
//! the cylinder `[0, ∞)_t × S^1_y`, where `t = −log x` is the logarithmic
//! distance to the boundary.

pub mod audit;
pub mod error;
pub mod fit;
pub mod grid;
pub mod linsolve;
pub mod mellin;
pub mod nashmoser;
pub mod poly;
pub mod problem;
pub mod profiles;
pub mod sampling;
pub mod scenario;
pub mod smoothing;
pub mod spectral;
pub mod tame;

pub use error::{Error, Result};
pub use grid::{Field, Grid, SobolevIndex};
