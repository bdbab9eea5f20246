//! Galerkin simulation of the stochastic Navier–Stokes equations with
//! transport noise on the unit square, with boundary-layer diagnostics for
//! the vanishing-viscosity limit.

pub mod error;
pub mod euler;
pub mod experiment;
pub mod grid;
pub mod kato;
pub mod noise;
pub mod ops;
pub mod sde;
pub mod spectral;
pub mod stats;
pub mod transforms;

pub use error::{Error, Result};
pub use euler::{Corrector, EulerSolution};
pub use grid::{BoundaryStrip, Domain, ScalarGridField, VectorGridField};
pub use kato::{CriterionQuantities, SweepResult};
pub use noise::{NoiseConfig, NoiseKind, NoiseModel};
pub use sde::{BrownianPath, GalerkinSystem, SdeConfig, TrajectoryRecord};
pub use spectral::{LerayProjector, SpectralBasis, VelocityField};
