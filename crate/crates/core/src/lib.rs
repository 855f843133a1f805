pub mod duality;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod kernel;
pub mod model;
pub mod reduction;
pub mod sampling;
pub mod scalar;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

/// `f64` instantiations of the generic types.
pub type Mat64 = kernel::CMatrix<f64>;
pub type Coupling64 = model::Coupling<f64>;
pub type SutherlandState64 = model::SutherlandState<f64>;
pub type RsState64 = model::RsState<f64>;
pub type ModelState64 = model::ModelState<f64>;
pub type OrbitVector64 = model::OrbitVector<f64>;
pub type UnreducedPoint64 = reduction::UnreducedPoint<f64>;
pub type KElement64 = reduction::KElement<f64>;
pub type DualityResiduals64 = duality::DualityResiduals<f64>;
pub type FlowSpec64 = dynamics::FlowSpec<f64>;
pub type Trajectory64 = dynamics::Trajectory<f64>;
