//! Return-time statistics for model dynamical systems: dynamical and metric
//! balls, partition cylinders, and the growth-rate estimators that read
//! entropy, pressure, dimension, and expansion rates off them.

pub mod error;
pub mod estimators;
pub mod recurrence;
pub mod systems;

pub use error::{Error, Result};
pub use estimators::{EstimateReport, PotentialSpec, Quantity, ReportBundle, Verdict};
pub use recurrence::{Obs, ReturnTimeGrid};
pub use systems::{MapKind, MeasureKind, OrbitBuffer, Point, SymbolicWord, SystemSpec};
