//! Exact simulator and analysis toolkit for heat-leak detection experiments
//! on few-qubit circuits: thermal diagonal ensembles, population transfer
//! through CNOT/SWAP/Ry circuits, readout-noise emulation, and the family of
//! detection statistics (global passivity, passivity deformation,
//! majorization, Renyi bounds, fluctuation theorem).

pub mod calibrate;
pub mod detector;
pub mod error;
pub mod fmt;
pub mod inequality;
pub mod qcore;
pub mod stats;
pub mod thermal;

pub use error::{Error, Result};
