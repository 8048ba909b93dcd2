//! Data ingestion, simulation studies, asymptotic checks and report writing
//! on top of `caseparam-core`.

pub mod asymptotics;
pub mod io;
pub mod manifest;
pub mod report;
pub mod simulate;

pub use caseparam_core as core;
