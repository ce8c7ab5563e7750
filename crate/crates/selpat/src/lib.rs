//! File formats, experiment harness and output helpers around
//! [`selpat_core`].

pub mod experiment;
pub mod io;
pub mod output;

pub use selpat_core;
