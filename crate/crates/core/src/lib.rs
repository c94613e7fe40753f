//! Lattice simulator for the higher-order Yang–Mills–Higgs k-flow on flat
//! periodic tori.

pub mod algebra;
pub mod cli;
pub mod analysis;
pub mod energy;
pub mod error;
pub mod fields;
pub mod flow;
pub mod gradient;
pub mod io;
pub mod lattice;
mod reduce;
pub mod verify;

pub use error::{Error, Result};
