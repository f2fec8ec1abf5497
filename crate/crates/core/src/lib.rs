//! Predicting the basic reproduction number of SIR epidemics from network
//! structure.
//!
//! The pipeline generates model networks ([`netgen`]), measures six
//! structural features ([`netmetrics`]), simulates an SIR process with
//! disease deaths to label each network with R0 ([`epidemic`]), assembles
//! the labelled table ([`dataset`]), fits regression models ([`regress`]) and
//! ranks the features by principal-component contribution ([`ranking`]).

pub mod dataset;
pub mod epidemic;
pub mod error;
pub mod graph;
pub mod netgen;
pub mod netmetrics;
pub mod ranking;
pub mod regress;
pub mod rng;

pub use error::{Error, Result};
pub use graph::Graph;
