//! County-year panel toolkit for studying how farming returns drive land
//! conversion to solar and wind generation.
//!
//! The crate has two halves that share one estimation engine:
//!
//! * an empirical pipeline — panel ingestion ([`panel`]), land-use preference
//!   ranking ([`ranking`]), weather-instrument construction ([`instrument`]),
//!   two-way fixed-effects OLS/2SLS ([`estimator`]), and a lease-payoff
//!   calculator ([`leasecalc`]);
//! * a simulation laboratory ([`simlab`]) that draws populations with fully
//!   observable counterfactuals, computes estimands by direct enumeration,
//!   and checks the estimation engine against those enumerated values.
//!
//! The `landuse-iv` binary wires both halves into reproducible, seeded
//! command-line runs that emit a manifest per invocation ([`manifest`]).

pub mod error;
pub mod estimator;
pub mod instrument;
pub mod kvfile;
pub mod leasecalc;
pub mod manifest;
pub mod panel;
pub mod ranking;
pub mod seed;
pub mod simlab;

pub use error::{Error, Result};
pub use panel::{LandUse, Panel, PanelObservation, RegulationLevel};
