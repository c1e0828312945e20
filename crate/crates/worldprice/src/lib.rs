//! Cost-preserving world prices for multi-campus price panels.
//!
//! A panel records per-product, per-campus prices and quantities. This crate
//! collapses each product's price row into a single world price three ways —
//! quantity-weighted naive blending, a two-way fixed-effects fit, and a
//! constrained convex reweighting that shares one campus-weight vector across
//! products — and provides diagnostics (order-violation rate, cost-distortion
//! ratio) plus seeded scenario generators and stress sweeps for comparing
//! them.

pub mod convex;
pub mod diagnostics;
pub mod error;
pub mod fe;
pub mod io;
pub mod operators;
pub mod panel;
pub mod scenarios;
pub mod sweep;

#[cfg(test)]
pub(crate) mod testdata;

pub use error::{Error, Result};
pub use operators::{naive_blend, OperatorTag, WorldPriceVector};
pub use panel::{build_panel, PanelRecord, PricePanel};
