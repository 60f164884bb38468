//! Demographic-parity debiasing by budgeted label flipping.
//!
//! The crate is layered bottom-up: a dense simplex ([`lp`]) and a
//! branch-and-bound driver with lazy cuts ([`milp`]) support the flip
//! selection models in [`flip`], which combine them with the fixed-label
//! fits in [`classifiers`]. [`data`] handles ingestion and bias metrics and
//! [`explain`] fits three-class trees over the resulting flips.

pub mod classifiers;
pub mod data;
pub mod explain;
pub mod flip;
pub mod lp;
pub mod milp;
