//! Searching for maximum-degree nodes with degree-biased random walks.
//!
//! Graph loading and degree statistics live in [`graph`]; the walk
//! simulators in [`walker`]; exact absorbing-chain analysis in [`chain`];
//! the degree-level approximation in [`reduced`]; graph generation and
//! rewiring in [`generators`] and [`rewire`]; batch runs in [`experiments`].

pub mod chain;
pub mod experiments;
pub mod generators;
pub mod graph;
pub mod linalg;
pub mod reduced;
pub mod rewire;
pub mod seed;
pub mod stats;
pub mod walker;
