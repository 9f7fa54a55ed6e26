//! Jamming-aware GNSS deviation prediction on snapshot graphs.

pub mod dataio;
pub mod graph;
pub mod models;
pub mod sim;
pub mod trainer;
