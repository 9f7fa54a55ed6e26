//! Experiment orchestration for jamgraph: campaign storage, parallel training
//! jobs, the experiment suites, SVG plots and numeric self-checks.

pub mod checks;
pub mod commands;
pub mod config;
pub mod data;
mod error;
pub mod experiments;
pub mod jobs;
pub mod repro;
pub mod svg;

pub use error::{BenchError, Result};

// Training allocates and frees many short-lived tensors; the system
// allocator spends a large share of the run returning pages to the kernel.
#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;
