//! Reconstruction of the cookie-syncing ecosystem from captured HTTP traffic.
//!
//! The crate is organised as a pipeline:
//!
//! - [`log_model`]: request/cookie records and the HAR / native JSONL loaders
//! - [`ids`]: ID-candidate extraction and the four elimination rules
//! - [`decode`]: layered decoding of parameter values and nested-URL extraction
//! - [`sync`]: cookie-sync event detection
//! - [`company`] and [`psl`]: host → company resolution
//! - [`graph`]: relation graph construction and graph statistics
//! - [`longitudinal`]: trend regressions over a measurement series
//! - [`sar`]: subject-access-request deadlines, workload and outcomes
//! - [`synth`]: deterministic synthetic corpora with ground truth

pub mod company;
pub mod decode;
pub mod error;
pub mod graph;
pub mod ids;
pub mod log_model;
pub mod longitudinal;
pub mod psl;
pub mod sar;
pub mod similarity;
pub mod sync;
pub mod synth;

pub use error::{Error, Result};

/// Version of the on-disk artifact formats (JSONL records, graph JSON, CSV layouts).
pub const FORMAT_VERSION: &str = "1";
