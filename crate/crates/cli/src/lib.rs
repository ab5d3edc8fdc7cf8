//! Library half of the `ddreg` command-line tool.

pub mod app;
pub mod bspline;
pub mod commands;
pub mod design;
pub mod ingest;
pub mod plots;
pub mod report;

pub use bspline::{bspline_basis, bspline_full_basis};
pub use ingest::{ingest, DropCounts, IngestSpec, Ingested, Transform};
pub use report::Report;
