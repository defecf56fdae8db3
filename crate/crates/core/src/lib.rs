//! Local popularity analysis for directed graphs whose vertices carry a
//! two-tier group label.

pub mod correlate;
pub mod decompose;
pub mod distfit;
pub mod generate;
pub mod graph;
pub mod groups;
pub mod report;
pub mod ingest;
