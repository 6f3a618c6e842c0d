//! Command-line companion to `passport-core`: run scenario files, hash
//! inputs with the engine's hash functions, project archive growth, and
//! summarize transcripts.
//!
//! The binary (`passport-sim`) is a thin dispatcher. The two pieces with
//! logic worth calling directly — the storage estimate and the transcript
//! report — live here as library code.

pub mod estimate;
pub mod report;

pub use estimate::StorageEstimate;
pub use report::TranscriptReport;
