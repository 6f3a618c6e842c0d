//! Archive-growth projection for long-running deployments.
//!
//! A party's archive keeps, per update it receives, one commitment record
//! and room for one challenge response. The default record sizes reflect
//! this implementation's wire shapes: a 64-byte dual-hash root plus
//! identifiers (79 bytes), and a bounded selective-opening response
//! (140 bytes). The projection is deliberately linear — no compression,
//! no pruning — so it reads as an upper bound.

use std::fmt;

use serde::Serialize;

/// Commitment record size used when no override is given.
pub const DEFAULT_COMMITMENT_BYTES: u64 = 79;
/// Challenge-response size used when no override is given.
pub const DEFAULT_RESPONSE_BYTES: u64 = 140;

const DAYS_PER_YEAR: u64 = 365;
const BYTES_PER_GIB: f64 = (1u64 << 30) as f64;

/// Linear storage projection: `updates_per_day × 365 × years` updates,
/// each costing `commitment_bytes + response_bytes`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StorageEstimate {
    pub updates_per_day: u64,
    pub years: u64,
    pub commitment_bytes: u64,
    pub response_bytes: u64,
    pub total_bytes: u64,
}

impl StorageEstimate {
    /// Build the projection. Saturates instead of overflowing on absurd
    /// inputs, so the figure stays a safe upper bound.
    pub fn new(
        updates_per_day: u64,
        years: u64,
        commitment_bytes: u64,
        response_bytes: u64,
    ) -> StorageEstimate {
        let per_update = commitment_bytes.saturating_add(response_bytes);
        let total_bytes = updates_per_day
            .saturating_mul(DAYS_PER_YEAR)
            .saturating_mul(years)
            .saturating_mul(per_update);
        StorageEstimate {
            updates_per_day,
            years,
            commitment_bytes,
            response_bytes,
            total_bytes,
        }
    }

    /// Projection with the default record sizes.
    pub fn with_defaults(updates_per_day: u64, years: u64) -> StorageEstimate {
        StorageEstimate::new(
            updates_per_day,
            years,
            DEFAULT_COMMITMENT_BYTES,
            DEFAULT_RESPONSE_BYTES,
        )
    }

    /// Bytes stored per update: one commitment plus one response.
    pub fn per_update_bytes(&self) -> u64 {
        self.commitment_bytes + self.response_bytes
    }

    /// Total in binary gibibytes (2³⁰ bytes).
    pub fn total_gib(&self) -> f64 {
        self.total_bytes as f64 / BYTES_PER_GIB
    }
}

impl fmt::Display for StorageEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "updates per day:   {}", self.updates_per_day)?;
        writeln!(f, "horizon (years):   {}", self.years)?;
        writeln!(
            f,
            "per-update bytes:  {} (commitment {} + response {})",
            self.per_update_bytes(),
            self.commitment_bytes,
            self.response_bytes
        )?;
        writeln!(f, "total bytes:       {}", self.total_bytes)?;
        write!(f, "total GiB:         {:.2}", self.total_gib())
    }
}
