//! Hash primitives: SHA-256, GOST R 34.11-94, and the dual-hash combiner
//! used for every commitment in the engine.
//!
//! The combiner concatenates the two digests (SHA-256 first), so an input
//! collision would require colliding both functions at once. The 64-byte
//! result is the engine's universal digest type; it also backs the
//! per-cell blinding values via [`prf_sigma`].

pub mod gost94;

use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};

pub use gost94::{Gost94, GostParamSet};

/// Parameter set used everywhere a caller does not choose one explicitly.
pub const DEFAULT_GOST_PARAMS: GostParamSet = GostParamSet::CryptoProParamSet;

// ---------------------------------------------------------------------------
// Digest newtypes
// ---------------------------------------------------------------------------

macro_rules! digest_type {
    ($name:ident, $len:expr, $doc:expr) => {
        #[doc = $doc]
        #[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub [u8; $len]);

        impl $name {
            pub const LEN: usize = $len;

            pub fn as_bytes(&self) -> &[u8; $len] {
                &self.0
            }

            pub fn to_hex(&self) -> String {
                hex::encode(self.0)
            }

            pub fn from_hex(s: &str) -> Result<Self, hex::FromHexError> {
                let mut bytes = [0u8; $len];
                hex::decode_to_slice(s, &mut bytes)?;
                Ok($name(bytes))
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.to_hex())
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!(stringify!($name), "({})"), self.to_hex())
            }
        }

        impl AsRef<[u8]> for $name {
            fn as_ref(&self) -> &[u8] {
                &self.0
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(&self.to_hex())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                $name::from_hex(&s).map_err(D::Error::custom)
            }
        }
    };
}

digest_type!(Digest32, 32, "A 32-byte digest (single hash function).");
digest_type!(
    Digest64,
    64,
    "A 64-byte dual digest: SHA-256 output followed by GOST R 34.11-94 output."
);

impl Digest64 {
    /// The SHA-256 half of the dual digest.
    pub fn sha_half(&self) -> Digest32 {
        let mut out = [0u8; 32];
        out.copy_from_slice(&self.0[..32]);
        Digest32(out)
    }

    /// The GOST half of the dual digest.
    pub fn gost_half(&self) -> Digest32 {
        let mut out = [0u8; 32];
        out.copy_from_slice(&self.0[32..]);
        Digest32(out)
    }

    pub fn from_halves(sha: Digest32, gost: Digest32) -> Digest64 {
        let mut out = [0u8; 64];
        out[..32].copy_from_slice(&sha.0);
        out[32..].copy_from_slice(&gost.0);
        Digest64(out)
    }
}

// ---------------------------------------------------------------------------
// Hash functions
// ---------------------------------------------------------------------------

/// SHA-256 of `data`.
pub fn sha256(data: &[u8]) -> Digest32 {
    let mut out = [0u8; 32];
    out.copy_from_slice(&Sha256::digest(data));
    Digest32(out)
}

/// GOST R 34.11-94 of `data` under `params`.
pub fn gost94(params: GostParamSet, data: &[u8]) -> Digest32 {
    Digest32(gost94::gost94_digest(params, data))
}

/// Dual digest under an explicit GOST parameter set.
pub fn combined_hash_with(params: GostParamSet, data: &[u8]) -> Digest64 {
    Digest64::from_halves(sha256(data), gost94(params, data))
}

/// Dual digest under [`DEFAULT_GOST_PARAMS`]. This is the hash every
/// commitment, chain link, and proof statement in the engine uses.
pub fn combined_hash(data: &[u8]) -> Digest64 {
    combined_hash_with(DEFAULT_GOST_PARAMS, data)
}

// ---------------------------------------------------------------------------
// Blinding-value derivation
// ---------------------------------------------------------------------------

/// Secret key from which a party derives all of its per-cell blinding
/// values. Deliberately not serializable, and `Debug` redacts the bytes:
/// the key must never appear in transcripts, ledgers, or logs.
#[derive(Clone, PartialEq, Eq)]
pub struct PrfKey([u8; 32]);

impl PrfKey {
    pub fn from_bytes(bytes: [u8; 32]) -> Self {
        PrfKey(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

impl fmt::Debug for PrfKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PrfKey(<redacted>)")
    }
}

/// Blinding value for one cell: the dual hash of the key, the passport's
/// update index (64-bit big-endian), and the field index (32-bit
/// big-endian). Distinct (update, field) pairs never reuse a blinding
/// value under the same key.
pub fn prf_sigma(key: &PrfKey, update_index: u64, field_index: u32) -> Digest64 {
    let mut input = Vec::with_capacity(32 + 8 + 4);
    input.extend_from_slice(&key.0);
    input.extend_from_slice(&update_index.to_be_bytes());
    input.extend_from_slice(&field_index.to_be_bytes());
    combined_hash(&input)
}

// ---------------------------------------------------------------------------
