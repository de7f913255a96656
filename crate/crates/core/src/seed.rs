//! Hierarchical seed derivation.
//!
//! Every random stream in a run is keyed off one master seed. A child seed is
//! the first eight bytes (little-endian) of
//! `SHA-256(parent_le || label || index_le)`, so the stream a client or round
//! sees depends only on its position in the tree, never on execution order.
//!
//! The labels used across the crate:
//!
//! | label            | index        | consumer                               |
//! |------------------|--------------|----------------------------------------|
//! | `"init"`         | 0            | Glorot initialisation of the global model |
//! | `"sample"`       | round        | client sampling                        |
//! | `"client"`       | client index | local trainer (shuffles)               |
//! | `"server-noise"` | round        | Gaussian noise on the aggregate        |
//! | `"clip-noise"`   | round        | noise on the adaptive-clipping count   |
//! | `"secagg"`       | round        | pairwise and self-mask seeds           |
//! | `"dropout"`      | round        | simulated SecAgg dropouts              |
//! | `"epoch"`        | epoch        | per-epoch shuffle of a trainer         |
//! | `"secagg-pair"`, `"secagg-self"`, `"secagg-share"`, `"peer"` | party | secure-aggregation key material |
//! | `"synthetic-shared"`, `"synthetic-client"` | client | synthetic profiles and noise |
//! | `"data"`         | group        | synthetic population, from the master seed |
//! | `"train"`, `"federation"` | 0   | training and federation seeds, from the master seed |

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derive a child seed from `parent`, a label and an index.
pub fn derive(parent: u64, label: &str, index: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(parent.to_le_bytes());
    hasher.update(label.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut out = [0u8; 8];
    out.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(out)
}

/// Deterministic RNG for general simulation randomness.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Convenience: RNG for a derived child stream.
pub fn child_rng(parent: u64, label: &str, index: u64) -> ChaCha8Rng {
    rng(derive(parent, label, index))
}
