//! Deterministic sub-seed derivation. Every randomized stage hashes its own
//! domain tag, the relevant identifiers, and the trial number into an
//! independent stream seed, so results never depend on thread scheduling or
//! on which other stages ran.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

/// FNV-1a over the concatenated parts, with a separator fold between parts so
/// `["ab", "c"]` and `["a", "bc"]` differ.
pub(crate) fn fnv1a(parts: &[&[u8]]) -> u64 {
    let mut h = FNV_OFFSET;
    for part in parts {
        for &byte in *part {
            h ^= byte as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
        h ^= 0xff;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

pub(crate) fn subseed(seed: u64, domain: &str) -> u64 {
    fnv1a(&[&seed.to_le_bytes(), domain.as_bytes()])
}

pub(crate) fn indexed_rng(seed: u64, domain: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(fnv1a(&[
        &seed.to_le_bytes(),
        domain.as_bytes(),
        &index.to_le_bytes(),
    ]))
}

pub(crate) fn trial_rng(seed: u64, domain: &str, user_id: &str, trial: u32) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(fnv1a(&[
        &seed.to_le_bytes(),
        domain.as_bytes(),
        user_id.as_bytes(),
        &trial.to_le_bytes(),
    ]))
}
