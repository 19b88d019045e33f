//! Deterministic seed derivation.
//!
//! All randomness in the crate flows from a single base seed. Per-unit seeds
//! (one per county-year ranking, one per Monte Carlo replication) are derived
//! with a fixed, platform-independent mix so that runs are reproducible and
//! parallel execution order cannot change results.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(mut state: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        state ^= u64::from(b);
        state = state.wrapping_mul(FNV_PRIME);
    }
    state
}

/// SplitMix64 finalizer; decorrelates nearby inputs.
fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed for one county-year ranking draw.
pub fn observation_seed(base_seed: u64, county_id: &str, year: i32) -> u64 {
    let mut h = fnv1a(FNV_OFFSET, b"rank");
    h = fnv1a(h, &base_seed.to_le_bytes());
    h = fnv1a(h, county_id.as_bytes());
    h = fnv1a(h, &year.to_le_bytes());
    splitmix(h)
}

/// Seed for one Monte Carlo replication.
pub fn replication_seed(base_seed: u64, rep_index: u64) -> u64 {
    let mut h = fnv1a(FNV_OFFSET, b"rep");
    h = fnv1a(h, &base_seed.to_le_bytes());
    h = fnv1a(h, &rep_index.to_le_bytes());
    splitmix(h)
}
