//! Deterministic seed derivation for per-item random streams.

/// One SplitMix64 step.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `parts` into one seed; order matters.
pub fn derive(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5EED_u64, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Uniform `[0, 1)` draw keyed by `parts`, without an RNG stream.
pub fn unit(parts: &[u64]) -> f64 {
    (derive(parts) >> 11) as f64 / (1u64 << 53) as f64
}
