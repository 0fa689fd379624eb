//! Per-sample seed derivation.
//!
//! A sample's seed depends only on the global seed, the sample id and the
//! model name, never on scheduling, so records are reproducible under any
//! worker count and under partial re-runs.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Stream tag XOR-ed into a sample seed for mesh surface sampling.
/// (EMD subsampling uses stream 1, see `metrics::emd_subsample_seed`.)
pub const MESH_SAMPLING_STREAM: u64 = 3;

fn fnv1a(state: u64, bytes: &[u8]) -> u64 {
    bytes.iter().fold(state, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over `(global_seed LE, sample_id, 0xff, model)`, finished with
/// the SplitMix64 mixer.
pub fn sample_seed(global_seed: u64, sample_id: &str, model: &str) -> u64 {
    let mut h = fnv1a(FNV_OFFSET, &global_seed.to_le_bytes());
    h = fnv1a(h, sample_id.as_bytes());
    // 0xff never appears in UTF-8, so ("ab", "c") and ("a", "bc") differ.
    h = fnv1a(h, &[0xff]);
    h = fnv1a(h, model.as_bytes());
    splitmix64(h)
}

pub fn mesh_sampling_seed(seed: u64) -> u64 {
    seed ^ MESH_SAMPLING_STREAM
}
