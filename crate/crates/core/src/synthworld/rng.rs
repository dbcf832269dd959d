/// Mixes a run seed, a stream tag and an item id into an independent seed
/// (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64, id: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(id.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) const STREAM_SCENE: u64 = 1;
pub(crate) const STREAM_NOISE: u64 = 2;
pub(crate) const STREAM_CAPTION: u64 = 3;
pub(crate) const STREAM_SPLIT: u64 = 4;
