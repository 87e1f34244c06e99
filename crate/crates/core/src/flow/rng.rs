use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Generator for one time cell of one sample, keyed by `(seed, stream, cell)`.
///
/// Modes are drawn in flat-index order from this generator, so the draw for
/// a given `(seed, stream, cell, mode)` never depends on worker scheduling.
pub fn cell_rng(seed: u64, stream: u64, cell: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    let words = [
        splitmix(seed),
        splitmix(seed ^ 0xA5A5_A5A5_A5A5_A5A5),
        splitmix(stream.wrapping_add(0x5851_F42D_4C95_7F2D)),
        splitmix(stream ^ 0x1405_7B7E_F767_814F),
    ];
    for (i, w) in words.iter().enumerate() {
        key[8 * i..8 * i + 8].copy_from_slice(&w.to_le_bytes());
    }
    let mut rng = ChaCha12Rng::from_seed(key);
    rng.set_stream(cell);
    rng
}

/// Generator for auxiliary per-sample draws not tied to a time cell.
pub fn aux_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    cell_rng(seed, stream, u64::MAX)
}
