use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// What a random stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Replicate = 1,
    Oracle = 2,
    Setting = 3,
    Structure = 4,
}

/// An independent stream keyed by purpose, setting (e.g. amplitude index)
/// and index (e.g. replicate).
pub fn stream_rng(master: u64, purpose: Purpose, setting: u16, index: u32) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream((purpose as u64) << 48 | (setting as u64) << 32 | index as u64);
    rng
}
