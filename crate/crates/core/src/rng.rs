//! Deterministic random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream addressed by a
//! triple `(seed, key, stream)`:
//!
//! * the 32-byte ChaCha key is `seed.to_le_bytes() ++ key.to_le_bytes() ++ [0; 16]`,
//! * the ChaCha stream id is `stream`, and the word position starts at zero.
//!
//! ChaCha is counter based, so the stream for bootstrap iteration `j` does not
//! depend on how many draws other iterations made. Work can be split across
//! threads in any order and still reproduce the same numbers.
//!
//! Bounded indices are drawn with the multiply-shift reduction
//! `(next_u64() as u128 * n as u128) >> 64`, one `next_u64` per index.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Opens the stream addressed by `(seed, key, stream)`.
pub fn stream_rng(seed: u64, key: u64, stream: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&key.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(bytes);
    rng.set_stream(stream);
    rng
}

/// Uniform index in `0..n`. `n` must be non-zero.
#[inline]
pub fn draw_index<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> usize {
    debug_assert!(n > 0);
    ((u128::from(rng.next_u64()) * n as u128) >> 64) as usize
}

/// SplitMix64 finalizer applied to `master + golden * (index + 1)`.
/// Used to derive per-replicate seeds from one master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a. Stable across platforms and releases, unlike `DefaultHasher`.
#[derive(Debug, Clone)]
pub struct Fnv1a(u64);

impl Fnv1a {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;

    pub fn new() -> Self {
        Self(Self::OFFSET)
    }

    pub fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(Self::PRIME);
        }
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}

impl Default for Fnv1a {
    fn default() -> Self {
        Self::new()
    }
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = Fnv1a::new();
    h.write(bytes);
    h.finish()
}
