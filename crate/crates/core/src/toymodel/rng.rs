//! Seeded randomness with a cross-language recipe.
//!
//! Generator: ChaCha with 8 rounds, 256-bit key = the seed as 8 little-endian
//! bytes followed by 24 zero bytes, nonce and stream 0. `next_u64` joins two
//! consecutive 32-bit keystream words, low word first. Uniform `[0, 1)`
//! doubles take the top 53 bits: `(next_u64 >> 11) · 2⁻⁵³`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PRNG_NAME: &str = "chacha8";

pub fn seeded(seed: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

pub fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_sequence() {
        // Standard ChaCha8 block 0 for the documented key; checked against an
        // independent implementation of the block function.
        let mut rng = seeded(0);
        let words: Vec<u64> = (0..3).map(|_| rng.next_u64()).collect();
        assert_eq!(words, vec![0xd6405f892fef003e, 0xa1a5091fe8b85b7f, 0x3b7f9acec30e842c]);
        assert_eq!(seeded(1).next_u64(), 0x61a94a49a0e95ecf);
        assert_eq!(unit_f64(&mut seeded(0)), (0xd6405f892fef003e_u64 >> 11) as f64 / 9007199254740992.0);
    }
}
