//! Deterministic random streams. Every randomized check draws from its own
//! stream, derived from the run seed and a section name, so adding a check
//! never perturbs the points another check sees.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Grid resolution for sampled rationals: values are `lo + (hi-lo)*k/GRID`.
pub const GRID: i64 = 1 << 10;

pub fn sub_seed(seed: u64, section: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(section.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

pub fn stream(seed: u64, section: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sub_seed(seed, section))
}

/// Uniform rational on a grid over `[lo, hi]`, never an endpoint.
pub fn rational_in(rng: &mut impl Rng, lo: &BigRational, hi: &BigRational) -> BigRational {
    let k = rng.gen_range(1..GRID);
    lo + (hi - lo) * BigRational::new(BigInt::from(k), BigInt::from(GRID))
}

/// Uniform float in `[lo, hi)`.
pub fn float_in(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}

/// Hex SHA-256 of `bytes`.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_depend_on_section() {
        assert_eq!(sub_seed(42, "a"), sub_seed(42, "a"));
        assert_ne!(sub_seed(42, "a"), sub_seed(42, "b"));
        assert_ne!(sub_seed(42, "a"), sub_seed(43, "a"));
    }

    #[test]
    fn rationals_stay_inside() {
        let lo = BigRational::from_integer(1.into());
        let hi = BigRational::from_integer(3.into());
        let mut rng = stream(7, "box");
        for _ in 0..200 {
            let q = rational_in(&mut rng, &lo, &hi);
            assert!(q > lo && q < hi);
        }
    }
}
