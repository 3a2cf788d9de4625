//! Seeded random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent generator for entity `index` of family `kind` under `seed`.
///
/// Every entity owns its own stream, so scenarios that differ only in how
/// many entities they hold agree on the entities they share.
pub fn stream(seed: u64, kind: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((kind << 32) | (index & 0xffff_ffff));
    rng
}
