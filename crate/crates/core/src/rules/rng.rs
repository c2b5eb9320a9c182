use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// User-facing seed for every randomized operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RngSeed(pub u64);

/// Counter-based random streams: row `i` always draws from stream `i` of a
/// ChaCha key derived from `(seed, domain)`, so a row's draws do not depend on
/// which other rows exist or in what order rows are processed.
#[derive(Clone)]
pub struct RowStreams {
    base: ChaCha8Rng,
}

impl RowStreams {
    pub fn new(seed: RngSeed, domain: &str) -> Self {
        let mut key = [0u8; 32];
        let mut state = seed.0 ^ fnv1a(domain.as_bytes());
        for chunk in key.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Self { base: ChaCha8Rng::from_seed(key) }
    }

    pub fn row(&self, i: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(i);
        rng
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Mixes a replicate index into a seed.
pub fn derive_seed(seed: RngSeed, index: u64) -> RngSeed {
    let mut s = seed.0 ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03);
    RngSeed(splitmix64(&mut s))
}
