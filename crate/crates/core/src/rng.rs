use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

// Independent streams per consumer so that, e.g., the split permutation never
// depends on how many draws the flip permutation made.
pub(crate) const SPLIT: u64 = 1;
pub(crate) const SYNTH: u64 = 2;
pub(crate) const SUBSAMPLE: u64 = 3;
pub(crate) const CONTAMINATE: u64 = 4;
pub(crate) const FLIP: u64 = 5;
pub(crate) const PSO: u64 = 6;
pub(crate) const FAIREA: u64 = 1 << 32;

pub(crate) fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
