//! Deterministic seed discipline: a 64-bit master seed splits into named
//! per-trial substreams via a counter-based mix, so algorithm pairs can
//! replay identical randomness (shared mode) or salt their streams apart.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One independent generator keyed by `(master, trial, label)`.
pub fn substream(master: u64, trial: u64, label: &str) -> ChaCha8Rng {
    let mut state = master ^ fnv1a(label.as_bytes()).rotate_left(17) ^ trial.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// The named substreams one rounding trial consumes.
///
/// `sample` drives the per-bin configuration draws, `bin_coins` the bin
/// magician's tie-breaks, `item_coins` the per-item magicians'. With an
/// empty salt two algorithms given the same `(master, trial)` replay
/// identical randomness; a nonempty salt (the algorithm id) decouples them.
pub struct TrialStreams {
    pub sample: ChaCha8Rng,
    pub bin_coins: ChaCha8Rng,
    pub item_coins: ChaCha8Rng,
}

impl TrialStreams {
    pub fn new(master: u64, trial: u64, salt: &str) -> Self {
        let name = |base: &str| {
            if salt.is_empty() {
                base.to_string()
            } else {
                format!("{base}/{salt}")
            }
        };
        TrialStreams {
            sample: substream(master, trial, &name("sample")),
            bin_coins: substream(master, trial, &name("bin-coins")),
            item_coins: substream(master, trial, &name("item-coins")),
        }
    }
}
