//! Counter-based pseudo-random stream with an explicit position.
//!
//! The generator is splitmix64 evaluated at `seed + pos * GAMMA`, so state is
//! just `(seed, pos)`: identical seed and call sequence reproduce identical
//! draws on every platform, and independent sub-streams can be derived for
//! separate purposes (init, shuffling, augmentation, wagging) so that one
//! consumer drawing more or fewer values never shifts another stream.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngState {
    seed: u64,
    pos: u64,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        RngState { seed, pos: 0 }
    }

    /// Independent stream for a named purpose. Streams with distinct ids
    /// never overlap in practice (distinct splitmix keys).
    pub fn derive(&self, stream_id: u64) -> RngState {
        let mut key = self.seed ^ mix(stream_id.wrapping_mul(GAMMA).wrapping_add(GAMMA));
        if key == self.seed {
            key = key.wrapping_add(1);
        }
        RngState { seed: key, pos: 0 }
    }

    pub fn position(&self) -> u64 {
        self.pos
    }

    pub fn next_u64(&mut self) -> u64 {
        self.pos = self.pos.wrapping_add(1);
        mix(self.seed.wrapping_add(self.pos.wrapping_mul(GAMMA)))
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in (0, 1]; safe as a log argument.
    fn next_f64_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller. Consumes exactly two raw draws, so the
    /// stream position advances deterministically per call.
    pub fn next_normal(&mut self) -> f64 {
        let u1 = self.next_f64_open();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform integer in [0, n). n must be positive.
    pub fn next_below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.next_below(i + 1);
            xs.swap(i, j);
        }
    }
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
