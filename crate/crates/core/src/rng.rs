//! Deterministic random streams.
//!
//! Every stochastic component of the toolkit (weight initialization, data
//! synthesis, shuffling, bootstrap draws) pulls from [`RngStream`], a
//! xoshiro256++ generator seeded through SplitMix64. The algorithm is fixed
//! and self-contained so a given seed yields the same sequence on every
//! platform and build — reproducibility of trained models depends on it.
//! Floating-point draws are derived from the integer stream with a fixed
//! 53-bit mapping, never from platform RNG facilities.

/// SplitMix64 step; used for seed expansion and for hashing labels into seeds.
#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a 64-bit hash. Seed derivation and file checksums share it: tiny,
/// portable, and good enough at both jobs.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const FNV_OFFSET: u64 = 0xCBF2_9CE4_8422_2325;
    const FNV_PRIME: u64 = 0x0000_0100_0000_01B3;
    let mut h = FNV_OFFSET;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Derive a per-item seed from a base seed and a string identifier.
///
/// Used for per-sample synthesis streams: the identifier is hashed (FNV-1a)
/// and mixed with the base seed so items keep their streams regardless of
/// generation order or batch composition.
pub fn derive_seed(base: u64, id: &str) -> u64 {
    let mut s = base ^ fnv1a64(id.as_bytes());
    splitmix64(&mut s)
}

/// Deterministic pseudo-random stream (xoshiro256++).
#[derive(Debug, Clone)]
pub struct RngStream {
    s: [u64; 4],
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let mut s = [0u64; 4];
        for slot in &mut s {
            *slot = splitmix64(&mut sm);
        }
        // All-zero state is the one forbidden xoshiro state; SplitMix64 cannot
        // realistically produce it, but guard anyway.
        if s == [0, 0, 0, 0] {
            s[0] = 1;
        }
        RngStream { s }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform draw in `[0, 1)` with 53 bits of randomness.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[low, high)`.
    #[inline]
    pub fn uniform(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.next_f64()
    }

    /// Uniform integer in `[0, n)` via the multiply-shift reduction
    /// (bias below 2^-64, and unlike `% n` it is branch-free).
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((u128::from(self.next_u64()) * n as u128) >> 64) as usize
    }

    /// Standard normal draw (Box–Muller; consumes two uniforms).
    pub fn gaussian(&mut self) -> f64 {
        // Guard the log away from zero; next_f64 can return exact 0.
        let u1 = (1.0 - self.next_f64()).max(f64::MIN_POSITIVE);
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }

    /// Child stream whose seed mixes this stream's seed path with `tag`.
    /// Advances `self` by one draw.
    pub fn fork(&mut self, tag: u64) -> RngStream {
        let mut s = self.next_u64() ^ tag;
        RngStream::new(splitmix64(&mut s))
    }
}
