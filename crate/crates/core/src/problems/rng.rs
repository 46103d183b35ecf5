//! Counter-based seeding for bit-reproducible instance generation.
//!
//! Every (seed, instance index, field tag) triple gets its own splitmix64
//! stream, so instance `i` is identical no matter how many instances are
//! generated or in which order workers produce them. Uniform reals use the
//! top 53 bits of each output: `u = (x >> 11) · 2⁻⁵³ ∈ [0, 1)`.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(state: u64) -> Self {
        Self { state }
    }

    /// Stream dedicated to one field of one instance.
    pub fn for_field(seed: u64, index: u64, tag: u64) -> Self {
        let s = finalize(finalize(seed.wrapping_add(GOLDEN_GAMMA)) ^ index);
        Self::new(finalize(s ^ tag.wrapping_mul(GOLDEN_GAMMA)))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        finalize(self.state)
    }

    /// Uniform in `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    #[inline]
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `[lo, hi]`.
    #[inline]
    pub fn int_in(&mut self, lo: u64, hi: u64) -> u64 {
        lo + ((self.uniform() * (hi - lo + 1) as f64) as u64).min(hi - lo)
    }
}
