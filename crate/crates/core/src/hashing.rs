//! Counter-based randomness: every vertex label is a pure function of a
//! seed and the vertex key, so fields never need to be stored and streamed
//! graphs can be evaluated in any order.

/// splitmix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const WORD_MUL: u64 = 0xD6E8_FEB8_6659_FD93;
const FINAL: u64 = 0xA076_1D64_78BD_642F;

/// Independent random streams drawn from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    /// Fitness labels `eta`.
    Label = 0x6C61_6265_6C73_0001,
    /// Bernoulli site marks.
    Site = 0x7369_7465_7300_0002,
}

/// Running hash over the canonical key words of a vertex.
///
/// A key is a sequence of 64-bit words (bitmask for hypercube vertices,
/// child indices from the root for tree vertices, `x` then `y` for lattice
/// sites). Folding is sequential, so a tree child's state is derived from
/// its parent's state with one [`KeyHash::push`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyHash(u64);

impl KeyHash {
    #[inline]
    pub fn new(seed: u64, stream: Stream) -> Self {
        KeyHash(mix64(mix64(seed.wrapping_add(GAMMA)) ^ stream as u64))
    }

    #[inline]
    pub fn push(self, word: u64) -> Self {
        KeyHash(mix64(self.0.rotate_left(23) ^ word.wrapping_add(GAMMA).wrapping_mul(WORD_MUL)))
    }

    #[inline]
    pub fn push_i64(self, word: i64) -> Self {
        self.push(word as u64)
    }

    /// Uniform 64-bit output for the key folded so far.
    #[inline]
    pub fn finish(self) -> u64 {
        mix64(self.0 ^ FINAL)
    }

    /// Uniform draw on the open interval (0, 1); never returns 0 or 1.
    #[inline]
    pub fn unit(self) -> f64 {
        unit_open(self.finish())
    }
}

/// Maps 52 high bits to the midpoint grid in (0, 1); both ends stay
/// representable and excluded.
#[inline]
pub fn unit_open(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Seed of run `run` in experiment `experiment`.
pub fn derive_seed(base: u64, experiment: u64, run: u64) -> u64 {
    KeyHash::new(base, Stream::Label).push(experiment).push(run).finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_stays_open() {
        assert!(unit_open(0) > 0.0);
        assert!(unit_open(u64::MAX) < 1.0);
    }

    #[test]
    fn streams_and_words_separate() {
        let a = KeyHash::new(7, Stream::Label).push(3);
        let b = KeyHash::new(7, Stream::Site).push(3);
        let c = KeyHash::new(7, Stream::Label).push(4);
        assert_ne!(a.finish(), b.finish());
        assert_ne!(a.finish(), c.finish());
        assert_eq!(a.finish(), KeyHash::new(7, Stream::Label).push(3).finish());
    }

    #[test]
    fn prefix_differs_from_extension() {
        let root = KeyHash::new(1, Stream::Label);
        assert_ne!(root.push(0).finish(), root.push(0).push(0).finish());
        assert_ne!(root.finish(), root.push(0).finish());
    }

    #[test]
    fn unit_mean_is_half() {
        let base = KeyHash::new(99, Stream::Label);
        let n = 100_000;
        let mean: f64 = (0..n).map(|i| base.push(i).unit()).sum::<f64>() / n as f64;
        // sd of the mean is 0.29 / sqrt(n) ~ 9e-4
        assert!((mean - 0.5).abs() < 4e-3, "mean {mean}");
    }
}
