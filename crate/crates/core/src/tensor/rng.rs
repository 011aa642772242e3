//! Counter-based random source.
//!
//! Every `(seed, stream_id)` pair defines a fixed sequence of 64-bit words:
//!
//! ```text
//! key_seed   = mix64(seed ^ 0x6A09E667F3BCC909)
//! key_stream = mix64(stream_id ^ 0xBB67AE8584CAA73B)
//! word_i     = mix64(mix64(key_seed + i * 0x9E3779B97F4A7C15) ^ key_stream)   (i = 0, 1, 2, ...)
//! ```
//!
//! where `mix64` is the SplitMix64 finalizer and all arithmetic wraps modulo
//! 2^64. Uniforms take the top 53 bits of a word. Normals use the Box–Muller
//! transform on two consecutive uniforms; both outputs are used, the cosine
//! branch first and the sine branch on the following call.

use super::Vector;
use crate::error::{Error, Result};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const SEED_SALT: u64 = 0x6A09_E667_F3BC_C909;
const STREAM_SALT: u64 = 0xBB67_AE85_84CA_A73B;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomSource {
    seed: u64,
    stream_id: u64,
    key_seed: u64,
    key_stream: u64,
    counter: u64,
    spare_normal: Option<f64>,
}

impl RandomSource {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self {
            seed,
            stream_id,
            key_seed: mix64(seed ^ SEED_SALT),
            key_stream: mix64(stream_id ^ STREAM_SALT),
            counter: 0,
            spare_normal: None,
        }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::new(seed, 0)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Independent source on the same seed, addressed by `child`.
    ///
    /// The child stream id depends only on this source's stream id and
    /// `child`, never on how much of this stream has been consumed.
    pub fn derive(&self, child: u64) -> RandomSource {
        let id = mix64(self.stream_id.wrapping_mul(GOLDEN) ^ mix64(child.wrapping_add(GOLDEN)));
        RandomSource::new(self.seed, id)
    }

    pub fn next_u64(&mut self) -> u64 {
        let word = mix64(
            mix64(self.key_seed.wrapping_add(self.counter.wrapping_mul(GOLDEN))) ^ self.key_stream,
        );
        self.counter = self.counter.wrapping_add(1);
        word
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer on `0..n` (`n >= 1`), by rejection so there is no modulo bias.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let w = self.next_u64();
            if w < zone {
                return w % n;
            }
        }
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Standard normal draw.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // u1 in (0, 1] keeps the logarithm finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn normal_vec(&mut self, n: usize) -> Vector {
        (0..n).map(|_| self.normal()).collect()
    }
}

/// `n` i.i.d. draws from N(0, sigma²).
pub fn gaussian_vector(rng: &mut RandomSource, n: usize, sigma: f64) -> Result<Vector> {
    if n == 0 {
        return Err(Error::InvalidDimension("gaussian_vector needs n >= 1".into()));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidValue(format!("sigma must be finite and >= 0, got {sigma}")));
    }
    Ok((0..n).map(|_| sigma * rng.normal()).collect())
}
