//! Seeded, splittable random streams.
//!
//! An [`RngStream`] is an immutable `(seed, stream_id)` descriptor. Each
//! descriptor maps to an independent ChaCha8 keystream, so Monte Carlo
//! replicates and bootstrap draws can be assigned their own streams and
//! evaluated in any order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Generator state produced by [`RngStream::generator`].
pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub const fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn generator(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Child stream `index` of this stream. Children of distinct parents or
    /// distinct indices are distinct streams.
    pub fn substream(&self, index: u64) -> RngStream {
        let mixed = splitmix64(splitmix64(self.stream_id ^ 0xA076_1D64_78BD_642F) ^ splitmix64(index.wrapping_add(1)));
        RngStream {
            seed: self.seed,
            stream_id: mixed | (1 << 63),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform draw on `[0, 1)`.
pub fn sample_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

pub fn sample_normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> Result<f64> {
    if !(sd > 0.0) || !sd.is_finite() || !mean.is_finite() {
        return domain(format!("normal requires finite mean and sd > 0, got ({mean}, {sd})"));
    }
    let z: f64 = StandardNormal.sample(rng);
    Ok(mean + sd * z)
}

pub fn sample_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, scale: f64) -> Result<f64> {
    if !(shape > 0.0 && scale > 0.0) || !shape.is_finite() || !scale.is_finite() {
        return domain(format!("gamma requires shape, scale > 0, got ({shape}, {scale})"));
    }
    let dist = Gamma::new(shape, scale).map_err(|e| crate::Error::Domain(e.to_string()))?;
    Ok(dist.sample(rng))
}

pub fn sample_bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> Result<u8> {
    if !(0.0..=1.0).contains(&p) {
        return domain(format!("bernoulli requires p in [0,1], got {p}"));
    }
    Ok(u8::from(sample_uniform(rng) < p))
}
