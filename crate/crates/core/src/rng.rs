//! Seeded generators. Each consumer draws from its own ChaCha stream so that
//! equal seeds used for different purposes never share random numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub enum Stream {
    Design = 1,
    Target = 2,
    Noise = 3,
    Distortion = 4,
    Falsifier = 5,
    Cone = 6,
}

pub fn rng_for(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, len: usize) -> ndarray::Array1<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}
