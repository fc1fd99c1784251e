//! Seeded random streams.
//!
//! Every source of randomness in a run is a [`NoiseStream`] keyed by
//! `(seed, replication, role)`. Streams are ChaCha8 instances: the seed and
//! replication select the key, the role selects the ChaCha stream id, so two
//! roles never share keystream even under the same seed.

use nalgebra::DVector;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// What a stream is used for. The discriminant is the ChaCha stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StreamRole {
    /// Internal randomisation of a learner (directions, arm sampling).
    Learner = 1,
    /// Loss or reward randomness of an environment.
    Environment = 2,
    /// Scalar perturbation of one-point feedback.
    Feedback = 3,
    /// Vector perturbation of two-point value differences.
    QueryNoise = 4,
    /// Symmetric matrix noise on gram reports.
    Gram = 5,
    /// Vector noise on moment reports.
    Moment = 6,
    /// Vector noise on gradient reports.
    Gradient = 7,
    /// Per-round context (arm set) generation.
    Context = 8,
    /// Construction of fixed environment tables (adversarial losses, drifts).
    Table = 9,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub replication: u64,
    pub role: StreamRole,
}

impl StreamKey {
    pub fn new(seed: u64, replication: u64, role: StreamRole) -> Self {
        Self {
            seed,
            replication,
            role,
        }
    }

    pub fn with_role(self, role: StreamRole) -> Self {
        Self { role, ..self }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A single-owner deterministic random stream.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    key: StreamKey,
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(key: StreamKey) -> Self {
        let mut state = key.seed ^ 0x6C64_705F_6261_6E64;
        let mut mix = key.replication;
        state ^= splitmix64(&mut mix);
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(key.role as u64);
        Self { key, rng }
    }

    pub fn from_seed(seed: u64, role: StreamRole) -> Self {
        Self::new(StreamKey::new(seed, 0, role))
    }

    pub fn key(&self) -> StreamKey {
        self.key
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Uniform on `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`. `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // Lemire's multiply-shift; the bias is below 2^-64 * n.
        ((self.rng.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Uniformly distributed point on the unit sphere in `d` dimensions.
    pub fn unit_vector(&mut self, d: usize) -> DVector<f64> {
        loop {
            let v = DVector::from_fn(d, |_, _| self.standard_normal());
            let norm = v.norm();
            if norm > 1e-300 {
                return v / norm;
            }
        }
    }

    /// Uniformly distributed point in the unit ball in `d` dimensions.
    pub fn unit_ball_point(&mut self, d: usize) -> DVector<f64> {
        let direction = self.unit_vector(d);
        let radius = self.uniform().powf(1.0 / d as f64);
        direction * radius
    }
}

impl RngCore for NoiseStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
