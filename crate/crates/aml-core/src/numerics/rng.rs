//! Deterministic, splittable random-number streams.
//!
//! Every stochastic component of the toolkit draws from an [`RngStream`]
//! identified by a `(seed, stream_id)` pair. The backing generator is
//! counter-based (ChaCha with an explicit stream nonce), so
//!
//! - equal `(seed, stream_id)` pairs reproduce the same draws bit-for-bit on
//!   any machine and under any thread layout, and
//! - distinct `stream_id`s yield statistically independent streams without
//!   coordination.
//!
//! Monte Carlo cells use `stream_id = (replication << 16) | path_index`, so
//! any single cell of an experiment can be regenerated in isolation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

/// Number of low bits reserved for the path index inside a stream id.
pub const PATH_BITS: u32 = 16;

/// Reserved path slot for "the observed data" of a replication, distinct from
/// every simulation path `h < 2^16 - 2`.
pub const DATA_PATH: u64 = (1 << PATH_BITS) - 1;

/// Reserved path slot for solver-internal draws (restart perturbations).
pub const SOLVER_PATH: u64 = (1 << PATH_BITS) - 2;

/// Compose a stream id from a replication index and a path index.
pub fn stream_id(replication: u64, path: u64) -> u64 {
    debug_assert!(path < (1 << PATH_BITS), "path index exceeds reserved bits");
    (replication << PATH_BITS) | path
}

/// A seeded, counter-based random stream.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    draws: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            draws: 0,
            rng,
        }
    }

    /// Stream for path `h` of replication `rep` under a master seed.
    pub fn for_cell(seed: u64, replication: u64, path: u64) -> Self {
        Self::new(seed, stream_id(replication, path))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream_id
    }

    /// Number of draws taken so far (the counter position).
    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.draws += 1;
        self.rng.random::<f64>()
    }

    /// Standard normal draw.
    pub fn standard_normal(&mut self) -> f64 {
        self.draws += 1;
        StandardNormal.sample(&mut self.rng)
    }

    /// Unit-rate exponential draw.
    pub fn exp1(&mut self) -> f64 {
        self.draws += 1;
        Exp1.sample(&mut self.rng)
    }

    /// Uniform on `(-pi/2, pi/2)`, the angular variate of the stable sampler.
    pub fn uniform_angle(&mut self) -> f64 {
        (self.uniform() - 0.5) * std::f64::consts::PI
    }
}
