//! Monte-Carlo collision-probability estimation.
//!
//! Ground-truth labels come from [`estimate_cp_adaptive`], which draws whole
//! batches until the CLT interval is tighter than the accuracy required for
//! the current estimate. [`ztest_check`] and [`sprt_check`] are the sampling
//! constraint checkers used as planning baselines.

mod checkers;
mod estimator;
mod interval;
mod sampler;

pub use checkers::{sprt_check, ztest_check, SafetyDecision, SprtParams, Verdict, ZTestSchedule};
pub use estimator::{estimate_cp, estimate_cp_adaptive, max_samples, AccuracyProfile, CpEstimate};
pub use interval::{clt_half_width, clt_interval, Z95_ONE_SIDED, Z95_TWO_SIDED};
pub use sampler::{
    sample_collision, Bernoulli, CollisionSource, CpQuery, JointQuery, ObstacleSpec, PreparedQuery,
    MIN_SIDE_LENGTH,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Counter-based generator type used for every sampling stream.
pub type StreamRng = ChaCha8Rng;

/// Independent stream `stream` of the generator keyed by `seed`.
///
/// Streams with the same seed but different ids never overlap, so parallel
/// workers can each own one without coordination.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
