//! Online memory selection driven by closed-form information criteria of an
//! incrementally maintained Bayesian linear model.
//!
//! * [`bayes`]: the posterior, its rank-one updates and the point scores.
//! * [`memory`]: a fixed-budget buffer that keeps the posterior in sync.
//! * [`selectors`]: reservoir baselines and the information-based selectors.
//! * [`streams`]: datasets, file formats and imbalanced task streams.
//! * [`eval`]: relearn accuracy, class balance and a 1-D GP toy.
//! * [`harness`]: runs a selector over a stream and evaluates the result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub mod bayes;
pub mod eval;
pub mod harness;
pub mod linalg;
pub mod memory;
pub mod selectors;
pub mod streams;

/// The run generator: ChaCha8 seeded with `seed`, positioned on an
/// independent `stream` so that shuffling and selection never share draws.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
