//! Sensor network localization (SNL) toolkit.
//!
//! Two solution families live side by side:
//!
//! * low-dimensional loss minimization ([`loss`], [`descent`]), and
//! * the semi-definite relaxation ([`sdr`]) solved with an ADMM splitting
//!   over the PSD cone, plus the relaxation-then-descent warm-start pipeline.
//!
//! [`analysis`] holds the non-convexity certificates, the probability bound
//! for random unit-disk instances, Monte Carlo sweeps, landscape sampling and
//! the constant-length connecting path between two solutions.

pub mod analysis;
pub mod descent;
pub mod error;
pub mod io;
pub mod loss;
pub mod model;
pub mod sdr;

pub use error::{Result, SnlError};
pub use loss::{LossSpec, SensorConfig};
pub use model::{Framework, Rect, SnlProblem, Topology, UnitDiskCase};

/// Seeded generator used everywhere randomness is needed.
///
/// ChaCha8 is portable across platforms, so a seed fully determines an
/// experiment.
pub type SeededRng = rand_chacha::ChaCha8Rng;

/// Builds the generator for `seed` on the given stream.
///
/// Streams give independent per-trial generators without any seed
/// arithmetic, so parallel trials stay reproducible.
pub fn seeded_rng(seed: u64, stream: u64) -> SeededRng {
    use rand::SeedableRng;
    let mut rng = SeededRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
