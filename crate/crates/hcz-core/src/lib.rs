//! Simulation and analysis toolkit for the Knill heralded controlled-Z
//! (hCZ) linear-optical gate.
//!
//! The crate builds the four-mode circuit unitary from beamsplitter and phase
//! parameters, evaluates mode and process fidelity (the latter through the
//! Jamiolkowski isomorphism with ancilla heralding), quantifies sensitivity
//! to fabrication deviations, simulates and inverts the coherent
//! characterization procedure, and predicts two-photon interference
//! visibilities.
//!
//! All values are immutable after construction and all operations are pure
//! functions; Monte Carlo drivers parallelize over counter-based RNG streams
//! so results are independent of worker count.

pub mod characterize;
pub mod circuit;
pub mod error;
pub mod fock;
pub mod mesh;
pub mod metrics;
pub mod optimize;
pub mod tolerance;
pub mod unitary;
pub mod visibility;

pub use error::{Error, Result};
pub use unitary::ModeUnitary;

/// Deterministic per-index RNG stream: every consumer of `(seed, index)`
/// sees the same draws regardless of thread scheduling.
pub fn stream_rng(seed: u64, index: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
