//! Energy-efficient coordinated beamforming for multicell multiuser MISO
//! downlinks.
//!
//! The crate maximizes weighted sum rate per consumed Joule under per-BS power
//! budgets. An outer bisection searches the energy-efficiency factor `η`
//! ([`outer_solver`]); each probe solves `max Σ α R − η (ξ Σ‖w‖² + static)`
//! with a weighted-MMSE block-coordinate method whose beamformer step is in
//! closed form ([`inner_solver`]). Around that sit the channel generator,
//! comparison baselines, a simulated controller/processor protocol and the
//! Monte Carlo harness.

// `!(x > 0.0)` is used on purpose: it also rejects NaN. Index loops read
// better than iterator chains in the dense linear algebra.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baselines;
pub mod channel;
pub mod error;
pub mod flops;
pub mod harness;
pub mod inner_solver;
pub mod model;
pub mod numerics;
pub mod oracle;
pub mod outer_solver;
pub mod parsim;
pub mod seeding;
pub mod units;

pub use error::{Error, Result};
pub use model::{AuxWeights, BeamformerSet, ChannelSet, ReceiverFilters, SystemConfig};
