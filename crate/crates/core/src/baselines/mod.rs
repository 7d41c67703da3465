//! Comparison learners: gradient dynamics (IGA, SGA) and independent
//! deterministic-policy-gradient agents with and without an opponent model.

mod ddpg;
mod iga;
mod sga;

pub use ddpg::{DdpgAgent, OpponentPredictor};
pub use iga::{IgaParams, IgaState};
pub use sga::{sga_step, SgaParams, SgaStep};
