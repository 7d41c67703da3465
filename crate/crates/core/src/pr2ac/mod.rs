//! Recursive-reasoning actor-critic for continuous actions.

mod agent;
mod sampler;
pub mod svgd;

pub use agent::Pr2acAgent;
pub use sampler::{AmortizedSampler, Particles};
pub use svgd::{median_bandwidth, rbf_kernel, svgd_directions};
