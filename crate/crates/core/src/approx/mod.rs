//! Function approximation: a small MLP with reverse-mode gradients, Adam, and
//! dense tabular Q stores.

mod adam;
pub mod checkpoint;
mod mlp;
mod qtable;
mod squash;

pub use adam::Adam;
pub use mlp::{Gradients, Mlp, Trace};
pub use qtable::QTable;
pub use squash::Squash;

/// Network plus its optimizer state.
#[derive(Debug, Clone)]
pub struct Trainable {
    pub net: Mlp,
    pub opt: Adam,
}

impl Trainable {
    pub fn new(net: Mlp, lr: f64) -> Self {
        let opt = Adam::new(net.n_params(), lr);
        Trainable { net, opt }
    }

    /// One Adam step on gradients laid out like `net.params()`.
    pub fn apply(&mut self, grads: &[f64]) -> crate::Result<()> {
        let Trainable { net, opt } = self;
        let names = net.clone_block_namer();
        opt.step_named(net.params_mut(), grads, names)
    }
}
