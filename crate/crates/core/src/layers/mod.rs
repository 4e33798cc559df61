//! Parameterized layers with explicit forward and backward passes.
//!
//! Every layer works on tensors of shape `[..., in]`; leading axes are
//! flattened into rows. `backward` accumulates into the layer's gradient
//! buffers and returns the gradient with respect to the input.

mod complex;
mod linear;
mod projection;

pub use complex::{ComplexBias, ComplexLinearLayer};
pub use linear::LinearLayer;
pub use projection::RandomProjectionLayer;
