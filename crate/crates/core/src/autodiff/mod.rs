//! A small reverse-mode differentiation engine covering exactly the
//! operations the graph network needs, in `f64` throughout.
//!
//! A [`Tape`] borrows a [`ParamStore`] immutably, records one forward pass
//! and returns [`Gradients`] for every parameter of the store. Several tapes
//! over the same store can run on different threads; their gradients are
//! summed by the caller in a fixed order and applied with [`Adam`].

mod adam;
pub mod check;
mod params;
mod tape;
mod tensor;

pub use adam::{Adam, AdamConfig};
pub use params::{Gradients, ParamId, ParamStore};
pub use tape::{Tape, Var};
pub use tensor::Tensor;

#[cfg(test)]
mod tests;
