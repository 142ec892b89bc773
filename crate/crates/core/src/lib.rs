//! Graph classification with kernels and with a DGCNN that can be
//! pre-trained to reproduce a graph kernel.
//!
//! [`kernels`] turns graphs into sparse feature maps and Gram matrices,
//! [`svm`] fits a precomputed-kernel SVM, [`model`] is the DGCNN on top of
//! the small reverse-mode engine in [`autodiff`], [`siamese`] regresses the
//! dot product of two embeddings on their kernel value, and [`harness`]
//! runs all of it under nested cross-validation.

pub mod autodiff;
pub mod error;
pub mod graph;
pub mod harness;
pub mod kernels;
pub mod model;
pub mod siamese;
pub mod svm;

pub use error::{Error, Result};
