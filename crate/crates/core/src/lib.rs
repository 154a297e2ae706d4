//! Adversarial fine-tuning toolkit for two-tower zero-shot classifiers.
//!
//! The crate trains the image tower of a two-tower (image/text) classifier
//! under projected-gradient-descent attacks while anchoring it to a frozen
//! copy of its pre-trained weights, and ships the evaluation harness that
//! measures what that buys: clean/robust zero-shot accuracy, parameter
//! drift, attack-strength sweeps, and weight-interpolation trade-offs.
//!
//! All numerics are generic over the scalar type through [`Scalar`]
//! (`f32` or `f64`); concrete aliases live at the crate root.

pub mod archive;
pub mod attack;
pub mod checkpoint;
pub mod datasets;
pub mod error;
pub mod evalsuite;
pub mod graph;
pub mod losses;
pub mod mat;
pub mod scalar;
pub mod seeding;
pub mod snapshot;
pub mod synthetic;
pub mod trainer;
pub mod zeroshot;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Dense matrix over `f32`.
pub type Mat32 = mat::Mat<f32>;
/// Dense matrix over `f64`.
pub type Mat64 = mat::Mat<f64>;
/// Image batch over `f32`.
pub type ImageBatch32 = mat::ImageBatch<f32>;
/// Image batch over `f64`.
pub type ImageBatch64 = mat::ImageBatch<f64>;
/// Two-tower model over `f32`.
pub type Model32 = zeroshot::TwoTowerModel<f32>;
/// Two-tower model over `f64`; the default precision for experiments.
pub type Model64 = zeroshot::TwoTowerModel<f64>;
/// Parameter snapshot over `f32` (the checkpoint payload precision).
pub type Snapshot32 = snapshot::ParameterSnapshot<f32>;
/// Parameter snapshot over `f64`.
pub type Snapshot64 = snapshot::ParameterSnapshot<f64>;
