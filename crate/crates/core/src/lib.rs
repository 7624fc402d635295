//! Tensor kernel ridge regression.
//!
//! The weights of a primal kernel ridge regression model are stored as a
//! rank-`R` canonical polyadic decomposition (CPD), one `M_d x R` factor
//! matrix per input dimension. The feature map is the tensor product of
//! per-dimension sinusoidal (Laplace) basis functions approximating an RBF
//! kernel, so neither the feature tensor nor the weight tensor is ever
//! materialized. Training alternates exact least-squares solves over one
//! factor matrix at a time, and fine-tuning is the same procedure started
//! from an existing model's factors.
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`tensor`] | CPD tensors, Khatri-Rao / Hadamard products, inner products |
//! | [`feature_map`] | Laplace basis features and the approximate RBF kernel |
//! | [`solver`] | ALS training, fine-tuning and prediction |
//! | [`oracle`] | Exact dual kernel ridge regression for verification |
//! | [`scaler`] | Min-max scaling into the model hyperbox |
//! | [`model`] | The serializable classifier and its text format |

pub mod dataset;
pub mod error;
pub mod feature_map;
pub mod model;
pub mod oracle;
pub mod scaler;
pub mod solver;
pub mod tensor;

pub use dataset::LabeledDataset;
pub use error::{Error, Result};
pub use feature_map::FeatureMapConfig;
pub use model::TkrrModel;
pub use scaler::ScalerParams;
pub use solver::{Init, TrainConfig};
pub use tensor::{CpdTensor, DenseTensor};

/// Dense column-major matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
