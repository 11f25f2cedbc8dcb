//! File formats, dataset assembly and the synthetic generator.

pub mod checkpoint;
pub mod config;
pub mod dataset;
pub mod fixations;
pub mod manifest;
pub mod synthetic;
pub mod tensor;

pub use dataset::{pair_dataset, Pair, PairedSplits};
pub use fixations::load_fixations;
pub use manifest::{DatasetManifest, Split};
pub use tensor::{read_tensor, write_tensor, Dtype, Tensor};
