//! Attention-modulated neural encoding models.
//!
//! Attention maps come from gaze (center or per-frame KDE) or are learned
//! end to end from a feature-map saliency network. Encoders map pooled,
//! attention-weighted features to voxel responses, and the evaluation
//! modules score response predictions, saliency predictions and
//! representational similarity.

pub mod attention;
pub mod encoder;
pub mod error;
pub mod evalmetrics;
pub mod io;
pub mod numerics;
pub mod rng;
pub mod rsa;
pub mod saliency;

pub use error::{Error, Result};
