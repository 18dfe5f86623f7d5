//! Graph contrastive learning with mutual-information-guided design choices.
//!
//! The crate follows the usual three-stage contrastive pipeline:
//! [`augment`] builds two views of each graph, [`encoder`] maps views to
//! node- and graph-level representations, and [`contrast`] scores the
//! positive pairs against in-batch negatives. [`infomeasure`] holds the
//! mutual-information machinery used to rank augmentations, encoders and
//! contrastive modes, plus exact verification on enumerable synthetic
//! processes. [`pipeline`] ties it together into training, linear
//! evaluation and the negative-sample ablation.

pub mod augment;
pub mod autodiff;
pub mod cli;
pub mod contrast;
pub mod encoder;
pub mod error;
pub mod graph;
pub mod infomeasure;
pub mod pipeline;
pub mod rng;

pub use error::{Error, Result};
