//! Cardiothoracic ratio (CTR) measurement from heart and thorax segmentation.
//!
//! The pipeline runs: synthetic phantoms or real radiographs ([`phantom`],
//! [`ingest`]) → joint image/mask augmentation ([`augment`]) → a small
//! attention-gated U-Net trained from scratch ([`segnet`]) → thresholding,
//! morphology and bounding boxes ([`postproc`]) → CTR and cardiomegaly label
//! ([`ctr`]) → sensitivity/specificity/F1 and MAE/RMSE ([`eval`]).
//!
//! Runnable walkthroughs of each stage live in the crate's `examples/`
//! directory; the `ctrkit` binary exposes the same stages as subcommands.

pub mod augment;
pub mod cli;
pub mod ctr;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod phantom;
pub mod postproc;
pub mod segnet;
pub mod types;

mod fsutil;
mod sampling;

pub use ctr::{binary_label, classify_ctr, compute_ctr, CtrCategory, CtrMeasurement, Label};
pub use error::{Error, Result};
pub use types::{BinaryMask, BoundingBox, GrayImage, MaskPair, Structure};
