//! Getting data in and out: images, annotations, manifests and splits.

mod io;
mod manifest;
mod resize;
mod split;
mod via;

pub use io::{load_image, load_mask, save_image, save_mask, save_rgb};
pub use manifest::{
    load_sample, read_manifest, write_manifest, write_sample, ManifestRecord, Provenance,
    SampleFiles, SplitName,
};
pub use resize::{resize, resize_mask};
pub use split::{split, DatasetSplit, SplitFractions};
pub use via::{emit_via, parse_via, Annotation};
