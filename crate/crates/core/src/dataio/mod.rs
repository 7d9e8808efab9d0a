//! Dataset preparation and persistence: segmentation, leakage-free
//! train/test splits, manifests and the binary tensor container.

pub mod container;
mod repr;
mod segment;
mod split;

pub use container::{
    decode_container, encode_container, read_container, write_container, NamedTensor,
};
pub use repr::{InputMode, InputRepresentation};
pub use segment::segment;
pub use split::{split, ClipRecord, DatasetManifest, GenreCounts, ManifestEntry, Split};
