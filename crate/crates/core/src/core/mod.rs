//! Domain types shared by every pipeline stage: boxes, image and annotation
//! records, the class registry, and the JSONL manifest.

mod geometry;
mod manifest;
mod seed;
mod types;
mod validate;

pub use geometry::{iou, BoundingBox};
pub use manifest::{
    read_manifest, read_manifest_with_registry, resolve_path, write_manifest, DatasetManifest, TEST, TRAIN,
    TRAINVAL, VAL,
};
pub use seed::{derive_seed, rng_from_seed, str_key};
pub use types::{scale_ratio, Annotation, ClassEntry, ClassRegistry, Detection, ImageRecord, Supervision};
pub use validate::{validate_annotation, Violation};
