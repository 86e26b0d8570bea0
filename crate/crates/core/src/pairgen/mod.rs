//! Training pairs for context rendering: a natural image, a copy with one
//! region photometrically corrupted, and the binary region mask.
//!
//! Regions come from random rectangles on non-logo images or from existing
//! object masks (polygons or uncompressed RLE), so no new labels are
//! needed.

mod coco_masks;
mod pair;
mod region;

pub use coco_masks::read_coco_masks;
pub use pair::{
    build_pair_set, generate_pair, make_pair, read_pair_manifest, write_pair_manifest, GeneratedPair, MaskedImage,
    PairConfig, PairRecord, PairSource, SourceImage,
};
pub use region::{decode_rle, rasterize_polygons, rasterize_region, MaskSpec, RegionSource};
