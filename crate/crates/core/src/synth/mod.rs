//! Synthetic logo compositing: the photometric/geometric transform bank,
//! alpha compositing of transformed designs onto backgrounds, and bulk
//! corpus generation with emitted annotations.

mod composite;
mod filters;
mod generate;
mod mask;
mod raster;
mod spec;
mod warp;

pub use composite::{blend, composite, composite_in_place};
pub use filters::{color_reduce, color_shift, median_filter, quantize, sharpen};
pub use generate::{
    class_dir, plan_jobs, read_records, record_seed, synth_class, synth_image_id, synth_one, write_corpus,
    write_records, Background, DesignedClass, SynthConfig, SynthCorpus, SynthJob, SynthRecord, SynthSample,
    DEFAULT_PER_CLASS, SYNTH_SOURCE,
};
pub use mask::Mask;
pub use raster::{alpha_key_white, load_design, Channels, RasterImage};
pub use spec::{sample_spec, Span, TransformRanges, TransformSpec};
pub use warp::{photometric, transform_logo, warp};

/// Minimum alpha counted as patch support; fainter resampling halo is
/// zeroed so it cannot inflate emitted boxes.
pub const SUPPORT_ALPHA: u8 = 8;

/// Designs without alpha are keyed on pixels at or above this value in
/// every channel.
pub const WHITE_KEY_THRESHOLD: u8 = 250;
