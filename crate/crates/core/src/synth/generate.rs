use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::composite::composite;
use super::mask::Mask;
use super::raster::RasterImage;
use super::spec::{sample_spec, Span, TransformRanges, TransformSpec};
use super::warp::transform_logo;
use super::SUPPORT_ALPHA;
use crate::core::{derive_seed, rng_from_seed, str_key, Annotation, BoundingBox, DatasetManifest, ImageRecord};
use crate::error::{Error, Result};

/// Synthetic images generated per logo class unless configured otherwise.
pub const DEFAULT_PER_CLASS: usize = 100;

/// Source tag written on every synthetic image record.
pub const SYNTH_SOURCE: &str = "synth";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Transform ranges; the scale range is replaced per record by the one
    /// implied by `area_fraction`.
    pub ranges: TransformRanges,
    /// Target fraction of the background area covered by the logo.
    pub area_fraction: Span<f64>,
    pub max_attempts: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            ranges: TransformRanges::default(),
            area_fraction: Span::new(0.01, 0.30),
            max_attempts: 100,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        self.ranges.validate()?;
        let f = self.area_fraction;
        if !(f.min > 0.0 && f.min <= f.max && f.max <= 1.0) {
            return Err(Error::Config(format!(
                "area fraction range must satisfy 0 < min <= max <= 1, got [{}, {}]",
                f.min, f.max
            )));
        }
        if self.max_attempts == 0 {
            return Err(Error::Config("max_attempts must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Background {
    pub id: String,
    pub image: RasterImage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthRecord {
    /// Output image path, relative to the corpus root.
    pub image: PathBuf,
    /// Support mask path, relative to the corpus root.
    pub mask: PathBuf,
    pub class: String,
    pub index: usize,
    pub bbox: BoundingBox,
    pub spec: TransformSpec,
    pub background_id: String,
    /// Top-left corner of the placed patch.
    pub x: usize,
    pub y: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SynthSample {
    pub record: SynthRecord,
    pub image: RasterImage,
    pub mask: Mask,
}

/// Directory-safe rendering of a class name.
pub fn class_dir(class: &str) -> String {
    class
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

/// Per-record seed; depends only on the corpus seed, the class and the
/// record index.
pub fn record_seed(seed: u64, class: &str, index: usize) -> u64 {
    derive_seed(seed, &[str_key(class), index as u64])
}

/// Generate synthetic image `index` of `class`.
pub fn synth_one(
    design: &RasterImage,
    backgrounds: &[Background],
    class: &str,
    index: usize,
    seed: u64,
    config: &SynthConfig,
) -> Result<SynthSample> {
    if backgrounds.is_empty() {
        return Err(Error::InvalidArgument("at least one background image is required".into()));
    }
    let (dx0, dy0, dx1, dy1) = design
        .alpha_support(SUPPORT_ALPHA)
        .ok_or_else(|| Error::DegenerateTransform(format!("design for {class:?} has no alpha support")))?;
    let design_area = ((dx1 - dx0) * (dy1 - dy0)) as f64;

    let rec_seed = record_seed(seed, class, index);
    let mut rng = rng_from_seed(rec_seed);
    let mut smallest_patch: Option<(usize, usize)> = None;
    for _ in 0..config.max_attempts {
        let bg = &backgrounds[rng.gen_range(0..backgrounds.len())];
        let (bw, bh) = (bg.image.width(), bg.image.height());
        let fraction = if config.area_fraction.min == config.area_fraction.max {
            config.area_fraction.min
        } else {
            rng.gen_range(config.area_fraction.min..=config.area_fraction.max)
        };
        let scale = (fraction * (bw * bh) as f64 / design_area).sqrt();
        let ranges = TransformRanges {
            scale: Span::new(scale, scale),
            ..config.ranges.clone()
        };
        let spec = sample_spec(rng.gen(), &ranges)?;
        let patch = match transform_logo(design, &spec) {
            Ok(p) => p,
            Err(Error::DegenerateTransform(_)) => continue,
            Err(e) => return Err(e),
        };
        if patch.width() > bw || patch.height() > bh {
            let area = patch.width() * patch.height();
            if smallest_patch.is_none_or(|(w, h)| area < w * h) {
                smallest_patch = Some((patch.width(), patch.height()));
            }
            continue;
        }
        let x = rng.gen_range(0..=bw - patch.width());
        let y = rng.gen_range(0..=bh - patch.height());
        let (image, bbox) = composite(&bg.image, &patch, x, y)?;
        let mask = Mask::from_alpha(&patch, bw, bh, x, y);
        let dir = class_dir(class);
        let record = SynthRecord {
            image: PathBuf::from(format!("images/{dir}/{index:05}.png")),
            mask: PathBuf::from(format!("masks/{dir}/{index:05}.png")),
            class: class.to_string(),
            index,
            bbox,
            spec,
            background_id: bg.id.clone(),
            x,
            y,
            seed: rec_seed,
        };
        return Ok(SynthSample { record, image, mask });
    }

    let (min_w, min_h) = backgrounds
        .iter()
        .map(|b| (b.image.width(), b.image.height()))
        .min_by_key(|(w, h)| w * h)
        .unwrap_or((0, 0));
    let detail = match smallest_patch {
        Some((pw, ph)) => format!("smallest background {min_w}x{min_h}, smallest patch {pw}x{ph}"),
        None => format!("smallest background {min_w}x{min_h}, every transform was degenerate"),
    };
    Err(Error::Sizing {
        index,
        attempts: config.max_attempts,
        detail,
    })
}

/// Generate `n` synthetic images for one class, in index order. Work is
/// spread over the current rayon pool; output does not depend on its size.
pub fn synth_class(
    design: &RasterImage,
    backgrounds: &[Background],
    class: &str,
    n: usize,
    seed: u64,
    config: &SynthConfig,
) -> Result<Vec<SynthSample>> {
    if n == 0 {
        return Err(Error::InvalidArgument("per-class count must be >= 1".into()));
    }
    config.validate()?;
    (0..n)
        .into_par_iter()
        .map(|i| synth_one(design, backgrounds, class, i, seed, config))
        .collect()
}

/// One `(class, index)` unit of a corpus run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthJob {
    pub class: String,
    pub index: usize,
}

/// Expand a class list into the ordered job list of a corpus run.
pub fn plan_jobs<'a>(classes: impl IntoIterator<Item = &'a str>, per_class: usize) -> Vec<SynthJob> {
    classes
        .into_iter()
        .flat_map(|c| {
            (0..per_class).map(move |index| SynthJob {
                class: c.to_string(),
                index,
            })
        })
        .collect()
}

/// A logo class with its loaded design.
#[derive(Debug, Clone)]
pub struct DesignedClass {
    pub name: String,
    pub design: RasterImage,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub records: Vec<SynthRecord>,
    pub manifest: DatasetManifest,
}

/// Generate a whole corpus into `out_dir`: PNG images under `images/`,
/// support masks under `masks/`, the manifest fragment `manifest.jsonl`
/// and the per-record details `records.jsonl`.
pub fn write_corpus(
    out_dir: &Path,
    classes: &[DesignedClass],
    backgrounds: &[Background],
    per_class: usize,
    seed: u64,
    config: &SynthConfig,
) -> Result<SynthCorpus> {
    if per_class == 0 {
        return Err(Error::InvalidArgument("per-class count must be >= 1".into()));
    }
    config.validate()?;
    let jobs = plan_jobs(classes.iter().map(|c| c.name.as_str()), per_class);
    let designs: std::collections::HashMap<&str, &RasterImage> =
        classes.iter().map(|c| (c.name.as_str(), &c.design)).collect();
    let mut dirs = std::collections::BTreeMap::new();
    for c in classes {
        if let Some(prev) = dirs.insert(class_dir(&c.name), &c.name) {
            return Err(Error::InvalidArgument(format!(
                "classes {prev:?} and {:?} map to the same output directory",
                c.name
            )));
        }
    }

    let records: Vec<SynthRecord> = jobs
        .par_iter()
        .map(|job| {
            let sample = synth_one(designs[job.class.as_str()], backgrounds, &job.class, job.index, seed, config)?;
            sample.image.save_png(&out_dir.join(&sample.record.image))?;
            sample.mask.save_png(&out_dir.join(&sample.record.mask))?;
            Ok(sample.record)
        })
        .collect::<Result<_>>()?;

    let dims: std::collections::HashMap<&str, (usize, usize)> = backgrounds
        .iter()
        .map(|b| (b.id.as_str(), (b.image.width(), b.image.height())))
        .collect();
    let mut manifest = DatasetManifest::new();
    for r in &records {
        let (w, h) = dims[r.background_id.as_str()];
        let id = synth_image_id(r);
        manifest.images.push(ImageRecord {
            id: id.clone(),
            path: r.image.clone(),
            width: w as u32,
            height: h as u32,
            source: SYNTH_SOURCE.to_string(),
        });
        manifest.annotations.push(Annotation {
            image_id: id,
            class: r.class.clone(),
            bbox: r.bbox,
        });
    }
    manifest.validate()?;
    crate::core::write_manifest(&manifest, &out_dir.join("manifest.jsonl"))?;
    write_records(&records, &out_dir.join("records.jsonl"))?;
    Ok(SynthCorpus { records, manifest })
}

pub fn synth_image_id(record: &SynthRecord) -> String {
    format!("synth/{}/{:05}", class_dir(&record.class), record.index)
}

pub fn write_records(records: &[SynthRecord], path: &Path) -> Result<()> {
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r).map_err(|e| Error::Internal(e.to_string()))?);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<SynthRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
