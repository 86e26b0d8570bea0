use std::path::{Path, PathBuf};

use log::warn;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::region::{rasterize_region, MaskSpec, RegionSource};
use crate::core::{derive_seed, rng_from_seed};
use crate::error::{Error, Result};
use crate::synth::{photometric, sample_spec, Mask, RasterImage, TransformRanges, TransformSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairSource {
    NonLogo,
    MaskedObject,
}

impl PairSource {
    pub fn tag(self) -> &'static str {
        match self {
            PairSource::NonLogo => "non-logo",
            PairSource::MaskedObject => "masked-object",
        }
    }

    fn key(self) -> u64 {
        match self {
            PairSource::NonLogo => 0,
            PairSource::MaskedObject => 1,
        }
    }
}

/// One line of the pair manifest. Paths are relative to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub clean: PathBuf,
    pub corrupted: PathBuf,
    pub mask: PathBuf,
    pub source: PairSource,
    pub seed: u64,
    /// Transform actually applied; recoverable from `seed`, so not written.
    #[serde(skip)]
    pub spec: Option<TransformSpec>,
}

/// Corrupt `img` inside `mask` with the photometric part of `spec`.
///
/// Pixels outside the mask are copied byte-for-byte. No geometric warp is
/// applied, so the corrupted region stays registered to the clean image.
/// An all-zero mask yields an exact copy.
pub fn make_pair(img: &RasterImage, mask: &Mask, spec: &TransformSpec) -> Result<RasterImage> {
    if (mask.width(), mask.height()) != (img.width(), img.height()) {
        return Err(Error::InvalidArgument(format!(
            "mask is {}x{} but image is {}x{}",
            mask.width(),
            mask.height(),
            img.width(),
            img.height()
        )));
    }
    spec.validate()?;
    let clean = img.to_rgb();
    if mask.is_empty() {
        return Ok(clean);
    }
    let rendered = photometric(&clean, spec)?;
    let mut out = clean;
    for (i, (dst, src)) in out.data_mut().chunks_exact_mut(3).zip(rendered.data().chunks_exact(3)).enumerate() {
        if mask.data()[i] != 0 {
            dst.copy_from_slice(src);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairConfig {
    /// Only the photometric ranges are used.
    pub ranges: TransformRanges,
    /// Region source for non-logo images.
    pub rectangle: RegionSource,
    /// Attempts per pair before giving up on finding a mask and transform
    /// that actually change the region.
    pub max_attempts: usize,
}

impl Default for PairConfig {
    fn default() -> Self {
        PairConfig {
            ranges: TransformRanges::default(),
            rectangle: RegionSource::default_rectangle(),
            max_attempts: 100,
        }
    }
}

impl PairConfig {
    pub fn validate(&self) -> Result<()> {
        self.ranges.validate()?;
        self.rectangle.validate()?;
        if !matches!(self.rectangle, RegionSource::RandomRectangle { .. }) {
            return Err(Error::Config("the non-logo region source must be a random rectangle".into()));
        }
        if self.max_attempts == 0 {
            return Err(Error::Config("max_attempts must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedPair {
    pub clean: RasterImage,
    pub corrupted: RasterImage,
    pub mask: Mask,
    pub spec: TransformSpec,
}

fn photometric_spec(seed: u64, ranges: &TransformRanges) -> Result<TransformSpec> {
    let mut spec = sample_spec(seed, ranges)?;
    spec.scale = 1.0;
    spec.rotation_deg = 0.0;
    spec.shear_x = 0.0;
    spec.shear_y = 0.0;
    spec.perspective = None;
    Ok(spec)
}

fn differs_inside(clean: &RasterImage, corrupted: &RasterImage, mask: &Mask) -> bool {
    clean
        .data()
        .chunks_exact(3)
        .zip(corrupted.data().chunks_exact(3))
        .zip(mask.data())
        .any(|((a, b), &m)| m != 0 && a != b)
}

/// Build one training pair from `img`, drawing a region from one of
/// `regions` and a photometric spec from the config ranges. Draws that
/// leave the region unchanged are retried.
pub fn generate_pair(img: &RasterImage, regions: &[RegionSource], seed: u64, config: &PairConfig) -> Result<GeneratedPair> {
    if regions.is_empty() {
        return Err(Error::InvalidArgument("no region source for pair".into()));
    }
    let clean = img.to_rgb();
    let mut rng = rng_from_seed(seed);
    let mut last_err = None;
    for _ in 0..config.max_attempts {
        let region = &regions[rng.gen_range(0..regions.len())];
        let mask = match rasterize_region(region, clean.width(), clean.height(), rng.gen()) {
            Ok(m) => m,
            Err(e @ (Error::EmptyMask | Error::Config(_))) => {
                last_err = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        let spec = photometric_spec(rng.gen(), &config.ranges)?;
        let corrupted = make_pair(&clean, &mask, &spec)?;
        if differs_inside(&clean, &corrupted, &mask) {
            return Ok(GeneratedPair {
                clean,
                corrupted,
                mask,
                spec,
            });
        }
    }
    Err(last_err.unwrap_or_else(|| {
        Error::Config(format!(
            "no region/transform draw changed the image after {} attempts",
            config.max_attempts
        ))
    }))
}

/// A natural image used with random-rectangle regions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceImage {
    pub id: String,
    pub path: PathBuf,
}

/// A natural image with object foreground masks from existing
/// segmentation data.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedImage {
    pub id: String,
    pub path: PathBuf,
    pub masks: Vec<MaskSpec>,
}

/// Which pool entry each of the `n` pairs of one source uses. Without
/// replacement while the pool lasts, with replacement beyond it.
fn pick_indices(pool: usize, n: usize, seed: u64, source: PairSource) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pool).collect();
    order.shuffle(&mut rng_from_seed(derive_seed(seed, &[source.key()])));
    if n <= pool {
        order.truncate(n);
        return order;
    }
    warn!(
        "{} source has {pool} images for {n} pairs; sampling with replacement",
        source.tag()
    );
    (0..n)
        .map(|i| {
            if i < pool {
                order[i]
            } else {
                rng_from_seed(derive_seed(seed, &[source.key(), i as u64, 1])).gen_range(0..pool)
            }
        })
        .collect()
}

/// Generate `n_per_source` pairs from each source into `out_dir`, writing
/// PNG triples under `pairs/` and the manifest `pairs.jsonl`.
pub fn build_pair_set(
    non_logo: &[SourceImage],
    masked: &[MaskedImage],
    n_per_source: usize,
    seed: u64,
    config: &PairConfig,
    out_dir: &Path,
) -> Result<Vec<PairRecord>> {
    config.validate()?;
    if non_logo.is_empty() && masked.is_empty() {
        return Err(Error::InvalidArgument("pair generation needs at least one source image".into()));
    }
    if masked.iter().any(|m| m.masks.is_empty()) {
        let id = &masked.iter().find(|m| m.masks.is_empty()).unwrap().id;
        return Err(Error::InvalidArgument(format!("masked image {id:?} carries no masks")));
    }

    struct Item<'a> {
        source: PairSource,
        index: usize,
        path: &'a Path,
        regions: Vec<RegionSource>,
    }
    let mut items = Vec::new();
    if !non_logo.is_empty() {
        for (index, pick) in pick_indices(non_logo.len(), n_per_source, seed, PairSource::NonLogo)
            .into_iter()
            .enumerate()
        {
            items.push(Item {
                source: PairSource::NonLogo,
                index,
                path: &non_logo[pick].path,
                regions: vec![config.rectangle.clone()],
            });
        }
    }
    if !masked.is_empty() {
        for (index, pick) in pick_indices(masked.len(), n_per_source, seed, PairSource::MaskedObject)
            .into_iter()
            .enumerate()
        {
            let m = &masked[pick];
            items.push(Item {
                source: PairSource::MaskedObject,
                index,
                path: &m.path,
                regions: m
                    .masks
                    .iter()
                    .map(|mask| RegionSource::ForegroundMask { mask: mask.clone() })
                    .collect(),
            });
        }
    }

    let records: Vec<PairRecord> = items
        .par_iter()
        .map(|item| {
            let item_seed = derive_seed(seed, &[item.source.key(), item.index as u64]);
            let img = RasterImage::open(item.path)?;
            let pair = generate_pair(&img, &item.regions, item_seed, config)?;
            let stem = format!("pairs/{}/{:05}", item.source.tag(), item.index);
            let record = PairRecord {
                clean: PathBuf::from(format!("{stem}_clean.png")),
                corrupted: PathBuf::from(format!("{stem}_corrupted.png")),
                mask: PathBuf::from(format!("{stem}_mask.png")),
                source: item.source,
                seed: item_seed,
                spec: Some(pair.spec),
            };
            pair.clean.save_png(&out_dir.join(&record.clean))?;
            pair.corrupted.save_png(&out_dir.join(&record.corrupted))?;
            pair.mask.save_png(&out_dir.join(&record.mask))?;
            Ok(record)
        })
        .collect::<Result<_>>()?;

    write_pair_manifest(&records, &out_dir.join("pairs.jsonl"))?;
    Ok(records)
}

pub fn write_pair_manifest(records: &[PairRecord], path: &Path) -> Result<()> {
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r).map_err(|e| Error::Internal(e.to_string()))?);
        text.push('\n');
    }
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_pair_manifest(path: &Path) -> Result<Vec<PairRecord>> {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{Channels, Span};

    fn photo(w: usize, h: usize) -> RasterImage {
        RasterImage::from_fn(w, h, Channels::Rgb, |x, y| {
            let v = ((x as f64 * 0.31).sin() * 60.0 + (y as f64 * 0.17).cos() * 50.0 + 128.0) as u8;
            [v, (x * 7 + y * 3) as u8, 255 - v, 0]
        })
    }

    #[test]
    fn empty_mask_gives_exact_copy() {
        let img = photo(20, 10);
        let spec = TransformSpec {
            color_shift: [10, 10, 10],
            ..TransformSpec::identity()
        };
        assert_eq!(make_pair(&img, &Mask::empty(20, 10), &spec).unwrap(), img);
    }

    #[test]
    fn full_mask_color_shift_per_pixel() {
        let img = photo(20, 10);
        let spec = TransformSpec {
            color_shift: [40, -40, 5],
            ..TransformSpec::identity()
        };
        let out = make_pair(&img, &Mask::full(20, 10), &spec).unwrap();
        for (a, b) in img.data().chunks_exact(3).zip(out.data().chunks_exact(3)) {
            for c in 0..3 {
                let expected = (i32::from(a[c]) + i32::from(spec.color_shift[c])).clamp(0, 255) as u8;
                assert_eq!(b[c], expected);
            }
        }
    }

    #[test]
    fn rectangle_mask_changes_only_inside() {
        let img = photo(40, 30);
        let mask = Mask::rect(40, 30, 5, 6, 25, 20);
        let spec = TransformSpec {
            sharpen: 0.8,
            median_kernel: 3,
            color_shift: [12, -7, 3],
            color_levels: 8,
            ..TransformSpec::identity()
        };
        let out = make_pair(&img, &mask, &spec).unwrap();
        let mut inside = 0;
        for y in 0..30 {
            for x in 0..40 {
                let same = img.pixel(x, y) == out.pixel(x, y);
                if mask.get(x, y) {
                    inside += usize::from(!same);
                } else {
                    assert!(same);
                }
            }
        }
        assert!(inside > 0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert!(make_pair(&photo(4, 4), &Mask::full(4, 5), &TransformSpec::identity()).is_err());
    }

    #[test]
    fn generated_pairs_are_effective_and_geometry_free() {
        let img = photo(48, 36);
        let cfg = PairConfig::default();
        for seed in 0..20 {
            let p = generate_pair(&img, std::slice::from_ref(&cfg.rectangle), seed, &cfg).unwrap();
            assert!(p.spec.is_geometric_identity());
            assert!(differs_inside(&p.clean, &p.corrupted, &p.mask));
        }
    }

    #[test]
    fn picks_without_replacement_then_with() {
        let a = pick_indices(5, 3, 9, PairSource::NonLogo);
        assert_eq!(a.len(), 3);
        let set: std::collections::BTreeSet<_> = a.iter().collect();
        assert_eq!(set.len(), 3);
        let b = pick_indices(2, 6, 9, PairSource::NonLogo);
        assert_eq!(b.len(), 6);
        assert!(b.iter().all(|&i| i < 2));
        assert_eq!(b, pick_indices(2, 6, 9, PairSource::NonLogo));
    }

    #[test]
    fn invalid_rectangle_config_rejected() {
        let cfg = PairConfig {
            rectangle: RegionSource::RandomRectangle {
                area_fraction: Span::new(0.0, 0.5),
                aspect: Span::new(1.0, 1.0),
            },
            ..PairConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
