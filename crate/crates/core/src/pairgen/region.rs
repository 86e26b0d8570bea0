use std::path::PathBuf;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::core::rng_from_seed;
use crate::error::{Error, Result};
use crate::synth::{Mask, Span};

/// Where the corrupted region of a training pair comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RegionSource {
    /// Axis-aligned rectangle covering `area_fraction` of the image with
    /// width/height ratio in `aspect`.
    RandomRectangle { area_fraction: Span<f64>, aspect: Span<f64> },
    /// An object foreground taken from existing segmentation data.
    ForegroundMask { mask: MaskSpec },
}

impl RegionSource {
    pub fn default_rectangle() -> Self {
        RegionSource::RandomRectangle {
            area_fraction: Span::new(0.02, 0.25),
            aspect: Span::new(0.5, 2.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RegionSource::RandomRectangle { area_fraction, aspect } => {
                if !(area_fraction.min > 0.0 && area_fraction.min <= area_fraction.max && area_fraction.max <= 1.0) {
                    return Err(Error::Config(format!(
                        "area fraction range must lie in (0, 1], got [{}, {}]",
                        area_fraction.min, area_fraction.max
                    )));
                }
                if !(aspect.min > 0.0 && aspect.min <= aspect.max && aspect.max.is_finite()) {
                    return Err(Error::Config(format!(
                        "aspect range must be positive, got [{}, {}]",
                        aspect.min, aspect.max
                    )));
                }
                Ok(())
            }
            RegionSource::ForegroundMask { .. } => Ok(()),
        }
    }
}

/// Segmentation in one of the accepted ingestion formats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaskSpec {
    /// Uncompressed RLE: run lengths over the column-major pixel order,
    /// starting with a background run. `size` is `[height, width]`.
    Rle { size: [usize; 2], counts: Vec<u32> },
    /// Polygons as flat `[x1, y1, x2, y2, ...]` lists; their union is the
    /// region (even-odd rule within each polygon).
    Polygons { polygons: Vec<Vec<f64>> },
    /// Bare polygon list, as found in COCO `segmentation` fields.
    PolygonList(Vec<Vec<f64>>),
    /// Single-channel PNG on disk.
    File { path: PathBuf },
}

/// Decode an uncompressed RLE into a mask of its own `size`.
pub fn decode_rle(size: [usize; 2], counts: &[u32]) -> Result<Mask> {
    let [h, w] = size;
    let total: u64 = counts.iter().map(|&c| u64::from(c)).sum();
    if total != (h * w) as u64 {
        return Err(Error::InvalidArgument(format!(
            "RLE counts sum to {total}, expected {h}x{w} = {}",
            h * w
        )));
    }
    let mut mask = Mask::empty(w, h);
    let mut pos = 0usize;
    for (i, &run) in counts.iter().enumerate() {
        let run = run as usize;
        if i % 2 == 1 {
            for p in pos..pos + run {
                mask.set(p / h, p % h, true);
            }
        }
        pos += run;
    }
    Ok(mask)
}

/// Rasterize polygons onto a `width × height` canvas: a pixel is set when
/// its centre lies inside any polygon. Parts outside the canvas are clipped.
pub fn rasterize_polygons(polygons: &[Vec<f64>], width: usize, height: usize) -> Result<Mask> {
    let mut mask = Mask::empty(width, height);
    let mut crossings = Vec::new();
    for poly in polygons {
        if poly.len() % 2 != 0 || poly.len() < 6 {
            return Err(Error::InvalidArgument(format!(
                "polygon needs an even number (>= 6) of coordinates, got {}",
                poly.len()
            )));
        }
        if poly.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("polygon has non-finite coordinates".into()));
        }
        let pts: Vec<(f64, f64)> = poly.chunks_exact(2).map(|c| (c[0], c[1])).collect();
        for y in 0..height {
            let yc = y as f64 + 0.5;
            crossings.clear();
            for i in 0..pts.len() {
                let (x0, y0) = pts[i];
                let (x1, y1) = pts[(i + 1) % pts.len()];
                if (y0 <= yc && yc < y1) || (y1 <= yc && yc < y0) {
                    crossings.push(x0 + (yc - y0) * (x1 - x0) / (y1 - y0));
                }
            }
            crossings.sort_by(f64::total_cmp);
            for pair in crossings.chunks_exact(2) {
                // Pixel x is inside when pair[0] <= x + 0.5 < pair[1].
                let start = (pair[0] - 0.5).ceil().max(0.0);
                let end = (pair[1] - 0.5).ceil().min(width as f64);
                let mut x = start;
                while x < end {
                    mask.set(x as usize, y, true);
                    x += 1.0;
                }
            }
        }
    }
    Ok(mask)
}

/// Place `src` at the origin of a `width × height` canvas, clipping or
/// zero-padding as needed.
fn fit_to(src: &Mask, width: usize, height: usize) -> Mask {
    if src.width() == width && src.height() == height {
        return src.clone();
    }
    let mut out = Mask::empty(width, height);
    for y in 0..height.min(src.height()) {
        for x in 0..width.min(src.width()) {
            if src.get(x, y) {
                out.set(x, y, true);
            }
        }
    }
    out
}

fn random_rectangle(area_fraction: Span<f64>, aspect: Span<f64>, width: usize, height: usize, seed: u64) -> Result<Mask> {
    let mut rng = rng_from_seed(seed);
    let pick = |rng: &mut rand_chacha::ChaCha8Rng, s: Span<f64>| {
        if s.min == s.max {
            s.min
        } else {
            rng.gen_range(s.min..=s.max)
        }
    };
    let image_area = (width * height) as f64;
    for _ in 0..100 {
        let fraction = pick(&mut rng, area_fraction);
        let ratio = pick(&mut rng, aspect);
        let area = fraction * image_area;
        let w = (area * ratio).sqrt().round() as usize;
        let h = (area / ratio).sqrt().round() as usize;
        if w == 0 || h == 0 || w > width || h > height {
            continue;
        }
        let x = rng.gen_range(0..=width - w);
        let y = rng.gen_range(0..=height - h);
        return Ok(Mask::rect(width, height, x, y, x + w, y + h));
    }
    Err(Error::Config(format!(
        "no rectangle with area fraction [{}, {}] and aspect [{}, {}] fits a {width}x{height} image after 100 attempts",
        area_fraction.min, area_fraction.max, aspect.min, aspect.max
    )))
}

/// Turn a region source into a binary mask for an image of the given size.
pub fn rasterize_region(src: &RegionSource, width: usize, height: usize, seed: u64) -> Result<Mask> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidArgument(format!("image dimensions must be positive, got {width}x{height}")));
    }
    src.validate()?;
    let mask = match src {
        RegionSource::RandomRectangle { area_fraction, aspect } => {
            random_rectangle(*area_fraction, *aspect, width, height, seed)?
        }
        RegionSource::ForegroundMask { mask } => match mask {
            MaskSpec::Rle { size, counts } => fit_to(&decode_rle(*size, counts)?, width, height),
            MaskSpec::Polygons { polygons } | MaskSpec::PolygonList(polygons) => {
                rasterize_polygons(polygons, width, height)?
            }
            MaskSpec::File { path } => fit_to(&Mask::open(path)?, width, height),
        },
    };
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    Ok(mask)
}
