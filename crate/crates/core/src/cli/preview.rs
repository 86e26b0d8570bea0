use std::path::{Path, PathBuf};

use log::warn;
use rand::seq::SliceRandom;

use crate::core::{derive_seed, resolve_path, rng_from_seed, str_key, BoundingBox, DatasetManifest};
use crate::error::Result;
use crate::synth::RasterImage;

/// Saturated colour derived from the class name.
pub fn class_color(class: &str) -> [u8; 3] {
    let h = str_key(class);
    let hue = (h % 360) as f64;
    // HSV with s = 1, v = 1.
    let x = 1.0 - ((hue / 60.0) % 2.0 - 1.0).abs();
    let (r, g, b) = match (hue / 60.0) as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    [(r * 255.0) as u8, (g * 255.0) as u8, (b * 255.0) as u8]
}

/// Pixel rectangle `(x0, y0, x1, y1)`, inclusive, covered by a box, clamped
/// to the image. `None` when the box misses the image.
pub fn box_pixels(b: &BoundingBox, width: usize, height: usize) -> Option<(usize, usize, usize, usize)> {
    let x0 = b.xmin.floor().max(0.0);
    let y0 = b.ymin.floor().max(0.0);
    let x1 = (b.xmax.ceil() - 1.0).min(width as f64 - 1.0);
    let y1 = (b.ymax.ceil() - 1.0).min(height as f64 - 1.0);
    (x0 <= x1 && y0 <= y1).then_some((x0 as usize, y0 as usize, x1 as usize, y1 as usize))
}

/// Copy of `img` with box outlines drawn `line_width` pixels wide, inside
/// each box's pixel rectangle.
pub fn draw_boxes(img: &RasterImage, boxes: &[(BoundingBox, [u8; 3])], line_width: usize) -> RasterImage {
    let mut out = img.to_rgb();
    let (w, h) = (out.width(), out.height());
    for (b, color) in boxes {
        let Some((x0, y0, x1, y1)) = box_pixels(b, w, h) else { continue };
        for y in y0..=y1 {
            for x in x0..=x1 {
                let edge = x < x0 + line_width || x + line_width > x1 || y < y0 + line_width || y + line_width > y1;
                if edge {
                    out.pixel_mut(x, y).copy_from_slice(color);
                }
            }
        }
    }
    out
}

fn file_stem_for(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Render `n` seeded-sampled images of the manifest with their boxes into
/// `out_dir` as `NNNN_<id>.png`. Source images are only read.
pub fn render_preview(
    manifest: &DatasetManifest,
    manifest_path: &Path,
    n: usize,
    seed: u64,
    line_width: usize,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut ids: Vec<&str> = manifest.images.iter().map(|i| i.id.as_str()).collect();
    ids.sort_unstable();
    if n > ids.len() {
        warn!("preview asked for {n} images but the manifest has {}; rendering all", ids.len());
    }
    ids.shuffle(&mut rng_from_seed(derive_seed(seed, &[str_key("preview")])));
    ids.truncate(n);
    let index = manifest.image_index();
    let by_image = manifest.annotations_by_image();
    let jobs: Vec<(usize, &str)> = ids.into_iter().enumerate().collect();
    use rayon::prelude::*;
    jobs.par_iter()
        .map(|&(k, id)| {
            let rec = index[id];
            let img = RasterImage::open(&resolve_path(manifest_path, &rec.path))?;
            let boxes: Vec<(BoundingBox, [u8; 3])> = by_image
                .get(id)
                .map(|anns| anns.iter().map(|a| (a.bbox, class_color(&a.class))).collect())
                .unwrap_or_default();
            let out = draw_boxes(&img, &boxes, line_width);
            let path = out_dir.join(format!("{k:04}_{}.png", file_stem_for(id)));
            out.save_png(&path)?;
            Ok(path)
        })
        .collect()
}
