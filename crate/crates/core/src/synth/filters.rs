//! Photometric transform bank. Every operation works on the colour samples
//! only: alpha, when present, passes through untouched, and image
//! dimensions never change.

use super::raster::RasterImage;
use crate::error::{Error, Result};

const BLUR_3X3: [[f64; 3]; 3] = [[1.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 1.0]];
const BLUR_NORM: f64 = 16.0;

#[inline]
fn clamp_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

#[inline]
fn clamped(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}

/// Unsharp masking: `out = v + strength * (v - gaussian3x3(v))`.
///
/// The effective kernel `(1 + s)·δ − s·G` sums to one, so flat regions are
/// fixed points. Borders replicate edge pixels.
pub fn sharpen(img: &RasterImage, strength: f64) -> RasterImage {
    if strength == 0.0 || img.width() == 0 || img.height() == 0 {
        return img.clone();
    }
    let (w, h) = (img.width(), img.height());
    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let mut blur = 0.0;
                for (ky, row) in BLUR_3X3.iter().enumerate() {
                    let sy = clamped(y as isize + ky as isize - 1, h);
                    for (kx, weight) in row.iter().enumerate() {
                        let sx = clamped(x as isize + kx as isize - 1, w);
                        blur += weight * f64::from(img.pixel(sx, sy)[c]);
                    }
                }
                let v = f64::from(img.pixel(x, y)[c]);
                out.pixel_mut(x, y)[c] = clamp_u8(v + strength * (v - blur / BLUR_NORM));
            }
        }
    }
    out
}

/// Per-channel median over a `k × k` window with edge replication.
pub fn median_filter(img: &RasterImage, k: u32) -> Result<RasterImage> {
    if k == 0 || k.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("median kernel size must be odd and >= 1, got {k}")));
    }
    if k == 1 {
        return Ok(img.clone());
    }
    let (w, h) = (img.width(), img.height());
    let r = (k / 2) as isize;
    let mut out = img.clone();
    let mut window = Vec::with_capacity((k * k) as usize);
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                window.clear();
                for dy in -r..=r {
                    let sy = clamped(y as isize + dy, h);
                    for dx in -r..=r {
                        let sx = clamped(x as isize + dx, w);
                        window.push(img.pixel(sx, sy)[c]);
                    }
                }
                let mid = window.len() / 2;
                let (_, median, _) = window.select_nth_unstable(mid);
                out.pixel_mut(x, y)[c] = *median;
            }
        }
    }
    Ok(out)
}

/// Add a per-channel offset, clamping to `[0, 255]`.
pub fn color_shift(img: &RasterImage, deltas: [i16; 3]) -> RasterImage {
    if deltas == [0, 0, 0] {
        return img.clone();
    }
    let n = img.channels().count();
    let mut out = img.clone();
    for px in out.data_mut().chunks_exact_mut(n) {
        for c in 0..3 {
            px[c] = (i16::from(px[c]) + deltas[c]).clamp(0, 255) as u8;
        }
    }
    out
}

/// Quantize one sample to `levels` evenly spaced values:
/// `round(round(v·(L−1)/255)·255/(L−1))`, rounding halves away from zero.
pub fn quantize(v: u8, levels: u16) -> u8 {
    let steps = f64::from(levels - 1);
    let bucket = (f64::from(v) * steps / 255.0).round();
    (bucket * 255.0 / steps).round() as u8
}

/// Reduce each colour channel to `levels` values.
pub fn color_reduce(img: &RasterImage, levels: u16) -> Result<RasterImage> {
    if !(2..=256).contains(&levels) {
        return Err(Error::InvalidArgument(format!("colour levels must be in [2, 256], got {levels}")));
    }
    if levels == 256 {
        return Ok(img.clone());
    }
    let lut: Vec<u8> = (0..=255u8).map(|v| quantize(v, levels)).collect();
    let n = img.channels().count();
    let mut out = img.clone();
    for px in out.data_mut().chunks_exact_mut(n) {
        for s in &mut px[..3] {
            *s = lut[*s as usize];
        }
    }
    Ok(out)
}
