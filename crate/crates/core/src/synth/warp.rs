//! Geometric part of the logo transform: affine (scale, rotation, shear)
//! with an optional four-point perspective warp, resampled bilinearly.

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};

use super::filters::{color_reduce, color_shift, median_filter, sharpen};
use super::raster::{Channels, RasterImage};
use super::spec::TransformSpec;
use super::SUPPORT_ALPHA;
use crate::error::{Error, Result};

/// Slack when flooring canvas extents, so that exact extents computed with
/// rounding error (e.g. `59.999999999` after a 90° rotation) keep their size.
const EXTENT_EPS: f64 = 1e-6;

fn affine_matrix(spec: &TransformSpec) -> Matrix3<f64> {
    let (s, c) = spec.rotation_deg.to_radians().sin_cos();
    let rotation = Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
    let shear = Matrix3::new(1.0, spec.shear_x, 0.0, spec.shear_y, 1.0, 0.0, 0.0, 0.0, 1.0);
    let scale = Matrix3::new(spec.scale, 0.0, 0.0, 0.0, spec.scale, 0.0, 0.0, 0.0, 1.0);
    scale * rotation * shear
}

fn apply(m: &Matrix3<f64>, (x, y): (f64, f64)) -> (f64, f64) {
    let v = m * Vector3::new(x, y, 1.0);
    (v.x / v.z, v.y / v.z)
}

fn bounds(points: &[(f64, f64)]) -> (f64, f64, f64, f64) {
    points.iter().fold(
        (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        |(x0, y0, x1, y1), &(x, y)| (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
    )
}

/// Homography mapping `src[i]` onto `dst[i]` for four point pairs.
fn homography(src: &[(f64, f64); 4], dst: &[(f64, f64); 4]) -> Option<Matrix3<f64>> {
    let mut a = SMatrix::<f64, 8, 8>::zeros();
    let mut b = SVector::<f64, 8>::zeros();
    for i in 0..4 {
        let (x, y) = src[i];
        let (u, v) = dst[i];
        let r = 2 * i;
        a.set_row(r, &SMatrix::<f64, 1, 8>::from_row_slice(&[x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y]));
        a.set_row(r + 1, &SMatrix::<f64, 1, 8>::from_row_slice(&[0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y]));
        b[r] = u;
        b[r + 1] = v;
    }
    let h = a.lu().solve(&b)?;
    Some(Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0))
}

/// Forward geometric mapping for a `width × height` source, including the
/// optional perspective stage.
fn forward_matrix(spec: &TransformSpec, width: f64, height: f64) -> Result<Matrix3<f64>> {
    let affine = affine_matrix(spec);
    let Some(offsets) = spec.perspective else {
        return Ok(affine);
    };
    let corners = [(0.0, 0.0), (width, 0.0), (width, height), (0.0, height)];
    let warped = corners.map(|p| apply(&affine, p));
    let (x0, y0, x1, y1) = bounds(&warped);
    let (bw, bh) = (x1 - x0, y1 - y0);
    let mut target = warped;
    for (i, t) in target.iter_mut().enumerate() {
        t.0 += offsets[2 * i] * bw;
        t.1 += offsets[2 * i + 1] * bh;
    }
    let persp = homography(&warped, &target)
        .ok_or_else(|| Error::DegenerateTransform("perspective corners are collinear".into()))?;
    Ok(persp * affine)
}

/// Bilinear sample at continuous pixel coordinates (pixel centres at
/// integers); samples outside the image are transparent black.
fn sample_bilinear(img: &RasterImage, x: f64, y: f64, out: &mut [u8; 4]) {
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let (xi, yi) = (x0 as i64, y0 as i64);
    let (w, h) = (img.width() as i64, img.height() as i64);
    let mut acc = [0.0f64; 4];
    for (dy, wy) in [(0, 1.0 - fy), (1, fy)] {
        for (dx, wx) in [(0, 1.0 - fx), (1, fx)] {
            let weight = wx * wy;
            if weight == 0.0 {
                continue;
            }
            let (sx, sy) = (xi + dx, yi + dy);
            if sx < 0 || sy < 0 || sx >= w || sy >= h {
                continue;
            }
            let p = img.pixel(sx as usize, sy as usize);
            for c in 0..4 {
                acc[c] += weight * f64::from(p[c]);
            }
        }
    }
    for c in 0..4 {
        out[c] = acc[c].round().clamp(0.0, 255.0) as u8;
    }
}

/// Apply the geometric part of `spec` to an RGBA image. The output canvas is
/// the floor-rounded bounding box of the warped source rectangle.
pub fn warp(img: &RasterImage, spec: &TransformSpec) -> Result<RasterImage> {
    let img = img.to_rgba();
    if spec.is_geometric_identity() {
        return Ok(img);
    }
    let (w, h) = (img.width() as f64, img.height() as f64);
    let forward = forward_matrix(spec, w, h)?;
    let corners = [(0.0, 0.0), (w, 0.0), (w, h), (0.0, h)].map(|p| apply(&forward, p));
    let (x0, y0, x1, y1) = bounds(&corners);
    if !(x0.is_finite() && y0.is_finite() && x1.is_finite() && y1.is_finite()) {
        return Err(Error::DegenerateTransform("warp sends the design to infinity".into()));
    }
    let out_w = (x1 - x0 + EXTENT_EPS).floor();
    let out_h = (y1 - y0 + EXTENT_EPS).floor();
    if out_w < 1.0 || out_h < 1.0 {
        return Err(Error::DegenerateTransform(format!(
            "warped extent {:.3}x{:.3} collapses below one pixel",
            x1 - x0,
            y1 - y0
        )));
    }
    if out_w * out_h > 64.0e6 {
        return Err(Error::DegenerateTransform(format!("warped canvas {out_w}x{out_h} is too large")));
    }
    let inverse = forward
        .try_inverse()
        .ok_or_else(|| Error::DegenerateTransform("singular warp matrix".into()))?;
    let (out_w, out_h) = (out_w as usize, out_h as usize);
    let mut out = RasterImage::new(out_w, out_h, Channels::Rgba);
    let mut px = [0u8; 4];
    for v in 0..out_h {
        for u in 0..out_w {
            let (sx, sy) = apply(&inverse, (u as f64 + 0.5 + x0, v as f64 + 0.5 + y0));
            if !(sx.is_finite() && sy.is_finite()) {
                continue;
            }
            sample_bilinear(&img, sx - 0.5, sy - 0.5, &mut px);
            out.pixel_mut(u, v).copy_from_slice(&px);
        }
    }
    Ok(out)
}

/// Apply the photometric bank in fixed order: sharpen, median filter,
/// colour shift, colour reduction. Alpha is never touched.
pub fn photometric(img: &RasterImage, spec: &TransformSpec) -> Result<RasterImage> {
    let mut out = sharpen(img, spec.sharpen);
    out = median_filter(&out, spec.median_kernel)?;
    out = color_shift(&out, spec.color_shift);
    color_reduce(&out, spec.color_levels)
}

/// Transform a logo design into a compositing patch.
///
/// Photometric ops run on the colour channels first, then the geometric
/// warp resamples colour and alpha alike. Pixels with alpha below the
/// support threshold are made fully transparent and the result is cropped
/// to the remaining alpha support.
pub fn transform_logo(design: &RasterImage, spec: &TransformSpec) -> Result<RasterImage> {
    spec.validate()?;
    if !design.has_alpha() {
        return Err(Error::InvalidArgument("logo design must carry an alpha channel".into()));
    }
    let colored = photometric(design, spec)?;
    let mut warped = warp(&colored, spec)?;
    for px in warped.data_mut().chunks_exact_mut(4) {
        if px[3] < SUPPORT_ALPHA {
            px[3] = 0;
        }
    }
    let (x0, y0, x1, y1) = warped
        .alpha_support(SUPPORT_ALPHA)
        .ok_or_else(|| Error::DegenerateTransform("no alpha support survives the warp".into()))?;
    if (x0, y0, x1, y1) == (0, 0, warped.width(), warped.height()) {
        Ok(warped)
    } else {
        Ok(warped.crop(x0, y0, x1 - x0, y1 - y0))
    }
}
