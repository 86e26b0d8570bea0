use super::raster::{Channels, RasterImage};
use crate::core::BoundingBox;
use crate::error::{Error, Result};

/// Source-over blend of one sample: `round((a·p + (255 − a)·b) / 255)`.
#[inline]
pub fn blend(patch: u8, background: u8, alpha: u8) -> u8 {
    let a = u32::from(alpha);
    // 255 is odd, so the quotient is never exactly half-way and integer
    // round-half-up equals round-to-nearest.
    ((a * u32::from(patch) + (255 - a) * u32::from(background) + 127) / 255) as u8
}

/// Alpha-blend `patch` onto `background` with its top-left corner at
/// `(x, y)`.
///
/// Returns the composite and the tight box of the patch's nonzero-alpha
/// support in background coordinates. Background pixels under zero alpha
/// are left byte-identical. The patch must fit entirely inside the
/// background; it is never clipped.
pub fn composite(background: &RasterImage, patch: &RasterImage, x: usize, y: usize) -> Result<(RasterImage, BoundingBox)> {
    let mut out = background.to_rgb();
    let bbox = composite_in_place(&mut out, patch, x, y)?;
    Ok((out, bbox))
}

pub fn composite_in_place(background: &mut RasterImage, patch: &RasterImage, x: usize, y: usize) -> Result<BoundingBox> {
    if background.channels() != Channels::Rgb {
        return Err(Error::InvalidArgument("composite target must be RGB".into()));
    }
    let (sx0, sy0, sx1, sy1) = patch.alpha_support(1).ok_or(Error::EmptySupport)?;
    if x + patch.width() > background.width() || y + patch.height() > background.height() {
        return Err(Error::PlacementOutOfBounds {
            x,
            y,
            patch_width: patch.width(),
            patch_height: patch.height(),
            width: background.width(),
            height: background.height(),
        });
    }
    for py in sy0..sy1 {
        for px in sx0..sx1 {
            let a = patch.alpha(px, py);
            if a == 0 {
                continue;
            }
            let src = patch.pixel(px, py);
            let (r, g, b) = (src[0], src[1], src[2]);
            let dst = background.pixel_mut(x + px, y + py);
            dst[0] = blend(r, dst[0], a);
            dst[1] = blend(g, dst[1], a);
            dst[2] = blend(b, dst[2], a);
        }
    }
    Ok(BoundingBox::new(
        (x + sx0) as f64,
        (y + sy0) as f64,
        (x + sx1) as f64,
        (y + sy1) as f64,
    ))
}
