use std::path::Path;

use image::ExtendedColorType;

use super::raster::{write_png, RasterImage};
use crate::error::{Error, Result};

/// Binary single-channel mask: 255 marks the region, 0 everything else.
#[derive(Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for Mask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Mask")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("set", &self.count())
            .finish()
    }
}

impl Mask {
    pub fn empty(width: usize, height: usize) -> Self {
        Mask {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Mask {
            width,
            height,
            data: vec![255; width * height],
        }
    }

    /// Mask covering pixel columns `x0..x1` and rows `y0..y1`.
    pub fn rect(width: usize, height: usize, x0: usize, y0: usize, x1: usize, y1: usize) -> Self {
        let mut m = Mask::empty(width, height);
        for y in y0.min(height)..y1.min(height) {
            for x in x0.min(width)..x1.min(width) {
                m.set(x, y, true);
            }
        }
        m
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x] != 0
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.data[y * self.width + x] = if on { 255 } else { 0 };
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    /// Mask of pixels with nonzero alpha, placed at `(x, y)` on a canvas.
    pub fn from_alpha(patch: &RasterImage, canvas_w: usize, canvas_h: usize, x: usize, y: usize) -> Self {
        let mut m = Mask::empty(canvas_w, canvas_h);
        for py in 0..patch.height() {
            for px in 0..patch.width() {
                if patch.alpha(px, py) > 0 && x + px < canvas_w && y + py < canvas_h {
                    m.set(x + px, y + py, true);
                }
            }
        }
        m
    }

    /// Load a single-channel PNG; samples above 127 become region.
    pub fn open(path: &Path) -> Result<Mask> {
        let img = image::open(path).map_err(|e| Error::image(path, e))?.into_luma8();
        let (w, h) = img.dimensions();
        Ok(Mask {
            width: w as usize,
            height: h as usize,
            data: img.into_raw().into_iter().map(|v| if v > 127 { 255 } else { 0 }).collect(),
        })
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        write_png(path, self.width, self.height, ExtendedColorType::L8, &self.data)
    }
}
