use std::io::BufWriter;
use std::path::Path;

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{DynamicImage, ExtendedColorType, ImageEncoder};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channels {
    Rgb,
    Rgba,
}

impl Channels {
    pub fn count(self) -> usize {
        match self {
            Channels::Rgb => 3,
            Channels::Rgba => 4,
        }
    }
}

/// 8-bit interleaved RGB or RGBA image.
#[derive(Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: Channels,
    data: Vec<u8>,
}

impl std::fmt::Debug for RasterImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RasterImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("channels", &self.channels)
            .finish_non_exhaustive()
    }
}

impl RasterImage {
    pub fn new(width: usize, height: usize, channels: Channels) -> Self {
        RasterImage {
            width,
            height,
            channels,
            data: vec![0; width * height * channels.count()],
        }
    }

    pub fn filled(width: usize, height: usize, pixel: &[u8]) -> Self {
        let channels = match pixel.len() {
            3 => Channels::Rgb,
            4 => Channels::Rgba,
            n => panic!("pixel must have 3 or 4 samples, got {n}"),
        };
        let data = pixel.iter().copied().cycle().take(width * height * pixel.len()).collect();
        RasterImage {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn from_raw(width: usize, height: usize, channels: Channels, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height * channels.count() {
            return Err(Error::InvalidArgument(format!(
                "{} samples for a {width}x{height} image with {} channels",
                data.len(),
                channels.count()
            )));
        }
        Ok(RasterImage {
            width,
            height,
            channels,
            data,
        })
    }

    /// Build an image from a per-pixel function.
    pub fn from_fn(width: usize, height: usize, channels: Channels, mut f: impl FnMut(usize, usize) -> [u8; 4]) -> Self {
        let n = channels.count();
        let mut data = Vec::with_capacity(width * height * n);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y)[..n]);
            }
        }
        RasterImage {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> Channels {
        self.channels
    }

    pub fn has_alpha(&self) -> bool {
        self.channels == Channels::Rgba
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let n = self.channels.count();
        let i = (y * self.width + x) * n;
        &self.data[i..i + n]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [u8] {
        let n = self.channels.count();
        let i = (y * self.width + x) * n;
        &mut self.data[i..i + n]
    }

    /// Alpha of a pixel; 255 for images without alpha.
    #[inline]
    pub fn alpha(&self, x: usize, y: usize) -> u8 {
        match self.channels {
            Channels::Rgb => 255,
            Channels::Rgba => self.data[(y * self.width + x) * 4 + 3],
        }
    }

    pub fn to_rgb(&self) -> RasterImage {
        match self.channels {
            Channels::Rgb => self.clone(),
            Channels::Rgba => RasterImage {
                width: self.width,
                height: self.height,
                channels: Channels::Rgb,
                data: self.data.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect(),
            },
        }
    }

    /// Fully opaque RGBA copy of an RGB image; RGBA images are returned as-is.
    pub fn to_rgba(&self) -> RasterImage {
        match self.channels {
            Channels::Rgba => self.clone(),
            Channels::Rgb => RasterImage {
                width: self.width,
                height: self.height,
                channels: Channels::Rgba,
                data: self.data.chunks_exact(3).flat_map(|p| [p[0], p[1], p[2], 255]).collect(),
            },
        }
    }

    /// Copy out a rectangular region.
    pub fn crop(&self, x: usize, y: usize, width: usize, height: usize) -> RasterImage {
        assert!(x + width <= self.width && y + height <= self.height, "crop out of range");
        let n = self.channels.count();
        let mut data = Vec::with_capacity(width * height * n);
        for row in y..y + height {
            let start = (row * self.width + x) * n;
            data.extend_from_slice(&self.data[start..start + width * n]);
        }
        RasterImage {
            width,
            height,
            channels: self.channels,
            data,
        }
    }

    /// Tight pixel bounds `(x0, y0, x1, y1)` (exclusive max) of pixels with
    /// alpha at or above `threshold`; `None` when no pixel qualifies.
    pub fn alpha_support(&self, threshold: u8) -> Option<(usize, usize, usize, usize)> {
        let mut bounds: Option<(usize, usize, usize, usize)> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.alpha(x, y) >= threshold {
                    bounds = Some(match bounds {
                        None => (x, y, x + 1, y + 1),
                        Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x + 1), y1.max(y + 1)),
                    });
                }
            }
        }
        bounds
    }

    /// Decode an image file. Grayscale is promoted to RGB; alpha is kept
    /// when present.
    pub fn open(path: &Path) -> Result<RasterImage> {
        let img = image::open(path).map_err(|e| Error::image(path, e))?;
        Ok(Self::from_dynamic(img))
    }

    pub fn from_dynamic(img: DynamicImage) -> RasterImage {
        if img.color().has_alpha() {
            let rgba = img.into_rgba8();
            let (w, h) = rgba.dimensions();
            RasterImage {
                width: w as usize,
                height: h as usize,
                channels: Channels::Rgba,
                data: rgba.into_raw(),
            }
        } else {
            let rgb = img.into_rgb8();
            let (w, h) = rgb.dimensions();
            RasterImage {
                width: w as usize,
                height: h as usize,
                channels: Channels::Rgb,
                data: rgb.into_raw(),
            }
        }
    }

    /// Encode as PNG with fixed encoder settings.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let color = match self.channels {
            Channels::Rgb => ExtendedColorType::Rgb8,
            Channels::Rgba => ExtendedColorType::Rgba8,
        };
        write_png(path, self.width, self.height, color, &self.data)
    }
}

pub(crate) fn write_png(path: &Path, width: usize, height: usize, color: ExtendedColorType, data: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let encoder = PngEncoder::new_with_quality(BufWriter::new(file), CompressionType::Default, FilterType::Adaptive);
    encoder
        .write_image(data, width as u32, height as u32, color)
        .map_err(|e| Error::image(path, e))
}

/// Turn near-white pixels of a design without alpha into transparent ones.
///
/// Pixels whose three channels are all at or above `threshold` get alpha 0;
/// everything else is opaque. Images that already carry alpha are returned
/// unchanged.
pub fn alpha_key_white(design: &RasterImage, threshold: u8) -> RasterImage {
    if design.has_alpha() {
        return design.clone();
    }
    let mut out = RasterImage::new(design.width(), design.height(), Channels::Rgba);
    for (src, dst) in design.data().chunks_exact(3).zip(out.data_mut().chunks_exact_mut(4)) {
        dst[..3].copy_from_slice(src);
        dst[3] = if src.iter().all(|&v| v >= threshold) { 0 } else { 255 };
    }
    out
}

/// Load a logo design: PNG with alpha is used as-is, designs without alpha
/// are keyed on near-white.
pub fn load_design(path: &Path) -> Result<RasterImage> {
    Ok(alpha_key_white(&RasterImage::open(path)?, super::WHITE_KEY_THRESHOLD))
}
