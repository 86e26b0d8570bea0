use std::fmt;

use serde::{Deserialize, Serialize};

use super::types::{Annotation, ImageRecord};

/// A broken annotation rule. Annotations with any violation are dropped
/// during cleaning, never repaired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Violation {
    /// The annotation names an image that is not in the manifest.
    MissingImage,
    /// A coordinate is NaN or infinite.
    NonFinite,
    /// `xmin > xmax`.
    InvertedX,
    /// `ymin > ymax`.
    InvertedY,
    /// Zero width or zero height.
    Degenerate,
    /// Part of the box lies outside the image.
    OutOfBounds,
    /// The box strictly envelops the whole image on every side.
    Oversized,
}

impl Violation {
    pub fn code(&self) -> &'static str {
        match self {
            Violation::MissingImage => "missing-image",
            Violation::NonFinite => "non-finite",
            Violation::InvertedX => "inverted-x",
            Violation::InvertedY => "inverted-y",
            Violation::Degenerate => "degenerate",
            Violation::OutOfBounds => "out-of-bounds",
            Violation::Oversized => "oversized",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Check an annotation against the image it is bound to.
///
/// Returns an empty list exactly when the box satisfies
/// [`BoundingBox::fits_within`](super::BoundingBox::fits_within) for the image.
pub fn validate_annotation(ann: &Annotation, img: Option<&ImageRecord>) -> Vec<Violation> {
    let img = match img {
        Some(img) if img.id == ann.image_id => img,
        _ => return vec![Violation::MissingImage],
    };
    let b = &ann.bbox;
    if !b.is_finite() {
        return vec![Violation::NonFinite];
    }
    let mut out = Vec::new();
    if b.xmin > b.xmax {
        out.push(Violation::InvertedX);
    }
    if b.ymin > b.ymax {
        out.push(Violation::InvertedY);
    }
    if b.xmin == b.xmax || b.ymin == b.ymax {
        out.push(Violation::Degenerate);
    }

    let (w, h) = (f64::from(img.width), f64::from(img.height));
    let (x0, x1) = (b.xmin.min(b.xmax), b.xmin.max(b.xmax));
    let (y0, y1) = (b.ymin.min(b.ymax), b.ymin.max(b.ymax));
    if x0 < 0.0 && y0 < 0.0 && x1 > w && y1 > h {
        out.push(Violation::Oversized);
    } else if x0 < 0.0 || y0 < 0.0 || x1 > w || y1 > h {
        out.push(Violation::OutOfBounds);
    }
    out
}
