use serde::{Deserialize, Serialize};

/// Axis-aligned box in pixel coordinates, origin at the top-left corner.
///
/// Coordinates are real-valued extents: a box covering pixel columns `0..10`
/// has `xmin = 0` and `xmax = 10`, and its area is `(xmax - xmin) * (ymax - ymin)`
/// with no `+1` correction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl BoundingBox {
    pub const fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Self {
        BoundingBox {
            xmin,
            ymin,
            xmax,
            ymax,
        }
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    /// Area of the box; zero for empty or inverted boxes.
    pub fn area(&self) -> f64 {
        if self.xmax <= self.xmin || self.ymax <= self.ymin {
            0.0
        } else {
            self.width() * self.height()
        }
    }

    pub fn is_finite(&self) -> bool {
        self.xmin.is_finite() && self.ymin.is_finite() && self.xmax.is_finite() && self.ymax.is_finite()
    }

    /// Positive-area, correctly ordered box.
    pub fn is_well_formed(&self) -> bool {
        self.is_finite() && self.xmin < self.xmax && self.ymin < self.ymax
    }

    /// The box invariant when bound to an image:
    /// `0 <= xmin < xmax <= width` and `0 <= ymin < ymax <= height`.
    pub fn fits_within(&self, width: f64, height: f64) -> bool {
        self.is_finite()
            && 0.0 <= self.xmin
            && self.xmin < self.xmax
            && self.xmax <= width
            && 0.0 <= self.ymin
            && self.ymin < self.ymax
            && self.ymax <= height
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> f64 {
        let w = self.xmax.min(other.xmax) - self.xmin.max(other.xmin);
        let h = self.ymax.min(other.ymax) - self.ymin.max(other.ymin);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    /// Lexicographic order on `(xmin, ymin, xmax, ymax)`, used for tie-breaking.
    pub fn lex_cmp(&self, other: &BoundingBox) -> std::cmp::Ordering {
        self.xmin
            .total_cmp(&other.xmin)
            .then(self.ymin.total_cmp(&other.ymin))
            .then(self.xmax.total_cmp(&other.xmax))
            .then(self.ymax.total_cmp(&other.ymax))
    }
}

/// Intersection over union of two boxes, in `[0, 1]`.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}
