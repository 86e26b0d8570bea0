use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::core::rng_from_seed;
use crate::error::{Error, Result};

/// Seeded geometric + photometric recipe applied to a logo design or an
/// image region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformSpec {
    /// Uniform scale factor, `> 0`.
    pub scale: f64,
    pub rotation_deg: f64,
    pub shear_x: f64,
    pub shear_y: f64,
    /// Corner displacements `(dx, dy)` for the top-left, top-right,
    /// bottom-right and bottom-left corners, as fractions of the affine
    /// output's width and height. `None` keeps the warp affine.
    #[serde(default)]
    pub perspective: Option<[f64; 8]>,
    /// Unsharp-mask strength; 0 disables sharpening.
    pub sharpen: f64,
    /// Odd median kernel size; 1 disables filtering.
    pub median_kernel: u32,
    /// Additive per-channel colour shift.
    pub color_shift: [i16; 3],
    /// Number of levels per channel after colour reduction; 256 disables it.
    pub color_levels: u16,
    pub seed: u64,
}

impl TransformSpec {
    pub fn identity() -> Self {
        TransformSpec {
            scale: 1.0,
            rotation_deg: 0.0,
            shear_x: 0.0,
            shear_y: 0.0,
            perspective: None,
            sharpen: 0.0,
            median_kernel: 1,
            color_shift: [0, 0, 0],
            color_levels: 256,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.scale, self.rotation_deg, self.shear_x, self.shear_y, self.sharpen]
            .iter()
            .chain(self.perspective.iter().flatten())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("transform spec has non-finite parameters".into()));
        }
        if self.scale <= 0.0 {
            return Err(Error::InvalidArgument(format!("scale must be > 0, got {}", self.scale)));
        }
        if self.median_kernel == 0 || self.median_kernel.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "median kernel must be odd and >= 1, got {}",
                self.median_kernel
            )));
        }
        if !(2..=256).contains(&self.color_levels) {
            return Err(Error::InvalidArgument(format!(
                "colour levels must be in [2, 256], got {}",
                self.color_levels
            )));
        }
        if self.color_shift.iter().any(|d| !(-64..=64).contains(d)) {
            return Err(Error::InvalidArgument(format!(
                "colour shift must be within [-64, 64], got {:?}",
                self.color_shift
            )));
        }
        Ok(())
    }

    pub fn is_geometric_identity(&self) -> bool {
        self.scale == 1.0
            && self.rotation_deg == 0.0
            && self.shear_x == 0.0
            && self.shear_y == 0.0
            && self.perspective.is_none_or(|p| p.iter().all(|&v| v == 0.0))
    }

    pub fn is_photometric_identity(&self) -> bool {
        self.sharpen == 0.0 && self.median_kernel == 1 && self.color_shift == [0, 0, 0] && self.color_levels == 256
    }
}

/// Closed interval `[min, max]`, serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[T; 2]", into = "[T; 2]")]
pub struct Span<T: Copy> {
    pub min: T,
    pub max: T,
}

impl<T: Copy> Span<T> {
    pub const fn new(min: T, max: T) -> Self {
        Span { min, max }
    }
}

impl<T: Copy> From<[T; 2]> for Span<T> {
    fn from([min, max]: [T; 2]) -> Self {
        Span { min, max }
    }
}

impl<T: Copy> From<Span<T>> for [T; 2] {
    fn from(s: Span<T>) -> Self {
        [s.min, s.max]
    }
}

/// Sampling ranges for [`sample_spec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformRanges {
    pub scale: Span<f64>,
    pub rotation_deg: Span<f64>,
    pub shear: Span<f64>,
    /// Maximum corner displacement fraction; 0 keeps warps affine.
    pub perspective: f64,
    pub sharpen: Span<f64>,
    pub median_kernels: Vec<u32>,
    pub color_shift: Span<i16>,
    pub color_levels: Span<u16>,
}

impl Default for TransformRanges {
    fn default() -> Self {
        TransformRanges {
            scale: Span::new(0.5, 1.5),
            rotation_deg: Span::new(-25.0, 25.0),
            shear: Span::new(-0.15, 0.15),
            perspective: 0.0,
            sharpen: Span::new(0.0, 1.0),
            median_kernels: vec![1, 3, 5],
            color_shift: Span::new(-32, 32),
            color_levels: Span::new(16, 256),
        }
    }
}

impl TransformRanges {
    /// Ranges that always produce `spec` (apart from its seed). Shear and
    /// colour shift ranges are shared across axes/channels, so only specs with
    /// equal components are reproduced exactly.
    pub fn fixed(spec: &TransformSpec) -> Self {
        let c = spec.color_shift;
        TransformRanges {
            scale: Span::new(spec.scale, spec.scale),
            rotation_deg: Span::new(spec.rotation_deg, spec.rotation_deg),
            shear: Span::new(spec.shear_x, spec.shear_x),
            perspective: 0.0,
            sharpen: Span::new(spec.sharpen, spec.sharpen),
            median_kernels: vec![spec.median_kernel],
            color_shift: Span::new(c[0], c[0]),
            color_levels: Span::new(spec.color_levels, spec.color_levels),
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn check<T: Copy + PartialOrd + std::fmt::Debug>(name: &str, s: Span<T>) -> Result<()> {
            if s.min <= s.max {
                Ok(())
            } else {
                Err(Error::Config(format!("empty range for {name}: [{:?}, {:?}]", s.min, s.max)))
            }
        }
        check("scale", self.scale)?;
        check("rotation_deg", self.rotation_deg)?;
        check("shear", self.shear)?;
        check("sharpen", self.sharpen)?;
        check("color_shift", self.color_shift)?;
        check("color_levels", self.color_levels)?;
        let all_finite = [
            self.scale.min,
            self.scale.max,
            self.rotation_deg.min,
            self.rotation_deg.max,
            self.shear.min,
            self.shear.max,
            self.sharpen.min,
            self.sharpen.max,
            self.perspective,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::Config("transform ranges must be finite".into()));
        }
        if self.scale.min <= 0.0 {
            return Err(Error::Config(format!("scale range must be positive, got {}", self.scale.min)));
        }
        if self.sharpen.min < 0.0 {
            return Err(Error::Config("sharpen strength must be >= 0".into()));
        }
        if !(0.0..0.5).contains(&self.perspective) {
            return Err(Error::Config(format!("perspective jitter must be in [0, 0.5), got {}", self.perspective)));
        }
        if self.median_kernels.is_empty() {
            return Err(Error::Config("empty range for median_kernels".into()));
        }
        if let Some(k) = self.median_kernels.iter().find(|&&k| k == 0 || k % 2 == 0) {
            return Err(Error::Config(format!("median kernel sizes must be odd, got {k}")));
        }
        if self.color_shift.min < -64 || self.color_shift.max > 64 {
            return Err(Error::Config("colour shift range must be within [-64, 64]".into()));
        }
        if self.color_levels.min < 2 || self.color_levels.max > 256 {
            return Err(Error::Config("colour levels range must be within [2, 256]".into()));
        }
        Ok(())
    }
}

fn uniform_f64(rng: &mut impl Rng, s: Span<f64>) -> f64 {
    if s.min == s.max {
        s.min
    } else {
        rng.gen_range(s.min..=s.max)
    }
}

/// Draw a transform spec from `ranges`. The same seed always yields the
/// same spec.
pub fn sample_spec(seed: u64, ranges: &TransformRanges) -> Result<TransformSpec> {
    ranges.validate()?;
    let mut rng = rng_from_seed(seed);
    let scale = uniform_f64(&mut rng, ranges.scale);
    let rotation_deg = uniform_f64(&mut rng, ranges.rotation_deg);
    let shear_x = uniform_f64(&mut rng, ranges.shear);
    let shear_y = uniform_f64(&mut rng, ranges.shear);
    let perspective = (ranges.perspective > 0.0).then(|| {
        let p = ranges.perspective;
        let mut offsets = [0.0; 8];
        for o in &mut offsets {
            *o = rng.gen_range(-p..=p);
        }
        offsets
    });
    let sharpen = uniform_f64(&mut rng, ranges.sharpen);
    let median_kernel = ranges.median_kernels[rng.gen_range(0..ranges.median_kernels.len())];
    let mut color_shift = [0i16; 3];
    for c in &mut color_shift {
        *c = rng.gen_range(ranges.color_shift.min..=ranges.color_shift.max);
    }
    let color_levels = rng.gen_range(ranges.color_levels.min..=ranges.color_levels.max);
    Ok(TransformSpec {
        scale,
        rotation_deg,
        shear_x,
        shear_y,
        perspective,
        sharpen,
        median_kernel,
        color_shift,
        color_levels,
        seed,
    })
}
