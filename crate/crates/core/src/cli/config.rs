use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bench::{ConflictPolicy, MergeRule, MergeRules, MIN_CLASS_IMAGES};
use crate::error::{Error, Result};
use crate::eval::EvalConfig;
use crate::pairgen::{PairConfig, RegionSource};
use crate::synth::{Span, SynthConfig, TransformRanges, DEFAULT_PER_CLASS};

/// Everything that shapes a run's output besides the input files. Loaded
/// from TOML; command-line flags and `OPENLOGO_*` variables override it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct RunConfig {
    pub seed: u64,
    /// Thread count; never affects output, so it is not recorded.
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
    pub synth: SynthSection,
    pub pairs: PairSection,
    pub build: BuildSection,
    pub split: SplitSection,
    pub eval: EvalConfig,
    pub preview: PreviewSection,
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub per_class: usize,
    pub area_fraction: Span<f64>,
    pub max_attempts: usize,
    pub ranges: TransformRanges,
}

impl Default for SynthSection {
    fn default() -> Self {
        let c = SynthConfig::default();
        SynthSection {
            per_class: DEFAULT_PER_CLASS,
            area_fraction: c.area_fraction,
            max_attempts: c.max_attempts,
            ranges: c.ranges,
        }
    }
}

impl SynthSection {
    pub fn config(&self) -> SynthConfig {
        SynthConfig {
            ranges: self.ranges.clone(),
            area_fraction: self.area_fraction,
            max_attempts: self.max_attempts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairSection {
    pub per_source: usize,
    pub max_attempts: usize,
    pub rectangle: RegionSource,
    pub ranges: TransformRanges,
}

impl Default for PairSection {
    fn default() -> Self {
        let c = PairConfig::default();
        PairSection {
            per_source: 100,
            max_attempts: c.max_attempts,
            rectangle: c.rectangle,
            ranges: c.ranges,
        }
    }
}

impl PairSection {
    pub fn config(&self) -> PairConfig {
        PairConfig {
            ranges: self.ranges.clone(),
            rectangle: self.rectangle.clone(),
            max_attempts: self.max_attempts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildSection {
    pub min_images: usize,
    pub conflict: ConflictPolicy,
    pub rules: Vec<MergeRule>,
}

impl Default for BuildSection {
    fn default() -> Self {
        BuildSection {
            min_images: MIN_CLASS_IMAGES,
            conflict: ConflictPolicy::Abort,
            rules: Vec::new(),
        }
    }
}

impl BuildSection {
    pub fn merge_rules(&self) -> MergeRules {
        MergeRules {
            rules: self.rules.clone(),
            conflict: self.conflict,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub trainval_size: usize,
    pub val_fraction: f64,
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            trainval_size: crate::bench::DEFAULT_TRAINVAL_SIZE,
            val_fraction: crate::bench::DEFAULT_VAL_FRACTION,
            train: 0.60,
            val: 0.10,
            test: 0.30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreviewSection {
    pub count: usize,
    pub line_width: usize,
}

impl Default for PreviewSection {
    fn default() -> Self {
        PreviewSection { count: 16, line_width: 2 }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("{}: {}", origin.display(), e.message())))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Internal(format!("config serialization: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        self.synth.config().validate()?;
        self.pairs.config().validate()?;
        self.eval.validate()?;
        if self.preview.line_width == 0 {
            return Err(Error::Config("preview line_width must be >= 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        Ok(())
    }
}
