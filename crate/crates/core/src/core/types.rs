use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::geometry::BoundingBox;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub id: String,
    pub path: PathBuf,
    pub width: u32,
    pub height: u32,
    /// Tag of the source dataset the image came from.
    pub source: String,
}

impl ImageRecord {
    pub fn area(&self) -> f64 {
        f64::from(self.width) * f64::from(self.height)
    }
}

/// A ground-truth box. `class` is the canonical class name, which doubles
/// as the class id throughout the toolkit.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub image_id: String,
    pub class: String,
    pub bbox: BoundingBox,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub image_id: String,
    pub class: String,
    pub bbox: BoundingBox,
    pub score: f64,
}

impl Detection {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.score) {
            return Err(Error::InvalidArgument(format!(
                "detection on {:?} has confidence {} outside [0, 1]",
                self.image_id, self.score
            )));
        }
        if !self.bbox.is_well_formed() {
            return Err(Error::InvalidArgument(format!(
                "detection on {:?} has an invalid box {:?}",
                self.image_id, self.bbox
            )));
        }
        Ok(())
    }
}

/// Percentage of the image covered by the annotation's box, in `(0, 100]`
/// for valid annotations.
pub fn scale_ratio(ann: &Annotation, img: &ImageRecord) -> f64 {
    100.0 * ann.bbox.area() / img.area()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Supervision {
    Supervised,
    Unsupervised,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub name: String,
    pub supervised: bool,
    /// Path of the clean logo design image for this class.
    pub design_path: Option<PathBuf>,
    #[serde(default)]
    pub aliases: Vec<String>,
}

impl ClassEntry {
    pub fn new(name: impl Into<String>) -> Self {
        ClassEntry {
            name: name.into(),
            supervised: false,
            design_path: None,
            aliases: Vec::new(),
        }
    }

    pub fn supervision(&self) -> Supervision {
        if self.supervised {
            Supervision::Supervised
        } else {
            Supervision::Unsupervised
        }
    }
}

/// Ordered list of logo classes plus the alias map from source-dataset
/// class names to canonical names.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassRegistry {
    pub classes: Vec<ClassEntry>,
}

impl ClassRegistry {
    pub fn new(classes: Vec<ClassEntry>) -> Result<Self> {
        let registry = ClassRegistry { classes };
        registry.validate()?;
        Ok(registry)
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn validate(&self) -> Result<()> {
        let mut names = BTreeSet::new();
        for c in &self.classes {
            if c.name.is_empty() {
                return Err(Error::Registry("empty class name".into()));
            }
            if !names.insert(c.name.as_str()) {
                return Err(Error::Registry(format!("duplicate class name {:?}", c.name)));
            }
        }
        let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
        for c in &self.classes {
            for alias in &c.aliases {
                if names.contains(alias.as_str()) && alias != &c.name {
                    return Err(Error::Registry(format!(
                        "alias {alias:?} of {:?} is itself a canonical class name",
                        c.name
                    )));
                }
                if let Some(prev) = owner.insert(alias.as_str(), c.name.as_str()) {
                    if prev != c.name {
                        return Err(Error::Registry(format!(
                            "alias {alias:?} maps to both {prev:?} and {:?}",
                            c.name
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Every class carries a design image path; required before synthesis.
    pub fn require_designs(&self) -> Result<()> {
        for c in &self.classes {
            if c.design_path.is_none() {
                return Err(Error::Registry(format!("class {:?} has no design image", c.name)));
            }
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&ClassEntry> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.name == name)
    }

    /// Resolve a canonical name or alias to the canonical name.
    pub fn resolve(&self, name: &str) -> Option<&str> {
        self.classes
            .iter()
            .find(|c| c.name == name || c.aliases.iter().any(|a| a == name))
            .map(|c| c.name.as_str())
    }

    pub fn supervised(&self) -> BTreeSet<String> {
        self.classes
            .iter()
            .filter(|c| c.supervised)
            .map(|c| c.name.clone())
            .collect()
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let registry: ClassRegistry = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        registry.validate()?;
        Ok(registry)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::Internal(e.to_string()))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}
