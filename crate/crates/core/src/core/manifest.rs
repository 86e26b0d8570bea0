//! Line-delimited JSON manifest: the interchange format between every
//! pipeline stage.
//!
//! Each line is one record discriminated by `kind`:
//!
//! ```text
//! {"kind":"image","id":"a","path":"a.png","width":100,"height":80,"source":"fl32"}
//! {"kind":"annotation","image_id":"a","class":"adidas","xmin":1.0,"ymin":2.0,"xmax":30.0,"ymax":40.0}
//! {"kind":"split","name":"test","image_ids":["a"]}
//! ```
//!
//! Writing emits images, then annotations, then splits sorted by name with
//! sorted ids, so the same manifest always serializes to the same bytes.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::geometry::BoundingBox;
use super::types::{Annotation, ClassRegistry, ImageRecord};
use super::validate::validate_annotation;
use crate::error::{Error, Result};

pub const TRAIN: &str = "train";
pub const VAL: &str = "val";
pub const TEST: &str = "test";
pub const TRAINVAL: &str = "trainval";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetManifest {
    pub images: Vec<ImageRecord>,
    pub annotations: Vec<Annotation>,
    /// Empty when the manifest was read without a registry.
    pub registry: ClassRegistry,
    pub splits: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum Record {
    Image {
        id: String,
        path: PathBuf,
        width: u32,
        height: u32,
        source: String,
    },
    Annotation {
        image_id: String,
        class: String,
        xmin: f64,
        ymin: f64,
        xmax: f64,
        ymax: f64,
    },
    Split {
        name: String,
        image_ids: Vec<String>,
    },
}

impl DatasetManifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty() && self.annotations.is_empty() && self.splits.is_empty()
    }

    pub fn image_index(&self) -> HashMap<&str, &ImageRecord> {
        self.images.iter().map(|i| (i.id.as_str(), i)).collect()
    }

    pub fn image(&self, id: &str) -> Option<&ImageRecord> {
        self.images.iter().find(|i| i.id == id)
    }

    pub fn split(&self, name: &str) -> Option<&BTreeSet<String>> {
        self.splits.get(name)
    }

    /// Sorted class names that have at least one annotation.
    pub fn annotated_classes(&self) -> BTreeSet<String> {
        self.annotations.iter().map(|a| a.class.clone()).collect()
    }

    /// Number of distinct images containing each class.
    pub fn class_image_counts(&self) -> BTreeMap<String, usize> {
        let mut per_class: BTreeMap<String, BTreeSet<&str>> = BTreeMap::new();
        for a in &self.annotations {
            per_class.entry(a.class.clone()).or_default().insert(a.image_id.as_str());
        }
        per_class.into_iter().map(|(c, s)| (c, s.len())).collect()
    }

    pub fn annotations_by_image(&self) -> HashMap<&str, Vec<&Annotation>> {
        let mut map: HashMap<&str, Vec<&Annotation>> = HashMap::new();
        for a in &self.annotations {
            map.entry(a.image_id.as_str()).or_default().push(a);
        }
        map
    }

    /// Keep only the images accepted by `keep`, along with their
    /// annotations and split memberships.
    pub fn retain_images(&mut self, mut keep: impl FnMut(&ImageRecord) -> bool) {
        self.images.retain(|i| keep(i));
        let ids: BTreeSet<String> = self.images.iter().map(|i| i.id.clone()).collect();
        self.annotations.retain(|a| ids.contains(&a.image_id));
        for set in self.splits.values_mut() {
            set.retain(|id| ids.contains(id));
        }
    }

    /// Check every manifest invariant.
    pub fn validate(&self) -> Result<()> {
        self.validate_with_lines(None)
    }

    fn validate_with_lines(&self, lines: Option<&ParsedLines>) -> Result<()> {
        let at = |kind: LineKind, idx: usize| -> String {
            match lines.and_then(|l| l.line(kind, idx)) {
                Some(n) => format!("line {n}: "),
                None => String::new(),
            }
        };

        let mut ids: HashMap<&str, &ImageRecord> = HashMap::with_capacity(self.images.len());
        for (i, img) in self.images.iter().enumerate() {
            if img.id.is_empty() {
                return Err(Error::Manifest(format!("{}image with empty id", at(LineKind::Image, i))));
            }
            if img.width == 0 || img.height == 0 {
                return Err(Error::Manifest(format!(
                    "{}image {:?} has zero dimension {}x{}",
                    at(LineKind::Image, i),
                    img.id,
                    img.width,
                    img.height
                )));
            }
            if ids.insert(img.id.as_str(), img).is_some() {
                return Err(Error::Manifest(format!(
                    "{}duplicate image id {:?}",
                    at(LineKind::Image, i),
                    img.id
                )));
            }
        }

        for (i, ann) in self.annotations.iter().enumerate() {
            let img = ids.get(ann.image_id.as_str()).copied();
            if img.is_none() {
                return Err(Error::Manifest(format!(
                    "{}annotation references missing image id {:?}",
                    at(LineKind::Annotation, i),
                    ann.image_id
                )));
            }
            let violations = validate_annotation(ann, img);
            if !violations.is_empty() {
                let codes: Vec<&str> = violations.iter().map(|v| v.code()).collect();
                return Err(Error::Manifest(format!(
                    "{}annotation on image {:?} violates [{}]",
                    at(LineKind::Annotation, i),
                    ann.image_id,
                    codes.join(", ")
                )));
            }
            if !self.registry.is_empty() && !self.registry.contains(&ann.class) {
                return Err(Error::Manifest(format!(
                    "{}annotation class {:?} is not in the registry",
                    at(LineKind::Annotation, i),
                    ann.class
                )));
            }
        }

        for (i, (name, members)) in self.splits.iter().enumerate() {
            if let Some(missing) = members.iter().find(|id| !ids.contains_key(id.as_str())) {
                return Err(Error::Manifest(format!(
                    "{}split {name:?} references missing image id {missing:?}",
                    at(LineKind::Split, i)
                )));
            }
        }
        let exclusive = [TRAIN, VAL, TEST];
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            if let (Some(sa), Some(sb)) = (self.splits.get(exclusive[a]), self.splits.get(exclusive[b])) {
                if let Some(shared) = sa.intersection(sb).next() {
                    return Err(Error::Manifest(format!(
                        "image {shared:?} is in both {:?} and {:?} splits",
                        exclusive[a], exclusive[b]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for img in &self.images {
            push_record(
                &mut out,
                &Record::Image {
                    id: img.id.clone(),
                    path: img.path.clone(),
                    width: img.width,
                    height: img.height,
                    source: img.source.clone(),
                },
            );
        }
        for a in &self.annotations {
            push_record(
                &mut out,
                &Record::Annotation {
                    image_id: a.image_id.clone(),
                    class: a.class.clone(),
                    xmin: a.bbox.xmin,
                    ymin: a.bbox.ymin,
                    xmax: a.bbox.xmax,
                    ymax: a.bbox.ymax,
                },
            );
        }
        for (name, ids) in &self.splits {
            push_record(
                &mut out,
                &Record::Split {
                    name: name.clone(),
                    image_ids: ids.iter().cloned().collect(),
                },
            );
        }
        out
    }

    /// Parse and validate a JSONL manifest.
    pub fn from_jsonl(reader: impl BufRead, path: &Path) -> Result<Self> {
        let (manifest, lines) = parse(reader, path)?;
        manifest.validate_with_lines(Some(&lines)).map_err(|e| match e {
            Error::Manifest(m) => Error::Manifest(format!("{}: {m}", path.display())),
            other => other,
        })?;
        Ok(manifest)
    }
}

fn push_record(out: &mut String, record: &Record) {
    // Serializing plain data with string keys cannot fail.
    out.push_str(&serde_json::to_string(record).expect("manifest record serializes"));
    out.push('\n');
}

#[derive(Clone, Copy)]
enum LineKind {
    Image,
    Annotation,
    Split,
}

#[derive(Default)]
struct ParsedLines {
    images: Vec<usize>,
    annotations: Vec<usize>,
    splits: BTreeMap<String, usize>,
}

impl ParsedLines {
    fn line(&self, kind: LineKind, idx: usize) -> Option<usize> {
        match kind {
            LineKind::Image => self.images.get(idx).copied(),
            LineKind::Annotation => self.annotations.get(idx).copied(),
            LineKind::Split => self.splits.values().nth(idx).copied(),
        }
    }
}

fn parse(reader: impl BufRead, path: &Path) -> Result<(DatasetManifest, ParsedLines)> {
    let mut manifest = DatasetManifest::new();
    let mut lines = ParsedLines::default();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            message: e.to_string(),
        })?;
        match record {
            Record::Image {
                id,
                path,
                width,
                height,
                source,
            } => {
                manifest.images.push(ImageRecord {
                    id,
                    path,
                    width,
                    height,
                    source,
                });
                lines.images.push(lineno);
            }
            Record::Annotation {
                image_id,
                class,
                xmin,
                ymin,
                xmax,
                ymax,
            } => {
                manifest.annotations.push(Annotation {
                    image_id,
                    class,
                    bbox: BoundingBox::new(xmin, ymin, xmax, ymax),
                });
                lines.annotations.push(lineno);
            }
            Record::Split { name, image_ids } => {
                let set = manifest.splits.entry(name.clone()).or_default();
                set.extend(image_ids);
                lines.splits.entry(name).or_insert(lineno);
            }
        }
    }
    Ok((manifest, lines))
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    DatasetManifest::from_jsonl(BufReader::new(file), path)
}

/// Read a manifest and attach a class registry; annotation classes must
/// resolve in it.
pub fn read_manifest_with_registry(path: &Path, registry_path: &Path) -> Result<DatasetManifest> {
    let mut manifest = read_manifest(path)?;
    manifest.registry = ClassRegistry::read(registry_path)?;
    manifest.validate()?;
    Ok(manifest)
}

pub fn write_manifest(manifest: &DatasetManifest, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(manifest.to_jsonl().as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Resolve an image path recorded in a manifest relative to the manifest's
/// directory.
pub fn resolve_path(manifest_path: &Path, recorded: &Path) -> PathBuf {
    if recorded.is_absolute() {
        recorded.to_path_buf()
    } else {
        manifest_path
            .parent()
            .map(|d| d.join(recorded))
            .unwrap_or_else(|| recorded.to_path_buf())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DatasetManifest {
        let mut m = DatasetManifest::new();
        m.images.push(ImageRecord {
            id: "img1".into(),
            path: "images/img1.png".into(),
            width: 100,
            height: 80,
            source: "fl32".into(),
        });
        m.annotations.push(Annotation {
            image_id: "img1".into(),
            class: "adidas".into(),
            bbox: BoundingBox::new(1.5, 2.0, 30.25, 40.0),
        });
        m
    }

    #[test]
    fn empty_manifest_round_trips() {
        let m = DatasetManifest::new();
        let text = m.to_jsonl();
        assert!(text.is_empty());
        let back = DatasetManifest::from_jsonl(text.as_bytes(), Path::new("m.jsonl")).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_jsonl(), text);
    }

    #[test]
    fn single_record_round_trips() {
        let m = sample();
        let text = m.to_jsonl();
        let back = DatasetManifest::from_jsonl(text.as_bytes(), Path::new("m.jsonl")).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_jsonl(), text);
    }

    #[test]
    fn field_names_and_order() {
        let mut m = sample();
        m.splits.insert("test".into(), ["img1".to_string()].into());
        let text = m.to_jsonl();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            r#"{"kind":"image","id":"img1","path":"images/img1.png","width":100,"height":80,"source":"fl32"}"#
        );
        assert_eq!(
            lines[1],
            r#"{"kind":"annotation","image_id":"img1","class":"adidas","xmin":1.5,"ymin":2.0,"xmax":30.25,"ymax":40.0}"#
        );
        assert_eq!(lines[2], r#"{"kind":"split","name":"test","image_ids":["img1"]}"#);
    }

    #[test]
    fn missing_image_reference_names_the_id() {
        let text = concat!(
            r#"{"kind":"image","id":"a","path":"a.png","width":10,"height":10,"source":"s"}"#,
            "\n",
            r#"{"kind":"annotation","image_id":"ghost","class":"c","xmin":0,"ymin":0,"xmax":5,"ymax":5}"#,
            "\n"
        );
        let err = DatasetManifest::from_jsonl(text.as_bytes(), Path::new("m.jsonl")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("\"ghost\""), "{msg}");
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn parse_error_reports_line_and_field() {
        let text = concat!(
            r#"{"kind":"image","id":"a","path":"a.png","width":10,"height":10,"source":"s"}"#,
            "\n",
            r#"{"kind":"image","id":"b","path":"b.png","height":10,"source":"s"}"#,
            "\n"
        );
        let err = DatasetManifest::from_jsonl(text.as_bytes(), Path::new("m.jsonl")).unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("width"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = r#"{"kind":"image","id":"a","path":"a.png","width":10,"height":10,"source":"s","extra":1}"#;
        assert!(DatasetManifest::from_jsonl(text.as_bytes(), Path::new("m.jsonl")).is_err());
    }

    #[test]
    fn overlapping_splits_rejected() {
        let mut m = sample();
        m.splits.insert(TRAIN.into(), ["img1".to_string()].into());
        m.splits.insert(TEST.into(), ["img1".to_string()].into());
        assert!(m.validate().is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        let mut m = sample();
        m.splits.insert(VAL.into(), ["img1".to_string()].into());
        write_manifest(&m, &path).unwrap();
        let back = read_manifest(&path).unwrap();
        assert_eq!(back, m);
    }
}
