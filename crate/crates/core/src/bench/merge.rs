use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use glob::{MatchOptions, Pattern};
use log::warn;
use serde::{Deserialize, Serialize};

use super::ingest::Fragment;
use crate::core::{validate_annotation, Annotation, ClassEntry, ClassRegistry, DatasetManifest, ImageRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConflictPolicy {
    /// A source name matching rules for two canonical names is an error.
    #[default]
    Abort,
    /// The earliest matching rule wins.
    FirstMatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MergeRule {
    pub canonical: String,
    /// Shell-style patterns (`*`, `?`, `[...]`), matched case-insensitively
    /// against source class names.
    pub patterns: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MergeRules {
    #[serde(default)]
    pub rules: Vec<MergeRule>,
    #[serde(default)]
    pub conflict: ConflictPolicy,
}

const MATCH: MatchOptions = MatchOptions {
    case_sensitive: false,
    require_literal_separator: false,
    require_literal_leading_dot: false,
};

impl MergeRules {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let rules: MergeRules = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        rules.compile()?;
        Ok(rules)
    }

    fn compile(&self) -> Result<Vec<(usize, Pattern)>> {
        let mut out = Vec::new();
        for (i, r) in self.rules.iter().enumerate() {
            if r.canonical.trim().is_empty() {
                return Err(Error::Config(format!("merge rule {i} has an empty canonical name")));
            }
            for p in &r.patterns {
                let pat = Pattern::new(p).map_err(|e| Error::Config(format!("merge rule {:?}: pattern {p:?}: {e}", r.canonical)))?;
                out.push((i, pat));
            }
        }
        Ok(out)
    }

    /// Canonical name for a source class name; unmatched names pass through.
    pub fn apply(&self, name: &str) -> Result<String> {
        Ok(self.resolver()?.resolve(name)?.to_string())
    }

    fn resolver(&self) -> Result<Resolver<'_>> {
        Ok(Resolver {
            rules: self,
            compiled: self.compile()?,
            cache: BTreeMap::new(),
        })
    }
}

struct Resolver<'a> {
    rules: &'a MergeRules,
    compiled: Vec<(usize, Pattern)>,
    cache: BTreeMap<String, String>,
}

impl Resolver<'_> {
    fn resolve(&mut self, name: &str) -> Result<&str> {
        if !self.cache.contains_key(name) {
            let mut hit: Option<usize> = None;
            for (rule, pat) in &self.compiled {
                if !pat.matches_with(name, MATCH) {
                    continue;
                }
                match hit {
                    None => hit = Some(*rule),
                    Some(first) if self.rules.rules[first].canonical != self.rules.rules[*rule].canonical => {
                        if self.rules.conflict == ConflictPolicy::Abort {
                            return Err(Error::MergeConflict {
                                name: name.to_string(),
                                first: self.rules.rules[first].canonical.clone(),
                                second: self.rules.rules[*rule].canonical.clone(),
                            });
                        }
                    }
                    Some(_) => {}
                }
            }
            let canonical = hit.map_or_else(|| name.to_string(), |r| self.rules.rules[r].canonical.clone());
            self.cache.insert(name.to_string(), canonical);
        }
        Ok(&self.cache[name])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedAnnotation {
    pub source: String,
    pub image_id: String,
    pub class: String,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MergeReport {
    pub images: usize,
    pub annotations_in: usize,
    pub annotations_out: usize,
    /// Annotations removed by validation.
    pub dropped: Vec<DroppedAnnotation>,
    /// Violation code → number of dropped annotations carrying it.
    pub violation_counts: BTreeMap<String, usize>,
    /// Class names that neither a merge rule nor the registry could place,
    /// with annotation counts. Only filled when a registry is supplied.
    pub alias_misses: BTreeMap<String, usize>,
    /// Source class name → canonical name, for every renamed class.
    pub renamed: BTreeMap<String, String>,
    /// Image ids that collided across sources and were source-prefixed.
    pub prefixed_ids: Vec<String>,
}

/// Merge ingested fragments into one manifest.
///
/// Class names are rewritten by `rules`, then resolved through `registry`
/// when one is given (canonical names and aliases both accepted). Invalid
/// annotations are dropped and reported. Image ids that appear in more than
/// one source become `source/id` in every such source.
pub fn merge_and_clean(
    fragments: &[Fragment],
    rules: &MergeRules,
    registry: Option<&ClassRegistry>,
) -> Result<(DatasetManifest, MergeReport)> {
    let mut resolver = rules.resolver()?;
    let mut report = MergeReport::default();

    let mut sources: BTreeSet<&str> = BTreeSet::new();
    for f in fragments {
        if !sources.insert(f.source.as_str()) {
            return Err(Error::InvalidArgument(format!("source tag {:?} used twice", f.source)));
        }
    }
    let mut owners: BTreeMap<&str, usize> = BTreeMap::new();
    for f in fragments {
        for img in &f.images {
            *owners.entry(img.id.as_str()).or_default() += 1;
        }
    }
    let clashing: BTreeSet<String> = owners.into_iter().filter(|(_, n)| *n > 1).map(|(id, _)| id.to_string()).collect();
    report.prefixed_ids = clashing.iter().cloned().collect();
    let rename = |source: &str, id: &str| -> String {
        if clashing.contains(id) {
            format!("{source}/{id}")
        } else {
            id.to_string()
        }
    };

    let mut images: Vec<ImageRecord> = Vec::new();
    let mut annotations: Vec<Annotation> = Vec::new();
    for f in fragments {
        let index: BTreeMap<&str, &ImageRecord> = f.images.iter().map(|i| (i.id.as_str(), i)).collect();
        for img in &f.images {
            images.push(ImageRecord {
                id: rename(&f.source, &img.id),
                source: f.source.clone(),
                ..img.clone()
            });
        }
        for ann in &f.annotations {
            report.annotations_in += 1;
            let img = index.get(ann.image_id.as_str()).copied();
            let violations = validate_annotation(ann, img);
            if !violations.is_empty() {
                for v in &violations {
                    *report.violation_counts.entry(v.code().to_string()).or_default() += 1;
                }
                report.dropped.push(DroppedAnnotation {
                    source: f.source.clone(),
                    image_id: ann.image_id.clone(),
                    class: ann.class.clone(),
                    violations: violations.iter().map(|v| v.code().to_string()).collect(),
                });
                continue;
            }
            let merged = resolver.resolve(&ann.class)?.to_string();
            let canonical = match registry {
                Some(reg) => match reg.resolve(&merged) {
                    Some(c) => c.to_string(),
                    None => {
                        *report.alias_misses.entry(ann.class.clone()).or_default() += 1;
                        continue;
                    }
                },
                None => merged,
            };
            if canonical != ann.class {
                report.renamed.insert(ann.class.clone(), canonical.clone());
            }
            annotations.push(Annotation {
                image_id: rename(&f.source, &ann.image_id),
                class: canonical,
                bbox: ann.bbox,
            });
        }
    }
    if !report.alias_misses.is_empty() {
        warn!(
            "{} annotations use class names missing from the registry: {:?}",
            report.alias_misses.values().sum::<usize>(),
            report.alias_misses.keys().collect::<Vec<_>>()
        );
    }
    if !report.dropped.is_empty() {
        warn!("dropped {} invalid annotations", report.dropped.len());
    }

    images.sort_by(|a, b| a.id.cmp(&b.id));
    annotations.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    let classes: BTreeSet<String> = annotations.iter().map(|a| a.class.clone()).collect();
    let registry = match registry {
        Some(reg) => reg.clone(),
        None => ClassRegistry::new(classes.into_iter().map(ClassEntry::new).collect())?,
    };
    report.images = images.len();
    report.annotations_out = annotations.len();
    let manifest = DatasetManifest {
        images,
        annotations,
        registry,
        splits: BTreeMap::new(),
    };
    manifest.validate()?;
    Ok((manifest, report))
}

/// Read a newline-delimited class list. Blank lines and `#` comments are
/// ignored.
pub fn read_class_list(path: &Path) -> Result<BTreeSet<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RemovalReport {
    /// Removed class → its image count at removal time.
    pub classes: BTreeMap<String, usize>,
    pub annotations: usize,
    /// Images left without any annotation and therefore removed.
    pub images: usize,
}

impl RemovalReport {
    pub fn is_empty(&self) -> bool {
        self.classes.is_empty() && self.annotations == 0 && self.images == 0
    }
}

fn remove_classes(manifest: &mut DatasetManifest, drop: &BTreeMap<String, usize>) -> RemovalReport {
    let before = manifest.annotations.len();
    manifest.annotations.retain(|a| !drop.contains_key(&a.class));
    manifest.registry.classes.retain(|c| !drop.contains_key(&c.name));
    let annotated: BTreeSet<String> = manifest.annotations.iter().map(|a| a.image_id.clone()).collect();
    let images_before = manifest.images.len();
    manifest.retain_images(|img| annotated.contains(&img.id));
    RemovalReport {
        classes: drop.clone(),
        annotations: before - manifest.annotations.len(),
        images: images_before - manifest.images.len(),
    }
}

/// Remove the listed classes (manual-verification rejects) with their
/// annotations. Images left unannotated go too.
pub fn exclude_classes(mut manifest: DatasetManifest, excluded: &BTreeSet<String>) -> (DatasetManifest, RemovalReport) {
    let counts = manifest.class_image_counts();
    let drop: BTreeMap<String, usize> = excluded
        .iter()
        .filter(|c| counts.contains_key(*c) || manifest.registry.contains(c))
        .map(|c| (c.clone(), counts.get(c).copied().unwrap_or(0)))
        .collect();
    let unknown: Vec<&String> = excluded.iter().filter(|c| !drop.contains_key(*c)).collect();
    if !unknown.is_empty() {
        warn!("exclusion list names unknown classes: {unknown:?}");
    }
    let report = remove_classes(&mut manifest, &drop);
    (manifest, report)
}

/// Keep a class iff it annotates at least `min_images` distinct images.
/// Registry classes without any annotation count as zero images. Images
/// left without annotations are removed.
pub fn filter_small_classes(mut manifest: DatasetManifest, min_images: usize) -> (DatasetManifest, RemovalReport) {
    let counts = manifest.class_image_counts();
    let mut drop: BTreeMap<String, usize> = counts.iter().filter(|(_, &n)| n < min_images).map(|(c, &n)| (c.clone(), n)).collect();
    if min_images > 0 {
        for c in &manifest.registry.classes {
            if !counts.contains_key(&c.name) {
                drop.insert(c.name.clone(), 0);
            }
        }
    }
    let report = remove_classes(&mut manifest, &drop);
    (manifest, report)
}
