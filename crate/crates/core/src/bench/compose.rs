use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::core::{ClassEntry, ClassRegistry, DatasetManifest, ImageRecord, TRAIN};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComposeMode {
    /// One manifest alternating real and synthetic images.
    Mixed,
    /// Synthetic-only then real-only, for pre-training and fine-tuning.
    Sequential,
}

impl std::str::FromStr for ComposeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mixed" => Ok(ComposeMode::Mixed),
            "sequential" => Ok(ComposeMode::Sequential),
            other => Err(Error::InvalidArgument(format!("unknown compose mode {other:?} (mixed or sequential)"))),
        }
    }
}

/// Registry entries of `m`, or bare entries for its annotated classes when
/// it was read without a registry.
fn classes_of(m: &DatasetManifest) -> Vec<ClassEntry> {
    if m.registry.is_empty() {
        m.annotated_classes().into_iter().map(ClassEntry::new).collect()
    } else {
        m.registry.classes.clone()
    }
}

fn union_registry(a: &DatasetManifest, b: &DatasetManifest) -> Result<ClassRegistry> {
    let mut classes = classes_of(a);
    for c in classes_of(b) {
        if !classes.iter().any(|x| x.name == c.name) {
            classes.push(c);
        }
    }
    ClassRegistry::new(classes)
}

fn build(parts: &[(&DatasetManifest, Vec<&ImageRecord>)], order: Vec<&ImageRecord>, registry: ClassRegistry) -> Result<DatasetManifest> {
    let mut out = DatasetManifest {
        registry,
        ..DatasetManifest::default()
    };
    let ids: BTreeSet<&str> = order.iter().map(|i| i.id.as_str()).collect();
    if ids.len() != order.len() {
        return Err(Error::InvalidArgument(
            "real and synthetic manifests share image ids".into(),
        ));
    }
    let mut anns = BTreeMap::new();
    for (m, imgs) in parts {
        let wanted: BTreeSet<&str> = imgs.iter().map(|i| i.id.as_str()).collect();
        for a in &m.annotations {
            if wanted.contains(a.image_id.as_str()) && ids.contains(a.image_id.as_str()) {
                anns.entry(a.image_id.clone()).or_insert_with(Vec::new).push(a.clone());
            }
        }
    }
    for img in order {
        out.images.push(img.clone());
        out.annotations.extend(anns.remove(&img.id).unwrap_or_default());
    }
    out.splits.insert(TRAIN.to_string(), out.images.iter().map(|i| i.id.clone()).collect());
    out.validate()?;
    Ok(out)
}

/// Training manifests from the real train split plus every synthetic
/// image. Returns one manifest for `Mixed` and `[synthetic, real]` for
/// `Sequential`. Each output carries a `train` split over all its images.
pub fn compose_training_set(real: &DatasetManifest, synth: &DatasetManifest, mode: ComposeMode) -> Result<Vec<DatasetManifest>> {
    let train = real
        .split(TRAIN)
        .ok_or_else(|| Error::InvalidArgument("real manifest has no train split".into()))?;
    let real_imgs: Vec<&ImageRecord> = real.images.iter().filter(|i| train.contains(&i.id)).collect();
    let synth_imgs: Vec<&ImageRecord> = synth.images.iter().collect();
    match mode {
        ComposeMode::Mixed => {
            let mut order = Vec::with_capacity(real_imgs.len() + synth_imgs.len());
            for i in 0..real_imgs.len().max(synth_imgs.len()) {
                order.extend(real_imgs.get(i));
                order.extend(synth_imgs.get(i));
            }
            let registry = union_registry(real, synth)?;
            Ok(vec![build(
                &[(real, real_imgs.clone()), (synth, synth_imgs.clone())],
                order,
                registry,
            )?])
        }
        ComposeMode::Sequential => Ok(vec![
            build(&[(synth, synth_imgs.clone())], synth_imgs, synth.registry.clone())?,
            build(&[(real, real_imgs.clone())], real_imgs, real.registry.clone())?,
        ]),
    }
}
