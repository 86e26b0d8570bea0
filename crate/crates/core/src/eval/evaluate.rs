use std::collections::{BTreeMap, BTreeSet};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ap::{average_precision, Interpolation};
use super::matching::{match_with_ignore, MatchFlag};
use crate::core::{Annotation, DatasetManifest, Detection, TEST};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub iou_threshold: f64,
    pub interpolation: Interpolation,
    /// Box-to-image area ratio at or above which an instance is big.
    pub scale_threshold: f64,
    /// Supervised classes; the registry flags are used when unset.
    pub supervised: Option<BTreeSet<String>>,
    /// Evaluate on this split; the whole manifest when it is absent.
    pub split: String,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            iou_threshold: 0.5,
            interpolation: Interpolation::AllPoints,
            scale_threshold: 0.02,
            supervised: None,
            split: TEST.to_string(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.iou_threshold > 0.0 && self.iou_threshold < 1.0) {
            return Err(Error::Config(format!("IoU threshold {} is outside (0, 1)", self.iou_threshold)));
        }
        if !(self.scale_threshold > 0.0 && self.scale_threshold < 1.0) {
            return Err(Error::Config(format!(
                "scale threshold {} is outside (0, 1)",
                self.scale_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassResult {
    pub class: String,
    pub supervised: bool,
    pub ap: Option<f64>,
    pub ap_big: Option<f64>,
    pub ap_small: Option<f64>,
    pub n_gt: usize,
    pub n_gt_big: usize,
    pub n_gt_small: usize,
    pub n_det: usize,
    pub tp: usize,
    pub fp: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub classes: Vec<ClassResult>,
    pub map_all: Option<f64>,
    pub map_supervised: Option<f64>,
    pub map_unsupervised: Option<f64>,
    pub map_big: Option<f64>,
    pub map_small: Option<f64>,
    /// Detections on images outside the evaluated split.
    pub dropped_detections: usize,
    /// Detections naming classes the manifest does not know, by class.
    pub unknown_classes: BTreeMap<String, usize>,
    pub config: EvalConfig,
}

pub const REPORT_COLUMNS: [&str; 5] = ["All Class", "Uns Class", "Sup Class", "Big Logo", "Small Logo"];

fn mean(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.into_iter().flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn subgroup_ap(dets: &[Detection], gts: &[Annotation], ignore: &[bool], cfg: &EvalConfig) -> (Option<f64>, Vec<MatchFlag>) {
    let n_gt = ignore.iter().filter(|&&i| !i).count();
    let flags: Vec<MatchFlag> = match_with_ignore(dets, gts, ignore, cfg.iou_threshold)
        .into_iter()
        .map(|(_, f)| f)
        .collect();
    let tp: Vec<bool> = flags.iter().filter(|&&f| f != MatchFlag::Ignore).map(|&f| f == MatchFlag::Tp).collect();
    (average_precision(&tp, n_gt, cfg.interpolation), flags)
}

/// Evaluate detections against the configured split of `manifest`.
///
/// mAP columns are unweighted means of per-class AP over classes with at
/// least one ground truth in the relevant group. For the big and small
/// columns, ground truths of the other size band are ignored.
pub fn evaluate(dets: &[Detection], manifest: &DatasetManifest, cfg: &EvalConfig) -> Result<EvalReport> {
    cfg.validate()?;
    for d in dets {
        d.validate()?;
    }
    let index = manifest.image_index();
    let in_split: BTreeSet<&str> = match manifest.split(&cfg.split) {
        Some(s) => s.iter().map(String::as_str).collect(),
        None => {
            warn!("manifest has no {:?} split; evaluating every image", cfg.split);
            index.keys().copied().collect()
        }
    };

    let mut classes: BTreeSet<String> = manifest.registry.classes.iter().map(|c| c.name.clone()).collect();
    if classes.is_empty() {
        classes = manifest.annotated_classes();
    }
    let supervised: BTreeSet<String> = match &cfg.supervised {
        Some(s) => s.clone(),
        None => manifest.registry.supervised(),
    };

    let mut gts: BTreeMap<&str, Vec<&Annotation>> = classes.iter().map(|c| (c.as_str(), Vec::new())).collect();
    for a in &manifest.annotations {
        if in_split.contains(a.image_id.as_str()) {
            if let Some(v) = gts.get_mut(a.class.as_str()) {
                v.push(a);
            }
        }
    }
    let mut per_class_dets: BTreeMap<&str, Vec<Detection>> = classes.iter().map(|c| (c.as_str(), Vec::new())).collect();
    let mut dropped = 0usize;
    let mut unknown: BTreeMap<String, usize> = BTreeMap::new();
    for d in dets {
        if !in_split.contains(d.image_id.as_str()) {
            dropped += 1;
            continue;
        }
        match per_class_dets.get_mut(d.class.as_str()) {
            Some(v) => v.push(d.clone()),
            None => *unknown.entry(d.class.clone()).or_default() += 1,
        }
    }
    if dropped > 0 {
        warn!("dropped {dropped} detections on images outside the {:?} split", cfg.split);
    }
    if !unknown.is_empty() {
        warn!("excluded detections of unknown classes: {:?}", unknown);
    }

    let results: Vec<ClassResult> = classes
        .par_iter()
        .map(|class| {
            let class_gts: Vec<Annotation> = gts[class.as_str()].iter().map(|a| (*a).clone()).collect();
            let class_dets = &per_class_dets[class.as_str()];
            let big: Vec<bool> = class_gts
                .iter()
                .map(|a| {
                    let img = index[a.image_id.as_str()];
                    a.bbox.area() / img.area() >= cfg.scale_threshold
                })
                .collect();
            let none = vec![false; class_gts.len()];
            let (ap, flags) = subgroup_ap(class_dets, &class_gts, &none, cfg);
            let small_only: Vec<bool> = big.clone();
            let big_only: Vec<bool> = big.iter().map(|b| !b).collect();
            let (ap_big, _) = subgroup_ap(class_dets, &class_gts, &big_only, cfg);
            let (ap_small, _) = subgroup_ap(class_dets, &class_gts, &small_only, cfg);
            let tp = flags.iter().filter(|&&f| f == MatchFlag::Tp).count();
            ClassResult {
                class: class.clone(),
                supervised: supervised.contains(class),
                ap,
                ap_big,
                ap_small,
                n_gt: class_gts.len(),
                n_gt_big: big.iter().filter(|&&b| b).count(),
                n_gt_small: big.iter().filter(|&&b| !b).count(),
                n_det: class_dets.len(),
                tp,
                fp: class_dets.len() - tp,
            }
        })
        .collect();

    Ok(EvalReport {
        map_all: mean(results.iter().map(|r| r.ap)),
        map_supervised: mean(results.iter().filter(|r| r.supervised).map(|r| r.ap)),
        map_unsupervised: mean(results.iter().filter(|r| !r.supervised).map(|r| r.ap)),
        map_big: mean(results.iter().map(|r| r.ap_big)),
        map_small: mean(results.iter().map(|r| r.ap_small)),
        classes: results,
        dropped_detections: dropped,
        unknown_classes: unknown,
        config: cfg.clone(),
    })
}

impl EvalReport {
    /// The five headline values in column order.
    pub fn columns(&self) -> [Option<f64>; 5] {
        [
            self.map_all,
            self.map_unsupervised,
            self.map_supervised,
            self.map_big,
            self.map_small,
        ]
    }

    /// mAP table in percent, two decimals; `-` marks an empty group.
    pub fn render_table(&self) -> String {
        let cells: Vec<String> = self
            .columns()
            .iter()
            .map(|v| v.map_or_else(|| "-".to_string(), |x| format!("{:.2}", 100.0 * x)))
            .collect();
        let widths: Vec<usize> = REPORT_COLUMNS.iter().zip(&cells).map(|(h, c)| h.len().max(c.len())).collect();
        let row = |items: Vec<&str>| -> String {
            items
                .iter()
                .zip(&widths)
                .map(|(c, &w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join(" | ")
        };
        let mut out = row(REPORT_COLUMNS.to_vec());
        out.push('\n');
        out.push_str(&row(cells.iter().map(String::as_str).collect()));
        out.push('\n');
        out
    }

    /// Per-class AP listing, one class per line.
    pub fn render_classes(&self) -> String {
        let width = self.classes.iter().map(|c| c.class.len()).max().unwrap_or(5).max(5);
        let mut out = format!("{:<width$}  {:>3}  {:>7}  {:>6}  {:>6}  {:>6}\n", "class", "sup", "AP", "GT", "TP", "FP");
        for c in &self.classes {
            let ap = c.ap.map_or_else(|| "-".to_string(), |a| format!("{:.2}", 100.0 * a));
            out.push_str(&format!(
                "{:<width$}  {:>3}  {:>7}  {:>6}  {:>6}  {:>6}\n",
                c.class,
                if c.supervised { "yes" } else { "no" },
                ap,
                c.n_gt,
                c.tp,
                c.fp
            ));
        }
        out
    }
}
