use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::core::{iou, Annotation, Detection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchFlag {
    Tp,
    Fp,
    /// Matched a ground truth outside the evaluated subgroup; neither TP
    /// nor FP.
    Ignore,
}

/// Ranking order: confidence descending, then image id, then box.
pub fn detection_order(a: &Detection, b: &Detection) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.image_id.cmp(&b.image_id))
        .then_with(|| a.bbox.lex_cmp(&b.bbox))
}

/// Indices of `dets` in ranking order.
pub fn ranked(dets: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&i, &j| detection_order(&dets[i], &dets[j]));
    order
}

/// Greedy matching of one class. Returns `(detection index, flag)` in
/// ranking order.
///
/// Each detection takes the unclaimed same-image ground truth with the
/// highest IoU; it is a TP when that IoU reaches `iou_threshold`. Ground
/// truths with `ignore[i]` set are only consulted when no regular ground
/// truth qualifies; a detection reaching one is flagged `Ignore`, and
/// ignored ground truths are never consumed.
pub fn match_with_ignore(dets: &[Detection], gts: &[Annotation], ignore: &[bool], iou_threshold: f64) -> Vec<(usize, MatchFlag)> {
    assert_eq!(gts.len(), ignore.len(), "one ignore flag per ground truth");
    let mut per_image: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, g) in gts.iter().enumerate() {
        per_image.entry(g.image_id.as_str()).or_default().push(i);
    }
    // Canonical ground-truth order so ties resolve independently of input
    // order.
    for list in per_image.values_mut() {
        list.sort_by(|&a, &b| gts[a].bbox.lex_cmp(&gts[b].bbox).then(ignore[a].cmp(&ignore[b])));
    }
    let mut claimed = vec![false; gts.len()];
    ranked(dets)
        .into_iter()
        .map(|d| {
            let det = &dets[d];
            let candidates = per_image.get(det.image_id.as_str()).map(Vec::as_slice).unwrap_or(&[]);
            let mut best: Option<(usize, f64)> = None;
            for &g in candidates {
                if ignore[g] || claimed[g] {
                    continue;
                }
                let v = iou(&det.bbox, &gts[g].bbox);
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((g, v));
                }
            }
            if let Some((g, v)) = best {
                if v >= iou_threshold {
                    claimed[g] = true;
                    return (d, MatchFlag::Tp);
                }
            }
            let hits_ignored = candidates
                .iter()
                .any(|&g| ignore[g] && iou(&det.bbox, &gts[g].bbox) >= iou_threshold);
            (d, if hits_ignored { MatchFlag::Ignore } else { MatchFlag::Fp })
        })
        .collect()
}

/// Greedy matching with no ignored ground truth.
pub fn match_detections(dets: &[Detection], gts: &[Annotation], iou_threshold: f64) -> Vec<(usize, MatchFlag)> {
    match_with_ignore(dets, gts, &vec![false; gts.len()], iou_threshold)
}
