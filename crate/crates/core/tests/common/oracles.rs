//! Reference implementations written from the definitions, sharing no code
//! with the library beyond its data types.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use openlogo::core::{Annotation, BoundingBox, DatasetManifest, Detection};

/// IoU of integer-cornered boxes by counting unit pixels.
pub fn raster_iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inside = |bx: &BoundingBox, x: f64, y: f64| x >= bx.xmin && x + 1.0 <= bx.xmax && y >= bx.ymin && y + 1.0 <= bx.ymax;
    let lo_x = a.xmin.min(b.xmin) as i64;
    let hi_x = a.xmax.max(b.xmax) as i64;
    let lo_y = a.ymin.min(b.ymin) as i64;
    let hi_y = a.ymax.max(b.ymax) as i64;
    let (mut inter, mut union) = (0u64, 0u64);
    for y in lo_y..hi_y {
        for x in lo_x..hi_x {
            let (ia, ib) = (inside(a, x as f64, y as f64), inside(b, x as f64, y as f64));
            inter += u64::from(ia && ib);
            union += u64::from(ia || ib);
        }
    }
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

fn tuple(b: &BoundingBox) -> (f64, f64, f64, f64) {
    (b.xmin, b.ymin, b.xmax, b.ymax)
}

fn cmp_tuple(a: (f64, f64, f64, f64), b: (f64, f64, f64, f64)) -> Ordering {
    a.partial_cmp(&b).unwrap()
}

/// Detection indices sorted by score descending, then image id, then box.
pub fn rank(dets: &[&Detection]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dets.len()).collect();
    idx.sort_by(|&i, &j| {
        let (a, b) = (dets[i], dets[j]);
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then_with(|| a.image_id.cmp(&b.image_id))
            .then_with(|| cmp_tuple(tuple(&a.bbox), tuple(&b.bbox)))
    });
    idx
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Tp,
    Fp,
    Removed,
}

/// Per-detection preference key; larger is better. Unmatched sorts below
/// every match.
type Key = (f64, i64);
const UNMATCHED: Key = (-1.0, 0);

fn cmp_keys(a: &[Key], b: &[Key]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.partial_cmp(y).unwrap();
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

/// Enumerate every one-to-one assignment of `dets` (in ranking order) to
/// `gts` that respects the threshold, and return the one whose key
/// sequence is lexicographically greatest: each detection in turn gets the
/// highest IoU still possible, ties going to the ground truth that sorts
/// first by box.
fn best_assignment(dets: &[&BoundingBox], gts: &[&BoundingBox], thr: f64) -> Vec<Option<usize>> {
    let mut canon: Vec<usize> = (0..gts.len()).collect();
    canon.sort_by(|&a, &b| cmp_tuple(tuple(gts[a]), tuple(gts[b])));
    let mut rank_of = vec![0i64; gts.len()];
    for (r, &g) in canon.iter().enumerate() {
        rank_of[g] = r as i64;
    }

    struct Search<'a> {
        dets: &'a [&'a BoundingBox],
        gts: &'a [&'a BoundingBox],
        rank_of: Vec<i64>,
        thr: f64,
        best: Option<(Vec<Key>, Vec<Option<usize>>)>,
    }
    fn rec(s: &mut Search, k: usize, used: &mut Vec<bool>, keys: &mut Vec<Key>, pick: &mut Vec<Option<usize>>) {
        if k == s.dets.len() {
            let better = match &s.best {
                None => true,
                Some((bk, _)) => cmp_keys(keys, bk) == Ordering::Greater,
            };
            if better {
                s.best = Some((keys.clone(), pick.clone()));
            }
            return;
        }
        keys.push(UNMATCHED);
        pick.push(None);
        rec(s, k + 1, used, keys, pick);
        keys.pop();
        pick.pop();
        for g in 0..s.gts.len() {
            if used[g] {
                continue;
            }
            let v = raster_free_iou(s.dets[k], s.gts[g]);
            if v < s.thr {
                continue;
            }
            used[g] = true;
            keys.push((v, -s.rank_of[g]));
            pick.push(Some(g));
            rec(s, k + 1, used, keys, pick);
            keys.pop();
            pick.pop();
            used[g] = false;
        }
    }
    let mut s = Search {
        dets,
        gts,
        rank_of,
        thr,
        best: None,
    };
    rec(&mut s, 0, &mut vec![false; gts.len()], &mut Vec::new(), &mut Vec::new());
    s.best.unwrap().1
}

/// Closed-form IoU written from the definition, for real-valued boxes.
pub fn raster_free_iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let w = (a.xmax.min(b.xmax) - a.xmin.max(b.xmin)).max(0.0);
    let h = (a.ymax.min(b.ymax) - a.ymin.max(b.ymin)).max(0.0);
    let inter = w * h;
    let area = |x: &BoundingBox| (x.xmax - x.xmin) * (x.ymax - x.ymin);
    let union = area(a) + area(b) - inter;
    if inter <= 0.0 || union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Outcomes in ranking order for one class. Ground truths with
/// `regular[i] == false` belong to another subgroup: they cannot be
/// claimed, and an unmatched detection overlapping one at the threshold
/// is removed from the ranking.
pub fn class_outcomes(dets: &[&Detection], gts: &[&Annotation], regular: &[bool], thr: f64) -> Vec<Outcome> {
    let order = rank(dets);
    let images: BTreeSet<&str> = dets.iter().map(|d| d.image_id.as_str()).collect();
    let mut outcome: BTreeMap<usize, Outcome> = BTreeMap::new();
    for img in images {
        let det_idx: Vec<usize> = order.iter().copied().filter(|&i| dets[i].image_id == img).collect();
        let reg: Vec<usize> = (0..gts.len()).filter(|&g| gts[g].image_id == img && regular[g]).collect();
        let other: Vec<usize> = (0..gts.len()).filter(|&g| gts[g].image_id == img && !regular[g]).collect();
        let det_boxes: Vec<&BoundingBox> = det_idx.iter().map(|&i| &dets[i].bbox).collect();
        let gt_boxes: Vec<&BoundingBox> = reg.iter().map(|&g| &gts[g].bbox).collect();
        let pick = best_assignment(&det_boxes, &gt_boxes, thr);
        for (k, &d) in det_idx.iter().enumerate() {
            let o = if pick[k].is_some() {
                Outcome::Tp
            } else if other.iter().any(|&g| raster_free_iou(&dets[d].bbox, &gts[g].bbox) >= thr) {
                Outcome::Removed
            } else {
                Outcome::Fp
            };
            outcome.insert(d, o);
        }
    }
    order.iter().map(|i| outcome[i]).collect()
}

/// AP as the area under the precision envelope, written per ground truth:
/// `(1/n) * sum over i of max{precision(j) : TP count at j >= i}`.
pub fn pr_area_ap(tp: &[bool], n_gt: usize) -> Option<f64> {
    if n_gt == 0 {
        return None;
    }
    let mut cum = Vec::new();
    let mut prec = Vec::new();
    let mut c = 0usize;
    for (j, &t) in tp.iter().enumerate() {
        c += usize::from(t);
        cum.push(c);
        prec.push(c as f64 / (j + 1) as f64);
    }
    let mut sum = 0.0;
    for i in 1..=n_gt {
        let best = (0..tp.len()).filter(|&j| cum[j] >= i).map(|j| prec[j]).fold(0.0, f64::max);
        sum += best;
    }
    Some(sum / n_gt as f64)
}

/// Eleven-point AP: mean over t in {0, 0.1, ..., 1} of the best precision
/// at recall >= t.
pub fn eleven_point_ap(tp: &[bool], n_gt: usize) -> Option<f64> {
    if n_gt == 0 {
        return None;
    }
    let mut c = 0usize;
    let pts: Vec<(f64, f64)> = tp
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            c += usize::from(t);
            (c as f64 / n_gt as f64, c as f64 / (j + 1) as f64)
        })
        .collect();
    let sum: f64 = (0..=10)
        .map(|k| {
            let t = k as f64 / 10.0;
            pts.iter().filter(|(r, _)| *r >= t - 1e-12).map(|(_, p)| *p).fold(0.0, f64::max)
        })
        .sum();
    Some(sum / 11.0)
}

fn mean(v: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let vals: Vec<f64> = v.flatten().collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleClass {
    pub class: String,
    pub ap: Option<f64>,
    pub ap_big: Option<f64>,
    pub ap_small: Option<f64>,
}

/// Reference report: per-class AP and the five columns (all, unsupervised,
/// supervised, big, small). Every image is evaluated; `big_fraction` is
/// the box-to-image area ratio at which a logo counts as big.
pub fn oracle_report(
    m: &DatasetManifest,
    dets: &[Detection],
    thr: f64,
    big_fraction: f64,
    supervised: &BTreeSet<String>,
    eleven: bool,
) -> (Vec<OracleClass>, [Option<f64>; 5]) {
    let classes: BTreeSet<String> = m.registry.classes.iter().map(|c| c.name.clone()).collect();
    let ap_fn = |tp: &[bool], n| if eleven { eleven_point_ap(tp, n) } else { pr_area_ap(tp, n) };
    let mut out = Vec::new();
    for c in &classes {
        let cd: Vec<&Detection> = dets.iter().filter(|d| &d.class == c).collect();
        let cg: Vec<&Annotation> = m.annotations.iter().filter(|a| &a.class == c).collect();
        let big: Vec<bool> = cg
            .iter()
            .map(|a| {
                let img = m.images.iter().find(|i| i.id == a.image_id).unwrap();
                (a.bbox.xmax - a.bbox.xmin) * (a.bbox.ymax - a.bbox.ymin) / (f64::from(img.width) * f64::from(img.height))
                    >= big_fraction
            })
            .collect();
        let sub = |regular: Vec<bool>| {
            let n = regular.iter().filter(|&&r| r).count();
            let tp: Vec<bool> = class_outcomes(&cd, &cg, &regular, thr)
                .into_iter()
                .filter(|o| *o != Outcome::Removed)
                .map(|o| o == Outcome::Tp)
                .collect();
            ap_fn(&tp, n)
        };
        out.push(OracleClass {
            class: c.clone(),
            ap: sub(vec![true; cg.len()]),
            ap_big: sub(big.clone()),
            ap_small: sub(big.iter().map(|b| !b).collect()),
        });
    }
    let cols = [
        mean(out.iter().map(|r| r.ap)),
        mean(out.iter().filter(|r| !supervised.contains(&r.class)).map(|r| r.ap)),
        mean(out.iter().filter(|r| supervised.contains(&r.class)).map(|r| r.ap)),
        mean(out.iter().map(|r| r.ap_big)),
        mean(out.iter().map(|r| r.ap_small)),
    ];
    (out, cols)
}

pub fn close(a: Option<f64>, b: Option<f64>, tol: f64) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => (x - y).abs() <= tol,
        _ => false,
    }
}
