use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    /// Area under the monotone precision envelope.
    #[default]
    AllPoints,
    /// Mean of the envelope sampled at recall 0, 0.1, ..., 1.
    ElevenPoint,
}

/// Average precision from TP/FP flags in ranking order. `None` when there
/// is no ground truth.
pub fn average_precision(tp: &[bool], n_gt: usize, interpolation: Interpolation) -> Option<f64> {
    if n_gt == 0 {
        return None;
    }
    let mut recall = Vec::with_capacity(tp.len());
    let mut precision = Vec::with_capacity(tp.len());
    let (mut ctp, mut cfp) = (0usize, 0usize);
    for &t in tp {
        if t {
            ctp += 1;
        } else {
            cfp += 1;
        }
        recall.push(ctp as f64 / n_gt as f64);
        precision.push(ctp as f64 / (ctp + cfp) as f64);
    }
    // Envelope: best precision at this recall or any later point.
    for i in (0..precision.len().saturating_sub(1)).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    Some(match interpolation {
        Interpolation::AllPoints => {
            let mut ap = 0.0;
            let mut prev = 0.0;
            for (r, p) in recall.iter().zip(&precision) {
                if *r > prev {
                    ap += (r - prev) * p;
                    prev = *r;
                }
            }
            ap
        }
        Interpolation::ElevenPoint => {
            let mut sum = 0.0;
            for k in 0..=10 {
                let t = k as f64 / 10.0;
                let p = recall
                    .iter()
                    .position(|&r| r >= t - 1e-12)
                    .map_or(0.0, |i| precision[i]);
                sum += p;
            }
            sum / 11.0
        }
    })
}
