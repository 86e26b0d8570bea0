use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::core::{BoundingBox, Detection};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectionLine {
    image_id: String,
    class: String,
    score: f64,
    xmin: f64,
    ymin: f64,
    xmax: f64,
    ymax: f64,
}

/// Parse detections from JSON lines or whitespace-separated text, both in
/// the field order `image_id class score xmin ymin xmax ymax`. The format
/// is chosen per line: lines starting with `{` are JSON. Blank lines and
/// `#` comments are skipped.
pub fn parse_detections(text: &str, path: &Path) -> Result<Vec<Detection>> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let d = if line.starts_with('{') {
            let l: DetectionLine = serde_json::from_str(line).map_err(|e| err(i + 1, e.to_string()))?;
            Detection {
                image_id: l.image_id,
                class: l.class,
                score: l.score,
                bbox: BoundingBox::new(l.xmin, l.ymin, l.xmax, l.ymax),
            }
        } else {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 7 {
                return Err(err(i + 1, format!("expected 7 fields, found {}", f.len())));
            }
            let num = |k: usize| -> Result<f64> {
                f[k].parse().map_err(|_| err(i + 1, format!("field {} is not a number: {:?}", k + 1, f[k])))
            };
            Detection {
                image_id: f[0].to_string(),
                class: f[1].to_string(),
                score: num(2)?,
                bbox: BoundingBox::new(num(3)?, num(4)?, num(5)?, num(6)?),
            }
        };
        d.validate().map_err(|e| err(i + 1, e.to_string()))?;
        out.push(d);
    }
    Ok(out)
}

pub fn read_detections(path: &Path) -> Result<Vec<Detection>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_detections(&text, path)
}

pub fn write_detections(dets: &[Detection], path: &Path) -> Result<()> {
    let mut text = String::new();
    for d in dets {
        let line = DetectionLine {
            image_id: d.image_id.clone(),
            class: d.class.clone(),
            score: d.score,
            xmin: d.bbox.xmin,
            ymin: d.bbox.ymin,
            xmax: d.bbox.xmax,
            ymax: d.bbox.ymax,
        };
        text.push_str(&serde_json::to_string(&line).map_err(|e| Error::Internal(e.to_string()))?);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
