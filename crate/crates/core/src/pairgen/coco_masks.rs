use std::collections::BTreeMap;
use std::path::Path;

use log::warn;
use serde::Deserialize;
use serde_json::Value;

use super::pair::MaskedImage;
use super::region::MaskSpec;
use crate::core::resolve_path;
use crate::error::{Error, Result};

#[derive(Deserialize)]
struct CocoImage {
    id: Value,
    file_name: String,
}

#[derive(Deserialize)]
struct CocoAnnotation {
    image_id: Value,
    #[serde(default)]
    segmentation: Option<Value>,
}

#[derive(Deserialize)]
struct CocoFile {
    images: Vec<CocoImage>,
    #[serde(default)]
    annotations: Vec<CocoAnnotation>,
}

fn id_string(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Read object masks from a COCO-style instances file. Polygon and
/// uncompressed RLE segmentations are accepted; compressed RLE strings are
/// skipped with a warning. Image paths resolve relative to the JSON file.
pub fn read_coco_masks(path: &Path) -> Result<Vec<MaskedImage>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: CocoFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let mut masks: BTreeMap<String, Vec<MaskSpec>> = BTreeMap::new();
    let mut skipped = 0usize;
    for ann in file.annotations {
        let Some(seg) = ann.segmentation else { continue };
        match serde_json::from_value::<MaskSpec>(seg) {
            Ok(spec @ (MaskSpec::Rle { .. } | MaskSpec::PolygonList(_) | MaskSpec::Polygons { .. })) => {
                masks.entry(id_string(&ann.image_id)).or_default().push(spec)
            }
            _ => skipped += 1,
        }
    }
    if skipped > 0 {
        warn!("{}: skipped {skipped} unsupported segmentations", path.display());
    }
    Ok(file
        .images
        .into_iter()
        .filter_map(|img| {
            let id = id_string(&img.id);
            masks.remove(&id).map(|m| MaskedImage {
                path: resolve_path(path, Path::new(&img.file_name)),
                id,
                masks: m,
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_polygons_and_rle() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("instances.json");
        std::fs::write(
            &path,
            r#"{"images":[{"id":1,"file_name":"a.jpg"},{"id":2,"file_name":"b.jpg"},{"id":3,"file_name":"c.jpg"}],
               "annotations":[
                 {"image_id":1,"segmentation":[[0,0,4,0,4,4]]},
                 {"image_id":1,"segmentation":{"size":[2,2],"counts":[0,4]}},
                 {"image_id":2,"segmentation":{"size":[2,2],"counts":"abc"}}
               ]}"#,
        )
        .unwrap();
        let out = read_coco_masks(&path).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].id, "1");
        assert_eq!(out[0].masks.len(), 2);
        assert_eq!(out[0].path, dir.path().join("a.jpg"));
    }
}
