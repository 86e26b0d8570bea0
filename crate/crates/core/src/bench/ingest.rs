use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::core::{resolve_path, Annotation, BoundingBox, ImageRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceFormat {
    CocoJson,
    VocXml,
    FlatCsv,
}

impl std::str::FromStr for SourceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coco-json" | "coco" => Ok(SourceFormat::CocoJson),
            "voc-xml" | "voc" => Ok(SourceFormat::VocXml),
            "flat-csv" | "csv" => Ok(SourceFormat::FlatCsv),
            other => Err(Error::InvalidArgument(format!(
                "unknown source format {other:?} (expected coco-json, voc-xml or flat-csv)"
            ))),
        }
    }
}

/// Raw output of one ingestion adapter. Class names are as written in the
/// source and annotations are unvalidated; `merge_and_clean` turns a set of
/// fragments into a manifest.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Fragment {
    pub source: String,
    pub images: Vec<ImageRecord>,
    pub annotations: Vec<Annotation>,
}

impl Fragment {
    pub fn is_empty(&self) -> bool {
        self.images.is_empty() && self.annotations.is_empty()
    }
}

pub fn ingest(path: &Path, format: SourceFormat, source: &str) -> Result<Fragment> {
    let mut frag = match format {
        SourceFormat::CocoJson => ingest_coco(path, source)?,
        SourceFormat::VocXml => ingest_voc(path, source)?,
        SourceFormat::FlatCsv => ingest_csv(path, source)?,
    };
    frag.images.sort_by(|a, b| a.id.cmp(&b.id));
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = frag.images.iter().find(|i| !seen.insert(i.id.as_str())) {
        return Err(Error::Manifest(format!(
            "{}: image id {:?} appears twice",
            path.display(),
            dup.id
        )));
    }
    Ok(frag)
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn id_string(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[derive(Deserialize)]
struct CocoImage {
    id: Value,
    file_name: String,
    width: u32,
    height: u32,
}

#[derive(Deserialize)]
struct CocoAnnotation {
    image_id: Value,
    category_id: Value,
    bbox: [f64; 4],
}

#[derive(Deserialize)]
struct CocoCategory {
    id: Value,
    name: String,
}

#[derive(Deserialize)]
struct CocoFile {
    #[serde(default)]
    images: Vec<CocoImage>,
    #[serde(default)]
    annotations: Vec<CocoAnnotation>,
    #[serde(default)]
    categories: Vec<CocoCategory>,
}

/// COCO boxes are `[x, y, width, height]`.
fn ingest_coco(path: &Path, source: &str) -> Result<Fragment> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim().is_empty() {
        return Ok(Fragment {
            source: source.to_string(),
            ..Fragment::default()
        });
    }
    let file: CocoFile = serde_json::from_str(&text).map_err(|e| parse_err(path, e.line(), e.to_string()))?;
    let categories: BTreeMap<String, String> = file.categories.into_iter().map(|c| (id_string(&c.id), c.name)).collect();
    let images = file
        .images
        .into_iter()
        .map(|i| ImageRecord {
            id: id_string(&i.id),
            path: resolve_path(path, Path::new(&i.file_name)),
            width: i.width,
            height: i.height,
            source: source.to_string(),
        })
        .collect();
    let annotations = file
        .annotations
        .into_iter()
        .map(|a| {
            let cat = id_string(&a.category_id);
            let class = categories
                .get(&cat)
                .cloned()
                .ok_or_else(|| parse_err(path, 0, format!("annotation uses undeclared category {cat}")))?;
            let [x, y, w, h] = a.bbox;
            Ok(Annotation {
                image_id: id_string(&a.image_id),
                class,
                bbox: BoundingBox::new(x, y, x + w, y + h),
            })
        })
        .collect::<Result<_>>()?;
    Ok(Fragment {
        source: source.to_string(),
        images,
        annotations,
    })
}

/// `path` is one XML file or a directory of them (non-recursive).
fn ingest_voc(path: &Path, source: &str) -> Result<Fragment> {
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut v: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("xml")))
            .collect();
        v.sort();
        v
    } else {
        vec![path.to_path_buf()]
    };
    let parsed: Vec<(ImageRecord, Vec<Annotation>)> =
        files.par_iter().map(|f| parse_voc_file(f, source)).collect::<Result<_>>()?;
    let mut frag = Fragment {
        source: source.to_string(),
        ..Fragment::default()
    };
    for (img, anns) in parsed {
        frag.images.push(img);
        frag.annotations.extend(anns);
    }
    Ok(frag)
}

fn child<'a, 'input>(node: roxmltree::Node<'a, 'input>, name: &str) -> Option<roxmltree::Node<'a, 'input>> {
    node.children().find(|c| c.has_tag_name(name))
}

fn parse_voc_file(path: &Path, source: &str) -> Result<(ImageRecord, Vec<Annotation>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc = roxmltree::Document::parse(&text).map_err(|e| parse_err(path, e.pos().row as usize, e.to_string()))?;
    let root = doc.root_element();
    let text_of = |node: roxmltree::Node, name: &str| -> Result<String> {
        child(node, name)
            .and_then(|c| c.text())
            .map(|t| t.trim().to_string())
            .ok_or_else(|| {
                let line = doc.text_pos_at(node.range().start).row as usize;
                parse_err(path, line, format!("missing <{name}>"))
            })
    };
    let number = |node: roxmltree::Node, name: &str| -> Result<f64> {
        let t = text_of(node, name)?;
        t.parse::<f64>().map_err(|_| {
            let line = doc.text_pos_at(node.range().start).row as usize;
            parse_err(path, line, format!("<{name}> is not a number: {t:?}"))
        })
    };

    let file_name = text_of(root, "filename")?;
    let size = child(root, "size").ok_or_else(|| parse_err(path, 1, "missing <size>"))?;
    let (width, height) = (number(size, "width")?, number(size, "height")?);
    if width < 1.0 || height < 1.0 || width.fract() != 0.0 || height.fract() != 0.0 {
        return Err(parse_err(path, 1, format!("bad image size {width}x{height}")));
    }
    let id = Path::new(&file_name)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| file_name.clone());
    let img = ImageRecord {
        id: id.clone(),
        path: resolve_path(path, Path::new(&file_name)),
        width: width as u32,
        height: height as u32,
        source: source.to_string(),
    };
    let mut anns = Vec::new();
    for obj in root.children().filter(|c| c.has_tag_name("object")) {
        let class = text_of(obj, "name")?;
        let bb = child(obj, "bndbox").ok_or_else(|| {
            let line = doc.text_pos_at(obj.range().start).row as usize;
            parse_err(path, line, "object without <bndbox>")
        })?;
        anns.push(Annotation {
            image_id: id.clone(),
            class,
            bbox: BoundingBox::new(number(bb, "xmin")?, number(bb, "ymin")?, number(bb, "xmax")?, number(bb, "ymax")?),
        });
    }
    Ok((img, anns))
}

/// Columns `image,class,xmin,ymin,xmax,ymax[,width,height]`, header row
/// optional. Without size columns the image file is probed.
fn ingest_csv(path: &Path, source: &str) -> Result<Fragment> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_err(path, 0, e.to_string()))?;
    let mut sizes: BTreeMap<String, Option<(u32, u32)>> = BTreeMap::new();
    let mut annotations = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| parse_err(path, i + 1, e.to_string()))?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(i + 1);
        if row.iter().all(|f| f.is_empty()) {
            continue;
        }
        if i == 0 && row.get(2).is_some_and(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        if row.len() != 6 && row.len() != 8 {
            return Err(parse_err(path, line, format!("expected 6 or 8 fields, found {}", row.len())));
        }
        let num = |k: usize| -> Result<f64> {
            row[k]
                .parse::<f64>()
                .map_err(|_| parse_err(path, line, format!("field {} is not a number: {:?}", k + 1, &row[k])))
        };
        let image = row[0].to_string();
        let size = if row.len() == 8 {
            let (w, h) = (num(6)?, num(7)?);
            if w < 1.0 || h < 1.0 || w.fract() != 0.0 || h.fract() != 0.0 {
                return Err(parse_err(path, line, format!("bad image size {w}x{h}")));
            }
            Some((w as u32, h as u32))
        } else {
            None
        };
        match sizes.get(&image) {
            Some(Some(prev)) if size.is_some_and(|s| s != *prev) => {
                return Err(parse_err(path, line, format!("conflicting sizes for image {image:?}")));
            }
            Some(Some(_)) => {}
            _ => {
                sizes.insert(image.clone(), size);
            }
        }
        annotations.push(Annotation {
            image_id: image,
            class: row[1].to_string(),
            bbox: BoundingBox::new(num(2)?, num(3)?, num(4)?, num(5)?),
        });
    }
    let images = sizes
        .into_par_iter()
        .map(|(name, size)| {
            let file = resolve_path(path, Path::new(&name));
            let (width, height) = match size {
                Some(s) => s,
                None => image::image_dimensions(&file).map_err(|e| Error::image(&file, e))?,
            };
            Ok(ImageRecord {
                id: name,
                path: file,
                width,
                height,
                source: source.to_string(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(Fragment {
        source: source.to_string(),
        images,
        annotations,
    })
}
