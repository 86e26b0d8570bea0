#![allow(dead_code)]

pub mod oracles;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use openlogo::core::{
    write_manifest, Annotation, BoundingBox, ClassEntry, ClassRegistry, DatasetManifest, Detection, ImageRecord,
    TEST, TRAINVAL,
};
use openlogo::synth::{Channels, RasterImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Smooth photo-like RGB texture: overlapping gradients, blobs and noise.
pub fn photo(w: usize, h: usize, seed: u64) -> RasterImage {
    let mut r = rng(seed);
    let (fx, fy, fz): (f64, f64, f64) = (r.gen_range(0.05..0.3), r.gen_range(0.05..0.3), r.gen_range(0.01..0.1));
    let base: [f64; 3] = [r.gen_range(40.0..200.0), r.gen_range(40.0..200.0), r.gen_range(40.0..200.0)];
    let noise: Vec<u8> = (0..w * h * 3).map(|_| r.gen_range(0..24)).collect();
    RasterImage::from_fn(w, h, Channels::Rgb, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        let wave = (xf * fx).sin() * 40.0 + (yf * fy).cos() * 35.0 + ((xf + yf) * fz).sin() * 25.0;
        let i = (y * w + x) * 3;
        let c = |k: usize| (base[k] + wave * (1.0 - 0.3 * k as f64) + f64::from(noise[i + k])).clamp(0.0, 255.0) as u8;
        [c(0), c(1), c(2), 255]
    })
}

/// RGBA logo design on a transparent field: a filled ellipse with a
/// contrasting bar, antialiased edge.
pub fn design(w: usize, h: usize, seed: u64) -> RasterImage {
    let mut r = rng(seed);
    let fill = [r.gen_range(0..255u8), r.gen_range(0..255u8), r.gen_range(0..255u8)];
    let bar = [255 - fill[0], 255 - fill[1], 255 - fill[2]];
    let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
    RasterImage::from_fn(w, h, Channels::Rgba, |x, y| {
        let dx = (x as f64 + 0.5 - cx) / (cx * 0.9);
        let dy = (y as f64 + 0.5 - cy) / (cy * 0.9);
        let d = (dx * dx + dy * dy).sqrt();
        let a = ((1.0 - d) * 4.0 * 255.0).clamp(0.0, 255.0) as u8;
        let c = if dy.abs() < 0.2 { bar } else { fill };
        [c[0], c[1], c[2], a]
    })
}

/// Registry of `n` classes with design PNGs, and a directory of `m`
/// background PNGs.
pub fn synth_inputs(dir: &Path, n: usize, m: usize, bg: (usize, usize), design_size: (usize, usize)) -> (PathBuf, PathBuf) {
    let designs = dir.join("designs");
    let backgrounds = dir.join("backgrounds");
    std::fs::create_dir_all(&designs).unwrap();
    std::fs::create_dir_all(&backgrounds).unwrap();
    let mut classes = Vec::new();
    for i in 0..n {
        let name = format!("brand{i:03}");
        let file = designs.join(format!("{name}.png"));
        design(design_size.0, design_size.1, 1000 + i as u64).save_png(&file).unwrap();
        classes.push(ClassEntry {
            design_path: Some(PathBuf::from("designs").join(format!("{name}.png"))),
            supervised: i % 4 == 0,
            ..ClassEntry::new(name)
        });
    }
    for j in 0..m {
        photo(bg.0, bg.1, 2000 + j as u64).save_png(&backgrounds.join(format!("bg{j:02}.png"))).unwrap();
    }
    let registry = dir.join("registry.json");
    ClassRegistry::new(classes).unwrap().write(&registry).unwrap();
    (registry, backgrounds)
}

pub fn image(id: &str, w: u32, h: u32, source: &str) -> ImageRecord {
    ImageRecord {
        id: id.into(),
        path: format!("{id}.jpg").into(),
        width: w,
        height: h,
        source: source.into(),
    }
}

pub fn ann(id: &str, class: &str, b: [f64; 4]) -> Annotation {
    Annotation {
        image_id: id.into(),
        class: class.into(),
        bbox: BoundingBox::new(b[0], b[1], b[2], b[3]),
    }
}

/// Single-class-per-image manifest. Classes are `(name, trainval, other,
/// supervised)`; trainval images form the `trainval` split.
pub fn split_fixture(classes: &[(String, usize, usize, bool)]) -> DatasetManifest {
    let mut m = DatasetManifest::new();
    let mut trainval = BTreeSet::new();
    for (c, tv, rest, _) in classes {
        for i in 0..tv + rest {
            let id = format!("{c}/{i:04}");
            m.images.push(image(&id, 320, 240, "fixture"));
            m.annotations.push(ann(&id, c, [10.0, 10.0, 60.0, 50.0]));
            if i < *tv {
                trainval.insert(id);
            }
        }
    }
    m.registry = ClassRegistry::new(
        classes
            .iter()
            .map(|(c, _, _, s)| ClassEntry {
                supervised: *s,
                ..ClassEntry::new(c.clone())
            })
            .collect(),
    )
    .unwrap();
    m.splits.insert(TRAINVAL.into(), trainval);
    m
}

/// The standard open-split shape: `sup` supervised classes with 40
/// trainval and `rest` other images, `uns` unsupervised classes with
/// `uns_n` images.
pub fn open_fixture(sup: usize, rest: usize, uns: usize, uns_n: usize) -> DatasetManifest {
    let mut classes = Vec::new();
    for i in 0..sup {
        classes.push((format!("sup{i:02}"), 40, rest, true));
    }
    for i in 0..uns {
        classes.push((format!("uns{i:02}"), 0, uns_n, false));
    }
    split_fixture(&classes)
}

/// Random evaluation fixture: `n_img` images, up to `max_gt` ground truths
/// and `max_det` detections overall, small integer boxes so that overlaps
/// and score ties are common.
pub fn micro_fixture(seed: u64, n_img: usize, classes: &[&str], max_gt: usize, max_det: usize) -> (DatasetManifest, Vec<Detection>) {
    let mut r = rng(seed);
    let mut m = DatasetManifest::new();
    for i in 0..n_img {
        m.images.push(image(&format!("img{i}"), 40, 40, "micro"));
    }
    let rand_box = |r: &mut ChaCha8Rng| {
        let x0 = r.gen_range(0..30) as f64;
        let y0 = r.gen_range(0..30) as f64;
        [x0, y0, x0 + r.gen_range(2..11) as f64, y0 + r.gen_range(2..11) as f64]
    };
    let n_gt = r.gen_range(1..=max_gt);
    for _ in 0..n_gt {
        let img = format!("img{}", r.gen_range(0..n_img));
        let c = classes[r.gen_range(0..classes.len())];
        let b = rand_box(&mut r);
        m.annotations.push(ann(&img, c, b));
    }
    let n_det = r.gen_range(0..=max_det);
    let mut dets = Vec::new();
    for _ in 0..n_det {
        // Half the detections jitter a ground truth, half are random.
        let (img, class, b) = if r.gen_bool(0.5) && !m.annotations.is_empty() {
            let g = &m.annotations[r.gen_range(0..m.annotations.len())];
            let j = |v: f64, r: &mut ChaCha8Rng| (v + r.gen_range(-2..=2) as f64).max(0.0);
            let mut b = [j(g.bbox.xmin, &mut r), j(g.bbox.ymin, &mut r), j(g.bbox.xmax, &mut r), j(g.bbox.ymax, &mut r)];
            if b[2] <= b[0] {
                b[2] = b[0] + 1.0;
            }
            if b[3] <= b[1] {
                b[3] = b[1] + 1.0;
            }
            (g.image_id.clone(), g.class.clone(), b)
        } else {
            (
                format!("img{}", r.gen_range(0..n_img)),
                classes[r.gen_range(0..classes.len())].to_string(),
                rand_box(&mut r),
            )
        };
        dets.push(Detection {
            image_id: img,
            class,
            bbox: BoundingBox::new(b[0], b[1], b[2], b[3]),
            score: r.gen_range(0..=10) as f64 / 10.0,
        });
    }
    m.registry = ClassRegistry::new(
        classes
            .iter()
            .enumerate()
            .map(|(i, c)| ClassEntry {
                supervised: i % 2 == 0,
                ..ClassEntry::new(*c)
            })
            .collect(),
    )
    .unwrap();
    m.splits.insert(TEST.into(), m.images.iter().map(|i| i.id.clone()).collect());
    (m, dets)
}

pub fn echo_detections(m: &DatasetManifest) -> Vec<Detection> {
    m.annotations
        .iter()
        .map(|a| Detection {
            image_id: a.image_id.clone(),
            class: a.class.clone(),
            bbox: a.bbox,
            score: 1.0,
        })
        .collect()
}

pub fn write_fixture_manifest(m: &DatasetManifest, dir: &Path) -> (PathBuf, PathBuf) {
    let manifest = dir.join("manifest.jsonl");
    let registry = dir.join("registry.json");
    write_manifest(m, &manifest).unwrap();
    m.registry.write(&registry).unwrap();
    (manifest, registry)
}

/// Every file under `dir`, relative path → contents.
pub fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, d: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for e in std::fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    if dir.exists() {
        walk(dir, dir, &mut out);
    }
    out
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_openlogo")
}

/// Run the binary with `args`, without inheriting `OPENLOGO_*` variables.
pub fn run_bin(args: &[&str]) -> Output {
    run_bin_env(args, &[])
}

pub fn run_bin_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(bin());
    cmd.args(args);
    for (k, _) in std::env::vars() {
        if k.starts_with("OPENLOGO_") {
            cmd.env_remove(k);
        }
    }
    cmd.env("OPENLOGO_LOG", "warn");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// `n` natural-looking images for random-rectangle pairs.
pub fn non_logo_dir(dir: &Path, n: usize, size: (usize, usize)) -> PathBuf {
    let d = dir.join("nonlogo");
    std::fs::create_dir_all(&d).unwrap();
    for i in 0..n {
        photo(size.0, size.1, 3000 + i as u64).save_png(&d.join(format!("n{i:03}.png"))).unwrap();
    }
    d
}

/// COCO instances file over `n` images, each with a polygon object and,
/// on every other image, a second object as uncompressed RLE.
pub fn segmentation_fixture(dir: &Path, n: usize, size: (usize, usize)) -> PathBuf {
    let d = dir.join("coco");
    std::fs::create_dir_all(d.join("images")).unwrap();
    let (w, h) = size;
    let mut images = Vec::new();
    let mut anns = Vec::new();
    for i in 0..n {
        let name = format!("images/c{i:03}.png");
        photo(w, h, 4000 + i as u64).save_png(&d.join(&name)).unwrap();
        images.push(serde_json::json!({"id": i, "file_name": name, "width": w, "height": h}));
        let (cx, cy) = ((w / 3 + i % 5) as f64, (h / 3 + i % 3) as f64);
        let poly = vec![cx, cy - 6.0, cx + 7.0, cy + 5.0, cx - 7.0, cy + 5.0];
        anns.push(serde_json::json!({"id": 2 * i, "image_id": i, "category_id": 1, "segmentation": [poly]}));
        if i % 2 == 0 {
            // Column-major runs: a block of 5 rows in columns 4..10.
            let mut counts = vec![(4 * h + 2) as u32];
            for _ in 4..10 {
                counts.push(5);
                counts.push((h - 5) as u32);
            }
            let used: u32 = counts.iter().sum();
            counts.pop();
            let used_less = used - (h - 5) as u32;
            counts.push((w * h) as u32 - used_less);
            anns.push(serde_json::json!({
                "id": 2 * i + 1, "image_id": i, "category_id": 1,
                "segmentation": {"size": [h, w], "counts": counts}
            }));
        }
    }
    let file = d.join("instances.json");
    let doc = serde_json::json!({"images": images, "annotations": anns, "categories": [{"id": 1, "name": "object"}]});
    std::fs::write(&file, serde_json::to_string(&doc).unwrap()).unwrap();
    file
}

pub struct PipelineInputs {
    pub registry: PathBuf,
    pub backgrounds: PathBuf,
    pub non_logo: PathBuf,
    pub segmentation: PathBuf,
    pub coco: PathBuf,
    pub voc: PathBuf,
    pub csv: PathBuf,
    pub rules: PathBuf,
    pub detections: PathBuf,
}

const BRANDS: [(&str, &str); 4] = [("acme", "Acme"), ("zenith", "ZENITH_logo"), ("orbit", "orbit-mark"), ("nova", "Nova")];

/// Three small source datasets in different formats whose class names
/// differ in spelling, merge rules that unify them, and a detection file
/// that echoes the ground truth with some noise.
pub fn ingest_sources(dir: &Path) -> (PathBuf, PathBuf, PathBuf, PathBuf, Vec<Detection>) {
    let imgs = dir.join("real");
    std::fs::create_dir_all(&imgs).unwrap();
    let (w, h) = (96usize, 72usize);
    let mut r = rng(77);
    let mut dets = Vec::new();
    let objects = |r: &mut ChaCha8Rng, k: usize| -> Vec<(usize, [f64; 4])> {
        (0..1 + k % 2)
            .map(|j| {
                let cls = (k + j) % BRANDS.len();
                let bw = r.gen_range(8..40) as f64;
                let bh = r.gen_range(6..30) as f64;
                let x = r.gen_range(0..(w - 41)) as f64;
                let y = r.gen_range(0..(h - 31)) as f64;
                (cls, [x, y, x + bw, y + bh])
            })
            .collect()
    };
    let record_dets = |dets: &mut Vec<Detection>, r: &mut ChaCha8Rng, id: &str, cls: usize, b: [f64; 4]| {
        dets.push(Detection {
            image_id: id.into(),
            class: BRANDS[cls].0.into(),
            bbox: BoundingBox::new(b[0] + 1.0, b[1], b[2] + 1.0, b[3]),
            score: r.gen_range(0.3..1.0),
        });
        if r.gen_bool(0.3) {
            dets.push(Detection {
                image_id: id.into(),
                class: BRANDS[(cls + 1) % BRANDS.len()].0.into(),
                bbox: BoundingBox::new(0.0, 0.0, 10.0, 10.0),
                score: r.gen_range(0.0..0.6),
            });
        }
    };

    // COCO: 10 images.
    let mut images = Vec::new();
    let mut anns = Vec::new();
    for k in 0..10 {
        let name = format!("c{k:02}.png");
        photo(w, h, 5000 + k as u64).save_png(&imgs.join(&name)).unwrap();
        images.push(serde_json::json!({"id": format!("c{k:02}"), "file_name": format!("real/{name}"), "width": w, "height": h}));
        for (cls, b) in objects(&mut r, k) {
            anns.push(serde_json::json!({
                "id": anns.len(), "image_id": format!("c{k:02}"), "category_id": cls,
                "bbox": [b[0], b[1], b[2] - b[0], b[3] - b[1]]
            }));
            record_dets(&mut dets, &mut r, &format!("c{k:02}"), cls, b);
        }
    }
    // One box running off the image: dropped as invalid.
    anns.push(serde_json::json!({"id": 999, "image_id": "c00", "category_id": 0, "bbox": [80.0, 60.0, 40.0, 40.0]}));
    let cats: Vec<_> = BRANDS.iter().enumerate().map(|(i, (_, raw))| serde_json::json!({"id": i, "name": raw})).collect();
    let coco = dir.join("coco.json");
    std::fs::write(&coco, serde_json::json!({"images": images, "annotations": anns, "categories": cats}).to_string()).unwrap();

    // VOC: 10 XML files.
    let voc = dir.join("voc");
    std::fs::create_dir_all(&voc).unwrap();
    for k in 0..10 {
        let stem = format!("v{k:02}");
        photo(w, h, 6000 + k as u64).save_png(&imgs.join(format!("{stem}.png"))).unwrap();
        let mut xml = format!(
            "<annotation><filename>../real/{stem}.png</filename><size><width>{w}</width><height>{h}</height><depth>3</depth></size>"
        );
        for (cls, b) in objects(&mut r, k + 1) {
            let raw = BRANDS[cls].1.to_lowercase();
            xml.push_str(&format!(
                "<object><name>{raw}</name><bndbox><xmin>{}</xmin><ymin>{}</ymin><xmax>{}</xmax><ymax>{}</ymax></bndbox></object>",
                b[0], b[1], b[2], b[3]
            ));
            record_dets(&mut dets, &mut r, &stem, cls, b);
        }
        xml.push_str("</annotation>");
        std::fs::write(voc.join(format!("{stem}.xml")), xml).unwrap();
    }

    // CSV: 10 images, header row, sizes probed from the files.
    let mut csv_text = String::from("image,class,xmin,ymin,xmax,ymax\n");
    for k in 0..10 {
        let name = format!("k{k:02}.png");
        photo(w, h, 7000 + k as u64).save_png(&imgs.join(&name)).unwrap();
        for (cls, b) in objects(&mut r, k + 2) {
            csv_text.push_str(&format!("real/{name},{}-csv,{},{},{},{}\n", BRANDS[cls].0.to_uppercase(), b[0], b[1], b[2], b[3]));
            record_dets(&mut dets, &mut r, &format!("real/{name}"), cls, b);
        }
    }
    let csv = dir.join("boxes.csv");
    std::fs::write(&csv, csv_text).unwrap();

    let rules = dir.join("rules.toml");
    let mut toml = String::from("conflict = \"abort\"\n");
    for (canon, _) in BRANDS {
        toml.push_str(&format!("\n[[rules]]\ncanonical = \"{canon}\"\npatterns = [\"{canon}*\"]\n"));
    }
    std::fs::write(&rules, toml).unwrap();
    (coco, voc, csv, rules, dets)
}

pub fn pipeline_inputs(dir: &Path) -> PipelineInputs {
    let (registry, backgrounds) = synth_inputs(dir, 3, 3, (64, 48), (24, 16));
    let non_logo = non_logo_dir(dir, 5, (48, 40));
    let segmentation = segmentation_fixture(dir, 4, (48, 40));
    let (coco, voc, csv, rules, dets) = ingest_sources(dir);
    let detections = dir.join("detections.jsonl");
    openlogo::eval::write_detections(&dets, &detections).unwrap();
    PipelineInputs {
        registry,
        backgrounds,
        non_logo,
        segmentation,
        coco,
        voc,
        csv,
        rules,
        detections,
    }
}

/// Run every subcommand, chaining outputs, into `out`. Returns
/// `(subcommand, exit code, stdout)`.
pub fn run_pipeline(inp: &PipelineInputs, out: &Path, workers: usize, seed: u64) -> Vec<(&'static str, i32, String)> {
    let o = |s: &str| out.join(s);
    let (ws, ss) = (workers.to_string(), seed.to_string());
    let coco = format!("coco-json:coco:{}", p(&inp.coco));
    let voc = format!("voc-xml:voc:{}", p(&inp.voc));
    let csv = format!("flat-csv:csv:{}", p(&inp.csv));
    let steps: Vec<(&'static str, Vec<String>)> = vec![
        ("synth", vec!["synth", "--registry", p(&inp.registry), "--backgrounds", p(&inp.backgrounds), "--per-class", "4", "--out", p(&o("synth"))].into_iter().map(String::from).collect()),
        ("pairs", vec!["pairs", "--non-logo", p(&inp.non_logo), "--segmentation", p(&inp.segmentation), "--per-source", "6", "--out", p(&o("pairs"))].into_iter().map(String::from).collect()),
        ("build", vec!["build", "--source", &coco, "--source", &voc, "--source", &csv, "--rules", p(&inp.rules), "--min-images", "2", "--out", p(&o("build"))].into_iter().map(String::from).collect()),
        ("split", vec!["split", "--manifest", p(&o("build/manifest.jsonl")), "--registry", p(&o("build/registry.json")), "--plan", "fully-supervised", "--out", p(&o("split"))].into_iter().map(String::from).collect()),
        ("stats", vec!["stats", "--manifest", p(&o("split/manifest.jsonl")), "--out", p(&o("stats"))].into_iter().map(String::from).collect()),
        ("eval", vec!["eval", "--manifest", p(&o("split/manifest.jsonl")), "--registry", p(&o("split/registry.json")), "--detections", p(&inp.detections), "--split", "test", "--out", p(&o("eval"))].into_iter().map(String::from).collect()),
        ("compose", vec!["compose", "--real", p(&o("split/manifest.jsonl")), "--registry", p(&o("split/registry.json")), "--synth", p(&o("synth/manifest.jsonl")), "--mode", "sequential", "--out", p(&o("compose"))].into_iter().map(String::from).collect()),
        ("preview", vec!["preview", "--manifest", p(&o("split/manifest.jsonl")), "--n", "4", "--out", p(&o("preview"))].into_iter().map(String::from).collect()),
    ];
    steps
        .into_iter()
        .map(|(name, mut args)| {
            args.extend(["--seed".to_string(), ss.clone(), "--workers".to_string(), ws.clone()]);
            let refs: Vec<&str> = args.iter().map(String::as_str).collect();
            let res = run_bin(&refs);
            if !res.status.success() {
                eprintln!("{name} failed: {}", String::from_utf8_lossy(&res.stderr));
            }
            (name, res.status.code().unwrap_or(-1), String::from_utf8_lossy(&res.stdout).into_owned())
        })
        .collect()
}
