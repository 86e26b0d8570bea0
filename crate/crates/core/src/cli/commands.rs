use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;

use super::config::RunConfig;
use super::preview::render_preview;
use super::record::RunRecord;
use super::*;
use crate::bench::{
    compose_training_set, compute_stats, exclude_classes, filter_small_classes, ingest, merge_and_clean,
    read_class_list, split, ComposeMode, MergeRules, SourceFormat, SplitPlan, SplitVariant,
};
use crate::core::{
    read_manifest, resolve_path, write_manifest, ClassEntry, ClassRegistry, DatasetManifest, TEST, TRAIN, VAL,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate, read_detections, Interpolation};
use crate::pairgen::{build_pair_set, read_coco_masks, SourceImage};
use crate::synth::{load_design, write_corpus, Background, DesignedClass, RasterImage};

pub(super) fn execute(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::read(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(w) = cli.workers {
        config.workers = Some(w);
    }
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = config.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Synth(a) => cmd_synth(config, a),
        Command::Pairs(a) => cmd_pairs(config, a),
        Command::Build(a) => cmd_build(config, a),
        Command::Split(a) => cmd_split(config, a),
        Command::Stats(a) => cmd_stats(config, a),
        Command::Eval(a) => cmd_eval(config, a),
        Command::Compose(a) => cmd_compose(config, a),
        Command::Preview(a) => cmd_preview(config, a),
    })
}

fn absolute(p: &Path) -> Result<PathBuf> {
    std::path::absolute(p).map_err(|e| Error::io(p, e))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Read a manifest (plus registry) with image paths made absolute, so it
/// can be written anywhere.
fn load_manifest(path: &Path, registry: Option<&Path>) -> Result<DatasetManifest> {
    let mut m = read_manifest(path)?;
    if let Some(r) = registry {
        m.registry = ClassRegistry::read(r)?;
        m.validate()?;
    }
    for img in &mut m.images {
        img.path = absolute(&resolve_path(path, &img.path))?;
    }
    Ok(m)
}

/// Registry of the manifest, or one built from its annotated classes.
fn registry_or_derived(m: &DatasetManifest) -> Result<ClassRegistry> {
    if m.registry.is_empty() {
        ClassRegistry::new(m.annotated_classes().into_iter().map(ClassEntry::new).collect())
    } else {
        Ok(m.registry.clone())
    }
}

fn is_image(p: &Path) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        if p.is_dir() {
            walk(&p, out)?;
        } else if p.is_file() && is_image(&p) {
            out.push(p);
        }
    }
    Ok(())
}

/// PNG/JPEG files under `dir`, recursively, in sorted order.
fn image_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    walk(dir, &mut files)?;
    files.sort();
    if files.is_empty() {
        return Err(Error::InvalidArgument(format!("no PNG/JPEG images under {}", dir.display())));
    }
    Ok(files)
}

fn relative_id(root: &Path, file: &Path) -> String {
    let rel = file.strip_prefix(root).unwrap_or(file).with_extension("");
    rel.to_string_lossy().replace('\\', "/")
}

fn cmd_synth(mut config: RunConfig, a: SynthArgs) -> Result<()> {
    if let Some(n) = a.per_class {
        config.synth.per_class = n;
    }
    let registry = ClassRegistry::read(&a.registry)?;
    let mut classes = registry.classes.clone();
    if let Some(k) = a.classes {
        if k > classes.len() {
            return Err(Error::InvalidArgument(format!(
                "--classes {k} exceeds the {} registry classes",
                classes.len()
            )));
        }
        classes.truncate(k);
    }
    let used = ClassRegistry::new(classes)?;
    used.require_designs()?;
    let designed: Vec<DesignedClass> = used
        .classes
        .par_iter()
        .map(|c| {
            let path = resolve_path(&a.registry, c.design_path.as_deref().expect("checked by require_designs"));
            Ok(DesignedClass {
                name: c.name.clone(),
                design: load_design(&path)?,
            })
        })
        .collect::<Result<_>>()?;
    let files = image_files(&a.backgrounds)?;
    let backgrounds: Vec<Background> = files
        .par_iter()
        .map(|f| {
            Ok(Background {
                id: relative_id(&a.backgrounds, f),
                image: RasterImage::open(f)?.to_rgb(),
            })
        })
        .collect::<Result<_>>()?;

    create_dir(&a.out)?;
    let corpus = write_corpus(&a.out, &designed, &backgrounds, config.synth.per_class, config.seed, &config.synth.config())?;
    let mut out_registry = used.clone();
    for c in &mut out_registry.classes {
        c.design_path = c.design_path.as_ref().map(|p| absolute(&resolve_path(&a.registry, p))).transpose()?;
    }
    out_registry.write(&a.out.join("registry.json"))?;
    info!(
        "synthesised {} images for {} classes into {}",
        corpus.records.len(),
        designed.len(),
        a.out.display()
    );

    let mut rec = RunRecord::new("synth", &config)?;
    rec.arg("registry", &a.registry).arg("backgrounds", &a.backgrounds).arg("classes", a.classes);
    rec.input("registry", &a.registry)?.input("backgrounds", &a.backgrounds)?;
    for c in &used.classes {
        if let Some(p) = &c.design_path {
            rec.input(&format!("design:{}", c.name), &resolve_path(&a.registry, p))?;
        }
    }
    rec.write(&a.out)
}

fn cmd_pairs(mut config: RunConfig, a: PairsArgs) -> Result<()> {
    if let Some(n) = a.per_source {
        config.pairs.per_source = n;
    }
    if a.non_logo.is_none() && a.segmentation.is_none() {
        return Err(Error::InvalidArgument("pairs needs --non-logo and/or --segmentation".into()));
    }
    let non_logo: Vec<SourceImage> = match &a.non_logo {
        None => Vec::new(),
        Some(p) if p.is_dir() => image_files(p)?
            .into_iter()
            .map(|f| SourceImage {
                id: relative_id(p, &f),
                path: f,
            })
            .collect(),
        Some(p) => load_manifest(p, None)?
            .images
            .into_iter()
            .map(|i| SourceImage { id: i.id, path: i.path })
            .collect(),
    };
    let masked = match &a.segmentation {
        Some(p) => read_coco_masks(p)?,
        None => Vec::new(),
    };
    create_dir(&a.out)?;
    let records = build_pair_set(&non_logo, &masked, config.pairs.per_source, config.seed, &config.pairs.config(), &a.out)?;
    info!("wrote {} pairs into {}", records.len(), a.out.display());

    let mut rec = RunRecord::new("pairs", &config)?;
    rec.arg("non_logo", &a.non_logo).arg("segmentation", &a.segmentation);
    if let Some(p) = &a.non_logo {
        rec.input("non_logo", p)?;
    }
    if let Some(p) = &a.segmentation {
        rec.input("segmentation", p)?;
        for m in &masked {
            rec.input(&format!("masked:{}", m.id), &m.path)?;
        }
    }
    rec.write(&a.out)
}

fn parse_source(spec: &str) -> Result<(SourceFormat, String, PathBuf)> {
    let mut parts = spec.splitn(3, ':');
    match (parts.next(), parts.next(), parts.next()) {
        (Some(f), Some(tag), Some(path)) if !tag.is_empty() && !path.is_empty() => {
            Ok((f.parse()?, tag.to_string(), PathBuf::from(path)))
        }
        _ => Err(Error::InvalidArgument(format!(
            "--source must look like FORMAT:TAG:PATH, got {spec:?}"
        ))),
    }
}

fn cmd_build(mut config: RunConfig, a: BuildArgs) -> Result<()> {
    if let Some(n) = a.min_images {
        config.build.min_images = n;
    }
    if let Some(p) = &a.rules {
        let r = MergeRules::read(p)?;
        config.build.rules = r.rules;
        config.build.conflict = r.conflict;
    }
    let sources = a.sources.iter().map(|s| parse_source(s)).collect::<Result<Vec<_>>>()?;
    let registry = a.registry.as_deref().map(ClassRegistry::read).transpose()?;
    let mut fragments = sources
        .par_iter()
        .map(|(format, tag, path)| ingest(path, *format, tag))
        .collect::<Result<Vec<_>>>()?;
    for f in &mut fragments {
        for img in &mut f.images {
            img.path = absolute(&img.path)?;
        }
    }
    let (merged, merge_report) = merge_and_clean(&fragments, &config.build.merge_rules(), registry.as_ref())?;
    let excluded_list = a.exclude.as_deref().map(read_class_list).transpose()?.unwrap_or_default();
    let (manifest, excluded) = exclude_classes(merged, &excluded_list);
    let (manifest, filtered) = filter_small_classes(manifest, config.build.min_images);
    info!(
        "built {} images, {} annotations, {} classes ({} invalid annotations dropped, {} classes filtered)",
        manifest.images.len(),
        manifest.annotations.len(),
        manifest.registry.len(),
        merge_report.dropped.len(),
        filtered.classes.len()
    );

    create_dir(&a.out)?;
    write_manifest(&manifest, &a.out.join("manifest.jsonl"))?;
    manifest.registry.write(&a.out.join("registry.json"))?;
    write_json(
        &a.out.join("report.json"),
        &serde_json::json!({ "merge": merge_report, "excluded": excluded, "filtered": filtered }),
    )?;

    let mut rec = RunRecord::new("build", &config)?;
    rec.arg("sources", &a.sources)
        .arg("registry", &a.registry)
        .arg("exclude", &a.exclude)
        .arg("rules", &a.rules);
    for (_, tag, path) in &sources {
        rec.input(&format!("source:{tag}"), path)?;
    }
    for (role, p) in [("registry", &a.registry), ("exclude", &a.exclude), ("rules", &a.rules)] {
        if let Some(p) = p {
            rec.input(role, p)?;
        }
    }
    rec.write(&a.out)
}

fn cmd_split(config: RunConfig, a: SplitArgs) -> Result<()> {
    let mut manifest = load_manifest(&a.manifest, a.registry.as_deref())?;
    manifest.registry = registry_or_derived(&manifest)?;
    let s = &config.split;
    let plan = match a.plan {
        PlanKind::Open => {
            let supervised: BTreeSet<String> = match &a.supervised {
                Some(p) => read_class_list(p)?,
                None => manifest.registry.supervised(),
            };
            if supervised.is_empty() {
                warn!("no supervised classes; every class is split val/test only");
            }
            SplitPlan {
                variant: SplitVariant::Open {
                    supervised,
                    trainval_size: s.trainval_size,
                    val_fraction: s.val_fraction,
                },
                seed: config.seed,
            }
        }
        PlanKind::FullySupervised => SplitPlan {
            variant: SplitVariant::FullySupervised {
                train: s.train,
                val: s.val,
                test: s.test,
            },
            seed: config.seed,
        },
    };
    let out = split(&manifest, &plan)?;
    let count = |name: &str| out.split(name).map_or(0, |s| s.len());
    println!("train {}  val {}  test {}", count(TRAIN), count(VAL), count(TEST));

    create_dir(&a.out)?;
    write_manifest(&out, &a.out.join("manifest.jsonl"))?;
    out.registry.write(&a.out.join("registry.json"))?;
    let mut rec = RunRecord::new("split", &config)?;
    rec.arg("manifest", &a.manifest)
        .arg("registry", &a.registry)
        .arg("plan", format!("{:?}", a.plan).to_lowercase())
        .arg("supervised", &a.supervised);
    rec.input("manifest", &a.manifest)?;
    for (role, p) in [("registry", &a.registry), ("supervised", &a.supervised)] {
        if let Some(p) = p {
            rec.input(role, p)?;
        }
    }
    rec.write(&a.out)
}

fn cmd_stats(config: RunConfig, a: StatsArgs) -> Result<()> {
    let manifest = read_manifest(&a.manifest)?;
    let stats = compute_stats(&manifest, config.eval.scale_threshold);
    let table = stats.render_table();
    print!("{table}");
    create_dir(&a.out)?;
    write_text(&a.out.join("stats.txt"), &table)?;
    write_json(&a.out.join("stats.json"), &stats)?;
    let mut rec = RunRecord::new("stats", &config)?;
    rec.arg("manifest", &a.manifest);
    rec.input("manifest", &a.manifest)?;
    rec.write(&a.out)
}

fn cmd_eval(mut config: RunConfig, a: EvalArgs) -> Result<()> {
    if let Some(t) = a.iou {
        config.eval.iou_threshold = t;
    }
    if a.eleven_point {
        config.eval.interpolation = Interpolation::ElevenPoint;
    }
    if let Some(s) = &a.split {
        config.eval.split = s.clone();
    }
    if let Some(p) = &a.supervised {
        config.eval.supervised = Some(read_class_list(p)?);
    }
    config.eval.validate()?;
    let manifest = load_manifest(&a.manifest, a.registry.as_deref())?;
    let dets = read_detections(&a.detections)?;
    let report = evaluate(&dets, &manifest, &config.eval)?;
    let table = report.render_table();
    print!("{table}");
    create_dir(&a.out)?;
    write_text(&a.out.join("report.txt"), &format!("{table}\n{}", report.render_classes()))?;
    write_json(&a.out.join("report.json"), &report)?;
    let mut rec = RunRecord::new("eval", &config)?;
    rec.arg("manifest", &a.manifest)
        .arg("registry", &a.registry)
        .arg("detections", &a.detections)
        .arg("supervised", &a.supervised);
    rec.input("manifest", &a.manifest)?.input("detections", &a.detections)?;
    if let Some(p) = &a.registry {
        rec.input("registry", p)?;
    }
    rec.write(&a.out)
}

fn cmd_compose(config: RunConfig, a: ComposeArgs) -> Result<()> {
    let real = load_manifest(&a.real, a.registry.as_deref())?;
    let synth = load_manifest(&a.synth, None)?;
    let mode = match a.mode {
        ModeArg::Mixed => ComposeMode::Mixed,
        ModeArg::Sequential => ComposeMode::Sequential,
    };
    let out = compose_training_set(&real, &synth, mode)?;
    create_dir(&a.out)?;
    let names: &[&str] = match mode {
        ComposeMode::Mixed => &["train.jsonl"],
        ComposeMode::Sequential => &["stage1_synthetic.jsonl", "stage2_real.jsonl"],
    };
    for (m, name) in out.iter().zip(names) {
        write_manifest(m, &a.out.join(name))?;
        info!("{name}: {} images", m.images.len());
    }
    let mut registry = registry_or_derived(&real)?;
    for c in registry_or_derived(&synth)?.classes {
        if !registry.contains(&c.name) {
            registry.classes.push(c);
        }
    }
    registry.write(&a.out.join("registry.json"))?;
    let mut rec = RunRecord::new("compose", &config)?;
    rec.arg("real", &a.real)
        .arg("synth", &a.synth)
        .arg("registry", &a.registry)
        .arg("mode", format!("{:?}", a.mode).to_lowercase());
    rec.input("real", &a.real)?.input("synth", &a.synth)?;
    if let Some(p) = &a.registry {
        rec.input("registry", p)?;
    }
    rec.write(&a.out)
}

fn cmd_preview(mut config: RunConfig, a: PreviewArgs) -> Result<()> {
    if let Some(n) = a.n {
        config.preview.count = n;
    }
    let manifest = read_manifest(&a.manifest)?;
    if config.preview.count == 0 {
        info!("preview count is 0; nothing written");
        return Ok(());
    }
    create_dir(&a.out)?;
    let written = render_preview(
        &manifest,
        &a.manifest,
        config.preview.count,
        config.seed,
        config.preview.line_width,
        &a.out,
    )?;
    info!("rendered {} previews into {}", written.len(), a.out.display());
    let mut rec = RunRecord::new("preview", &config)?;
    rec.arg("manifest", &a.manifest);
    rec.input("manifest", &a.manifest)?;
    rec.write(&a.out)
}
