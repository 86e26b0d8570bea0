//! Merge two differently-labelled sources into one benchmark, drop rare
//! classes, split with the open protocol and print corpus statistics.
//!
//! cargo run --example benchmark_assembly

use std::collections::BTreeSet;

use openlogo::bench::{
    compute_stats, filter_small_classes, merge_and_clean, split, ConflictPolicy, Fragment, MergeRule, MergeRules,
    SplitPlan, DEFAULT_BIG_THRESHOLD,
};
use openlogo::core::{Annotation, BoundingBox, ImageRecord, TEST, TRAIN, TRAINVAL, VAL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fragment(source: &str, names: &[(&str, usize)], rng: &mut ChaCha8Rng) -> Fragment {
    let mut f = Fragment {
        source: source.into(),
        ..Fragment::default()
    };
    for (class, n) in names {
        for i in 0..*n {
            let id = format!("{source}_{}_{i:03}", class.to_lowercase());
            f.images.push(ImageRecord {
                id: id.clone(),
                path: format!("{id}.jpg").into(),
                width: 640,
                height: 480,
                source: source.into(),
            });
            let (w, h) = (rng.gen_range(10.0..200.0), rng.gen_range(10.0..150.0));
            let (x, y) = (rng.gen_range(0.0..640.0 - w), rng.gen_range(0.0..480.0 - h));
            f.annotations.push(Annotation {
                image_id: id,
                class: class.to_string(),
                bbox: BoundingBox::new(x, y, x + w, y + h),
            });
        }
    }
    f
}

fn main() -> openlogo::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let frags = vec![
        fragment("web", &[("Acme", 50), ("Zenith", 30), ("Nova", 4)], &mut rng),
        fragment("street", &[("acme_logo", 40), ("ZENITH-text", 25), ("Orbit", 60)], &mut rng),
    ];
    let rules = MergeRules {
        rules: ["acme", "zenith", "nova", "orbit"]
            .iter()
            .map(|c| MergeRule {
                canonical: c.to_string(),
                patterns: vec![format!("{c}*")],
            })
            .collect(),
        conflict: ConflictPolicy::Abort,
    };
    let (merged, report) = merge_and_clean(&frags, &rules, None)?;
    println!("merged {} images; renamed {:?}", report.images, report.renamed);

    let (mut m, removed) = filter_small_classes(merged, 10);
    println!("removed rare classes {:?} ({} images)", removed.classes, removed.images);

    // Designate 40 trainval images for each supervised class.
    let supervised: BTreeSet<String> = ["acme", "zenith"].iter().map(|s| s.to_string()).collect();
    let mut trainval = BTreeSet::new();
    for class in &supervised {
        let ids = m.annotations.iter().filter(|a| &a.class == class).map(|a| a.image_id.clone());
        trainval.extend(ids.take(40));
    }
    m.splits.insert(TRAINVAL.into(), trainval);

    let out = split(&m, &SplitPlan::open(supervised, 7))?;
    let n = |s: &str| out.split(s).map_or(0, |v| v.len());
    println!("train {}  val {}  test {}\n", n(TRAIN), n(VAL), n(TEST));
    print!("{}", compute_stats(&out, DEFAULT_BIG_THRESHOLD).render_table());
    Ok(())
}
