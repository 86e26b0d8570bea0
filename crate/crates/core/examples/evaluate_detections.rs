//! Score a noisy detector against ground truth and print the mAP table.
//!
//! cargo run --example evaluate_detections

use openlogo::core::{Annotation, BoundingBox, ClassEntry, ClassRegistry, DatasetManifest, Detection, ImageRecord, TEST};
use openlogo::eval::{evaluate, EvalConfig, Interpolation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> openlogo::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let classes = ["acme", "nova", "orbit", "zenith"];
    let mut m = DatasetManifest::new();
    for i in 0..40 {
        let id = format!("test_{i:03}");
        m.images.push(ImageRecord {
            id: id.clone(),
            path: format!("{id}.jpg").into(),
            width: 320,
            height: 240,
            source: "demo".into(),
        });
        let class = classes[i % classes.len()];
        // Alternate big and small logos.
        let side = if i % 3 == 0 { rng.gen_range(60.0..120.0) } else { rng.gen_range(8.0..30.0) };
        let (x, y) = (rng.gen_range(0.0..320.0 - side), rng.gen_range(0.0..240.0 - side));
        m.annotations.push(Annotation {
            image_id: id,
            class: class.into(),
            bbox: BoundingBox::new(x, y, x + side, y + side),
        });
    }
    m.registry = ClassRegistry::new(
        classes
            .iter()
            .map(|c| ClassEntry {
                supervised: *c == "acme" || *c == "orbit",
                ..ClassEntry::new(*c)
            })
            .collect(),
    )?;
    m.splits.insert(TEST.into(), m.images.iter().map(|i| i.id.clone()).collect());

    // Jittered hits on most objects, plus confident false alarms.
    let mut dets = Vec::new();
    for a in &m.annotations {
        if rng.gen_bool(0.85) {
            let j = a.bbox.width() * 0.1;
            let mut d = |v: f64| v + rng.gen_range(-j..j);
            dets.push(Detection {
                image_id: a.image_id.clone(),
                class: a.class.clone(),
                bbox: BoundingBox::new(d(a.bbox.xmin), d(a.bbox.ymin), d(a.bbox.xmax), d(a.bbox.ymax)),
                score: rng.gen_range(0.4..1.0),
            });
        }
        if rng.gen_bool(0.25) {
            dets.push(Detection {
                image_id: a.image_id.clone(),
                class: classes[rng.gen_range(0..classes.len())].into(),
                bbox: BoundingBox::new(0.0, 0.0, 40.0, 40.0),
                score: rng.gen_range(0.0..0.9),
            });
        }
    }

    let report = evaluate(&dets, &m, &EvalConfig::default())?;
    print!("{}", report.render_table());
    println!();
    print!("{}", report.render_classes());

    let eleven = EvalConfig {
        interpolation: Interpolation::ElevenPoint,
        ..EvalConfig::default()
    };
    println!("\n11-point mAP: {:.4}", evaluate(&dets, &m, &eleven)?.map_all.unwrap_or(0.0));
    Ok(())
}
