//! Combine the real train split with a synthetic corpus, mixed or staged.
//!
//! cargo run --example compose_training

use openlogo::bench::{compose_training_set, ComposeMode};
use openlogo::core::{Annotation, BoundingBox, DatasetManifest, ImageRecord, TRAIN};

fn manifest(prefix: &str, source: &str, n: usize) -> DatasetManifest {
    let mut m = DatasetManifest::new();
    for i in 0..n {
        let id = format!("{prefix}/{i:02}");
        m.images.push(ImageRecord {
            id: id.clone(),
            path: format!("{id}.png").into(),
            width: 100,
            height: 80,
            source: source.into(),
        });
        m.annotations.push(Annotation {
            image_id: id,
            class: "acme".into(),
            bbox: BoundingBox::new(10.0, 10.0, 40.0, 30.0),
        });
    }
    m
}

fn main() -> openlogo::Result<()> {
    let mut real = manifest("real", "web", 6);
    real.splits.insert(TRAIN.into(), real.images.iter().take(4).map(|i| i.id.clone()).collect());
    let synth = manifest("synth/acme", "synth", 3);

    let mixed = compose_training_set(&real, &synth, ComposeMode::Mixed)?;
    let order: Vec<&str> = mixed[0].images.iter().map(|i| i.id.as_str()).collect();
    println!("mixed: {order:?}");

    for (stage, m) in compose_training_set(&real, &synth, ComposeMode::Sequential)?.iter().enumerate() {
        println!("stage {}: {} images from {:?}", stage + 1, m.images.len(), m.images[0].source);
    }
    Ok(())
}
