//! Generate a small synthetic corpus on disk and read its manifest back.
//!
//! cargo run --example synth_corpus

use openlogo::core::read_manifest;
use openlogo::synth::{plan_jobs, write_corpus, Background, Channels, DesignedClass, RasterImage, SynthConfig};

fn solid_logo(w: usize, h: usize, rgb: [u8; 3]) -> RasterImage {
    RasterImage::from_fn(w, h, Channels::Rgba, |x, y| {
        let border = x == 0 || y == 0 || x + 1 == w || y + 1 == h;
        if border {
            [0, 0, 0, 0]
        } else {
            [rgb[0], rgb[1], rgb[2], 255]
        }
    })
}

fn main() -> openlogo::Result<()> {
    let classes = vec![
        DesignedClass {
            name: "acme".into(),
            design: solid_logo(30, 18, [220, 40, 40]),
        },
        DesignedClass {
            name: "zenith".into(),
            design: solid_logo(20, 20, [30, 90, 220]),
        },
    ];
    let backgrounds: Vec<Background> = (0..4)
        .map(|i| Background {
            id: format!("bg{i}"),
            image: RasterImage::from_fn(128, 96, Channels::Rgb, |x, y| {
                [(x * 2) as u8, (y * 2) as u8, (40 * i) as u8, 255]
            }),
        })
        .collect();

    let per_class = 5;
    println!("planned {} jobs", plan_jobs(classes.iter().map(|c| c.name.as_str()), per_class).len());
    let out = std::env::temp_dir().join("openlogo-synth-corpus");
    let corpus = write_corpus(&out, &classes, &backgrounds, per_class, 42, &SynthConfig::default())?;

    let manifest = read_manifest(&out.join("manifest.jsonl"))?;
    assert_eq!(manifest, corpus.manifest);
    for (class, n) in manifest.class_image_counts() {
        println!("{class}: {n} images");
    }
    let r = &corpus.records[0];
    println!("first record: {} on {} with box {:?}", r.image.display(), r.background_id, r.bbox);
    println!("corpus in {}", out.display());
    Ok(())
}
