//! Clean/corrupted/mask training pairs: one by hand, then a pair set from
//! two sources.
//!
//! cargo run --example pair_generation

use openlogo::pairgen::{build_pair_set, generate_pair, make_pair, MaskSpec, MaskedImage, PairConfig, RegionSource, SourceImage};
use openlogo::synth::{Channels, Mask, RasterImage, TransformSpec};

fn scene(w: usize, h: usize, seed: usize) -> RasterImage {
    RasterImage::from_fn(w, h, Channels::Rgb, |x, y| {
        [((x * 3 + seed * 17) % 256) as u8, ((y * 5 + seed * 29) % 256) as u8, ((x + y) % 256) as u8, 255]
    })
}

fn main() -> openlogo::Result<()> {
    // A fixed photometric corruption of a rectangle.
    let img = scene(64, 48, 0);
    let mask = Mask::rect(64, 48, 16, 12, 40, 30);
    let spec = TransformSpec {
        color_shift: [40, -20, 10],
        color_levels: 8,
        ..TransformSpec::identity()
    };
    let corrupted = make_pair(&img, &mask, &spec)?;
    let changed = (0..48)
        .flat_map(|y| (0..64).map(move |x| (x, y)))
        .filter(|&(x, y)| img.pixel(x, y) != corrupted.pixel(x, y))
        .count();
    println!("fixed spec: {changed} of {} masked pixels changed", mask.count());

    // A sampled region and spec.
    let pair = generate_pair(&img, &[RegionSource::default_rectangle()], 3, &PairConfig::default())?;
    println!(
        "sampled: region {} px, shift {:?}, levels {}",
        pair.mask.count(),
        pair.spec.color_shift,
        pair.spec.color_levels
    );

    // A pair set from non-logo images and an object mask.
    let dir = std::env::temp_dir().join("openlogo-pairs");
    std::fs::create_dir_all(&dir).map_err(|e| openlogo::Error::Internal(e.to_string()))?;
    let mut non_logo = Vec::new();
    for i in 0..3 {
        let path = dir.join(format!("plain_{i}.png"));
        scene(64, 48, i + 1).save_png(&path)?;
        non_logo.push(SourceImage {
            id: format!("plain_{i}"),
            path,
        });
    }
    let obj_path = dir.join("object.png");
    scene(64, 48, 9).save_png(&obj_path)?;
    let masked = vec![MaskedImage {
        id: "object".into(),
        path: obj_path,
        masks: vec![MaskSpec::PolygonList(vec![vec![20.0, 8.0, 44.0, 8.0, 50.0, 40.0, 14.0, 40.0]])],
    }];
    let out = dir.join("set");
    std::fs::create_dir_all(&out).map_err(|e| openlogo::Error::Internal(e.to_string()))?;
    let records = build_pair_set(&non_logo, &masked, 4, 11, &PairConfig::default(), &out)?;
    for r in &records {
        println!("{:>13} {}", r.source.tag(), r.corrupted.display());
    }
    println!("manifest: {}", out.join("pairs.jsonl").display());
    Ok(())
}
