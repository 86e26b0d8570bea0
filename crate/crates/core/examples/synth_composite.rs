//! Transform one logo design and composite it onto a background.
//! Writes the image and its support mask to a temporary directory.
//!
//! cargo run --example synth_composite

use openlogo::synth::{synth_one, Background, Channels, RasterImage, SynthConfig};

fn background(w: usize, h: usize) -> RasterImage {
    RasterImage::from_fn(w, h, Channels::Rgb, |x, y| {
        let v = ((x as f64 * 0.15).sin() * 40.0 + (y as f64 * 0.1).cos() * 40.0 + 120.0) as u8;
        [v, v / 2 + 60, 255 - v, 255]
    })
}

/// Red disc with a white stripe on a transparent field.
fn design(size: usize) -> RasterImage {
    let c = size as f64 / 2.0;
    RasterImage::from_fn(size, size, Channels::Rgba, |x, y| {
        let (dx, dy) = (x as f64 + 0.5 - c, y as f64 + 0.5 - c);
        let inside = (dx * dx + dy * dy).sqrt() < c * 0.9;
        let stripe = dy.abs() < c * 0.15;
        match (inside, stripe) {
            (false, _) => [0, 0, 0, 0],
            (true, true) => [255, 255, 255, 255],
            (true, false) => [200, 30, 30, 255],
        }
    })
}

fn main() -> openlogo::Result<()> {
    let backgrounds = vec![Background {
        id: "field".into(),
        image: background(160, 120),
    }];
    let logo = design(40);
    let out = std::env::temp_dir().join("openlogo-synth-composite");
    std::fs::create_dir_all(&out).map_err(|e| openlogo::Error::Internal(e.to_string()))?;

    for index in 0..3 {
        let s = synth_one(&logo, &backgrounds, "acme", index, 7, &SynthConfig::default())?;
        let r = &s.record;
        println!(
            "#{index}: scale {:.2} rot {:+.1} deg, patch at ({}, {}), box [{}, {}, {}, {}], {} support pixels",
            r.spec.scale, r.spec.rotation_deg, r.x, r.y, r.bbox.xmin, r.bbox.ymin, r.bbox.xmax, r.bbox.ymax, s.mask.count()
        );
        s.image.save_png(&out.join(format!("acme_{index}.png")))?;
        s.mask.save_png(&out.join(format!("acme_{index}_mask.png")))?;
    }
    println!("wrote {}", out.display());
    Ok(())
}
