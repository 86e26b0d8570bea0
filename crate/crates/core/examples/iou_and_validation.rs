//! Box geometry and annotation checks.
//!
//! cargo run --example iou_and_validation

use openlogo::core::{iou, validate_annotation, Annotation, BoundingBox, ImageRecord};

fn main() {
    let a = BoundingBox::new(10.0, 10.0, 50.0, 40.0);
    let b = BoundingBox::new(30.0, 20.0, 70.0, 60.0);
    println!("area(a) = {}  area(b) = {}", a.area(), b.area());
    println!("intersection = {}", a.intersection_area(&b));
    println!("iou = {:.4}", iou(&a, &b));
    println!("iou(a, a) = {}", iou(&a, &a));

    let img = ImageRecord {
        id: "street_0001".into(),
        path: "street_0001.jpg".into(),
        width: 64,
        height: 48,
        source: "demo".into(),
    };
    let candidates = [
        ("inside", BoundingBox::new(4.0, 4.0, 30.0, 20.0)),
        ("off the edge", BoundingBox::new(50.0, 30.0, 80.0, 50.0)),
        ("inverted", BoundingBox::new(20.0, 20.0, 10.0, 30.0)),
        ("zero width", BoundingBox::new(5.0, 5.0, 5.0, 9.0)),
    ];
    for (label, bbox) in candidates {
        let ann = Annotation {
            image_id: img.id.clone(),
            class: "acme".into(),
            bbox,
        };
        let issues: Vec<&str> = validate_annotation(&ann, Some(&img)).iter().map(|v| v.code()).collect();
        println!("{label:>12}: {}", if issues.is_empty() { "ok".to_string() } else { issues.join(", ") });
    }
}
