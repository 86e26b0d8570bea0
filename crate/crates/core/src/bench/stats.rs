use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::core::{scale_ratio, DatasetManifest};

pub const STATS_HEADERS: [&str; 5] = [
    "Dataset",
    "Logos",
    "Images",
    "min~max (mean) Instances / Class",
    "min~max (mean) Scale (%)",
];

/// Area fraction separating big from small instances.
pub const DEFAULT_BIG_THRESHOLD: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl Range {
    fn of(values: impl IntoIterator<Item = f64>) -> Option<Range> {
        let mut n = 0usize;
        let (mut min, mut max, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for v in values {
            n += 1;
            min = min.min(v);
            max = max.max(v);
            sum += v;
        }
        (n > 0).then(|| Range {
            min,
            max,
            mean: sum / n as f64,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetRow {
    pub dataset: String,
    pub logos: usize,
    pub images: usize,
    pub instances_per_class: Option<Range>,
    /// Box area as a percentage of image area.
    pub scale_percent: Option<Range>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassRow {
    pub class: String,
    pub images: usize,
    pub instances: usize,
    pub scale_percent: Option<Range>,
}

/// Big/small proportions, counted over instances and over images. An
/// image counts as big when its largest instance is big.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizeShares {
    pub threshold: f64,
    pub big_instances: usize,
    pub small_instances: usize,
    pub big_images: usize,
    pub small_images: usize,
}

impl SizeShares {
    pub fn big_instance_share(&self) -> f64 {
        share(self.big_instances, self.small_instances)
    }

    pub fn big_image_share(&self) -> f64 {
        share(self.big_images, self.small_images)
    }
}

fn share(a: usize, b: usize) -> f64 {
    if a + b == 0 {
        0.0
    } else {
        a as f64 / (a + b) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    /// One row per source dataset, then the whole corpus.
    pub rows: Vec<DatasetRow>,
    pub classes: Vec<ClassRow>,
    pub sizes: SizeShares,
}

pub const TOTAL_ROW: &str = "Total";

/// Corpus statistics. Instance means are unweighted over classes; scale
/// means are unweighted over instances.
pub fn compute_stats(manifest: &DatasetManifest, big_threshold: f64) -> CorpusStats {
    let index = manifest.image_index();
    let mut sources: BTreeSet<&str> = manifest.images.iter().map(|i| i.source.as_str()).collect();
    sources.retain(|s| !s.is_empty());

    let row = |name: &str, keep: &dyn Fn(&str) -> bool| -> DatasetRow {
        let images = manifest.images.iter().filter(|i| keep(&i.source)).count();
        let mut per_class: BTreeMap<&str, usize> = BTreeMap::new();
        let mut scales = Vec::new();
        for a in &manifest.annotations {
            let img = index[a.image_id.as_str()];
            if keep(&img.source) {
                *per_class.entry(a.class.as_str()).or_default() += 1;
                scales.push(scale_ratio(a, img));
            }
        }
        DatasetRow {
            dataset: name.to_string(),
            logos: per_class.len(),
            images,
            instances_per_class: Range::of(per_class.values().map(|&n| n as f64)),
            scale_percent: Range::of(scales),
        }
    };
    let mut rows: Vec<DatasetRow> = sources.iter().map(|s| row(s, &|t| t == *s)).collect();
    rows.push(row(TOTAL_ROW, &|_| true));

    let mut by_class: BTreeMap<&str, (BTreeSet<&str>, Vec<f64>)> = BTreeMap::new();
    let mut largest: BTreeMap<&str, f64> = BTreeMap::new();
    let mut sizes = SizeShares {
        threshold: big_threshold,
        big_instances: 0,
        small_instances: 0,
        big_images: 0,
        small_images: 0,
    };
    for a in &manifest.annotations {
        let img = index[a.image_id.as_str()];
        let s = scale_ratio(a, img);
        let e = by_class.entry(a.class.as_str()).or_default();
        e.0.insert(a.image_id.as_str());
        e.1.push(s);
        if s / 100.0 >= big_threshold {
            sizes.big_instances += 1;
        } else {
            sizes.small_instances += 1;
        }
        let l = largest.entry(a.image_id.as_str()).or_insert(0.0);
        *l = l.max(s);
    }
    for &s in largest.values() {
        if s / 100.0 >= big_threshold {
            sizes.big_images += 1;
        } else {
            sizes.small_images += 1;
        }
    }
    let classes = by_class
        .into_iter()
        .map(|(c, (imgs, scales))| ClassRow {
            class: c.to_string(),
            images: imgs.len(),
            instances: scales.len(),
            scale_percent: Range::of(scales),
        })
        .collect();
    CorpusStats { rows, classes, sizes }
}

/// `1234567` → `"1,234,567"`.
pub fn thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

fn thousands_f(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    let (int, frac) = s.split_once('.').map_or((s.as_str(), None), |(a, b)| (a, Some(b)));
    let grouped = int.parse::<usize>().map_or_else(|_| int.to_string(), thousands);
    match frac {
        Some(f) => format!("{grouped}.{f}"),
        None => grouped,
    }
}

/// Fixed notation with `sig` significant figures.
pub fn significant(v: f64, sig: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v:.prec$}", prec = sig.saturating_sub(1));
    }
    let magnitude = v.abs().log10().floor() as i64 + 1;
    let decimals = (sig as i64 - magnitude).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // Rounding may carry into a new digit (99.995 → 100.00).
    let rounded: f64 = s.parse().unwrap_or(v);
    let m2 = rounded.abs().log10().floor() as i64 + 1;
    if m2 != magnitude {
        let decimals = (sig as i64 - m2).max(0) as usize;
        return format!("{rounded:.decimals$}");
    }
    s
}

pub fn format_instances(r: Option<Range>) -> String {
    match r {
        Some(r) => format!(
            "{}~{} ({})",
            thousands(r.min as usize),
            thousands(r.max as usize),
            thousands_f(r.mean, 2)
        ),
        None => "-".into(),
    }
}

pub fn format_scale(r: Option<Range>) -> String {
    match r {
        Some(r) => format!("{:.4}~{} ({:.2})", r.min, significant(r.max, 4), r.mean),
        None => "-".into(),
    }
}

impl CorpusStats {
    pub fn table_cells(&self) -> Vec<[String; 5]> {
        self.rows
            .iter()
            .map(|r| {
                [
                    r.dataset.clone(),
                    thousands(r.logos),
                    thousands(r.images),
                    format_instances(r.instances_per_class),
                    format_scale(r.scale_percent),
                ]
            })
            .collect()
    }

    /// Plain-text table, columns separated by ` | `.
    pub fn render_table(&self) -> String {
        let cells = self.table_cells();
        let mut widths = STATS_HEADERS.map(str::len);
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |row: &[&str]| -> String {
            let parts: Vec<String> = row.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
            parts.join(" | ").trim_end().to_string()
        };
        let mut out = String::new();
        out.push_str(&line(&STATS_HEADERS));
        out.push('\n');
        let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
        out.push_str(&rule.join("-|-"));
        out.push('\n');
        for row in &cells {
            let refs: Vec<&str> = row.iter().map(String::as_str).collect();
            out.push_str(&line(&refs));
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "\nbig/small at {} area ratio: instances {:.1}% / {:.1}%, images {:.1}% / {:.1}%",
            self.sizes.threshold,
            100.0 * self.sizes.big_instance_share(),
            100.0 * (1.0 - self.sizes.big_instance_share()),
            100.0 * self.sizes.big_image_share(),
            100.0 * (1.0 - self.sizes.big_image_share()),
        );
        out
    }
}
