mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{ann, image, ingest_sources, open_fixture, split_fixture};
use openlogo::bench::{
    compose_training_set, compute_stats, exclude_classes, filter_small_classes, ingest, merge_and_clean, split,
    ComposeMode, ConflictPolicy, Fragment, MergeRule, MergeRules, SourceFormat, SplitPlan, TOTAL_ROW,
};
use openlogo::core::{validate_annotation, ClassEntry, ClassRegistry, DatasetManifest, TEST, TRAIN, VAL};
use openlogo::Error;
use proptest::prelude::*;

fn rules_for(names: &[&str]) -> MergeRules {
    MergeRules {
        rules: names
            .iter()
            .map(|n| MergeRule {
                canonical: n.to_string(),
                patterns: vec![format!("{n}*")],
            })
            .collect(),
        conflict: ConflictPolicy::Abort,
    }
}

#[test]
fn three_formats_merge_into_one_vocabulary() {
    let dir = tempfile::tempdir().unwrap();
    let (coco, voc, csv, _, _) = ingest_sources(dir.path());
    let frags = vec![
        ingest(&coco, SourceFormat::CocoJson, "coco").unwrap(),
        ingest(&voc, SourceFormat::VocXml, "voc").unwrap(),
        ingest(&csv, SourceFormat::FlatCsv, "csv").unwrap(),
    ];
    let n_in: usize = frags.iter().map(|f| f.annotations.len()).sum();
    let (m, report) = merge_and_clean(&frags, &rules_for(&["acme", "zenith", "orbit", "nova"]), None).unwrap();
    assert_eq!(m.images.len(), 30);
    assert_eq!(report.annotations_in, n_in);
    assert_eq!(report.annotations_out + report.dropped.len(), n_in);
    assert_eq!(report.dropped.len(), 1);
    assert_eq!(
        m.annotated_classes().into_iter().collect::<Vec<_>>(),
        ["acme", "nova", "orbit", "zenith"]
    );
    let sources: BTreeSet<&str> = m.images.iter().map(|i| i.source.as_str()).collect();
    assert_eq!(sources, ["coco", "csv", "voc"].into());
    let stats = compute_stats(&m, 0.02);
    assert_eq!(stats.rows.last().unwrap().dataset, TOTAL_ROW);
    assert_eq!(stats.rows.last().unwrap().images, 30);
    assert_eq!(stats.rows.len(), 4);
}

#[test]
fn overlapping_rules_abort_or_take_first() {
    let frag = Fragment {
        source: "s".into(),
        images: vec![image("a", 100, 100, "s")],
        annotations: vec![ann("a", "acme-zenith", [1.0, 1.0, 20.0, 20.0])],
    };
    let mut rules = MergeRules {
        rules: vec![
            MergeRule {
                canonical: "acme".into(),
                patterns: vec!["acme*".into()],
            },
            MergeRule {
                canonical: "zenith".into(),
                patterns: vec!["*zenith".into()],
            },
        ],
        conflict: ConflictPolicy::Abort,
    };
    match merge_and_clean(std::slice::from_ref(&frag), &rules, None) {
        Err(Error::MergeConflict { first, second, .. }) => assert_eq!((first.as_str(), second.as_str()), ("acme", "zenith")),
        other => panic!("expected a conflict, got {other:?}"),
    }
    rules.conflict = ConflictPolicy::FirstMatch;
    let (m, _) = merge_and_clean(&[frag], &rules, None).unwrap();
    assert_eq!(m.annotations[0].class, "acme");
}

#[test]
fn colliding_ids_are_prefixed_by_source() {
    let f = |src: &str| Fragment {
        source: src.into(),
        images: vec![image("0001", 50, 50, src)],
        annotations: vec![ann("0001", "acme", [1.0, 1.0, 9.0, 9.0])],
    };
    let (m, report) = merge_and_clean(&[f("x"), f("y")], &MergeRules::default(), None).unwrap();
    let ids: BTreeSet<&str> = m.images.iter().map(|i| i.id.as_str()).collect();
    assert_eq!(ids, ["x/0001", "y/0001"].into());
    assert_eq!(m.annotations.len(), 2);
    assert!(!report.prefixed_ids.is_empty());
}

#[test]
fn registry_misses_are_reported_not_guessed() {
    let frag = Fragment {
        source: "s".into(),
        images: vec![image("a", 100, 100, "s")],
        annotations: vec![ann("a", "Acme Corp", [1.0, 1.0, 20.0, 20.0]), ann("a", "unknown", [1.0, 1.0, 20.0, 20.0])],
    };
    let registry = ClassRegistry::new(vec![ClassEntry {
        aliases: vec!["Acme Corp".into()],
        ..ClassEntry::new("acme")
    }])
    .unwrap();
    let (m, report) = merge_and_clean(&[frag], &MergeRules::default(), Some(&registry)).unwrap();
    assert_eq!(m.annotations.len(), 1);
    assert_eq!(m.annotations[0].class, "acme");
    assert_eq!(report.alias_misses.get("unknown").copied(), Some(1));
}

#[test]
fn exclusion_removes_class_and_emptied_images() {
    let m = open_fixture(0, 0, 3, 12);
    let (out, removed) = exclude_classes(m, &["uns01".to_string()].into());
    assert!(!out.annotated_classes().contains("uns01"));
    assert!(!out.registry.contains("uns01"));
    assert_eq!(out.images.len(), 24);
    assert_eq!(removed.images, 12);
}

#[test]
fn open_split_counts() {
    let m = open_fixture(5, 60, 20, 100);
    let sup: BTreeSet<String> = (0..5).map(|i| format!("sup{i:02}")).collect();
    let out = split(&m, &SplitPlan::open(sup, 1)).unwrap();
    assert_eq!(out.split(TRAIN).unwrap().len(), 200);
    let val = out.split(VAL).unwrap();
    let test = out.split(TEST).unwrap();
    assert_eq!(val.len() + test.len() + 200, m.images.len());
    assert!(val.is_disjoint(test));
    for a in &out.annotations {
        let n = if a.class.starts_with("sup") { 60 } else { 100 };
        let class_val = out.annotations.iter().filter(|b| b.class == a.class && val.contains(&b.image_id)).count();
        assert!((class_val as i64 - n as i64 / 10).abs() <= 1, "{}: {class_val}", a.class);
    }
}

#[test]
fn missing_trainval_is_an_error() {
    let m = split_fixture(&[("a".into(), 0, 30, true)]);
    let plan = SplitPlan::open(["a".to_string()].into(), 0);
    assert!(matches!(split(&m, &plan), Err(Error::MissingTrainval(c)) if c == "a"));
}

#[test]
fn compose_modes() {
    let real = {
        let mut m = open_fixture(0, 0, 1, 6);
        m.splits.insert(TRAIN.into(), m.images.iter().take(4).map(|i| i.id.clone()).collect());
        m
    };
    let mut synth = DatasetManifest::new();
    for i in 0..3 {
        let id = format!("synth/x/{i}");
        synth.images.push(image(&id, 64, 48, "synth"));
        synth.annotations.push(ann(&id, "x", [1.0, 1.0, 10.0, 10.0]));
    }
    let mixed = compose_training_set(&real, &synth, ComposeMode::Mixed).unwrap();
    assert_eq!(mixed.len(), 1);
    let sources: Vec<&str> = mixed[0].images.iter().map(|i| i.source.as_str()).collect();
    assert_eq!(sources, ["fixture", "synth", "fixture", "synth", "fixture", "synth", "fixture"]);
    assert_eq!(mixed[0].split(TRAIN).unwrap().len(), 7);
    let seq = compose_training_set(&real, &synth, ComposeMode::Sequential).unwrap();
    assert_eq!(seq[0].images.len(), 3);
    assert_eq!(seq[1].images.len(), 4);
    assert!(seq[0].images.iter().all(|i| i.source == "synth"));
}

/// Random multi-source, multi-class manifest; some boxes invalid.
fn arb_fragments() -> impl Strategy<Value = Vec<Fragment>> {
    let frag = (1usize..6, prop::collection::vec((0usize..6, 0usize..5, -10i32..70, -10i32..70, 1i32..40, 1i32..40), 0..20));
    prop::collection::vec(frag, 1..4).prop_map(|frags| {
        frags
            .into_iter()
            .enumerate()
            .map(|(s, (n_img, boxes))| {
                let src = format!("src{s}");
                let images = (0..n_img).map(|i| image(&format!("i{i}"), 64, 64, &src)).collect();
                let annotations = boxes
                    .into_iter()
                    .map(|(img, c, x, y, w, h)| {
                        ann(&format!("i{}", img % n_img), ["Acme", "acme_2", "ZENITH", "nova", "misc"][c], [
                            x as f64,
                            y as f64,
                            (x + w) as f64,
                            (y + h) as f64,
                        ])
                    })
                    .collect();
                Fragment {
                    source: src,
                    images,
                    annotations,
                }
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn merged_manifest_is_valid_and_accounts_for_every_box(frags in arb_fragments()) {
        let rules = rules_for(&["acme", "zenith"]);
        let (m, report) = merge_and_clean(&frags, &rules, None).unwrap();
        prop_assert!(m.validate().is_ok());
        let index = m.image_index();
        for a in &m.annotations {
            prop_assert!(validate_annotation(a, Some(index[a.image_id.as_str()])).is_empty());
        }
        let n_in: usize = frags.iter().map(|f| f.annotations.len()).sum();
        prop_assert_eq!(m.annotations.len() + report.dropped.len(), n_in);
        let classes = m.annotated_classes();
        prop_assert!(classes.iter().all(|c| ["acme", "zenith", "nova", "misc"].contains(&c.as_str())));
    }

    #[test]
    fn filtering_keeps_exactly_the_frequent_classes(counts in prop::collection::vec(1usize..15, 1..6), min in 1usize..12) {
        let classes: Vec<(String, usize, usize, bool)> =
            counts.iter().enumerate().map(|(i, &n)| (format!("c{i}"), 0, n, false)).collect();
        let m = split_fixture(&classes);
        let (once, report) = filter_small_classes(m, min);
        let want: BTreeSet<String> = classes.iter().filter(|c| c.2 >= min).map(|c| c.0.clone()).collect();
        prop_assert_eq!(once.annotated_classes(), want);
        prop_assert_eq!(report.classes.len(), classes.iter().filter(|c| c.2 < min).count());
        let (twice, again) = filter_small_classes(once.clone(), min);
        prop_assert_eq!(twice, once);
        prop_assert!(again.classes.is_empty());
    }

    #[test]
    fn fully_supervised_split_partitions_every_annotated_image(
        counts in prop::collection::vec(1usize..40, 1..6),
        seed in any::<u64>(),
    ) {
        let classes: Vec<(String, usize, usize, bool)> =
            counts.iter().enumerate().map(|(i, &n)| (format!("c{i}"), 0, n, true)).collect();
        let m = split_fixture(&classes);
        let out = split(&m, &SplitPlan::fully_supervised(seed)).unwrap();
        let sets: Vec<&BTreeSet<String>> = [TRAIN, VAL, TEST].iter().map(|s| out.split(s).unwrap()).collect();
        let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
        for s in &sets {
            for id in s.iter() {
                *seen.entry(id.as_str()).or_default() += 1;
            }
        }
        prop_assert_eq!(seen.len(), m.images.len());
        prop_assert!(seen.values().all(|&n| n == 1));
        prop_assert_eq!(split(&m, &SplitPlan::fully_supervised(seed)).unwrap(), out);
    }

    #[test]
    fn per_class_instance_mean_matches_direct_count(counts in prop::collection::vec(1usize..9, 1..5)) {
        let classes: Vec<(String, usize, usize, bool)> =
            counts.iter().enumerate().map(|(i, &n)| (format!("c{i}"), 0, n, false)).collect();
        let m = split_fixture(&classes);
        let stats = compute_stats(&m, 0.02);
        let total = stats.rows.last().unwrap();
        let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
        let r = total.instances_per_class.unwrap();
        prop_assert!((r.mean - mean).abs() < 1e-12);
        prop_assert_eq!(r.min, *counts.iter().min().unwrap() as f64);
        prop_assert_eq!(r.max, *counts.iter().max().unwrap() as f64);
    }
}
