use std::collections::{BTreeMap, BTreeSet};

use log::warn;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::core::{derive_seed, rng_from_seed, str_key, DatasetManifest, TEST, TRAIN, TRAINVAL, VAL};
use crate::error::{Error, Result};

pub const DEFAULT_TRAINVAL_SIZE: usize = 40;
pub const DEFAULT_VAL_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SplitVariant {
    /// Supervised classes train on their designated `trainval` images;
    /// every other image goes to val/test per class.
    Open {
        supervised: BTreeSet<String>,
        trainval_size: usize,
        val_fraction: f64,
    },
    FullySupervised {
        train: f64,
        val: f64,
        test: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    #[serde(flatten)]
    pub variant: SplitVariant,
    pub seed: u64,
}

impl SplitPlan {
    pub fn open(supervised: BTreeSet<String>, seed: u64) -> Self {
        SplitPlan {
            variant: SplitVariant::Open {
                supervised,
                trainval_size: DEFAULT_TRAINVAL_SIZE,
                val_fraction: DEFAULT_VAL_FRACTION,
            },
            seed,
        }
    }

    pub fn fully_supervised(seed: u64) -> Self {
        SplitPlan {
            variant: SplitVariant::FullySupervised {
                train: 0.60,
                val: 0.10,
                test: 0.30,
            },
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, f: f64| {
            if (0.0..=1.0).contains(&f) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} fraction {f} is outside [0, 1]")))
            }
        };
        match &self.variant {
            SplitVariant::Open { val_fraction, .. } => unit("val", *val_fraction),
            SplitVariant::FullySupervised { train, val, test } => {
                unit("train", *train)?;
                unit("val", *val)?;
                unit("test", *test)?;
                if (train + val + test - 1.0).abs() > 1e-9 {
                    return Err(Error::Config(format!(
                        "split fractions {train} + {val} + {test} do not sum to 1"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Images taken for a fraction `f` of `n`: `round(f·n)`, but at least one
/// once there are two images to share.
pub fn fraction_count(f: f64, n: usize) -> usize {
    let k = (f * n as f64).round() as usize;
    if n >= 2 && f > 0.0 {
        k.clamp(1, n)
    } else {
        k.min(n)
    }
}

/// Each image belongs to the lexicographically smallest class it contains.
fn primary_classes(manifest: &DatasetManifest) -> BTreeMap<String, String> {
    let mut primary: BTreeMap<String, String> = BTreeMap::new();
    for a in &manifest.annotations {
        primary
            .entry(a.image_id.clone())
            .and_modify(|c| {
                if a.class < *c {
                    *c = a.class.clone();
                }
            })
            .or_insert_with(|| a.class.clone());
    }
    primary
}

fn shuffled(ids: &BTreeSet<String>, seed: u64, class: &str, stage: u64) -> Vec<String> {
    let mut v: Vec<String> = ids.iter().cloned().collect();
    v.shuffle(&mut rng_from_seed(derive_seed(seed, &[str_key(class), stage])));
    v
}

/// Assign every annotated image to exactly one of train/val/test. Splitting
/// is per class, with multi-class images grouped under their primary class.
/// Existing train/val/test sets are replaced; other named splits, such as
/// `trainval`, are kept. Registry supervision flags are set from the plan.
pub fn split(manifest: &DatasetManifest, plan: &SplitPlan) -> Result<DatasetManifest> {
    plan.validate()?;
    let primary = primary_classes(manifest);
    let unannotated = manifest.images.iter().filter(|i| !primary.contains_key(&i.id)).count();
    if unannotated > 0 {
        warn!("{unannotated} images carry no annotation and are left out of every split");
    }
    let mut groups: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (img, class) in &primary {
        groups.entry(class.clone()).or_default().insert(img.clone());
    }

    let mut train = BTreeSet::new();
    let mut val = BTreeSet::new();
    let mut test = BTreeSet::new();
    let mut out = manifest.clone();

    match &plan.variant {
        SplitVariant::Open {
            supervised,
            trainval_size,
            val_fraction,
        } => {
            let known = manifest.annotated_classes();
            for c in supervised {
                if !manifest.registry.contains(c) && !known.contains(c) {
                    return Err(Error::InvalidArgument(format!("supervised class {c:?} is not in the manifest")));
                }
            }
            let empty = BTreeSet::new();
            let trainval = manifest.split(TRAINVAL).unwrap_or(&empty);
            let mut trainval_per_class: BTreeMap<&str, usize> = BTreeMap::new();
            for a in &manifest.annotations {
                if trainval.contains(&a.image_id) && supervised.contains(&a.class) {
                    trainval_per_class.entry(a.class.as_str()).or_default();
                }
            }
            for id in trainval {
                if let Some(c) = primary.get(id) {
                    if supervised.contains(c) {
                        *trainval_per_class.entry(c.as_str()).or_default() += 1;
                    } else {
                        warn!("trainval image {id:?} has unsupervised primary class {c:?}");
                    }
                }
            }
            for c in supervised {
                match trainval_per_class.get(c.as_str()) {
                    None => return Err(Error::MissingTrainval(c.clone())),
                    Some(&n) if n != *trainval_size => {
                        warn!("supervised class {c:?} has {n} trainval images, expected {trainval_size}")
                    }
                    _ => {}
                }
            }
            for (class, ids) in &groups {
                let rest: BTreeSet<String> = ids.iter().filter(|id| !trainval.contains(*id)).cloned().collect();
                train.extend(ids.iter().filter(|id| trainval.contains(*id)).cloned());
                let order = shuffled(&rest, plan.seed, class, 0);
                let k = fraction_count(*val_fraction, order.len());
                val.extend(order[..k].iter().cloned());
                test.extend(order[k..].iter().cloned());
            }
            for c in &mut out.registry.classes {
                c.supervised = supervised.contains(&c.name);
            }
        }
        SplitVariant::FullySupervised {
            train: f_train,
            val: f_val,
            ..
        } => {
            for (class, ids) in &groups {
                let order = shuffled(ids, plan.seed, class, 1);
                let n = order.len();
                let k_val = fraction_count(*f_val, n);
                let k_train = fraction_count(*f_train, n).min(n - k_val);
                train.extend(order[..k_train].iter().cloned());
                val.extend(order[k_train..k_train + k_val].iter().cloned());
                test.extend(order[k_train + k_val..].iter().cloned());
            }
            for c in &mut out.registry.classes {
                c.supervised = true;
            }
        }
    }

    out.splits.insert(TRAIN.to_string(), train);
    out.splits.insert(VAL.to_string(), val);
    out.splits.insert(TEST.to_string(), test);
    out.validate()?;
    Ok(out)
}
