//! Detection evaluation: greedy IoU matching, per-class average precision,
//! mAP over class groups and over big/small instance bands.

mod ap;
mod detections;
mod evaluate;
mod matching;

pub use ap::{average_precision, Interpolation};
pub use detections::{parse_detections, read_detections, write_detections};
pub use evaluate::{evaluate, ClassResult, EvalConfig, EvalReport, REPORT_COLUMNS};
pub use matching::{detection_order, match_detections, match_with_ignore, ranked, MatchFlag};
