//! The `openlogo` command line: one binary, git-style subcommands, every
//! run seeded from `--seed` and described by a `run.json` record.

mod commands;
mod config;
mod preview;
mod record;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::{BuildSection, PairSection, PreviewSection, RunConfig, SplitSection, SynthSection};
pub use preview::{box_pixels, class_color, draw_boxes, render_preview};
pub use record::{digest_path, sha256_hex, InputDigest, RunRecord, RUN_RECORD};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "openlogo", version, about = "Synthetic logo data, open-logo benchmark assembly and detection evaluation")]
pub struct Cli {
    /// Global seed; every random choice derives from it.
    #[arg(long, global = true, env = "OPENLOGO_SEED")]
    pub seed: Option<u64>,
    /// Worker threads. Outputs do not depend on it.
    #[arg(long, global = true, env = "OPENLOGO_WORKERS")]
    pub workers: Option<usize>,
    /// TOML run configuration; flags override it.
    #[arg(long, global = true, env = "OPENLOGO_CONFIG")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Composite transformed logo designs onto backgrounds.
    Synth(SynthArgs),
    /// Generate clean/corrupted/mask training pairs.
    Pairs(PairsArgs),
    /// Ingest, merge, clean and filter source datasets into one manifest.
    Build(BuildArgs),
    /// Assign train/val/test splits.
    Split(SplitArgs),
    /// Corpus statistics table.
    Stats(StatsArgs),
    /// Evaluate detections: per-class AP and mAP columns.
    Eval(EvalArgs),
    /// Compose real and synthetic training manifests.
    Compose(ComposeArgs),
    /// Render sample images with their boxes drawn in.
    Preview(PreviewArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Class registry; every used class needs a design image.
    #[arg(long)]
    pub registry: PathBuf,
    /// Directory of background images (searched recursively).
    #[arg(long)]
    pub backgrounds: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub per_class: Option<usize>,
    /// Use only the first N registry classes.
    #[arg(long)]
    pub classes: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PairsArgs {
    /// Non-logo images: a directory or a manifest.
    #[arg(long)]
    pub non_logo: Option<PathBuf>,
    /// COCO-style instances file with object segmentations.
    #[arg(long)]
    pub segmentation: Option<PathBuf>,
    #[arg(long)]
    pub per_source: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Source as FORMAT:TAG:PATH with FORMAT one of coco-json, voc-xml,
    /// flat-csv. Repeatable.
    #[arg(long = "source", required = true)]
    pub sources: Vec<String>,
    /// Merge rules (TOML); replaces the rules from the config.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Resolve class names through this registry.
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// Newline-delimited class names to drop.
    #[arg(long)]
    pub exclude: Option<PathBuf>,
    #[arg(long)]
    pub min_images: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlanKind {
    Open,
    FullySupervised,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub registry: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "open")]
    pub plan: PlanKind,
    /// Newline-delimited supervised classes; defaults to the registry flags.
    #[arg(long)]
    pub supervised: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// JSONL or whitespace-separated detections.
    #[arg(long)]
    pub detections: PathBuf,
    #[arg(long)]
    pub supervised: Option<PathBuf>,
    #[arg(long)]
    pub iou: Option<f64>,
    #[arg(long)]
    pub eleven_point: bool,
    #[arg(long)]
    pub split: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Mixed,
    Sequential,
}

#[derive(Debug, Args)]
pub struct ComposeArgs {
    #[arg(long)]
    pub real: PathBuf,
    #[arg(long)]
    pub synth: PathBuf,
    #[arg(long)]
    pub registry: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PreviewArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

fn report_error(kind: &str, message: &str, code: i32) {
    let report = serde_json::json!({
        "status": "error",
        "kind": kind,
        "message": message,
        "exit_code": code,
    });
    eprintln!("{report}");
}

/// Parse `args` (program name first) and run. Returns the process exit
/// code: 0 success, 1 input error, 2 internal error. Failures print one
/// JSON object on stderr.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    EXIT_OK
                }
                _ => {
                    let msg = e.render().to_string();
                    report_error("usage", msg.trim(), EXIT_INPUT);
                    EXIT_INPUT
                }
            };
        }
    };
    match std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| commands::execute(cli))) {
        Ok(Ok(())) => EXIT_OK,
        Ok(Err(e)) => {
            let code = if e.is_input_error() { EXIT_INPUT } else { EXIT_INTERNAL };
            report_error(e.kind(), &e.to_string(), code);
            code
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            report_error(Error::Internal(String::new()).kind(), &msg, EXIT_INTERNAL);
            EXIT_INTERNAL
        }
    }
}
