use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::commands::{
    run_anonymize, run_detect, run_eval_det, run_eval_embed, run_eval_seg, run_histogram,
    DEFAULT_HIST_BINS, DEFAULT_HIST_HI, DEFAULT_HIST_LO,
};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult, EXIT_FAILURE};
use crate::manifest::RUN_MANIFEST_FILE;

#[derive(Parser, Debug)]
#[command(
    name = "anonypipe",
    version,
    about = "Dataset face anonymization and evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed for inpainting (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Detector confidence threshold in [0, 1] (overrides the config).
    #[arg(long)]
    threshold: Option<f64>,
    /// Worker threads, 0 for all cores (overrides the config).
    #[arg(long)]
    jobs: Option<usize>,
}

impl Common {
    fn load(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.set_seed(s);
        }
        if let Some(t) = self.threshold {
            cfg.threshold = t;
        }
        if let Some(j) = self.jobs {
            cfg.jobs = j;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Detect and anonymize every face of an image tree.
    Anonymize {
        #[command(flatten)]
        common: Common,
        /// Input directory (overrides the config).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run manifest path [default: <out>/run_manifest.json].
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Write a detection manifest for an image tree.
    Detect {
        #[command(flatten)]
        common: Common,
        /// Input directory [default: input_dir from the config].
        input: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Detection mAP (overall and by face size) and NoA.
    EvalDet {
        gt: PathBuf,
        pred: PathBuf,
        /// Comma-separated IoU thresholds [default: 0.50:0.05:0.95].
        #[arg(long, value_delimiter = ',')]
        iou_thresholds: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Embedding distance between original and anonymized faces.
    EvalEmbed {
        #[command(flatten)]
        common: Common,
        orig_dir: PathBuf,
        anon_dir: PathBuf,
        /// Detection manifest giving the face boxes.
        manifest: PathBuf,
        /// Per-face CSV; the histogram goes next to it as <stem>_hist.csv.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_HIST_BINS)]
        bins: usize,
        /// Also draw the histogram as SVG.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Segmentation IoU / iIoU per class, and relative IoU change against a baseline.
    EvalSeg {
        /// Instance-id PNGs (class * 1000 + instance, or bare class id).
        gt_dir: PathBuf,
        /// Class-id PNGs at the same relative paths.
        pred_dir: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        classes: Vec<u32>,
        /// Report of the model trained on original data.
        #[arg(long)]
        baseline: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Equal-width histogram of one CSV column.
    Histogram {
        input: PathBuf,
        #[arg(long, default_value = "l2_distance")]
        column: String,
        #[arg(long, default_value_t = DEFAULT_HIST_BINS)]
        bins: usize,
        #[arg(long, default_value_t = DEFAULT_HIST_LO, allow_negative_numbers = true)]
        lo: f64,
        #[arg(long, default_value_t = DEFAULT_HIST_HI, allow_negative_numbers = true)]
        hi: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text)
        .map_err(|e| CliError::failure(format!("cannot write {}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn json(value: &impl serde::Serialize) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn hist_path(csv: &Path) -> PathBuf {
    let stem = csv
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("distances");
    csv.with_file_name(format!("{stem}_hist.csv"))
}

fn execute(cmd: Command) -> CliResult<i32> {
    match cmd {
        Command::Anonymize {
            common,
            input,
            out,
            manifest,
        } => {
            if common.config.is_none() {
                return Err(CliError::usage("anonymize needs --config"));
            }
            let mut cfg = common.load()?;
            if let Some(i) = input {
                cfg.input_dir = i;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            let manifest_path = manifest.unwrap_or_else(|| cfg.output_dir.join(RUN_MANIFEST_FILE));
            let m = run_anonymize(&cfg, &manifest_path)?;
            eprintln!(
                "{} images: {} ok, {} partial, {} failed; {} of {} faces anonymized",
                m.images.len(),
                m.status_counts.ok,
                m.status_counts.partial,
                m.status_counts.failed,
                m.noa,
                m.faces_detected
            );
            for img in m
                .images
                .iter()
                .filter(|i| i.error.is_some() || !i.face_errors.is_empty())
            {
                if let Some(e) = &img.error {
                    eprintln!("  {}: {e}", img.image_path);
                }
                for f in &img.face_errors {
                    eprintln!("  {} face {}: {}", img.image_path, f.face_index, f.error);
                }
            }
            Ok(if m.is_complete() { 0 } else { EXIT_FAILURE })
        }
        Command::Detect { common, input, out } => {
            let cfg = common.load()?;
            let input = input.unwrap_or_else(|| cfg.input_dir.clone());
            let manifest = run_detect(&cfg, &input)?;
            write_file(&out, &manifest.to_json()?)?;
            eprintln!(
                "{} faces in {} images",
                manifest.face_count(),
                manifest.entries.len()
            );
            Ok(0)
        }
        Command::EvalDet {
            gt,
            pred,
            iou_thresholds,
            out,
        } => {
            let report = run_eval_det(&gt, &pred, iou_thresholds.as_deref())?;
            emit(out.as_deref(), &json(&report)?)?;
            Ok(0)
        }
        Command::EvalEmbed {
            common,
            orig_dir,
            anon_dir,
            manifest,
            out,
            bins,
            svg,
        } => {
            let cfg = common.load()?;
            let res = run_eval_embed(&cfg, &orig_dir, &anon_dir, &manifest, bins)?;
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            let mut w = csv::Writer::from_path(&out)?;
            for r in &res.records {
                w.serialize(r)?;
            }
            if res.records.is_empty() {
                w.write_record(["image_path", "face_index", "l2_distance"])?;
            }
            w.flush()?;
            write_file(&hist_path(&out), &res.histogram.to_csv())?;
            if let Some(svg) = svg {
                write_file(&svg, &res.histogram.to_svg("embedding L2 distance"))?;
            }
            Ok(0)
        }
        Command::EvalSeg {
            gt_dir,
            pred_dir,
            classes,
            baseline,
            out,
        } => {
            let report = run_eval_seg(&gt_dir, &pred_dir, &classes, baseline.as_deref())?;
            emit(out.as_deref(), &json(&report)?)?;
            Ok(0)
        }
        Command::Histogram {
            input,
            column,
            bins,
            lo,
            hi,
            out,
            svg,
        } => {
            let h = run_histogram(&input, &column, bins, lo, hi)?;
            emit(out.as_deref(), &h.to_csv())?;
            if let Some(svg) = svg {
                write_file(&svg, &h.to_svg(&column))?;
            }
            if h.overflow > 0 {
                eprintln!("{} values outside [{lo}, {hi}]", h.overflow);
            }
            Ok(0)
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code: 0 success, 1 incomplete run or failure, 2 bad usage or
/// configuration.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
