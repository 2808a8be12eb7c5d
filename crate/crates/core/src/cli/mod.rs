//! Command-line front end: `segment`, `evaluate`, `phantom` and `bench`.
//!
//! Exit status is 0 on success, 1 when any frame or step fails and 2 for
//! usage or configuration errors.

pub mod bench;
pub mod config;
pub mod evaluate;
pub mod phantom;
pub mod segment;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::phantom::{Jitter, PhantomSpec};
use config::{Overrides, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Stems of files the CLI writes next to frames; never treated as inputs.
const DERIVED_SUFFIXES: [&str; 5] = ["_mask", "_overlay", "_ns_t", "_ns_i", "_ns_f"];

pub(crate) fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub(crate) fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm") || e.eq_ignore_ascii_case("png"))
}

/// Input frames of a directory in file-name order: `.pgm` and `.png` files,
/// skipping masks, overlays and NS maps.
pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut frames = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let s = stem(&path);
        if path.is_file() && is_image(&path) && !DERIVED_SUFFIXES.iter().any(|d| s.ends_with(d)) {
            frames.push(path);
        }
    }
    frames.sort();
    Ok(frames)
}

pub(crate) fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}

#[derive(Debug, Parser)]
#[command(
    name = "ncm-lumen",
    version,
    about = "Lumen segmentation of IVOCT frames by neutrosophic c-means"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct CommonFlags {
    /// JSON run configuration; flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for center initialization or phantom noise
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Frames processed in parallel
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: Option<u64>,
    /// Pixel spacing in millimetres
    #[arg(long = "spacing-mm", global = true)]
    pub spacing_mm: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment one frame or every frame in a directory
    Segment {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the T, I and F maps
        #[arg(long)]
        ns_maps: bool,
        /// Record stage timings in the manifest (makes it run-dependent)
        #[arg(long)]
        timings: bool,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Score automatic masks against manual masks with the same file names
    Evaluate {
        auto_dir: PathBuf,
        manual_dir: PathBuf,
        /// CSV path; a JSON summary is written next to it
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Generate a phantom suite with ground-truth masks
    Phantom {
        /// Base phantom spec as JSON; defaults when absent
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        speckle: Option<f64>,
        #[arg(long, default_value_t = Jitter::standard().center_px)]
        jitter_center: f64,
        #[arg(long, default_value_t = Jitter::standard().radius_px)]
        jitter_radius: f64,
        #[arg(long, default_value_t = Jitter::standard().speckle)]
        jitter_speckle: f64,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Compare NCM and FCM segmentation over a phantom or annotated suite
    Bench {
        suite_dir: PathBuf,
        /// Optional JSON report path
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: CommonFlags,
    },
}

enum Failure {
    Usage(anyhow::Error),
    Run(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Run(e)
    }
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn resolve(
    common: &CommonFlags,
    input: Option<PathBuf>,
    output: Option<PathBuf>,
) -> std::result::Result<RunConfig, Failure> {
    let flags = Overrides {
        seed: common.seed,
        jobs: common.jobs.map(|j| j as usize),
        spacing_mm: common.spacing_mm,
        input,
        output,
    };
    RunConfig::resolve(common.config.as_deref(), &flags)
        .with_context(|| match &common.config {
            Some(p) => format!("config {}", p.display()),
            None => "flags".into(),
        })
        .map_err(usage)
}

fn run_command(command: Command) -> std::result::Result<i32, Failure> {
    match command {
        Command::Segment {
            input,
            out,
            ns_maps,
            timings,
            common,
        } => {
            let mut cfg = resolve(&common, Some(input), out)?;
            cfg.write_ns_maps |= ns_maps;
            cfg.record_timings |= timings;
            let input = cfg.input.clone().expect("set by flag");
            let outdir = cfg
                .output
                .clone()
                .ok_or_else(|| usage(anyhow::anyhow!("--out is required (flag or config \"output\")")))?;
            let manifest = segment::cmd_segment(&input, &cfg, &outdir).context("segment")?;
            for f in manifest.frames.iter().filter(|f| f.error.is_some()) {
                eprintln!("{}: {}", f.input.display(), f.error.as_deref().unwrap_or_default());
            }
            println!(
                "segmented {} of {} frames into {}",
                manifest.succeeded,
                manifest.frames.len(),
                outdir.display()
            );
            Ok(if manifest.all_ok() { EXIT_OK } else { EXIT_FAILURE })
        }
        Command::Evaluate {
            auto_dir,
            manual_dir,
            out,
            common,
        } => {
            let cfg = resolve(&common, None, Some(out.clone()))?;
            let spacing = cfg.spacing_mm.unwrap_or(1.0);
            let eval = evaluate::cmd_evaluate(&auto_dir, &manual_dir, spacing, &out).context("evaluate")?;
            let m = &eval.summary.mean;
            println!(
                "{} frames: DI {:.4} JACC {:.4} PAD {:.4} HD {:.4} mm -> {}",
                eval.rows.len(),
                m.di,
                m.jacc,
                m.pad,
                m.hd_mm,
                out.display()
            );
            Ok(EXIT_OK)
        }
        Command::Phantom {
            spec,
            n,
            out,
            speckle,
            jitter_center,
            jitter_radius,
            jitter_speckle,
            common,
        } => {
            if n == 0 {
                return Err(usage(anyhow::anyhow!("--n must be at least 1")));
            }
            let mut base = match &spec {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| usage(Error::io(p, e)))?;
                    serde_json::from_str::<PhantomSpec>(&text)
                        .with_context(|| format!("phantom spec {}", p.display()))
                        .map_err(usage)?
                }
                None => PhantomSpec::default(),
            };
            if let Some(seed) = common.seed {
                base.seed = seed;
            }
            if let Some(s) = speckle {
                base.speckle_sigma = s;
            }
            base.validate().context("phantom spec").map_err(usage)?;
            let jitter = Jitter {
                center_px: jitter_center,
                radius_px: jitter_radius,
                speckle: jitter_speckle,
            };
            let images = phantom::cmd_phantom(&base, n, &jitter, &out).context("phantom")?;
            println!("wrote {} phantoms to {}", images.len(), out.display());
            Ok(EXIT_OK)
        }
        Command::Bench { suite_dir, out, common } => {
            let cfg = resolve(&common, Some(suite_dir.clone()), out.clone())?;
            let frames = bench::load_suite(&suite_dir, cfg.spacing_mm).context("load suite")?;
            let report = bench::compare(&frames, &cfg.pipeline, cfg.jobs).context("bench")?;
            print!("{}", bench::format_table(&report));
            if let Some(path) = out {
                let json = serde_json::to_string_pretty(&report).context("bench report")?;
                crate::image::write_atomic(&path, format!("{json}\n").as_bytes()).context("bench report")?;
            }
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run_command(cli.command) {
        Ok(code) => code,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            EXIT_FAILURE
        }
    }
}
