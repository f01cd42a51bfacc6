use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use panodrag::io::{load_case, load_erp, save_case, save_rgb};
use panodrag::report::{write_json, write_jsonl, F17};
use panodrag::suite::{
    run_case, run_suite, Ablation, CaseFailure, PairOutcome, PathHashes, SuiteConfig,
};
use panodrag::synth::{family_case, Family};
use panodrag_core::drag::DragConfig;
use panodrag_core::metrics::EvalOptions;
use panodrag_core::reproject::{align_case, extract_perspective, PerspectiveSpec};
use panodrag_core::SphericalCoord;

/// Drag editing of equirectangular panoramas. Angles are in degrees.
#[derive(Debug, Parser)]
#[command(name = "panodrag", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Rotate a case so its first drag's midpoint sits at `--target-lon`.
    Align {
        case_dir: PathBuf,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        target_lon: f64,
        /// Keep the midpoint's latitude (otherwise move it to the equator).
        #[arg(long, default_value_t = true, num_args = 0..=1, default_missing_value = "true", action = clap::ArgAction::Set)]
        keep_lat: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the drag pipeline on one case and write the edited case.
    Drag {
        case_dir: PathBuf,
        #[command(flatten)]
        drag: DragArgs,
        #[arg(long)]
        out: PathBuf,
        /// Per-iteration trace (JSON lines); defaults to `<out>/trace.jsonl`.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run the suite over case directories and write a JSON report.
    Eval {
        #[arg(required = true)]
        cases: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "30,60,90")]
        fov: Vec<f64>,
        /// Seed of the metric feature extractor.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: PathBuf,
        /// Skip editing; edited panoramas equal the originals.
        #[arg(long)]
        dry_run: bool,
        #[command(flatten)]
        drag: DragArgs,
    },
    /// Generate synthetic cases into `<out>/<id>/`.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value = "seam")]
        family: Family,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a pinhole view of a panorama.
    Perspective {
        image: PathBuf,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        lat: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        lon: f64,
        #[arg(long, default_value_t = 90.0)]
        fov: f64,
        #[arg(long, default_value_t = 512)]
        size: usize,
        /// Output PNG; defaults to `<image stem>_view.png` next to the input.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct DragArgs {
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    /// Base tracking radius in field cells.
    #[arg(long, default_value_t = 3.0)]
    r: f64,
    #[arg(long, default_value_t = 80)]
    max_iter: usize,
    /// Field downsampling factor.
    #[arg(long, default_value_t = 8)]
    downsample: usize,
    #[arg(long)]
    no_ar: bool,
    #[arg(long)]
    no_gcta: bool,
    #[arg(long)]
    no_ssrt: bool,
}

impl DragArgs {
    fn suite_config(&self) -> SuiteConfig {
        SuiteConfig {
            drag: DragConfig {
                lambda: self.lambda,
                lr: self.lr,
                r_base: self.r,
                max_iter: self.max_iter,
                ..DragConfig::default()
            },
            downsample: self.downsample,
            ablation: Ablation {
                ar: !self.no_ar,
                gcta: !self.no_gcta,
                ssrt: !self.no_ssrt,
            },
            ..SuiteConfig::default()
        }
    }
}

#[derive(Serialize)]
struct AlignmentDoc {
    rotation: [[F17; 3]; 3],
    target_lon_deg: F17,
    keep_lat: bool,
    midpoint_before_deg: [F17; 2],
    midpoint_after_deg: [F17; 2],
}

#[derive(Serialize)]
struct DragDoc<'a> {
    case_id: &'a str,
    tracked: Option<bool>,
    pairs: &'a [PairOutcome],
    hashes: PathHashes,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(anyhow::Error),
    Case(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Case(e.into())
    }
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Case(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Align {
            case_dir,
            target_lon,
            keep_lat,
            out,
        } => {
            if !target_lon.is_finite() {
                return Err(usage(anyhow::anyhow!("--target-lon must be finite")));
            }
            let case = load_case(&case_dir)?;
            let (aligned, rec) = align_case(&case, target_lon.to_radians(), keep_lat)?;
            save_case(&aligned, &out)?;
            let deg = |c: SphericalCoord| [F17(c.lat().to_degrees()), F17(c.lon().to_degrees())];
            let doc = AlignmentDoc {
                rotation: rec.rotation.rows().map(|r| r.map(F17)),
                target_lon_deg: F17(target_lon),
                keep_lat,
                midpoint_before_deg: deg(rec.midpoint_before),
                midpoint_after_deg: deg(rec.midpoint_after),
            };
            write_file(&out.join("alignment.json"), &doc)?;
            Ok(())
        }
        Cmd::Drag {
            case_dir,
            drag,
            out,
            trace,
        } => {
            let cfg = drag.suite_config();
            cfg.effective_drag().validate().map_err(usage)?;
            let case = load_case(&case_dir)?;
            let outcome = run_case(&case, &cfg).with_context(|| format!("case {}", case.id))?;
            let edited = case.with_image(outcome.edited.clone())?;
            save_case(&edited, &out)?;
            let trace_path = trace.unwrap_or_else(|| out.join("trace.jsonl"));
            write_jsonl(&trace_path, &outcome.trace_lines())
                .with_context(|| format!("writing {}", trace_path.display()))?;
            let doc = DragDoc {
                case_id: &outcome.case_id,
                tracked: outcome.tracked(),
                pairs: &outcome.pairs,
                hashes: outcome.hashes,
            };
            write_file(&out.join("result.json"), &doc)?;
            for (k, p) in outcome.pairs.iter().enumerate() {
                println!(
                    "pair {k}: {} after {} iterations, final error {:.3} cells",
                    if p.converged {
                        "converged"
                    } else {
                        "not converged"
                    },
                    p.iterations,
                    p.final_error_cells
                );
            }
            Ok(())
        }
        Cmd::Eval {
            cases,
            fov,
            seed,
            report,
            dry_run,
            drag,
        } => {
            let cfg = SuiteConfig {
                fovs: fov,
                eval: EvalOptions {
                    seed,
                    ..EvalOptions::default()
                },
                dry_run,
                ..drag.suite_config()
            };
            cfg.effective_drag().validate().map_err(usage)?;
            if cfg.fovs.iter().any(|f| !(*f > 0.0 && *f < 180.0)) {
                return Err(usage(anyhow::anyhow!("--fov values must lie in (0, 180)")));
            }
            let mut loaded = Vec::new();
            let mut load_failures = Vec::new();
            for dir in &cases {
                match load_case(dir) {
                    Ok(c) => loaded.push(c),
                    Err(e) => load_failures.push(CaseFailure {
                        case_id: dir.display().to_string(),
                        error: e.to_string(),
                    }),
                }
            }
            if loaded.is_empty() {
                for f in &load_failures {
                    eprintln!("{}: {}", f.case_id, f.error);
                }
                return Err(anyhow::anyhow!("no case could be loaded").into());
            }
            let mut run = run_suite(&loaded, &cfg)?;
            run.report.failures.extend(load_failures);
            write_file(&report, &run.report)?;
            for row in &run.report.aggregate {
                println!(
                    "fov {:>5.1}: IF {:.4}  FID {}  sFID {}",
                    row.fov,
                    row.if_mean,
                    fmt_opt(row.fid),
                    fmt_opt(row.sfid)
                );
            }
            if let Some(rate) = run.report.tracking_success_rate {
                println!("tracking success: {rate:.3}");
            }
            if run.report.has_failures() {
                for f in &run.report.failures {
                    eprintln!("{}: {}", f.case_id, f.error);
                }
                return Err(anyhow::anyhow!("{} case(s) failed", run.report.failures.len()).into());
            }
            Ok(())
        }
        Cmd::Synth {
            seed,
            n,
            family,
            out,
        } => {
            for k in 0..n {
                let case = family_case(family, seed, k)?;
                let dir = out.join(&case.id);
                save_case(&case, &dir)?;
                println!("{}", dir.display());
            }
            Ok(())
        }
        Cmd::Perspective {
            image,
            lat,
            lon,
            fov,
            size,
            out,
        } => {
            let center = SphericalCoord::new(lat.to_radians(), lon.to_radians()).map_err(usage)?;
            let spec = PerspectiveSpec::new(center, fov, size).map_err(usage)?;
            let img = load_erp(&image)?;
            let view = extract_perspective(&img, &spec)?;
            let out = out.unwrap_or_else(|| default_view_path(&image));
            save_rgb(&out, &view)?;
            println!("{}", out.display());
            Ok(())
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
}

fn default_view_path(image: &Path) -> PathBuf {
    let stem = image.file_stem().and_then(|s| s.to_str()).unwrap_or("view");
    image.with_file_name(format!("{stem}_view.png"))
}

fn write_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    write_json(path, value).with_context(|| format!("writing {}", path.display()))
}
