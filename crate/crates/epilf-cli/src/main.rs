//! `epilf` — command-line front end for densely sampled light-field
//! reconstruction.
//!
//! Subcommands:
//!
//! - `build-system`: construct a directional frame for a grid size and report
//!   its diagnostics (element count, frame bounds), optionally caching it.
//! - `reconstruct`: densify a coarse multiview set from a dataset manifest.
//! - `evaluate`: leave-N-out experiment — keep every N-th view, reconstruct
//!   the rest, and score the held-out views in PSNR.
//! - `refocus`: synthetic-focus rendering of a light field at a disparity
//!   slope.
//! - `plan-sampling`: camera-step bound that keeps adjacent-view disparity
//!   at or below one pixel.
//! - `synth-epi`: synthetic ground-truth EPI generator (the test oracle).

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use epilf::dataset::{
    cache_system, load_manifest, load_views, save_image_channels, save_views, write_pfm,
    DatasetManifest,
};
use epilf::harness::{
    diff_map, leave_n_out_with_reconstruction, make_synthetic_epi, EvalConfig, EvalReport,
    PsnrMode, SyntheticLine,
};
use epilf::lightfield::{
    reconstruct_full_parallax, reconstruct_hpo, refocus, CameraGeometry, DriverOptions,
    LightField,
};
use epilf::reconstruct::{AlphaMode, InitMode, IterationParams};
use epilf::shearlet::{build_system, ShearletConfig};
use ndarray::Array2;

#[derive(Parser)]
#[command(
    name = "epilf",
    version,
    about = "Densely sampled light-field reconstruction from coarse multiview sets"
)]
struct Cli {
    /// Print one solver log line per iteration
    /// (`iter=<n> lambda=<v> alpha=<v> residual=<v>`); lines from
    /// concurrently processed EPIs interleave.
    #[arg(long, global = true)]
    verbose: bool,

    /// Worker threads for the EPI-parallel stages (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a directional frame and report its diagnostics.
    BuildSystem(BuildSystemArgs),
    /// Densify a coarse multiview set described by a manifest.
    Reconstruct(ReconstructArgs),
    /// Leave-N-out evaluation: keep every N-th view, score the rest.
    Evaluate(EvaluateArgs),
    /// Render a synthetically focused image at a disparity slope.
    Refocus(RefocusArgs),
    /// Print the camera-step bound for ≤ 1 px adjacent-view disparity.
    PlanSampling(PlanSamplingArgs),
    /// Generate a synthetic ground-truth EPI (the test oracle).
    SynthEpi(SynthEpiArgs),
}

#[derive(Args)]
struct BuildSystemArgs {
    /// Transform-grid rows (the camera axis of an EPI).
    #[arg(long, value_name = "N")]
    rows: usize,
    /// Transform-grid columns (the pixel axis of an EPI).
    #[arg(long, value_name = "N")]
    cols: usize,
    /// Directional scale count J.
    #[arg(long, value_name = "J")]
    scales: u32,
    /// Write the built system to this cache file.
    #[arg(long, value_name = "PATH")]
    cache: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Dataset manifest (JSON).
    #[arg(long, value_name = "PATH")]
    manifest: PathBuf,
    /// Maximal disparity between adjacent input views, in pixels.
    #[arg(long, value_name = "K")]
    dmax: usize,
    /// Separate disparity for the chroma channels (subsampled planes).
    #[arg(long, value_name = "K2")]
    dmax_chroma: Option<usize>,
    /// Iteration count.
    #[arg(long, value_name = "N")]
    iters: usize,
    /// Initial threshold (default: 0.9 · max initial coefficient).
    #[arg(long, value_name = "X")]
    lambda_max: Option<f64>,
    /// Final threshold (default: 1e-3 · lambda_max).
    #[arg(long, value_name = "Y")]
    lambda_min: Option<f64>,
    /// Step size: `adaptive` or `fixed:<value>`.
    #[arg(long, default_value = "adaptive", value_parser = parse_alpha)]
    alpha: AlphaMode,
    /// Initial estimate for the missing rows.
    #[arg(long, value_enum, default_value_t = InitArg::Lowpass)]
    init: InitArg,
    /// Output directory for the dense views.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Densify both camera axes of a view grid (two-pass).
    #[arg(long)]
    fullparallax: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Dataset manifest (JSON).
    #[arg(long, value_name = "PATH")]
    manifest: PathBuf,
    /// Keep every N-th view; reconstruct and score the views in between.
    #[arg(long, value_name = "N")]
    leave_n: usize,
    /// Write the per-view PSNR table to this CSV file.
    #[arg(long, value_name = "CSV")]
    report: Option<PathBuf>,
    /// Write scaled |original − reconstruction| maps into this directory.
    #[arg(long, value_name = "DIR")]
    diff_maps: Option<PathBuf>,
    /// Amplification applied to difference maps before clamping.
    #[arg(long, value_name = "G", default_value_t = 10.0)]
    gain: f64,
    /// Score the luma plane only instead of averaging channel PSNRs.
    #[arg(long)]
    luma: bool,
}

#[derive(Args)]
struct RefocusArgs {
    /// Dataset manifest (JSON).
    #[arg(long, value_name = "PATH")]
    manifest: PathBuf,
    /// Disparity slope to focus at, in pixels per camera step.
    #[arg(long, value_name = "S", allow_hyphen_values = true)]
    slope: f64,
    /// Output image (extension selects the format; `.pfm` stays float).
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct PlanSamplingArgs {
    /// Nearest scene depth, in scene units.
    #[arg(long, value_name = "Z")]
    zmin: f64,
    /// Focal length, in the same scene units.
    #[arg(long, value_name = "F")]
    focal: f64,
    /// Pixel pitch on the sensor, in scene units per pixel.
    #[arg(long, value_name = "P")]
    pixel_pitch: f64,
}

#[derive(Args)]
struct SynthEpiArgs {
    /// Lines as `position,disparity,intensity` triples separated by `;`.
    /// Disparity is in pixels per EPI row and must lie in [0, 1].
    #[arg(long, value_name = "SPEC")]
    lines: String,
    /// EPI width in pixels.
    #[arg(long, value_name = "W", default_value_t = 256)]
    width: usize,
    /// EPI height (number of dense views).
    #[arg(long, value_name = "H", default_value_t = 256)]
    height: usize,
    /// Seed for the background texture.
    #[arg(long, value_name = "S", default_value_t = 0)]
    seed: u64,
    /// Output float-map path.
    #[arg(long, value_name = "PFM")]
    out: PathBuf,
}

/// Initial-estimate choice exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InitArg {
    Zero,
    Lowpass,
}

impl From<InitArg> for InitMode {
    fn from(v: InitArg) -> InitMode {
        match v {
            InitArg::Zero => InitMode::Zero,
            InitArg::Lowpass => InitMode::Lowpass,
        }
    }
}

fn parse_alpha(s: &str) -> Result<AlphaMode, String> {
    if s == "adaptive" {
        return Ok(AlphaMode::Adaptive);
    }
    if let Some(v) = s.strip_prefix("fixed:") {
        let a: f64 = v
            .parse()
            .map_err(|_| format!("fixed step `{v}` is not a number"))?;
        if !(a.is_finite() && a > 0.0) {
            return Err(format!("fixed step must be > 0, got {a}"));
        }
        return Ok(AlphaMode::Fixed(a));
    }
    Err(format!(
        "step size must be `adaptive` or `fixed:<value>`, got `{s}`"
    ))
}

fn parse_lines(spec: &str) -> Result<Vec<SyntheticLine>, String> {
    let mut lines = Vec::new();
    for (i, part) in spec.split(';').enumerate() {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let fields: Vec<&str> = part.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(format!(
                "line {i}: expected `position,disparity,intensity`, got `{part}`"
            ));
        }
        let num = |what: &str, s: &str| -> Result<f64, String> {
            s.parse::<f64>()
                .map_err(|_| format!("line {i}: {what} `{s}` is not a number"))
        };
        lines.push(SyntheticLine {
            position: num("position", fields[0])?,
            disparity: num("disparity", fields[1])?,
            intensity: num("intensity", fields[2])?,
        });
    }
    if lines.is_empty() {
        return Err("no lines given".into());
    }
    Ok(lines)
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

type CliResult = Result<(), Box<dyn std::error::Error>>;

fn run(cli: Cli) -> CliResult {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    let verbose = cli.verbose;
    match cli.command {
        Command::BuildSystem(a) => run_build_system(a),
        Command::Reconstruct(a) => run_reconstruct(a, verbose),
        Command::Evaluate(a) => run_evaluate(a, verbose),
        Command::Refocus(a) => run_refocus(a),
        Command::PlanSampling(a) => run_plan_sampling(a),
        Command::SynthEpi(a) => run_synth_epi(a),
    }
}

fn run_build_system(a: BuildSystemArgs) -> CliResult {
    let started = Instant::now();
    let system = build_system(a.rows, a.cols, a.scales, &ShearletConfig::default())?;
    let (bound_a, bound_b) = system.frame_bounds();
    println!(
        "grid={}x{} scales={} elements={}",
        a.rows,
        a.cols,
        system.scales(),
        system.eta()
    );
    println!("frame_bounds A={bound_a} B={bound_b}");
    if let Some(path) = &a.cache {
        cache_system(&system, path)?;
        println!("cached={}", path.display());
    }
    println!("wall_time={:.3}s", started.elapsed().as_secs_f64());
    Ok(())
}

fn run_reconstruct(a: ReconstructArgs, verbose: bool) -> CliResult {
    let started = Instant::now();
    let manifest = load_manifest(&a.manifest)?;
    let lf = load_views(&manifest)?;
    let options = DriverOptions {
        scales: None,
        iteration: IterationParams {
            n_iter: a.iters,
            lambda_max: a.lambda_max,
            lambda_min: a.lambda_min,
            alpha: a.alpha,
            init: a.init.into(),
            ..IterationParams::default()
        },
        log_iterations: verbose,
        ..DriverOptions::default()
    };
    let densify = |coarse: &LightField, d_max: usize| -> epilf::Result<LightField> {
        if a.fullparallax {
            reconstruct_full_parallax(coarse, d_max, &options, None)
        } else {
            reconstruct_hpo(coarse, d_max, &options, None)
        }
    };

    // Channels that share one disparity and one plane size live in one driver
    // run and one image file per view; anything else (subsampled chroma,
    // per-plane disparity) is reconstructed and saved plane by plane, since
    // the dense view counts and shapes no longer match across channels.
    let dims_uniform = (0..lf.n_channels()).all(|c| lf.channel_dims(c) == lf.channel_dims(0));
    let chroma_dmax = a.dmax_chroma.unwrap_or(a.dmax);
    let mut written = 0;
    if dims_uniform && chroma_dmax == a.dmax {
        let dense = densify(&lf, a.dmax)?;
        written += save_views(&dense, &a.out, "view_%04d.png", manifest.bit_depth)?;
        let (n_s, n_t, _, _) = dense.dim();
        println!("dense_grid={n_s}x{n_t}");
    } else {
        for c in 0..lf.n_channels() {
            let d = if c == 0 { a.dmax } else { chroma_dmax };
            let dense = densify(&lf.single_channel(c), d)?;
            let pattern = format!("view_%04d_plane{c}.png");
            written += save_views(&dense, &a.out, &pattern, manifest.bit_depth)?;
            let (n_s, n_t, _, _) = dense.dim();
            println!("plane={c} dmax={d} dense_grid={n_s}x{n_t}");
        }
    }
    println!("views_written={written} out={}", a.out.display());
    println!("wall_time={:.3}s", started.elapsed().as_secs_f64());
    Ok(())
}

fn run_evaluate(a: EvaluateArgs, verbose: bool) -> CliResult {
    let manifest = load_manifest(&a.manifest)?;
    let lf = load_views(&manifest)?;
    // Multi-entry manifests evaluate at the primary plane's disparity; the
    // driver reconstructs every channel at that (most demanding) spacing.
    let per_view_dmax = manifest.d_max_for_channel(0);
    let cfg = EvalConfig {
        dataset: manifest.name.clone(),
        options: DriverOptions {
            log_iterations: verbose,
            ..DriverOptions::default()
        },
        psnr_mode: if a.luma {
            PsnrMode::Luma
        } else {
            PsnrMode::ChannelAverage
        },
        layout: manifest.channel_layout,
        peak: manifest.peak(),
    };
    let (report, recon) = leave_n_out_with_reconstruction(&lf, a.leave_n, per_view_dmax, &cfg)?;

    println!(
        "dataset={} leave_n={} d_eff={} scales={} iterations={} psnr_mode={}",
        report.dataset,
        a.leave_n,
        report.config.d_max_effective,
        report.config.scales,
        report.config.iteration.n_iter,
        report.config.psnr_mode
    );
    if report.is_trivial() {
        println!("trivial run: leave-1-out holds out no views");
    }
    for (idx, db) in &report.per_view {
        println!("view {idx}: {db:.3} dB");
    }
    println!(
        "mean: {:.3} dB (wall_time={:.1}s)",
        report.mean_psnr, report.wall_time_seconds
    );
    if let Some(path) = &a.report {
        report.write_csv(path)?;
        println!("report={}", path.display());
    }
    if let Some(dir) = &a.diff_maps {
        match recon {
            Some(dense) => {
                let n = write_diff_maps(dir, &manifest, &lf, &dense, &report, per_view_dmax, a.gain)?;
                println!("diff_maps={} files={n}", dir.display());
            }
            None => println!("diff_maps skipped: trivial run reconstructs nothing"),
        }
    }
    Ok(())
}

/// Saves one scaled difference map per held-out view. Channels sharing one
/// shape merge into one image; subsampled layouts are saved plane by plane.
fn write_diff_maps(
    dir: &Path,
    manifest: &DatasetManifest,
    original: &LightField,
    dense: &LightField,
    report: &EvalReport,
    per_view_dmax: usize,
    gain: f64,
) -> Result<usize, Box<dyn std::error::Error>> {
    std::fs::create_dir_all(dir)?;
    let (_, n_t, _, _) = original.dim();
    let peak = manifest.peak();
    let dims_uniform =
        (0..original.n_channels()).all(|c| original.channel_dims(c) == original.channel_dims(0));
    let mut written = 0;
    for &(idx, _) in &report.per_view {
        let (s, t) = (idx / n_t, idx % n_t);
        let maps: Vec<Array2<f64>> = (0..original.n_channels())
            .map(|c| {
                let orig = original.view(c, s, t).to_owned();
                let rec = dense
                    .view(c, s * per_view_dmax, t * per_view_dmax)
                    .to_owned();
                diff_map(&orig, &rec, gain, peak)
            })
            .collect::<epilf::Result<_>>()?;
        if dims_uniform {
            let path = dir.join(format!("diff_{s:02}_{t:02}.png"));
            save_image_channels(&path, &maps, manifest.bit_depth)?;
            written += 1;
        } else {
            for (c, map) in maps.iter().enumerate() {
                let path = dir.join(format!("diff_{s:02}_{t:02}_plane{c}.png"));
                save_image_channels(&path, std::slice::from_ref(map), manifest.bit_depth)?;
                written += 1;
            }
        }
    }
    Ok(written)
}

fn run_refocus(a: RefocusArgs) -> CliResult {
    let manifest = load_manifest(&a.manifest)?;
    let lf = load_views(&manifest)?;
    let images = refocus(&lf, a.slope);
    let dims_uniform = images.iter().all(|im| im.dim() == images[0].dim());
    if dims_uniform {
        save_image_channels(&a.out, &images, manifest.bit_depth)?;
    } else {
        // Subsampled chroma cannot share an image file; the luma plane is
        // the refocus result that matters.
        save_image_channels(&a.out, std::slice::from_ref(&images[0]), manifest.bit_depth)?;
        println!("note: subsampled chroma skipped; wrote the luma plane only");
    }
    println!("out={}", a.out.display());
    Ok(())
}

fn run_plan_sampling(a: PlanSamplingArgs) -> CliResult {
    if !(a.pixel_pitch.is_finite() && a.pixel_pitch > 0.0) {
        return Err(format!("pixel pitch {} must be > 0", a.pixel_pitch).into());
    }
    let focal_px = a.focal / a.pixel_pitch;
    let geometry = CameraGeometry::new(focal_px, a.zmin)?;
    // Largest camera step keeping adjacent-view disparity <= 1 px for every
    // depth >= zmin, in the same scene units as zmin and the focal length.
    let bound = geometry.camera_step_bound(1.0);
    println!("focal_px={focal_px}");
    println!("max_camera_step={bound}");
    Ok(())
}

fn run_synth_epi(a: SynthEpiArgs) -> CliResult {
    let lines = parse_lines(&a.lines)?;
    let (epi, description) = make_synthetic_epi(a.width, a.height, &lines, a.seed)?;
    write_pfm(&a.out, std::slice::from_ref(&epi))?;
    println!("{description}");
    println!("out={}", a.out.display());
    Ok(())
}
