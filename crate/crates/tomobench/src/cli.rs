//! Command-line interface. Exit codes: 0 success, 1 usage error, 2 runtime
//! error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use tomobench_core::{
    derive_geometry, forward_project, pearson_r, scattering_distance, simulate_counts, ImageGrid,
    MetricsReport, PhantomKind, PhantomSpec, PhotonMeasurement, ScanGeometry,
};

use crate::config::{Algorithm, SweepConfig};
use crate::dtns::{read_tensor, write_tensor, Tensor};
use crate::pipeline::{export_dataset, run_sweep, write_sweep, Split, SweepContext};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "tomobench",
    version,
    about = "Sparse-view, low-photon tomography benchmark"
)]
pub struct Cli {
    /// Phantom seed (`phantom`), noise seed (`simulate`, 0 = noise-free) or
    /// sweep base seed (`sweep`, `dataset`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file or directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Sweep configuration (TOML, or JSON); supplies defaults everywhere.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    SheppLogan,
    RandomEllipses,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AlgoArg {
    Fbp,
    Mle,
    Maptv,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Fbp => Algorithm::Fbp,
            AlgoArg::Mle => Algorithm::Mle,
            AlgoArg::Maptv => Algorithm::Maptv,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a phantom image (f64 DTNS, side x side).
    Phantom {
        #[arg(long, value_enum, default_value = "random-ellipses")]
        kind: KindArg,
        #[arg(long)]
        side: Option<usize>,
    },
    /// Project a phantom and draw photon counts (u32 DTNS, n_angles x n_det).
    Simulate {
        input: PathBuf,
        #[arg(long, default_value_t = 1000.0)]
        n0: f64,
        #[arg(long)]
        views: Option<usize>,
    },
    /// Reconstruct an image from counts.
    Recon {
        input: PathBuf,
        #[arg(long, value_enum)]
        algo: AlgoArg,
        /// Absolute TV weight for maptv; calibrated when omitted.
        #[arg(long)]
        tv_weight: Option<f64>,
    },
    /// Compare two images (Pearson r and scattering distance).
    Metrics { a: PathBuf, b: PathBuf },
    /// Run the photon sweep; writes sweep.csv, sweep.json, plots and manifest.json.
    Sweep {
        #[arg(long)]
        no_plot: bool,
    },
    /// Export reconstructions and ground truth for training or testing.
    Dataset {
        #[arg(long, value_enum)]
        split: Split,
    },
}

/// Sidecar of an image tensor, stored as `<file>.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImageMeta {
    pub pixel_size: f64,
    pub seed: Option<u64>,
}

/// Sidecar of a counts tensor, stored as `<file>.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountsMeta {
    pub geometry: ScanGeometry,
    pub n0: f64,
    pub seed: u64,
    pub side_px: usize,
}

pub fn sidecar_path(tensor: &Path) -> PathBuf {
    let mut s = tensor.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_image(image: &ImageGrid, path: &Path, seed: Option<u64>) -> Result<()> {
    let n = image.side_px() as u64;
    write_tensor(&Tensor::f64(vec![n, n], image.values().to_vec())?, path)?;
    write_json(
        &sidecar_path(path),
        &ImageMeta {
            pixel_size: image.pixel_size(),
            seed,
        },
    )
}

/// Reads a square 2D f64 tensor; the pixel size comes from the sidecar when
/// present, else 1.
pub fn read_image(path: &Path) -> Result<ImageGrid> {
    let t = read_tensor(path)?;
    let values = t
        .as_f64()
        .ok_or_else(|| anyhow!("{}: expected an f64 tensor", path.display()))?;
    let dims = t.dims();
    if dims.len() != 2 || dims[0] != dims[1] {
        bail!(
            "{}: expected a square 2D image, got dims {dims:?}",
            path.display()
        );
    }
    let side_car = sidecar_path(path);
    let pixel = if side_car.exists() {
        read_json::<ImageMeta>(&side_car)?.pixel_size
    } else {
        1.0
    };
    ImageGrid::from_values(dims[0] as usize, pixel, values.to_vec())
        .map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn read_counts(path: &Path) -> Result<(PhotonMeasurement, usize)> {
    let t = read_tensor(path)?;
    let meta: CountsMeta = read_json(&sidecar_path(path))?;
    let counts = t
        .as_u32()
        .ok_or_else(|| anyhow!("{}: expected a u32 counts tensor", path.display()))?;
    let meas = PhotonMeasurement::new(meta.geometry, counts.to_vec(), meta.n0, meta.seed)
        .map_err(|e| anyhow!("{}: {e}", path.display()))?;
    Ok((meas, meta.side_px))
}

fn load_config(cli: &Cli) -> Result<SweepConfig> {
    let mut cfg = match &cli.config {
        Some(p) => SweepConfig::load(p)?,
        None => SweepConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.base_seed = seed;
    }
    Ok(cfg)
}

fn out_or(cli: &Cli, default: &str) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Phantom { kind, side } => {
            let side = side.unwrap_or(cfg.side_px);
            let seed = cli.seed.unwrap_or(cfg.base_seed);
            let spec = PhantomSpec {
                kind: match kind {
                    KindArg::SheppLogan => PhantomKind::SheppLogan,
                    KindArg::RandomEllipses => PhantomKind::RandomEllipses,
                },
                ..PhantomSpec::random_ellipses(seed, side)
            };
            let image = spec
                .generate()
                .and_then(|p| p.with_pixel_size(cfg.field_of_view / side as f64))
                .map_err(|e| anyhow!("{e}"))?;
            let out = out_or(cli, "phantom.dtns");
            write_image(&image, &out, Some(seed))?;
            println!("{}", out.display());
        }
        Command::Simulate { input, n0, views } => {
            let image = read_image(input)?;
            let geometry = derive_geometry(&image, views.unwrap_or(cfg.n_views))
                .map_err(|e| anyhow!("{e}"))?;
            let sino = forward_project(&image, &geometry).map_err(|e| anyhow!("{e}"))?;
            let seed = cli.seed.unwrap_or(1);
            let meas = simulate_counts(&sino, *n0, seed).map_err(|e| anyhow!("{e}"))?;
            let out = out_or(cli, "counts.dtns");
            let g = &meas.geometry;
            write_tensor(
                &Tensor::u32(
                    vec![g.n_angles() as u64, g.n_det() as u64],
                    meas.counts.clone(),
                )?,
                &out,
            )?;
            write_json(
                &sidecar_path(&out),
                &CountsMeta {
                    geometry: meas.geometry.clone(),
                    n0: meas.n0,
                    seed,
                    side_px: image.side_px(),
                },
            )?;
            println!("{}", out.display());
        }
        Command::Recon {
            input,
            algo,
            tv_weight,
        } => {
            let (meas, side) = read_counts(input)?;
            let algo = Algorithm::from(*algo);
            let recon_cfg = SweepConfig {
                n_views: meas.geometry.n_angles(),
                side_px: side,
                field_of_view: side as f64 * meas.geometry.det_spacing(),
                ..cfg
            };
            let ctx = SweepContext::new(&recon_cfg)?;
            if ctx.geometry != meas.geometry {
                bail!(
                    "{}: geometry is not a full-angle scan derived from a {side}px grid",
                    input.display()
                );
            }
            let weight = match (algo, tv_weight) {
                (Algorithm::Maptv, Some(w)) => *w,
                (Algorithm::Maptv, None) => ctx.tv_weight(meas.n0, meas.is_deterministic())?,
                _ => 0.0,
            };
            let image = ctx.reconstruct(algo, &meas, weight)?;
            let out = out_or(cli, &format!("recon_{algo}.dtns"));
            write_image(&image, &out, None)?;
            println!("{}", out.display());
        }
        Command::Metrics { a, b } => {
            let ia = read_image(a)?;
            let ib = read_image(b)?;
            if !ia.same_shape(&ib) {
                bail!("{} and {} have different sizes", a.display(), b.display());
            }
            let r = pearson_r(&ia, &ib).map_err(|e| anyhow!("{e}"))?;
            let d = scattering_distance(&ia, &ib, &cfg.scattering).map_err(|e| anyhow!("{e}"))?;
            let report = serde_json::to_string_pretty(&MetricsReport::new(r, d))?;
            if let Some(out) = &cli.out {
                fs::write(out, report.clone() + "\n")
                    .with_context(|| format!("writing {}", out.display()))?;
            }
            println!("{report}");
        }
        Command::Sweep { no_plot } => {
            let table = run_sweep(&cfg)?;
            let out = out_or(cli, "results");
            write_sweep(&table, &cfg, &out, !no_plot)?;
            print!("{}", table.to_csv());
        }
        Command::Dataset { split } => {
            let out = out_or(
                cli,
                match split {
                    Split::Train => "dataset_train",
                    Split::Test => "dataset_test",
                },
            );
            let manifest = export_dataset(&cfg, *split, &out)?;
            println!("{} files in {}", manifest.files.len(), out.display());
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_RUNTIME
        }
    }
}
