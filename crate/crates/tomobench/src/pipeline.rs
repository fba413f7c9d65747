//! Photon sweep and dataset export.
//!
//! Seeds: test phantom `i` uses `base_seed + i`; calibration phantoms use
//! `base_seed + CALIB_OFFSET + i`. Noise for a cell is seeded with
//! `mix_seed(base_seed, index, n0, algorithm)`, so any cell can be recomputed
//! alone. Work items run on the rayon pool and are gathered back in a fixed
//! `(algorithm, n0, index)` order before any reduction, which makes the
//! output independent of the thread count.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tomobench_core::iterative::{best_weight, ReconOperator};
use tomobench_core::metrics::{coeff_distance, FilterBank};
use tomobench_core::rng::mix_seed;
use tomobench_core::{
    derive_geometry, fbp_reconstruct, map_tv_reconstruct_with, mle_reconstruct_with, pearson_r,
    simulate_counts, ImageGrid, MapTvConfig, PhantomSpec, PhotonMeasurement, ScanGeometry,
    Sinogram,
};

use crate::config::{Algorithm, SweepConfig};
use crate::dtns::{write_tensor, Tensor};
use crate::manifest::RunManifest;
use crate::plot::sweep_svg;
use crate::table::{format_sig, Metric, SweepRow, SweepTable, TvChoice};

pub const CALIB_OFFSET: u64 = 1 << 40;
pub const METRIC_FLOOR: f64 = 1e-12;
const CALIB_TAG: u64 = 0xca11_b7a7e;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogStats {
    pub mean: f64,
    /// Sample standard deviation (`n - 1`) of `log10(values)`; 0 for one value.
    pub log_std: f64,
    /// Linear-scale standard error of the mean; 0 for one value.
    pub std_err: f64,
}

/// Nonpositive values are clamped to [`METRIC_FLOOR`] with a warning.
pub fn aggregate_log_stats(values: &[f64]) -> Result<LogStats> {
    if values.is_empty() {
        bail!("cannot aggregate an empty list");
    }
    if values.iter().any(|v| v.is_nan()) {
        bail!("cannot aggregate NaN values");
    }
    let clamped: Vec<f64> = values
        .iter()
        .map(|&v| {
            if v <= 0.0 {
                warn!("metric value {v} clamped to {METRIC_FLOOR}");
                METRIC_FLOOR
            } else {
                v
            }
        })
        .collect();
    let n = clamped.len() as f64;
    let mean = clamped.iter().sum::<f64>() / n;
    if clamped.len() == 1 {
        return Ok(LogStats {
            mean,
            log_std: 0.0,
            std_err: 0.0,
        });
    }
    let logs: Vec<f64> = clamped.iter().map(|v| v.log10()).collect();
    let lmean = logs.iter().sum::<f64>() / n;
    let lvar = logs.iter().map(|l| (l - lmean) * (l - lmean)).sum::<f64>() / (n - 1.0);
    let var = clamped.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok(LogStats {
        mean,
        log_std: lvar.sqrt(),
        std_err: (var / n).sqrt(),
    })
}

pub fn test_phantom_seed(cfg: &SweepConfig, index: usize) -> u64 {
    cfg.base_seed.wrapping_add(index as u64)
}

pub fn calib_phantom_seed(cfg: &SweepConfig, index: usize) -> u64 {
    cfg.base_seed.wrapping_add(CALIB_OFFSET + index as u64)
}

/// Nonzero, so it never selects the noise-free mode.
pub fn noise_seed(base_seed: u64, index: u64, n0: f64, algorithm: Algorithm) -> u64 {
    mix_seed(&[base_seed, index, n0.to_bits(), algorithm.code()]).max(1)
}

fn calib_noise_seed(cfg: &SweepConfig, index: usize, n0: f64) -> u64 {
    mix_seed(&[cfg.base_seed, CALIB_TAG, index as u64, n0.to_bits()]).max(1)
}

/// Shared, read-only state for one configuration.
pub struct SweepContext {
    pub cfg: SweepConfig,
    pub geometry: ScanGeometry,
    pub operator: ReconOperator,
    pub bank: FilterBank,
}

impl SweepContext {
    pub fn new(cfg: &SweepConfig) -> Result<Self> {
        cfg.validate()?;
        let probe = ImageGrid::zeros(cfg.side_px, cfg.pixel_size());
        let geometry = derive_geometry(&probe, cfg.n_views).map_err(|e| anyhow!("{e}"))?;
        let operator = ReconOperator::new(&geometry, cfg.side_px).map_err(|e| anyhow!("{e}"))?;
        let bank = FilterBank::new(cfg.side_px, &cfg.scattering).map_err(|e| anyhow!("{e}"))?;
        Ok(SweepContext {
            cfg: cfg.clone(),
            geometry,
            operator,
            bank,
        })
    }

    pub fn phantom(&self, seed: u64) -> Result<ImageGrid> {
        PhantomSpec::random_ellipses(seed, self.cfg.side_px)
            .generate()
            .and_then(|p| p.with_pixel_size(self.cfg.pixel_size()))
            .map_err(|e| anyhow!("phantom {seed}: {e}"))
    }

    pub fn sinogram(&self, truth: &ImageGrid) -> Result<Sinogram> {
        Sinogram::new(
            self.geometry.clone(),
            self.operator.projector().forward(truth.values()),
        )
        .map_err(|e| anyhow!("{e}"))
    }

    pub fn measure(&self, truth: &ImageGrid, n0: f64, seed: u64) -> Result<PhotonMeasurement> {
        simulate_counts(&self.sinogram(truth)?, n0, seed).map_err(|e| anyhow!("{e}"))
    }

    /// `tv_weight` is absolute and only used by MAP-TV.
    pub fn reconstruct(
        &self,
        algorithm: Algorithm,
        meas: &PhotonMeasurement,
        tv_weight: f64,
    ) -> Result<ImageGrid> {
        let side = self.cfg.side_px;
        let image = match algorithm {
            Algorithm::Fbp => fbp_reconstruct(meas, &self.cfg.fbp, side),
            Algorithm::Mle => {
                mle_reconstruct_with(&self.operator, meas, &self.cfg.mle).map(|r| r.image)
            }
            Algorithm::Maptv => {
                let cfg = MapTvConfig {
                    tv_weight,
                    ..self.cfg.map_tv.clone()
                };
                map_tv_reconstruct_with(&self.operator, meas, &cfg).map(|r| r.image)
            }
        };
        image.map_err(|e| anyhow!("{algorithm} reconstruction: {e}"))
    }

    /// Absolute TV weight for photon level `n0`: the fixed relative weight
    /// if configured, else the calibrated choice from `tv_grid`. With
    /// `noise_free`, calibration measurements are deterministic.
    pub fn tv_weight(&self, n0: f64, noise_free: bool) -> Result<f64> {
        if let Some(rel) = self.cfg.tv_weight {
            return Ok(rel * n0);
        }
        let grid: Vec<f64> = self.cfg.tv_grid.iter().map(|w| w * n0).collect();
        let n_calib = self.cfg.n_calib;
        let cases: Vec<(ImageGrid, PhotonMeasurement)> = (0..n_calib)
            .into_par_iter()
            .map(|i| {
                let truth = self.phantom(calib_phantom_seed(&self.cfg, i))?;
                let seed = if noise_free {
                    0
                } else {
                    calib_noise_seed(&self.cfg, i, n0)
                };
                let meas = self.measure(&truth, n0, seed)?;
                Ok((truth, meas))
            })
            .collect::<Result<_>>()?;
        let jobs: Vec<(usize, usize)> = (0..grid.len())
            .flat_map(|k| (0..n_calib).map(move |i| (k, i)))
            .collect();
        let rs: Vec<f64> = jobs
            .par_iter()
            .map(|&(k, i)| {
                let (truth, meas) = &cases[i];
                let rec = self.reconstruct(Algorithm::Maptv, meas, grid[k])?;
                Ok(pearson_r(&rec, truth).unwrap_or(0.0))
            })
            .collect::<Result<_>>()?;
        let scores: Vec<f64> = rs
            .chunks(n_calib)
            .map(|c| c.iter().sum::<f64>() / n_calib as f64)
            .collect();
        let w = best_weight(&grid, &scores).map_err(|e| anyhow!("{e}"))?;
        info!("n0={n0}: TV weight {w} (mean calibration r by weight {scores:?})");
        Ok(w)
    }

    fn metrics(&self, recon: &ImageGrid, truth: &ImageGrid) -> Result<(f64, f64)> {
        let r = pearson_r(recon, truth).map_err(|e| anyhow!("pearson: {e}"))?;
        let a = self.bank.transform(recon).map_err(|e| anyhow!("{e}"))?;
        let b = self.bank.transform(truth).map_err(|e| anyhow!("{e}"))?;
        Ok((r, coeff_distance(&a, &b)))
    }
}

type CellOutcome = std::result::Result<(f64, f64), String>;

/// Runs every `(algorithm, n0, phantom)` combination. Failures are confined
/// to error rows for the affected `(algorithm, n0)` cell.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepTable> {
    let ctx = SweepContext::new(cfg)?;
    let grid = &cfg.photon_grid;

    let weights: Vec<std::result::Result<f64, String>> =
        if cfg.algorithms.contains(&Algorithm::Maptv) {
            grid.iter()
                .map(|&n0| ctx.tv_weight(n0, false).map_err(|e| format!("{e:#}")))
                .collect()
        } else {
            Vec::new()
        };

    let truths: Vec<std::result::Result<(ImageGrid, Sinogram), String>> = (0..cfg.n_test)
        .into_par_iter()
        .map(|i| {
            let truth = ctx.phantom(test_phantom_seed(cfg, i))?;
            let sino = ctx.sinogram(&truth)?;
            Ok((truth, sino))
        })
        .map(|r: Result<_>| r.map_err(|e| format!("{e:#}")))
        .collect();

    let mut jobs = Vec::new();
    for (ai, &algo) in cfg.algorithms.iter().enumerate() {
        for (ni, &n0) in grid.iter().enumerate() {
            for i in 0..cfg.n_test {
                jobs.push((ai, algo, ni, n0, i));
            }
        }
    }
    info!("sweep: {} reconstructions", jobs.len());
    let outcomes: Vec<CellOutcome> = jobs
        .par_iter()
        .map(|&(_, algo, ni, n0, i)| {
            let (truth, sino) = truths[i].as_ref().map_err(Clone::clone)?;
            let weight = match algo {
                Algorithm::Maptv => weights[ni]
                    .clone()
                    .map_err(|e| format!("TV calibration: {e}"))?,
                _ => 0.0,
            };
            let run = || -> Result<(f64, f64)> {
                let meas = simulate_counts(sino, n0, noise_seed(cfg.base_seed, i as u64, n0, algo))
                    .map_err(|e| anyhow!("{e}"))?;
                let rec = ctx.reconstruct(algo, &meas, weight)?;
                ctx.metrics(&rec, truth)
            };
            run().map_err(|e| format!("phantom {i}: {e:#}"))
        })
        .collect();

    let mut table = SweepTable::default();
    if cfg.algorithms.contains(&Algorithm::Maptv) {
        for (ni, &n0) in grid.iter().enumerate() {
            if let Ok(w) = weights[ni] {
                table.tv_weights.push(TvChoice { n0, weight: w });
            }
        }
    }
    for (cell, &(_, algo, _, n0, _)) in outcomes
        .chunks(cfg.n_test)
        .zip(jobs.iter().step_by(cfg.n_test))
    {
        let failure = cell.iter().find_map(|o| o.as_ref().err().cloned());
        for metric in Metric::ALL {
            let row = match &failure {
                Some(msg) => {
                    warn!("{algo} n0={n0}: {msg}");
                    error_row(algo, n0, metric, msg.clone())
                }
                None => {
                    let values: Vec<f64> = cell
                        .iter()
                        .map(|o| {
                            let (r, d) = *o.as_ref().expect("no failures in this cell");
                            match metric {
                                Metric::OneMinusR => 1.0 - r,
                                Metric::ScatteringL2 => d,
                            }
                        })
                        .collect();
                    match aggregate_log_stats(&values) {
                        Ok(s) => SweepRow {
                            algorithm: algo,
                            n0,
                            metric,
                            mean: s.mean,
                            log_std: s.log_std,
                            std_err: s.std_err,
                            n_samples: values.len(),
                            error: None,
                        },
                        Err(e) => error_row(algo, n0, metric, format!("{e:#}")),
                    }
                }
            };
            table.rows.push(row);
        }
    }
    Ok(table)
}

fn error_row(algorithm: Algorithm, n0: f64, metric: Metric, message: String) -> SweepRow {
    SweepRow {
        algorithm,
        n0,
        metric,
        mean: f64::NAN,
        log_std: f64::NAN,
        std_err: f64::NAN,
        n_samples: 0,
        error: Some(message),
    }
}

/// Writes `sweep.csv`, `sweep.json` (rows including standard errors and
/// error messages), optional SVG plots and `manifest.json` into `out_dir`.
pub fn write_sweep(
    table: &SweepTable,
    cfg: &SweepConfig,
    out_dir: &Path,
    plot: bool,
) -> Result<RunManifest> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut manifest = RunManifest::new("sweep", cfg, table.tv_weights.clone());
    let write = |name: &str, text: String| -> Result<()> {
        let path = out_dir.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    };
    write("sweep.csv", table.to_csv())?;
    manifest.add_file(
        out_dir,
        "sweep.csv",
        "table",
        None,
        None,
        Some(cfg.base_seed),
    )?;
    write("sweep.json", serde_json::to_string_pretty(table)? + "\n")?;
    manifest.add_file(
        out_dir,
        "sweep.json",
        "table",
        None,
        None,
        Some(cfg.base_seed),
    )?;
    if plot {
        for metric in Metric::ALL {
            let name = format!("sweep_{}.svg", metric.name());
            write(&name, sweep_svg(table, metric))?;
            manifest.add_file(out_dir, &name, "plot", None, None, None)?;
        }
    }
    manifest.write(out_dir)?;
    Ok(manifest)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

fn stack(images: &[ImageGrid], side: usize) -> Result<Tensor> {
    let mut values = Vec::with_capacity(images.len() * side * side);
    for im in images {
        values.extend_from_slice(im.values());
    }
    Ok(Tensor::f64(
        vec![images.len() as u64, side as u64, side as u64],
        values,
    )?)
}

fn save(
    manifest: &mut RunManifest,
    dir: &Path,
    name: &str,
    tensor: &Tensor,
    meta: (&str, Option<&str>, Option<f64>, Option<u64>),
) -> Result<()> {
    write_tensor(tensor, &dir.join(name))?;
    manifest.add_file(dir, name, meta.0, meta.1, meta.2, meta.3)
}

/// Test-split file name for one algorithm and photon level.
pub fn recon_file_name(algorithm: Algorithm, n0: Option<f64>) -> String {
    match n0 {
        None => format!("recon_{algorithm}.dtns"),
        Some(n0) => format!("recon_{algorithm}_n0_{}.dtns", format_sig(n0, 9)),
    }
}

/// Exports ground truth and reconstructions as DTNS tensors
/// `(n_test, side, side)` plus a manifest.
///
/// * `Train`: noise-free counts at `reference_n0`; `recon_<algo>.dtns`.
/// * `Test`: noisy counts with the sweep's per-cell seeds, one
///   `recon_<algo>_n0_<n0>.dtns` per photon level.
pub fn export_dataset(cfg: &SweepConfig, split: Split, out_dir: &Path) -> Result<RunManifest> {
    let ctx = SweepContext::new(cfg)?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let side = cfg.side_px;
    let truths: Vec<ImageGrid> = (0..cfg.n_test)
        .into_par_iter()
        .map(|i| ctx.phantom(test_phantom_seed(cfg, i)))
        .collect::<Result<_>>()?;

    let levels: Vec<(f64, bool)> = match split {
        Split::Train => vec![(cfg.reference_n0, true)],
        Split::Test => cfg.photon_grid.iter().map(|&n| (n, false)).collect(),
    };
    let mut tv = Vec::new();
    let mut weights = Vec::new();
    for &(n0, noise_free) in &levels {
        let w = if cfg.algorithms.contains(&Algorithm::Maptv) {
            let w = ctx.tv_weight(n0, noise_free)?;
            tv.push(TvChoice { n0, weight: w });
            w
        } else {
            0.0
        };
        weights.push(w);
    }
    let kind = match split {
        Split::Train => "train",
        Split::Test => "test",
    };
    let mut manifest = RunManifest::new(kind, cfg, tv);
    save(
        &mut manifest,
        out_dir,
        "ground_truth.dtns",
        &stack(&truths, side)?,
        ("ground_truth", None, None, Some(cfg.base_seed)),
    )?;

    for (&(n0, noise_free), &w) in levels.iter().zip(&weights) {
        for &algo in &cfg.algorithms {
            let recons: Vec<ImageGrid> = (0..cfg.n_test)
                .into_par_iter()
                .map(|i| {
                    let seed = if noise_free {
                        0
                    } else {
                        noise_seed(cfg.base_seed, i as u64, n0, algo)
                    };
                    let meas = ctx.measure(&truths[i], n0, seed)?;
                    ctx.reconstruct(algo, &meas, w)
                        .with_context(|| format!("phantom {i}, n0={n0}"))
                })
                .collect::<Result<_>>()?;
            let (name, seed) = match split {
                Split::Train => (recon_file_name(algo, None), 0),
                Split::Test => (recon_file_name(algo, Some(n0)), cfg.base_seed),
            };
            save(
                &mut manifest,
                out_dir,
                &name,
                &stack(&recons, side)?,
                ("reconstruction", Some(algo.name()), Some(n0), Some(seed)),
            )?;
        }
    }
    manifest.write(out_dir)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_stats_examples() {
        let s = aggregate_log_stats(&[10.0, 1000.0]).unwrap();
        assert_eq!(s.mean, 505.0);
        assert!((s.log_std - 2f64.sqrt()).abs() < 1e-12);
        let one = aggregate_log_stats(&[0.3]).unwrap();
        assert_eq!((one.mean, one.log_std), (0.3, 0.0));
        assert_eq!(aggregate_log_stats(&[0.2; 5]).unwrap().log_std, 0.0);
        assert!(aggregate_log_stats(&[]).is_err());
    }

    #[test]
    fn nonpositive_values_are_clamped() {
        let s = aggregate_log_stats(&[0.0, 1e-12]).unwrap();
        assert_eq!(s.log_std, 0.0);
        assert_eq!(s.mean, 1e-12);
    }

    #[test]
    fn noise_seeds_differ_by_every_key() {
        let base = noise_seed(1, 0, 100.0, Algorithm::Fbp);
        assert_ne!(base, noise_seed(2, 0, 100.0, Algorithm::Fbp));
        assert_ne!(base, noise_seed(1, 1, 100.0, Algorithm::Fbp));
        assert_ne!(base, noise_seed(1, 0, 32.0, Algorithm::Fbp));
        assert_ne!(base, noise_seed(1, 0, 100.0, Algorithm::Mle));
        assert_ne!(base, 0);
    }

    #[test]
    fn file_names() {
        assert_eq!(recon_file_name(Algorithm::Maptv, None), "recon_maptv.dtns");
        assert_eq!(
            recon_file_name(Algorithm::Fbp, Some(316.0)),
            "recon_fbp_n0_316.dtns"
        );
    }
}
