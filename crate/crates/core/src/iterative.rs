//! Poisson maximum-likelihood and MAP-TV reconstruction from photon counts.
//!
//! The data term is the Beer–Lambert Poisson negative log-likelihood with
//! constants dropped,
//!
//! ```text
//! f(x) = sum_i n0 exp(-(Ax)_i) + y_i (Ax)_i,    grad f(x) = A^T (y - n0 exp(-Ax))
//! ```
//!
//! MLE minimizes `f` over `x >= 0` by projected gradient with Armijo
//! backtracking; each trial step starts one expansion above the last
//! accepted one. MAP-TV minimizes
//! `f + w TV` with FISTA: backtracked gradient step, TV prox, projection onto
//! `x >= 0`, and a momentum restart whenever the composite objective would
//! rise. Both solvers only ever accept objective-nonincreasing steps, so
//! their traces are monotone.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbp::{fbp_reconstruct, FbpConfig};
use crate::grid::{ImageGrid, ScanGeometry};
use crate::metrics::pearson_r;
use crate::noise::PhotonMeasurement;
use crate::projector::Projector;
use crate::tv::{tv_of, tv_prox_in_place};

const NORM_ITERS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    Zero,
    Fbp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArmijoConfig {
    pub c: f64,
    pub shrink: f64,
    pub max_backtracks: usize,
}

impl Default for ArmijoConfig {
    fn default() -> Self {
        ArmijoConfig {
            c: 1e-4,
            shrink: 0.5,
            max_backtracks: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MleConfig {
    pub max_iters: usize,
    pub armijo: ArmijoConfig,
    pub init: Init,
    /// Stop once the projected-gradient norm falls below this fraction of
    /// its initial value.
    pub grad_tol: f64,
}

impl Default for MleConfig {
    fn default() -> Self {
        MleConfig {
            max_iters: 300,
            armijo: ArmijoConfig::default(),
            init: Init::Fbp,
            grad_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MapTvConfig {
    pub mle: MleConfig,
    pub tv_weight: f64,
    pub tv_inner_iters: usize,
    pub fista: bool,
}

impl Default for MapTvConfig {
    fn default() -> Self {
        MapTvConfig {
            mle: MleConfig::default(),
            tv_weight: 0.0,
            tv_inner_iters: 20,
            fista: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Warning {
    /// Backtracking ran out; the smallest step was accepted because it did
    /// not increase the objective.
    ArmijoExhausted { iteration: usize },
    /// Backtracking ran out and no nonincreasing step was found; the solver
    /// stopped at the previous iterate.
    Stalled { iteration: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub iterations: usize,
    /// Objective at the initial point followed by one entry per accepted step.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub momentum_restarts: usize,
    pub warnings: Vec<Warning>,
}

impl RunReport {
    pub fn is_monotone(&self) -> bool {
        self.objective_trace.windows(2).all(|w| w[1] <= w[0])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub image: ImageGrid,
    pub report: RunReport,
}

/// System matrix and its norm for one geometry and grid, reusable across
/// measurements that share them.
#[derive(Debug, Clone)]
pub struct ReconOperator {
    proj: Projector,
    norm: f64,
}

impl ReconOperator {
    /// Grid pixel size equals the detector spacing.
    pub fn new(geometry: &ScanGeometry, side_px: usize) -> Result<Self> {
        let proj = Projector::new(geometry, side_px)?;
        let norm = proj.operator_norm(NORM_ITERS);
        Ok(ReconOperator { proj, norm })
    }

    pub fn projector(&self) -> &Projector {
        &self.proj
    }

    /// Power-iteration estimate of `||A||`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    fn check(&self, meas: &PhotonMeasurement) -> Result<()> {
        if self.proj.geometry() != &meas.geometry {
            return Err(Error::invalid(
                "measurement geometry does not match the operator",
            ));
        }
        Ok(())
    }
}

/// Poisson data term bound to one measurement.
struct PoissonData<'a> {
    proj: &'a Projector,
    counts: Vec<f64>,
    n0: f64,
}

impl<'a> PoissonData<'a> {
    fn new(meas: &PhotonMeasurement, proj: &'a Projector) -> Self {
        PoissonData {
            proj,
            counts: meas.counts.iter().map(|&c| c as f64).collect(),
            n0: meas.n0,
        }
    }

    fn value(&self, ax: &[f64]) -> f64 {
        ax.iter()
            .zip(&self.counts)
            .map(|(&a, &y)| self.n0 * libm::exp(-a) + y * a)
            .sum()
    }

    fn gradient(&self, ax: &[f64], out: &mut [f64]) {
        let resid: Vec<f64> = ax
            .iter()
            .zip(&self.counts)
            .map(|(&a, &y)| y - self.n0 * libm::exp(-a))
            .collect();
        self.proj.adjoint_into(&resid, out);
    }
}

/// Step that is always safe: the Hessian on `x >= 0` is bounded by
/// `n0 ||A||^2`.
fn safe_step(op: &ReconOperator, n0: f64) -> f64 {
    1.0 / (n0 * op.norm * op.norm).max(f64::MIN_POSITIVE)
}

fn check_image(image: &ImageGrid, meas: &PhotonMeasurement) -> Result<()> {
    if !image.is_nonnegative() {
        return Err(Error::invalid("image must be nonnegative"));
    }
    meas.geometry
        .check_covers(image.side_px(), image.pixel_size())
}

pub fn poisson_nll(image: &ImageGrid, meas: &PhotonMeasurement) -> Result<f64> {
    check_image(image, meas)?;
    let proj = Projector::with_pixel_size(&meas.geometry, image.side_px(), image.pixel_size())?;
    let data = PoissonData::new(meas, &proj);
    Ok(data.value(&proj.forward(image.values())))
}

pub fn poisson_nll_gradient(image: &ImageGrid, meas: &PhotonMeasurement) -> Result<ImageGrid> {
    check_image(image, meas)?;
    let proj = Projector::with_pixel_size(&meas.geometry, image.side_px(), image.pixel_size())?;
    let data = PoissonData::new(meas, &proj);
    let ax = proj.forward(image.values());
    let mut g = vec![0.0; image.values().len()];
    data.gradient(&ax, &mut g);
    Ok(image.with_values(g))
}

fn project_nonneg(x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v = v.max(0.0));
}

fn initial_image(meas: &PhotonMeasurement, init: Init, side_px: usize) -> Result<Vec<f64>> {
    match init {
        Init::Zero => Ok(vec![0.0; side_px * side_px]),
        Init::Fbp => {
            let cfg = FbpConfig {
                clamp_negative: true,
                ..FbpConfig::default()
            };
            Ok(fbp_reconstruct(meas, &cfg, side_px)?.into_values())
        }
    }
}

fn check_config(cfg: &MleConfig) -> Result<()> {
    let a = &cfg.armijo;
    if !(a.c > 0.0 && a.c < 1.0) || !(a.shrink > 0.0 && a.shrink < 1.0) {
        return Err(Error::invalid("Armijo c and shrink must lie in (0, 1)"));
    }
    if cfg.grad_tol.is_nan() || cfg.grad_tol < 0.0 {
        return Err(Error::invalid("grad_tol must be nonnegative"));
    }
    Ok(())
}

/// Norm of `x - P(x - g)`.
fn projected_gradient_norm(x: &[f64], g: &[f64]) -> f64 {
    libm::sqrt(
        x.iter()
            .zip(g)
            .map(|(&xi, &gi)| {
                let d = xi - (xi - gi).max(0.0);
                d * d
            })
            .sum(),
    )
}

pub fn mle_reconstruct(
    meas: &PhotonMeasurement,
    cfg: &MleConfig,
    side_px: usize,
) -> Result<Reconstruction> {
    check_config(cfg)?;
    mle_reconstruct_with(&ReconOperator::new(&meas.geometry, side_px)?, meas, cfg)
}

pub fn mle_reconstruct_with(
    op: &ReconOperator,
    meas: &PhotonMeasurement,
    cfg: &MleConfig,
) -> Result<Reconstruction> {
    check_config(cfg)?;
    op.check(meas)?;
    let side_px = op.proj.side_px();
    let pixel = op.proj.pixel_size();
    let data = PoissonData::new(meas, &op.proj);
    let npx = side_px * side_px;
    let mut x = initial_image(meas, cfg.init, side_px)?;
    project_nonneg(&mut x);
    let mut ax = data.proj.forward(&x);
    let mut f = data.value(&ax);
    let mut g = vec![0.0; npx];
    data.gradient(&ax, &mut g);

    let mut report = RunReport {
        objective_trace: vec![f],
        ..RunReport::default()
    };
    let pg0 = projected_gradient_norm(&x, &g);
    if pg0 == 0.0 {
        report.converged = true;
        return Ok(Reconstruction {
            image: ImageGrid::from_values(side_px, pixel, x)?,
            report,
        });
    }

    let safe = safe_step(op, data.n0);
    let step_max = safe * 1e6;
    let mut step = safe;
    let mut xn = vec![0.0; npx];
    let mut gn = vec![0.0; npx];
    let mut axn = vec![0.0; data.proj.n_rays()];
    let armijo = &cfg.armijo;

    for it in 1..=cfg.max_iters {
        let mut trial = step;
        let mut accepted = false;
        let mut fn_ = f;
        for _ in 0..=armijo.max_backtracks {
            for i in 0..npx {
                xn[i] = (x[i] - trial * g[i]).max(0.0);
            }
            let decrease: f64 = (0..npx).map(|i| g[i] * (xn[i] - x[i])).sum();
            data.proj.forward_into(&xn, &mut axn);
            fn_ = data.value(&axn);
            if fn_ <= f + armijo.c * decrease {
                accepted = true;
                break;
            }
            trial *= armijo.shrink;
        }
        if !accepted {
            if fn_ <= f {
                report
                    .warnings
                    .push(Warning::ArmijoExhausted { iteration: it });
            } else {
                report.warnings.push(Warning::Stalled { iteration: it });
                break;
            }
        }
        data.gradient(&axn, &mut gn);
        // next trial starts one expansion above the accepted step
        step = (trial / armijo.shrink).min(step_max);

        core::mem::swap(&mut x, &mut xn);
        core::mem::swap(&mut ax, &mut axn);
        core::mem::swap(&mut g, &mut gn);
        f = fn_;
        report.objective_trace.push(f);
        report.iterations = it;

        if projected_gradient_norm(&x, &g) <= cfg.grad_tol * pg0 {
            report.converged = true;
            break;
        }
    }
    Ok(Reconstruction {
        image: ImageGrid::from_values(side_px, pixel, x)?,
        report,
    })
}

fn check_map_config(cfg: &MapTvConfig) -> Result<()> {
    check_config(&cfg.mle)?;
    if !(cfg.tv_weight >= 0.0 && cfg.tv_weight.is_finite()) {
        return Err(Error::invalid("tv_weight must be nonnegative and finite"));
    }
    Ok(())
}

pub fn map_tv_reconstruct(
    meas: &PhotonMeasurement,
    cfg: &MapTvConfig,
    side_px: usize,
) -> Result<Reconstruction> {
    check_map_config(cfg)?;
    map_tv_reconstruct_with(&ReconOperator::new(&meas.geometry, side_px)?, meas, cfg)
}

/// With `tv_weight == 0` the problem is the MLE problem and is solved by
/// [`mle_reconstruct_with`].
pub fn map_tv_reconstruct_with(
    op: &ReconOperator,
    meas: &PhotonMeasurement,
    cfg: &MapTvConfig,
) -> Result<Reconstruction> {
    check_map_config(cfg)?;
    if cfg.tv_weight == 0.0 {
        return mle_reconstruct_with(op, meas, &cfg.mle);
    }
    op.check(meas)?;
    let side_px = op.proj.side_px();
    let pixel = op.proj.pixel_size();
    let data = PoissonData::new(meas, &op.proj);
    let npx = side_px * side_px;
    let n = side_px;
    let w = cfg.tv_weight;
    let armijo = &cfg.mle.armijo;
    let composite = |f: f64, x: &[f64]| f + w * tv_of(x, n);

    let mut x = initial_image(meas, cfg.mle.init, side_px)?;
    project_nonneg(&mut x);
    let mut ax = data.proj.forward(&x);
    let mut big_f = composite(data.value(&ax), &x);
    let mut y = x.clone();
    let mut ay = ax.clone();
    let mut t = 1.0f64;

    let mut report = RunReport {
        objective_trace: vec![big_f],
        ..RunReport::default()
    };
    let mut step = safe_step(op, data.n0);
    let mut g = vec![0.0; npx];
    let mut z = vec![0.0; npx];
    let mut az = vec![0.0; data.proj.n_rays()];
    let mut first_change = None;

    let mut it = 0;
    while it < cfg.mle.max_iters {
        it += 1;
        let fy = data.value(&ay);
        data.gradient(&ay, &mut g);

        let mut trial = step / armijo.shrink;
        let mut accepted = false;
        let mut fz = fy;
        for _ in 0..=armijo.max_backtracks {
            for i in 0..npx {
                z[i] = y[i] - trial * g[i];
            }
            tv_prox_in_place(&mut z, n, trial * w, cfg.tv_inner_iters);
            project_nonneg(&mut z);
            data.proj.forward_into(&z, &mut az);
            fz = data.value(&az);
            let mut lin = 0.0;
            let mut sq = 0.0;
            for i in 0..npx {
                let d = z[i] - y[i];
                lin += g[i] * d;
                sq += d * d;
            }
            if fz <= fy + lin + sq / (2.0 * trial) {
                accepted = true;
                break;
            }
            trial *= armijo.shrink;
        }
        let fz_total = composite(fz, &z);
        let momentum_active = t > 1.0;
        if fz_total > big_f {
            if momentum_active {
                report.momentum_restarts += 1;
                y.copy_from_slice(&x);
                ay.copy_from_slice(&ax);
                t = 1.0;
                step = trial;
                continue;
            }
            report.warnings.push(Warning::Stalled { iteration: it });
            break;
        }
        if !accepted {
            report
                .warnings
                .push(Warning::ArmijoExhausted { iteration: it });
        }
        step = trial;

        let change = libm::sqrt((0..npx).map(|i| (z[i] - x[i]) * (z[i] - x[i])).sum::<f64>());
        let t_next = if cfg.fista {
            0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * t * t))
        } else {
            1.0
        };
        let beta = (t - 1.0) / t_next;
        for i in 0..npx {
            y[i] = z[i] + beta * (z[i] - x[i]);
        }
        for i in 0..ay.len() {
            ay[i] = az[i] + beta * (az[i] - ax[i]);
        }
        core::mem::swap(&mut x, &mut z);
        core::mem::swap(&mut ax, &mut az);
        t = t_next;
        big_f = fz_total;
        report.objective_trace.push(big_f);
        report.iterations = it;

        let first = *first_change.get_or_insert(change);
        if first == 0.0 || change <= cfg.mle.grad_tol * first {
            report.converged = true;
            break;
        }
    }
    Ok(Reconstruction {
        image: ImageGrid::from_values(side_px, pixel, x)?,
        report,
    })
}

/// Index of the best mean score; ties go to the smaller weight.
pub fn best_weight(grid: &[f64], mean_scores: &[f64]) -> Result<f64> {
    if grid.is_empty() || grid.len() != mean_scores.len() {
        return Err(Error::invalid(
            "weight grid and scores must be nonempty and equal length",
        ));
    }
    let mut best = 0;
    for i in 1..grid.len() {
        let (s, b) = (mean_scores[i], mean_scores[best]);
        if s > b || (s == b && grid[i] < grid[best]) || b.is_nan() {
            best = i;
        }
    }
    Ok(grid[best])
}

/// Pick the TV weight that maximizes mean Pearson r over a calibration set.
pub fn select_tv_weight(
    meas_set: &[PhotonMeasurement],
    truth_set: &[ImageGrid],
    grid: &[f64],
    cfg: &MapTvConfig,
) -> Result<f64> {
    if meas_set.is_empty() || grid.is_empty() {
        return Err(Error::invalid(
            "calibration set and weight grid must be nonempty",
        ));
    }
    if meas_set.len() != truth_set.len() {
        return Err(Error::invalid(format!(
            "{} measurements but {} ground truths",
            meas_set.len(),
            truth_set.len()
        )));
    }
    if grid.iter().any(|w| w.is_nan() || *w < 0.0) {
        return Err(Error::invalid("TV weights must be nonnegative"));
    }
    let side = truth_set[0].side_px();
    let op = ReconOperator::new(&meas_set[0].geometry, side)?;
    let mut scores = Vec::with_capacity(grid.len());
    for &weight in grid {
        let cfg = MapTvConfig {
            tv_weight: weight,
            ..cfg.clone()
        };
        let mut total = 0.0;
        for (meas, truth) in meas_set.iter().zip(truth_set) {
            let rec = if meas.geometry == meas_set[0].geometry && truth.side_px() == side {
                map_tv_reconstruct_with(&op, meas, &cfg)?
            } else {
                map_tv_reconstruct(meas, &cfg, truth.side_px())?
            };
            total += pearson_r(&rec.image, truth).unwrap_or(0.0);
        }
        scores.push(total / meas_set.len() as f64);
    }
    best_weight(grid, &scores)
}
