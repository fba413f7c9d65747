//! Sparse-view, low-photon X-ray tomography in `no_std` + `alloc`.
//!
//! The crate covers the full numerical path of the benchmark:
//!
//! * [`grid`] and [`phantom`]: image grids, parallel-beam geometry and
//!   ground-truth objects.
//! * [`projector`]: Joseph ray-driven Radon transform with its exact adjoint.
//! * [`noise`]: Beer–Lambert photon counts with Poisson statistics.
//! * [`fbp`], [`iterative`], [`tv`]: filtered back-projection, Poisson
//!   maximum likelihood and MAP reconstruction with a total-variation prior.
//! * [`metrics`]: Pearson correlation and the scattering-transform distance.
//!
//! Everything here is a pure function of its inputs. IO, the sweep driver and
//! the command line live in the `tomobench` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod fbp;
pub mod fft;
pub mod grid;
pub mod iterative;
pub mod metrics;
pub mod noise;
pub mod phantom;
pub mod projector;
pub mod rng;
pub mod tv;

pub use error::{Error, Result};
pub use fbp::{fbp_reconstruct, ramp_filter, FbpConfig, Window};
pub use grid::{derive_geometry, ImageGrid, ScanGeometry};
pub use iterative::{
    map_tv_reconstruct, map_tv_reconstruct_with, mle_reconstruct, mle_reconstruct_with,
    poisson_nll, poisson_nll_gradient, select_tv_weight, Init, MapTvConfig, MleConfig,
    ReconOperator, Reconstruction, RunReport,
};
pub use metrics::{
    pearson_r, scattering_coeffs, scattering_distance, MetricsReport, ScatteringConfig,
};
pub use noise::{expected_counts, log_transform, simulate_counts, PhotonMeasurement};
pub use phantom::{make_disk, make_random_ellipses, make_shepp_logan, PhantomKind, PhantomSpec};
pub use projector::{back_project, estimate_operator_norm, forward_project, Projector, Sinogram};
pub use tv::{tv_prox, tv_value};
