//! Reconstruction quality metrics: Pearson correlation and the L2 distance
//! between scattering-transform coefficient vectors.

mod pearson;
mod scattering;

pub use pearson::pearson_r;
pub use scattering::{
    coeff_distance, scattering_coeffs, scattering_distance, FilterBank, ScatteringConfig,
};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::ImageGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub pearson_r: f64,
    pub one_minus_r: f64,
    pub scattering_l2: f64,
}

impl MetricsReport {
    pub fn new(pearson_r: f64, scattering_l2: f64) -> Self {
        MetricsReport {
            pearson_r,
            one_minus_r: 1.0 - pearson_r,
            scattering_l2,
        }
    }

    /// Both metrics of `recon` against `truth`.
    pub fn compare(recon: &ImageGrid, truth: &ImageGrid, cfg: &ScatteringConfig) -> Result<Self> {
        let r = pearson_r(recon, truth)?;
        let d = scattering_distance(recon, truth, cfg)?;
        Ok(MetricsReport::new(r, d))
    }
}
