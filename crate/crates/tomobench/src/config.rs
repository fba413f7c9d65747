//! Sweep configuration and its TOML / JSON loading.

use std::fmt;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use tomobench_core::{FbpConfig, MapTvConfig, MleConfig, ScatteringConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Fbp,
    Mle,
    Maptv,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Fbp, Algorithm::Mle, Algorithm::Maptv];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Fbp => "fbp",
            Algorithm::Mle => "mle",
            Algorithm::Maptv => "maptv",
        }
    }

    /// Stable code mixed into per-cell seeds.
    pub fn code(self) -> u64 {
        match self {
            Algorithm::Fbp => 1,
            Algorithm::Mle => 2,
            Algorithm::Maptv => 3,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fbp" => Ok(Algorithm::Fbp),
            "mle" => Ok(Algorithm::Mle),
            "maptv" | "map_tv" | "map-tv" => Ok(Algorithm::Maptv),
            other => bail!("unknown algorithm {other:?} (expected fbp, mle or maptv)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub n_views: usize,
    pub side_px: usize,
    /// Physical width of the image; pixel size is `field_of_view / side_px`.
    pub field_of_view: f64,
    pub photon_grid: Vec<f64>,
    pub n_test: usize,
    pub n_calib: usize,
    pub algorithms: Vec<Algorithm>,
    pub base_seed: u64,
    /// Candidate TV weights, multiplied by `n0` before use.
    pub tv_grid: Vec<f64>,
    /// Skip calibration and use this relative weight at every `n0`.
    pub tv_weight: Option<f64>,
    /// Photon level of the noise-free training export.
    pub reference_n0: f64,
    pub fbp: FbpConfig,
    pub mle: MleConfig,
    pub map_tv: MapTvConfig,
    pub scattering: ScatteringConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n_views: 32,
            side_px: 128,
            field_of_view: 2.0,
            photon_grid: vec![32.0, 100.0, 316.0, 1000.0, 3162.0, 10000.0],
            n_test: 1000,
            n_calib: 10,
            algorithms: Algorithm::ALL.to_vec(),
            base_seed: 1,
            tv_grid: vec![1e-3, 1e-2, 1e-1, 1.0, 10.0],
            tv_weight: None,
            reference_n0: 1e6,
            fbp: FbpConfig::default(),
            mle: MleConfig::default(),
            map_tv: MapTvConfig::default(),
            scattering: ScatteringConfig::default(),
        }
    }
}

impl SweepConfig {
    pub fn pixel_size(&self) -> f64 {
        self.field_of_view / self.side_px as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_views == 0 || self.side_px == 0 || self.n_test == 0 {
            bail!("n_views, side_px and n_test must be positive");
        }
        if !(self.field_of_view > 0.0 && self.field_of_view.is_finite()) {
            bail!("field_of_view must be positive and finite");
        }
        if self.photon_grid.is_empty() {
            bail!("photon_grid must not be empty");
        }
        if self
            .photon_grid
            .iter()
            .any(|n| !(*n > 0.0 && n.is_finite()))
        {
            bail!("photon_grid entries must be positive and finite");
        }
        if self.photon_grid.windows(2).any(|w| w[1] <= w[0]) {
            bail!("photon_grid must be strictly increasing");
        }
        if !(self.reference_n0 > 0.0 && self.reference_n0.is_finite()) {
            bail!("reference_n0 must be positive and finite");
        }
        if self.algorithms.is_empty() {
            bail!("algorithms must not be empty");
        }
        let mut seen = self.algorithms.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.algorithms.len() {
            bail!("algorithms must not repeat");
        }
        if self.algorithms.contains(&Algorithm::Maptv) && self.tv_weight.is_none() {
            if self.n_calib == 0 || self.tv_grid.is_empty() {
                bail!("MAP-TV calibration needs n_calib > 0 and a nonempty tv_grid");
            }
            if self.tv_grid.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
                bail!("tv_grid entries must be nonnegative and finite");
            }
        }
        if let Some(w) = self.tv_weight {
            if !(w >= 0.0 && w.is_finite()) {
                bail!("tv_weight must be nonnegative and finite");
            }
        }
        self.scattering
            .validate(self.side_px)
            .map_err(|e| anyhow::anyhow!("scattering: {e}"))?;
        Ok(())
    }

    /// TOML unless the file ends in `.json`; a TOML parse failure falls back
    /// to JSON.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let is_json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let cfg: SweepConfig = if is_json {
            serde_json::from_str(&text)
                .with_context(|| format!("parsing JSON config {}", path.display()))?
        } else {
            match toml::from_str(&text) {
                Ok(c) => c,
                Err(toml_err) => serde_json::from_str(&text).map_err(|_| {
                    anyhow::anyhow!("parsing config {}: {toml_err}", path.display())
                })?,
            }
        };
        cfg.validate()
            .with_context(|| format!("invalid config {}", path.display()))?;
        Ok(cfg)
    }
}
