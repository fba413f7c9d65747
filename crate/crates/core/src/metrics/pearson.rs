use crate::error::{Error, Result};
use crate::grid::ImageGrid;

/// Sample Pearson correlation over all pixels, computed with centred sums.
/// If exactly one image is constant the correlation is reported as 0.
pub fn pearson_r(a: &ImageGrid, b: &ImageGrid) -> Result<f64> {
    if a.values().len() != b.values().len() {
        return Err(Error::invalid("images must have equal dimensions"));
    }
    let n = a.values().len() as f64;
    let mean_a = a.values().iter().sum::<f64>() / n;
    let mean_b = b.values().iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (&x, &y) in a.values().iter().zip(b.values()) {
        let dx = x - mean_a;
        let dy = y - mean_b;
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    match (saa > 0.0, sbb > 0.0) {
        (false, false) => Err(Error::UndefinedCorrelation),
        (true, true) => Ok((sab / (libm::sqrt(saa) * libm::sqrt(sbb))).clamp(-1.0, 1.0)),
        _ => Ok(0.0),
    }
}
