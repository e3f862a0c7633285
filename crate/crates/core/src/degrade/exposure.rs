use crate::image::FloatPlane;
use crate::{Error, Result};

/// Gamma exposure curve `s -> 1 - (1 - s)^gamma` on `[0, 1]` samples.
///
/// `gamma < 1` darkens and `gamma > 1` brightens; both endpoints are fixed.
pub fn apply_exposure(plane: FloatPlane, gamma: f64) -> Result<FloatPlane> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParam(alloc::format!(
            "exposure gamma must be positive, got {gamma}"
        )));
    }
    if gamma == 1.0 {
        return Ok(plane);
    }
    Ok(plane.map(|s| exposure_sample(s, gamma)))
}

#[inline]
pub fn exposure_sample(s: f64, gamma: f64) -> f64 {
    if gamma == 1.0 {
        return s;
    }
    1.0 - libm::pow((1.0 - s).clamp(0.0, 1.0), gamma)
}
