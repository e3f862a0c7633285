//! The degradation operators and their composition.
//!
//! A degraded image is produced as
//! exposure -> blur -> bicubic downscale -> additive noise -> 8-bit
//! quantization -> JPEG round trip -> bicubic resize to the output size.
//! Every stage is optional; an absent stage is skipped entirely.

mod convolve;
mod exposure;
pub mod jpeg;
mod kernel;
mod noise;

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use convolve::convolve;
pub use exposure::{apply_exposure, exposure_sample};
pub use jpeg::jpeg_recompress;
pub use kernel::{gaussian_kernel, parse_theta, Kernel, KernelParams, BLUR_KERNEL_SIZE};
pub use noise::add_noise;

use crate::image::{quantize, resize_bicubic, to_float, FloatPlane, ImageBuf};
use crate::{seed, Error, Result};

/// Side length of the square images handed to the recognition model.
pub const OUTPUT_SIZE: usize = 112;

/// One point of the five-axis degradation space. `None` skips the stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegradationParams {
    pub exposure_gamma: Option<f64>,
    pub kernel: Option<KernelParams>,
    pub downscale_ratio: Option<u32>,
    /// Standard deviation on the 0-255 scale.
    pub noise_sigma: Option<f64>,
    pub jpeg_quality: Option<u8>,
}

impl DegradationParams {
    pub const IDENTITY: Self = Self {
        exposure_gamma: None,
        kernel: None,
        downscale_ratio: None,
        noise_sigma: None,
        jpeg_quality: None,
    };

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(g) = self.exposure_gamma {
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::InvalidParam(format!("exposure gamma {g} must be positive")));
            }
        }
        if let Some(k) = &self.kernel {
            k.validate()?;
        }
        if let Some(r) = self.downscale_ratio {
            if r < 2 {
                return Err(Error::InvalidParam(format!("downscale ratio {r} must be at least 2")));
            }
        }
        if let Some(s) = self.noise_sigma {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::InvalidParam(format!("noise sigma {s} must be positive")));
            }
        }
        if let Some(q) = self.jpeg_quality {
            if !(1..=100).contains(&q) {
                return Err(Error::InvalidParam(format!("JPEG quality {q} outside 1..=100")));
            }
        }
        Ok(())
    }
}

/// Runs the full pipeline on `img` and resizes the result to
/// `out_size x out_size`. The only randomness is the noise stage, drawn from
/// a generator seeded with `seed`.
pub fn degrade(
    img: &ImageBuf,
    params: &DegradationParams,
    seed: u64,
    out_size: usize,
) -> Result<ImageBuf> {
    params.validate()?;
    let mut plane = match params.exposure_gamma {
        // 8-bit input: evaluate the curve once per level.
        Some(gamma) => {
            let lut: Vec<f64> = (0..=255u8)
                .map(|v| exposure_sample(f64::from(v) / 255.0, gamma))
                .collect();
            let data = img.data().iter().map(|&v| lut[usize::from(v)]).collect();
            FloatPlane::new(img.width(), img.height(), img.channels(), data)?
        }
        None => to_float(img),
    };
    if let Some(k) = &params.kernel {
        plane = convolve(&plane, &gaussian_kernel(k, BLUR_KERNEL_SIZE)?)?;
    }
    if let Some(r) = params.downscale_ratio {
        let r = r as usize;
        plane = resize_bicubic(&plane, plane.width() / r, plane.height() / r)?;
    }
    if let Some(sigma) = params.noise_sigma {
        plane = add_noise(plane, sigma, &mut seed::rng(seed));
    }
    let mut out = quantize(&plane);
    if let Some(q) = params.jpeg_quality {
        out = jpeg_recompress(&out, q)?;
    }
    resize_square(&out, out_size)
}

/// Bicubic resize to `size x size`; a no-op when already that size.
pub fn resize_square(img: &ImageBuf, size: usize) -> Result<ImageBuf> {
    if img.dimensions() == (size, size) {
        return Ok(img.clone());
    }
    Ok(quantize(&resize_bicubic(&to_float(img), size, size)?))
}
