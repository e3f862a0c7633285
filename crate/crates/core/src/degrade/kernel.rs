use alloc::string::ToString;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Deserializer, Serialize};

use crate::{Error, Result};

/// Window size of the blur stage.
pub const BLUR_KERNEL_SIZE: usize = 11;

/// Shape of an anisotropic bivariate Gaussian: standard deviations along the
/// principal axes (pixels) and the rotation of the first axis (radians).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelParams {
    pub sigma_x: f64,
    pub sigma_y: f64,
    #[serde(deserialize_with = "deserialize_theta")]
    pub theta: f64,
}

impl KernelParams {
    pub fn new(sigma_x: f64, sigma_y: f64, theta: f64) -> Result<Self> {
        let p = Self {
            sigma_x,
            sigma_y,
            theta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |s: f64| s.is_finite() && s > 0.0;
        if !ok(self.sigma_x) || !ok(self.sigma_y) {
            return Err(Error::KernelSigma {
                sigma_x: self.sigma_x,
                sigma_y: self.sigma_y,
            });
        }
        if !(0.0..PI).contains(&self.theta) {
            return Err(Error::KernelTheta(self.theta));
        }
        Ok(())
    }
}

/// Parses a rotation such as `0`, `0.5`, `pi/4`, `3pi/4`, `3*pi/4` or `π/2`.
///
/// Multiples of pi are evaluated as `k * PI / d`, so `pi/2` parses to exactly
/// [`core::f64::consts::FRAC_PI_2`].
pub fn parse_theta(text: &str) -> Result<f64> {
    let err = || Error::ThetaSyntax(text.to_string());
    let t = text.trim();
    let lower = t.replace('π', "pi");
    let Some(pos) = lower.find("pi") else {
        return t.parse::<f64>().map_err(|_| err());
    };
    let numer = lower[..pos].trim().trim_end_matches('*').trim();
    let rest = lower[pos + 2..].trim();
    let k: f64 = if numer.is_empty() {
        1.0
    } else {
        numer.parse().map_err(|_| err())?
    };
    let d: f64 = if rest.is_empty() {
        1.0
    } else {
        let d = rest.strip_prefix('/').ok_or_else(err)?.trim();
        d.parse().map_err(|_| err())?
    };
    if d == 0.0 {
        return Err(err());
    }
    Ok(k * PI / d)
}

fn deserialize_theta<'de, D: Deserializer<'de>>(d: D) -> core::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(alloc::string::String),
    }
    match Repr::deserialize(d)? {
        Repr::Num(v) => Ok(v),
        Repr::Text(s) => parse_theta(&s).map_err(serde::de::Error::custom),
    }
}

/// Square, odd-sized grid of non-negative weights summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    size: usize,
    weights: Vec<f64>,
}

impl Kernel {
    pub fn new(size: usize, weights: Vec<f64>) -> Result<Self> {
        if size.is_multiple_of(2) || weights.len() != size * size {
            return Err(Error::KernelSize(size));
        }
        Ok(Self { size, weights })
    }

    pub fn identity() -> Self {
        Self {
            size: 1,
            weights: alloc::vec![1.0],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn radius(&self) -> usize {
        self.size / 2
    }

    /// Row-major weights; `weights()[row * size + col]`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.size + col]
    }

    pub fn transposed(&self) -> Self {
        let n = self.size;
        let weights = (0..n * n).map(|i| self.at(i % n, i / n)).collect();
        Self { size: n, weights }
    }
}

/// Anisotropic Gaussian on a `size x size` grid centred on the middle cell.
///
/// Weight at column `x`, row `y` is `exp(-v^T S^-1 v / 2)` with
/// `v = (x - c, y - c)` and `S = R(theta) diag(sx^2, sy^2) R(theta)^T`,
/// normalized to unit sum.
pub fn gaussian_kernel(p: &KernelParams, size: usize) -> Result<Kernel> {
    p.validate()?;
    if size.is_multiple_of(2) || size < 3 {
        return Err(Error::KernelSize(size));
    }
    let (s, c) = libm::sincos(p.theta);
    let (vx, vy) = (p.sigma_x * p.sigma_x, p.sigma_y * p.sigma_y);
    let a = c * c * vx + s * s * vy;
    let b = c * s * (vx - vy);
    let d = s * s * vx + c * c * vy;
    let det = a * d - b * b;
    let (ia, ib, id) = (d / det, -b / det, a / det);

    let half = (size / 2) as f64;
    let mut weights = Vec::with_capacity(size * size);
    for row in 0..size {
        let y = row as f64 - half;
        for col in 0..size {
            let x = col as f64 - half;
            let q = ia * x * x + 2.0 * ib * x * y + id * y * y;
            weights.push(libm::exp(-0.5 * q));
        }
    }
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= sum;
    }
    Ok(Kernel { size, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn k(sx: f64, sy: f64, t: f64) -> Kernel {
        gaussian_kernel(&KernelParams::new(sx, sy, t).unwrap(), BLUR_KERNEL_SIZE).unwrap()
    }

    /// Density evaluated in the rotated frame, `u = R^T v`, without forming
    /// the covariance matrix.
    fn brute_force(sx: f64, sy: f64, t: f64, size: usize) -> Vec<f64> {
        let half = (size / 2) as f64;
        let norm = 1.0 / (2.0 * PI * sx * sy);
        let mut out = Vec::new();
        for row in 0..size {
            for col in 0..size {
                let (x, y) = (col as f64 - half, row as f64 - half);
                let u = libm::cos(t) * x + libm::sin(t) * y;
                let w = -libm::sin(t) * x + libm::cos(t) * y;
                out.push(norm * libm::exp(-0.5 * (u * u / (sx * sx) + w * w / (sy * sy))));
            }
        }
        let s: f64 = out.iter().sum();
        out.iter().map(|v| v / s).collect()
    }

    #[test]
    fn isotropic_kernel_is_symmetric() {
        let g = k(1.0, 1.0, 0.0);
        let n = g.size();
        for r in 0..n {
            for c in 0..n {
                assert!((g.at(r, c) - g.at(c, r)).abs() < 1e-15);
                assert!((g.at(r, c) - g.at(c, n - 1 - r)).abs() < 1e-15);
            }
        }
        assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quarter_turn_transposes() {
        let a = k(1.0, 3.0, 0.0).transposed();
        let b = k(1.0, 3.0, FRAC_PI_2);
        for (x, y) in a.weights().iter().zip(b.weights()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_rotated_frame_density() {
        for &(sx, sy, t) in &[
            (1.0, 1.0, 0.0),
            (2.0, 2.0, 0.0),
            (3.0, 3.0, 0.0),
            (1.0, 3.0, 0.0),
            (1.0, 3.0, FRAC_PI_4),
            (1.0, 3.0, FRAC_PI_2),
            (1.0, 3.0, 3.0 * FRAC_PI_4),
        ] {
            let got = k(sx, sy, t);
            let want = brute_force(sx, sy, t, BLUR_KERNEL_SIZE);
            for (g, w) in got.weights().iter().zip(&want) {
                assert!((g - w).abs() < 1e-10, "({sx},{sy},{t})");
            }
            let c = BLUR_KERNEL_SIZE / 2;
            let max = got.weights().iter().cloned().fold(0.0, f64::max);
            assert_eq!(got.at(c, c), max);
        }
    }

    #[test]
    fn center_weight_of_elongated_kernel() {
        // Frozen from an independent NumPy evaluation on the 11x11 grid.
        let g = k(1.0, 3.0, 0.0);
        let want = brute_force(1.0, 3.0, 0.0, 11)[60];
        assert!((g.at(5, 5) - want).abs() < 1e-12);
        assert!((g.at(5, 5) - 0.056_769_671_277_767_99).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(KernelParams::new(0.0, 1.0, 0.0).is_err());
        assert!(KernelParams::new(1.0, -1.0, 0.0).is_err());
        assert!(KernelParams::new(1.0, 1.0, PI).is_err());
        assert!(KernelParams::new(1.0, 1.0, -0.1).is_err());
        let p = KernelParams::new(1.0, 1.0, 0.0).unwrap();
        assert!(matches!(gaussian_kernel(&p, 10), Err(Error::KernelSize(10))));
        assert!(matches!(gaussian_kernel(&p, 1), Err(Error::KernelSize(1))));
    }

    #[test]
    fn parses_multiples_of_pi() {
        assert_eq!(parse_theta("0").unwrap(), 0.0);
        assert_eq!(parse_theta("pi/4").unwrap(), FRAC_PI_4);
        assert_eq!(parse_theta("pi/2").unwrap(), FRAC_PI_2);
        assert_eq!(parse_theta("π/2").unwrap(), FRAC_PI_2);
        assert_eq!(parse_theta("3pi/4").unwrap(), 3.0 * PI / 4.0);
        assert_eq!(parse_theta("3*pi/4").unwrap(), 3.0 * PI / 4.0);
        assert_eq!(parse_theta("0.25").unwrap(), 0.25);
        assert!(parse_theta("pi/0").is_err());
        assert!(parse_theta("half").is_err());
        assert!(parse_theta("pi4").is_err());
    }
}
