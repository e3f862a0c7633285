//! Raster buffers and the resampling primitives shared by every operator.
//!
//! [`ImageBuf`] is the 8-bit interleaved storage format that enters and
//! leaves the pipeline; [`FloatPlane`] is the `[0, 1]` working view the
//! operators compute on. Conversion between the two is exact in the
//! `ImageBuf -> FloatPlane -> ImageBuf` direction.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Owned 8-bit raster, row-major with interleaved channels (1 or 3).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ImageBuf {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl ImageBuf {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        check_shape(width, height, channels, data.len())?;
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Builds an image by evaluating `f(x, y, channel)` for every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> u8,
    ) -> Result<Self> {
        check_shape(width, height, channels, width * height * channels)?;
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn to_float(&self) -> FloatPlane {
        to_float(self)
    }

    /// Collapses RGB to a single luma channel (BT.601 weights); grayscale
    /// input is returned unchanged.
    pub fn to_gray(&self) -> ImageBuf {
        quantize(&to_gray(&to_float(self)))
    }
}

/// Working-precision raster with samples nominally in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatPlane {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl FloatPlane {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        check_shape(width, height, channels, data.len())?;
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_raw(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn map(mut self, f: impl Fn(f64) -> f64) -> Self {
        for v in &mut self.data {
            *v = f(*v);
        }
        self
    }
}

fn check_shape(width: usize, height: usize, channels: usize, len: usize) -> Result<()> {
    if channels != 1 && channels != 3 {
        return Err(Error::Channels(channels));
    }
    if width == 0 || height == 0 {
        return Err(Error::ZeroDimension { width, height });
    }
    if width.checked_mul(height).and_then(|n| n.checked_mul(channels)) != Some(len) {
        return Err(Error::BufferSize {
            width,
            height,
            channels,
            actual: len,
        });
    }
    Ok(())
}

/// Maps every 8-bit sample to `v / 255`.
pub fn to_float(img: &ImageBuf) -> FloatPlane {
    FloatPlane {
        width: img.width,
        height: img.height,
        channels: img.channels,
        data: img.data.iter().map(|&v| f64::from(v) / 255.0).collect(),
    }
}

/// Clamps to `[0, 1]`, scales by 255 and rounds half away from zero.
pub fn quantize(plane: &FloatPlane) -> ImageBuf {
    ImageBuf {
        width: plane.width,
        height: plane.height,
        channels: plane.channels,
        data: plane.data.iter().map(|&v| quantize_sample(v)).collect(),
    }
}

#[inline]
pub fn quantize_sample(v: f64) -> u8 {
    // NaN falls through both comparisons of `clamp`'s guard, so map it first.
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    libm::round(v * 255.0) as u8
}

/// BT.601 luma of an RGB plane; single-channel planes pass through.
pub fn to_gray(plane: &FloatPlane) -> FloatPlane {
    if plane.channels == 1 {
        return plane.clone();
    }
    let data = plane
        .data
        .chunks_exact(3)
        .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
        .collect();
    FloatPlane {
        width: plane.width,
        height: plane.height,
        channels: 1,
        data,
    }
}

/// Keys cubic convolution kernel with `a = -0.5` (Catmull-Rom).
#[inline]
pub fn cubic_weight(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = x.abs();
    if x < 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
    } else {
        0.0
    }
}

/// Tap positions and normalized weights for one output coordinate.
struct Taps {
    first: isize,
    weights: Vec<f64>,
}

fn axis_taps(in_len: usize, out_len: usize) -> Vec<Taps> {
    let ratio = in_len as f64 / out_len as f64;
    let scale = ratio.max(1.0);
    let support = 2.0 * scale;
    (0..out_len)
        .map(|o| {
            let center = (o as f64 + 0.5) * ratio - 0.5;
            let first = libm::floor(center - support) as isize;
            let last = libm::ceil(center + support) as isize;
            let mut weights: Vec<f64> = (first..=last)
                .map(|i| cubic_weight((i as f64 - center) / scale))
                .collect();
            let sum: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= sum;
            }
            Taps { first, weights }
        })
        .collect()
}

#[inline]
fn clamp_index(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}

/// Separable bicubic resampling with clamp-to-edge borders. When shrinking an
/// axis the kernel is stretched by the shrink factor so it also low-passes.
pub fn resize_bicubic(plane: &FloatPlane, out_w: usize, out_h: usize) -> Result<FloatPlane> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::ZeroDimension {
            width: out_w,
            height: out_h,
        });
    }
    let horizontal = resize_horizontal(plane, out_w);
    Ok(resize_vertical(&horizontal, out_h))
}

fn resize_horizontal(plane: &FloatPlane, out_w: usize) -> FloatPlane {
    if out_w == plane.width {
        return plane.clone();
    }
    let ch = plane.channels;
    let taps = axis_taps(plane.width, out_w);
    let mut data = vec![0.0; out_w * plane.height * ch];
    for y in 0..plane.height {
        let row = &plane.data[y * plane.width * ch..(y + 1) * plane.width * ch];
        let out_row = &mut data[y * out_w * ch..(y + 1) * out_w * ch];
        for (x, t) in taps.iter().enumerate() {
            for (k, &w) in t.weights.iter().enumerate() {
                let sx = clamp_index(t.first + k as isize, plane.width);
                for c in 0..ch {
                    out_row[x * ch + c] += w * row[sx * ch + c];
                }
            }
        }
    }
    FloatPlane {
        width: out_w,
        height: plane.height,
        channels: ch,
        data,
    }
}

fn resize_vertical(plane: &FloatPlane, out_h: usize) -> FloatPlane {
    if out_h == plane.height {
        return plane.clone();
    }
    let stride = plane.width * plane.channels;
    let taps = axis_taps(plane.height, out_h);
    let mut data = vec![0.0; out_h * stride];
    for (y, t) in taps.iter().enumerate() {
        let out_row = &mut data[y * stride..(y + 1) * stride];
        for (k, &w) in t.weights.iter().enumerate() {
            let sy = clamp_index(t.first + k as isize, plane.height);
            let row = &plane.data[sy * stride..(sy + 1) * stride];
            for (o, &v) in out_row.iter_mut().zip(row) {
                *o += w * v;
            }
        }
    }
    FloatPlane {
        width: plane.width,
        height: out_h,
        channels: plane.channels,
        data,
    }
}

/// Peak signal-to-noise ratio in dB between two equally shaped images.
/// Identical images give `f64::INFINITY`.
pub fn psnr(a: &ImageBuf, b: &ImageBuf) -> Result<f64> {
    let shape = |i: &ImageBuf| (i.width, i.height, i.channels);
    if shape(a) != shape(b) {
        return Err(Error::ShapeMismatch(shape(a), shape(b)));
    }
    let sse: f64 = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum();
    if sse == 0.0 {
        return Ok(f64::INFINITY);
    }
    let mse = sse / a.data.len() as f64;
    Ok(10.0 * libm::log10(255.0 * 255.0 / mse))
}
