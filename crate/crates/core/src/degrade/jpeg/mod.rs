//! Baseline sequential JPEG (ITU-T T.81), used to insert real compression
//! artifacts: RGB -> YCbCr, 4:2:0 chroma subsampling, 8x8 DCT, Annex K
//! quantization tables scaled by the IJG quality rule, Huffman coding with the
//! Annex K typical tables. The decoder accepts any baseline Huffman stream
//! with 1 or 3 components, arbitrary sampling factors and restart intervals.

mod decoder;
mod encoder;
pub mod tables;

use core::f64::consts::PI;

pub use decoder::decode;
pub use encoder::encode;

use crate::image::ImageBuf;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum JpegError {
    #[error("JPEG quality {0} outside 1..=100")]
    Quality(u8),
    #[error("not a JPEG stream (missing SOI marker)")]
    NotJpeg,
    #[error("JPEG stream truncated")]
    Truncated,
    #[error("unsupported JPEG feature: {0}")]
    Unsupported(&'static str),
    #[error("corrupt JPEG stream: {0}")]
    Corrupt(&'static str),
}

/// IJG percentage scale: `5000 / q` below 50, `200 - 2q` from 50 up.
pub fn quality_scale(quality: u8) -> Result<u32, JpegError> {
    if !(1..=100).contains(&quality) {
        return Err(JpegError::Quality(quality));
    }
    let q = u32::from(quality);
    Ok(if q < 50 { 5000 / q } else { 200 - 2 * q })
}

/// Scales a base table: `clamp((Q * scale + 50) / 100, 1, 255)`.
pub fn scaled_quant_table(base: &[u16; 64], quality: u8) -> Result<[u16; 64], JpegError> {
    let scale = quality_scale(quality)?;
    let mut out = [0u16; 64];
    for (o, &b) in out.iter_mut().zip(base) {
        *o = ((u32::from(b) * scale + 50) / 100).clamp(1, 255) as u16;
    }
    Ok(out)
}

/// Encodes at `quality` and decodes back, returning an image of the same
/// dimensions and channel count carrying the compression artifacts.
pub fn jpeg_recompress(img: &ImageBuf, quality: u8) -> Result<ImageBuf, JpegError> {
    decode(&encode(img, quality)?)
}

/// Orthonormal DCT-II basis: `m[u][x] = C(u)/2 * cos((2x+1) u pi / 16)`.
pub(crate) fn dct_matrix() -> [[f64; 8]; 8] {
    let mut m = [[0.0; 8]; 8];
    for (u, row) in m.iter_mut().enumerate() {
        let c = if u == 0 { core::f64::consts::FRAC_1_SQRT_2 } else { 1.0 };
        for (x, v) in row.iter_mut().enumerate() {
            *v = 0.5 * c * libm::cos((2 * x + 1) as f64 * u as f64 * PI / 16.0);
        }
    }
    m
}

/// Forward 2-D DCT of a row-major 8x8 block.
pub(crate) fn fdct(m: &[[f64; 8]; 8], block: &[f64; 64]) -> [f64; 64] {
    let mut tmp = [0.0; 64];
    for y in 0..8 {
        for u in 0..8 {
            tmp[y * 8 + u] = (0..8).map(|x| m[u][x] * block[y * 8 + x]).sum();
        }
    }
    let mut out = [0.0; 64];
    for v in 0..8 {
        for u in 0..8 {
            out[v * 8 + u] = (0..8).map(|y| m[v][y] * tmp[y * 8 + u]).sum();
        }
    }
    out
}

/// Inverse of [`fdct`].
pub(crate) fn idct(m: &[[f64; 8]; 8], coef: &[f64; 64]) -> [f64; 64] {
    let mut tmp = [0.0; 64];
    for v in 0..8 {
        for x in 0..8 {
            tmp[v * 8 + x] = (0..8).map(|u| m[u][x] * coef[v * 8 + u]).sum();
        }
    }
    let mut out = [0.0; 64];
    for y in 0..8 {
        for x in 0..8 {
            out[y * 8 + x] = (0..8).map(|v| m[v][y] * tmp[v * 8 + x]).sum();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::tables::{CHROMA_QUANT, LUMA_QUANT};
    use super::*;
    use crate::image::psnr;

    #[test]
    fn quality_fifty_is_annex_k() {
        assert_eq!(quality_scale(50).unwrap(), 100);
        assert_eq!(scaled_quant_table(&LUMA_QUANT, 50).unwrap(), LUMA_QUANT);
        assert_eq!(scaled_quant_table(&CHROMA_QUANT, 50).unwrap(), CHROMA_QUANT);
    }

    #[test]
    fn ijg_scaling_examples() {
        assert_eq!(quality_scale(4).unwrap(), 1250);
        assert_eq!(quality_scale(64).unwrap(), 72);
        assert_eq!(quality_scale(100).unwrap(), 0);
        // 16 * 1250 = 20000 -> 200; 121 * 1250 would exceed 255 and clamps.
        let t = scaled_quant_table(&LUMA_QUANT, 4).unwrap();
        assert_eq!(t[0], 200);
        assert_eq!(t[50], 255);
        // quality 100 floors every entry at 1
        assert!(scaled_quant_table(&LUMA_QUANT, 100).unwrap().iter().all(|&q| q == 1));
        // (11 * 72 + 50) / 100 = 8
        assert_eq!(scaled_quant_table(&LUMA_QUANT, 64).unwrap()[1], 8);
    }

    #[test]
    fn quality_out_of_range() {
        assert_eq!(quality_scale(0), Err(JpegError::Quality(0)));
        assert_eq!(quality_scale(101), Err(JpegError::Quality(101)));
        let img = ImageBuf::filled(8, 8, 3, 0).unwrap();
        assert_eq!(jpeg_recompress(&img, 0), Err(JpegError::Quality(0)));
    }

    #[test]
    fn dct_round_trip() {
        let m = dct_matrix();
        let mut block = [0.0; 64];
        for (i, b) in block.iter_mut().enumerate() {
            *b = ((i * 37) % 255) as f64 - 128.0;
        }
        let back = idct(&m, &fdct(&m, &block));
        for (a, b) in back.iter().zip(&block) {
            assert!((a - b).abs() < 1e-9);
        }
        // DC of a constant block is 8 * value
        let flat = fdct(&m, &[10.0; 64]);
        assert!((flat[0] - 80.0).abs() < 1e-12);
        assert!(flat[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn dimensions_survive_for_odd_sizes() {
        for &(w, h, c) in &[(1, 1, 3), (7, 9, 3), (17, 33, 3), (15, 16, 1), (112, 112, 3)] {
            let img = ImageBuf::from_fn(w, h, c, |x, y, ch| ((x * 13 + y * 7 + ch * 50) % 256) as u8)
                .unwrap();
            for q in [4, 50, 95] {
                let out = jpeg_recompress(&img, q).unwrap();
                assert_eq!((out.width(), out.height(), out.channels()), (w, h, c));
            }
        }
    }

    #[test]
    fn flat_color_survives_high_quality() {
        let img = ImageBuf::from_fn(24, 24, 3, |_, _, c| [200, 90, 30][c]).unwrap();
        let out = jpeg_recompress(&img, 95).unwrap();
        for (a, b) in out.data().iter().zip(img.data()) {
            assert!((i16::from(*a) - i16::from(*b)).abs() <= 2);
        }
    }

    #[test]
    fn lower_quality_loses_more() {
        let img = ImageBuf::from_fn(64, 64, 3, |x, y, c| {
            let v = 128.0 + 60.0 * libm::sin(x as f64 * 0.3 + c as f64) * libm::cos(y as f64 * 0.2);
            (v + ((x * y) % 17) as f64) as u8
        })
        .unwrap();
        let mut prev = f64::INFINITY;
        for q in [64, 32, 16, 8, 4] {
            let p = psnr(&img, &jpeg_recompress(&img, q).unwrap()).unwrap();
            assert!(p < prev, "q={q}: {p} !< {prev}");
            prev = p;
        }
    }
}
