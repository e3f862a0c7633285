use alloc::vec;

use super::kernel::Kernel;
use crate::image::FloatPlane;
use crate::{Error, Result};

/// Mirrors an out-of-range index without repeating the edge sample
/// (`dcb|abcd|cba`). Valid while `|overshoot| < len`.
#[inline]
fn reflect101(i: isize, len: usize) -> usize {
    let n = len as isize;
    if n == 1 {
        return 0;
    }
    let j = if i < 0 {
        -i
    } else if i >= n {
        2 * n - 2 - i
    } else {
        i
    };
    j as usize
}

/// Per-channel 2-D correlation (kernel not flipped) with reflect-101 borders.
pub fn convolve(plane: &FloatPlane, kernel: &Kernel) -> Result<FloatPlane> {
    let (w, h, ch) = (plane.width(), plane.height(), plane.channels());
    let size = kernel.size();
    if size > w || size > h {
        return Err(Error::KernelTooLarge {
            size,
            width: w,
            height: h,
        });
    }
    let r = kernel.radius();
    let src = plane.data();
    // Pad once so the inner loops need no border logic.
    let (pw, ph) = (w + 2 * r, h + 2 * r);
    let mut padded = vec![0.0; pw * ph * ch];
    for py in 0..ph {
        let sy = reflect101(py as isize - r as isize, h);
        for px in 0..pw {
            let sx = reflect101(px as isize - r as isize, w);
            let (d, s) = ((py * pw + px) * ch, (sy * w + sx) * ch);
            padded[d..d + ch].copy_from_slice(&src[s..s + ch]);
        }
    }
    let mut out = vec![0.0; src.len()];
    match ch {
        1 => correlate::<1>(&padded, pw, kernel, w, h, &mut out),
        _ => correlate::<3>(&padded, pw, kernel, w, h, &mut out),
    }
    FloatPlane::new(w, h, ch, out)
}

fn correlate<const C: usize>(padded: &[f64], pw: usize, kernel: &Kernel, w: usize, h: usize, out: &mut [f64]) {
    let size = kernel.size();
    let weights = kernel.weights();
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0f64; C];
            for ky in 0..size {
                let start = ((y + ky) * pw + x) * C;
                let row = &padded[start..start + size * C];
                let krow = &weights[ky * size..(ky + 1) * size];
                for (px, &wgt) in row.chunks_exact(C).zip(krow) {
                    for c in 0..C {
                        acc[c] += wgt * px[c];
                    }
                }
            }
            out[(y * w + x) * C..(y * w + x + 1) * C].copy_from_slice(&acc);
        }
    }
}
