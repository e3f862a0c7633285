//! Fast internal consistency checks for an installed binary.

use std::f64::consts::PI;

use degbench_core::degrade::jpeg::tables::{CHROMA_QUANT, LUMA_QUANT};
use degbench_core::degrade::jpeg::{jpeg_recompress, scaled_quant_table};
use degbench_core::degrade::{exposure_sample, gaussian_kernel, KernelParams, BLUR_KERNEL_SIZE};
use degbench_core::embed::{EmbeddingStore, ImageKey};
use degbench_core::image::psnr;
use degbench_core::sweep::{enumerate_combinations, filter_at_most_one_extreme};
use degbench_core::verify::best_threshold;
use degbench_core::{ImageBuf, ParamGrid};

use crate::store::{decode_store, encode_store};

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<String, String>) -> Check {
    match f() {
        Ok(detail) => Check {
            name,
            passed: true,
            detail,
        },
        Err(detail) => Check {
            name,
            passed: false,
            detail,
        },
    }
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

pub fn run_checks() -> Vec<Check> {
    vec![
        check("grid counts", || {
            let g = ParamGrid::standard();
            let all = enumerate_combinations(&g);
            let kept = filter_at_most_one_extreme(&all, &g).map_err(|e| e.to_string())?.len();
            let runs = g.total_runs();
            ensure(
                (all.len(), kept, runs) == (11_760, 9_070, 52_080),
                format!("{} / {kept} / {runs}", all.len()),
            )?;
            Ok(format!("{} combinations, {kept} kept, {runs} runs", all.len()))
        }),
        check("blur kernels", || {
            let g = ParamGrid::standard();
            for k in g.kernels.iter().filter_map(|k| k.value) {
                let w = gaussian_kernel(&k, BLUR_KERNEL_SIZE).map_err(|e| e.to_string())?;
                let s: f64 = w.weights().iter().sum();
                ensure((s - 1.0).abs() < 1e-12, format!("{k:?} sums to {s}"))?;
            }
            let a = gaussian_kernel(&KernelParams::new(1.0, 3.0, 0.0).unwrap(), BLUR_KERNEL_SIZE).unwrap();
            let b = gaussian_kernel(&KernelParams::new(1.0, 3.0, PI / 2.0).unwrap(), BLUR_KERNEL_SIZE).unwrap();
            let worst = a
                .transposed()
                .weights()
                .iter()
                .zip(b.weights())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            ensure(worst < 1e-12, format!("rotation by pi/2 off by {worst}"))?;
            Ok("7 kernels normalized, rotation consistent".into())
        }),
        check("exposure", || {
            for g in [0.125, 0.25, 0.5, 2.0, 4.0, 8.0] {
                ensure(
                    exposure_sample(0.0, g) == 0.0 && exposure_sample(1.0, g) == 1.0,
                    format!("endpoints move at gamma {g}"),
                )?;
            }
            let v = degbench_core::image::quantize_sample(exposure_sample(128.0 / 255.0, 2.0));
            ensure(v == 192, format!("128 at gamma 2 gives {v}"))?;
            Ok("endpoints fixed, 128 -> 192 at gamma 2".into())
        }),
        check("jpeg", || {
            ensure(scaled_quant_table(&LUMA_QUANT, 50).unwrap() == LUMA_QUANT, "luma table at q=50")?;
            ensure(scaled_quant_table(&CHROMA_QUANT, 50).unwrap() == CHROMA_QUANT, "chroma table at q=50")?;
            let img = ImageBuf::from_fn(48, 48, 3, |x, y, c| {
                (128.0 + 80.0 * ((x as f64 * 0.35 + c as f64).sin() * (y as f64 * 0.21).cos())) as u8
            })
            .unwrap();
            let mut last = f64::INFINITY;
            for q in [64, 32, 16, 8, 4] {
                let out = jpeg_recompress(&img, q).map_err(|e| e.to_string())?;
                let p = psnr(&img, &out).map_err(|e| e.to_string())?;
                ensure(p < last, format!("PSNR not decreasing at q={q}"))?;
                last = p;
            }
            Ok("q=50 tables match, PSNR decreasing with quality".into())
        }),
        check("threshold", || {
            let (t, c) = best_threshold(&[(0.9, true), (0.1, false)]).map_err(|e| e.to_string())?;
            ensure((t, c) == (0.5, 2), format!("got ({t}, {c})"))?;
            Ok("midpoint threshold".into())
        }),
        check("store format", || {
            let mut s = EmbeddingStore::new();
            s.insert(
                ImageKey::clean("a/a_0001"),
                degbench_core::Embedding::from_raw(&[1.0, 2.0, 2.0]).unwrap(),
            )
            .unwrap();
            let bytes = encode_store(&s);
            let back = decode_store(&bytes).map_err(|e| e.to_string())?;
            ensure(encode_store(&back) == bytes, "store bytes changed on round trip")?;
            Ok(format!("{} bytes round-trip", bytes.len()))
        }),
    ]
}
