//! Synthetic face-like dataset in the LFW layout, for smoke tests and demos.
//!
//! Each identity is a fixed set of drawing parameters (face shape, skin and
//! hair color, eye and mouth geometry); its images differ by a small shift,
//! a brightness offset and mild pixel noise.

use std::fs;
use std::path::Path;

use degbench_core::seed::{rng, splitmix64};
use degbench_core::verify::Pair;
use degbench_core::{ImageBuf, PairSet};
use rand_chacha::ChaCha8Rng;
use rand_core::RngCore;

use crate::imageio::write_png;
use crate::pairs::{format_pairs, image_id, image_path};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthSpec {
    pub identities: usize,
    pub images_per_identity: u32,
    pub folds: usize,
    /// Matched pairs per fold (the same number of mismatched pairs is added).
    pub pairs_per_fold: usize,
    pub size: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            identities: 20,
            images_per_identity: 3,
            folds: 2,
            pairs_per_fold: 10,
            size: 112,
            seed: 0,
        }
    }
}

struct Face {
    skin: [f64; 3],
    hair: [f64; 3],
    background: [f64; 3],
    half_w: f64,
    half_h: f64,
    eye_dx: f64,
    eye_y: f64,
    eye_r: f64,
    mouth_y: f64,
    mouth_w: f64,
    hairline: f64,
}

fn unit(r: &mut ChaCha8Rng) -> f64 {
    (r.next_u32() >> 8) as f64 / (1u32 << 24) as f64
}

fn between(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit(r)
}

impl Face {
    fn random(r: &mut ChaCha8Rng) -> Self {
        let mut color = |lo: f64, hi: f64| [between(r, lo, hi), between(r, lo, hi), between(r, lo, hi)];
        let skin = color(90.0, 230.0);
        let hair = color(10.0, 140.0);
        let background = color(30.0, 220.0);
        Self {
            skin,
            hair,
            background,
            half_w: between(r, 0.26, 0.38),
            half_h: between(r, 0.34, 0.44),
            eye_dx: between(r, 0.09, 0.17),
            eye_y: between(r, -0.12, 0.0),
            eye_r: between(r, 0.025, 0.055),
            mouth_y: between(r, 0.14, 0.26),
            mouth_w: between(r, 0.06, 0.16),
            hairline: between(r, -0.34, -0.18),
        }
    }

    fn draw(&self, size: usize, r: &mut ChaCha8Rng) -> ImageBuf {
        let shift_x = between(r, -0.03, 0.03);
        let shift_y = between(r, -0.03, 0.03);
        let gain = between(r, -18.0, 18.0);
        let mut noise = Vec::with_capacity(size * size);
        for _ in 0..size * size {
            noise.push(between(r, -6.0, 6.0));
        }
        ImageBuf::from_fn(size, size, 3, |x, y, c| {
            let u = (x as f64 + 0.5) / size as f64 - 0.5 - shift_x;
            let v = (y as f64 + 0.5) / size as f64 - 0.5 - shift_y;
            let in_face = (u / self.half_w).powi(2) + (v / self.half_h).powi(2) <= 1.0;
            let mut px = if in_face {
                if v < self.hairline {
                    self.hair[c]
                } else {
                    self.skin[c] * (1.0 - 0.25 * (u / self.half_w).powi(2))
                }
            } else if v < self.hairline && u.abs() < self.half_w * 1.1 {
                self.hair[c]
            } else {
                self.background[c]
            };
            if in_face {
                for side in [-1.0, 1.0] {
                    let (du, dv) = (u - side * self.eye_dx, v - self.eye_y);
                    if du * du + dv * dv <= self.eye_r * self.eye_r {
                        px = 25.0;
                    }
                }
                if (v - self.mouth_y).abs() < 0.012 && u.abs() < self.mouth_w {
                    px = 70.0 + 40.0 * (c == 0) as u8 as f64;
                }
            }
            (px + gain + noise[y * size + x]).clamp(0.0, 255.0) as u8
        })
        .expect("nonzero synthetic image size")
    }
}

pub fn identity_name(i: usize) -> String {
    format!("Synth_Person_{i:03}")
}

/// Builds the pair list without drawing anything.
pub fn synth_pairs(spec: &SynthSpec) -> Result<PairSet> {
    if spec.identities < 2 || spec.images_per_identity < 2 {
        return Err(Error::Usage("need at least 2 identities with 2 images each".into()));
    }
    let mut r = rng(splitmix64(spec.seed ^ 0x5041_4952));
    let pick = |r: &mut ChaCha8Rng, n: usize| (r.next_u64() % n as u64) as usize;
    let mut pairs = Vec::new();
    for fold in 0..spec.folds {
        for _ in 0..spec.pairs_per_fold {
            let p = pick(&mut r, spec.identities);
            let i = pick(&mut r, spec.images_per_identity as usize) as u32;
            let j = (i + 1 + pick(&mut r, spec.images_per_identity as usize - 1) as u32) % spec.images_per_identity;
            let name = identity_name(p);
            pairs.push(Pair {
                a: image_id(&name, i + 1),
                b: image_id(&name, j + 1),
                same: true,
                fold,
            });
        }
        for _ in 0..spec.pairs_per_fold {
            let p = pick(&mut r, spec.identities);
            let q = (p + 1 + pick(&mut r, spec.identities - 1)) % spec.identities;
            let i = pick(&mut r, spec.images_per_identity as usize) as u32 + 1;
            let j = pick(&mut r, spec.images_per_identity as usize) as u32 + 1;
            pairs.push(Pair {
                a: image_id(&identity_name(p), i),
                b: image_id(&identity_name(q), j),
                same: false,
                fold,
            });
        }
    }
    Ok(PairSet::new(spec.folds, pairs)?)
}

/// Writes `pairs.txt` and `images/<name>/<name>_NNNN.png` under `dir`.
pub fn write_dataset(dir: &Path, spec: &SynthSpec) -> Result<PairSet> {
    let pairs = synth_pairs(spec)?;
    let images = dir.join("images");
    for p in 0..spec.identities {
        let name = identity_name(p);
        let mut r = rng(splitmix64(spec.seed ^ splitmix64(p as u64)));
        let face = Face::random(&mut r);
        fs::create_dir_all(images.join(&name)).map_err(|e| Error::io(images.join(&name), e))?;
        for k in 1..=spec.images_per_identity {
            let img = face.draw(spec.size, &mut r);
            write_png(&image_path(&images, &image_id(&name, k), "png"), &img)?;
        }
    }
    let text = format_pairs(&pairs)?;
    let path = dir.join("pairs.txt");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(pairs)
}
