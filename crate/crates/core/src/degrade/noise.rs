use rand_core::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::image::FloatPlane;

/// Adds i.i.d. `N(0, (sigma255 / 255)^2)` to every sample (each channel
/// independently, drawn in storage order) and clamps to `[0, 1]`.
pub fn add_noise<R: RngCore>(plane: FloatPlane, sigma255: f64, rng: &mut R) -> FloatPlane {
    let sigma = sigma255 / 255.0;
    let mut plane = plane;
    for v in plane.data_mut() {
        let n: f64 = StandardNormal.sample(rng);
        *v = (*v + sigma * n).clamp(0.0, 1.0);
    }
    plane
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng;

    #[test]
    fn same_seed_is_bit_identical() {
        let p = FloatPlane::filled(32, 32, 3, 0.5).unwrap();
        let a = add_noise(p.clone(), 16.0, &mut rng(11));
        let b = add_noise(p.clone(), 16.0, &mut rng(11));
        let c = add_noise(p, 16.0, &mut rng(12));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn output_is_clamped() {
        let p = FloatPlane::filled(64, 64, 3, 0.02).unwrap();
        let out = add_noise(p, 64.0, &mut rng(3));
        assert!(out.data().iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(out.data().contains(&0.0));
    }

    #[test]
    fn moments_match_requested_sigma() {
        let base = 128.0 / 255.0;
        let p = FloatPlane::filled(256, 256, 3, base).unwrap();
        let n = p.data().len() as f64;
        for seed in 0..5 {
            let out = add_noise(p.clone(), 16.0, &mut rng(seed));
            let d: alloc::vec::Vec<f64> = out.data().iter().map(|v| (v - base) * 255.0).collect();
            let mean = d.iter().sum::<f64>() / n;
            let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
            assert!(mean.abs() < 3.0 * 16.0 / n.sqrt(), "seed {seed}: mean {mean}");
            assert!((var.sqrt() - 16.0).abs() < 0.02 * 16.0, "seed {seed}: std {}", var.sqrt());
        }
    }
}
