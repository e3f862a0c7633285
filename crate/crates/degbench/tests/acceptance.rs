//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any gating criterion fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use degbench::imageio::read_image;
use degbench::manifest::write_manifest;
use degbench::pairs::format_pairs;
use degbench::provider::ProviderConfig;
use degbench::report::{build_report, report_json, BenchmarkReport};
use degbench::run::{run, RunConfig};
use degbench::synth::{synth_pairs, write_dataset, SynthSpec};
use degbench_core::degrade::jpeg::tables::{CHROMA_QUANT, LUMA_QUANT};
use degbench_core::degrade::jpeg::{jpeg_recompress, scaled_quant_table};
use degbench_core::degrade::{add_noise, apply_exposure, gaussian_kernel, BLUR_KERNEL_SIZE};
use degbench_core::image::{psnr, quantize_sample, FloatPlane};
use degbench_core::seed::rng;
use degbench_core::sweep::{enumerate_combinations, filter_at_most_one_extreme, plan_runs, Axis, AxisValue};
use degbench_core::verify::{best_threshold, Mode, SeriesKind};
use degbench_core::{KernelParams, ParamGrid};
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e(err: impl std::fmt::Display) -> String {
    err.to_string()
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

const GAMMAS: [f64; 6] = [0.125, 0.25, 0.5, 2.0, 4.0, 8.0];

fn grid_arithmetic() -> Outcome {
    let start = Instant::now();
    let grid = ParamGrid::standard();
    let all = enumerate_combinations(&grid);
    let kept = filter_at_most_one_extreme(&all, &grid).map_err(e)?.len();
    let runs = plan_runs(&grid, 0).map_err(e)?.total_runs();
    let took = start.elapsed();
    ensure(
        (all.len(), kept, runs) == (11_760, 9_070, 52_080),
        format!("{} combinations, {kept} kept, {runs} runs", all.len()),
    )?;
    ensure(took < Duration::from_secs(1), format!("took {took:?}"))?;
    Ok(format!("11760 combinations, 9070 kept, 52080 runs in {took:.2?}"))
}

/// Normalized density of N(0, R diag(sx^2, sy^2) R^T) on the integer grid,
/// evaluated through the explicit inverse covariance.
fn bivariate_normal(sx: f64, sy: f64, t: f64, size: usize) -> Vec<f64> {
    let (c, s) = (t.cos(), t.sin());
    let a = c * c * sx * sx + s * s * sy * sy;
    let b = c * s * (sx * sx - sy * sy);
    let d = s * s * sx * sx + c * c * sy * sy;
    let det = a * d - b * b;
    let (ia, ib, id) = (d / det, -b / det, a / det);
    let half = (size / 2) as f64;
    let mut w = Vec::with_capacity(size * size);
    for row in 0..size {
        for col in 0..size {
            let (x, y) = (col as f64 - half, row as f64 - half);
            w.push((-0.5 * (ia * x * x + 2.0 * ib * x * y + id * y * y)).exp() / (2.0 * PI * det.sqrt()));
        }
    }
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

fn kernel_suite() -> Outcome {
    let kernels = ParamGrid::standard().kernels.iter().filter_map(|k| k.value).collect::<Vec<_>>();
    ensure(kernels.len() == 7, format!("{} kernels in the grid", kernels.len()))?;
    let mut worst_brute = 0.0f64;
    for k in &kernels {
        let w = gaussian_kernel(k, BLUR_KERNEL_SIZE).map_err(e)?;
        let sum: f64 = w.weights().iter().sum();
        ensure((sum - 1.0).abs() < 1e-12, format!("{k:?} sums to {sum}"))?;
        ensure(w.weights().iter().all(|&v| v >= 0.0), format!("{k:?} has negative weights"))?;
        let want = bivariate_normal(k.sigma_x, k.sigma_y, k.theta, BLUR_KERNEL_SIZE);
        for (g, w) in w.weights().iter().zip(&want) {
            worst_brute = worst_brute.max((g - w).abs());
        }
    }
    ensure(worst_brute < 1e-10, format!("brute-force mismatch {worst_brute:e}"))?;
    let a = gaussian_kernel(&KernelParams::new(1.0, 3.0, 0.0).map_err(e)?, BLUR_KERNEL_SIZE).map_err(e)?;
    let b = gaussian_kernel(&KernelParams::new(1.0, 3.0, FRAC_PI_2).map_err(e)?, BLUR_KERNEL_SIZE).map_err(e)?;
    let n = BLUR_KERNEL_SIZE;
    let mut worst_t = 0.0f64;
    for r in 0..n {
        for c in 0..n {
            worst_t = worst_t.max((a.at(c, r) - b.at(r, c)).abs());
        }
    }
    ensure(worst_t < 1e-12, format!("transpose mismatch {worst_t:e}"))?;
    Ok(format!("7 kernels sum to 1, transpose off by {worst_t:.1e}, brute force off by {worst_brute:.1e}"))
}

fn exposure_suite() -> Outcome {
    let grid: Vec<f64> = (0..1024).map(|i| f64::from(i) / 1023.0).collect();
    let plane = |v: &[f64]| FloatPlane::new(v.len(), 1, 1, v.to_vec()).unwrap();
    let id = apply_exposure(plane(&grid), 1.0).map_err(e)?;
    ensure(id.data() == grid.as_slice(), "gamma 1 is not the identity")?;
    for g in GAMMAS {
        let ends = apply_exposure(plane(&[0.0, 1.0]), g).map_err(e)?;
        ensure(ends.data() == [0.0, 1.0], format!("endpoints move at gamma {g}"))?;
    }
    let v = quantize_sample(apply_exposure(plane(&[128.0 / 255.0]), 2.0).map_err(e)?.data()[0]);
    ensure(v == 192, format!("128 at gamma 2 gives {v}"))?;
    let mut failures = Vec::new();
    for g in GAMMAS {
        let inner = apply_exposure(plane(&grid), 1.0 / g).map_err(e)?;
        let back = apply_exposure(inner, g).map_err(e)?;
        let (at, err) = back
            .data()
            .iter()
            .zip(&grid)
            .map(|(b, s)| (*s, (b - s).abs()))
            .fold((0.0, 0.0), |m, x| if x.1 > m.1 { x } else { m });
        if err >= 1e-6 {
            failures.push(format!("gamma {g} after 1/{g}: error {err:.2e} at s={at:.6}"));
        }
    }
    ensure(failures.is_empty(), format!("composition: {}", failures.join("; ")))?;
    Ok("identity, endpoints, composition within 1e-6, 128 -> 192".into())
}

fn noise_statistics() -> Outcome {
    let sigma = 16.0 / 255.0;
    let base = 128.0 / 255.0;
    let mut detail = Vec::new();
    for seed in 0..5u64 {
        let p = FloatPlane::filled(256, 256, 3, base).map_err(e)?;
        let out = add_noise(p, 16.0, &mut rng(seed));
        let n = out.data().len() as f64;
        let mean = out.data().iter().map(|v| v - base).sum::<f64>() / n;
        let var = out.data().iter().map(|v| (v - base - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let std = var.sqrt();
        ensure(mean.abs() < 3.0 * sigma / n.sqrt(), format!("seed {seed}: mean {mean:e}"))?;
        let rel = (std - sigma).abs() / sigma;
        ensure(rel < 0.02, format!("seed {seed}: std off by {:.3}%", rel * 100.0))?;
        detail.push(format!("{:.3}%", rel * 100.0));
    }
    Ok(format!("5 seeds, std deviation from 16/255: {}", detail.join(", ")))
}

fn jpeg_monotonicity() -> Outcome {
    ensure(scaled_quant_table(&LUMA_QUANT, 50).map_err(e)? == LUMA_QUANT, "luma table at q=50")?;
    ensure(scaled_quant_table(&CHROMA_QUANT, 50).map_err(e)? == CHROMA_QUANT, "chroma table at q=50")?;
    let img = read_image(&data("face112.png")).map_err(e)?;
    let mut values = Vec::new();
    for q in [64u8, 32, 16, 8, 4] {
        values.push(psnr(&img, &jpeg_recompress(&img, q).map_err(e)?).map_err(e)?);
    }
    let text = values.iter().map(|p| format!("{p:.2}")).collect::<Vec<_>>().join(" > ");
    ensure(values.windows(2).all(|w| w[0] > w[1]), format!("PSNR not decreasing: {text}"))?;
    Ok(format!("Annex K tables at q=50; PSNR {text} dB"))
}

/// Every midpoint between consecutive distinct scores, plus one below and
/// one above, scored by counting; ties go to the smallest threshold.
fn exhaustive_threshold(samples: &[(f64, bool)]) -> (f64, usize) {
    let mut distinct: Vec<f64> = samples.iter().map(|s| s.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let mut candidates = vec![distinct[0] - 1.0];
    for w in distinct.windows(2) {
        let m = (w[0] + w[1]) / 2.0;
        candidates.push(if m > w[0] { m } else { w[1] });
    }
    candidates.push(distinct[distinct.len() - 1] + 1.0);
    let mut best = (f64::INFINITY, 0usize);
    for t in candidates {
        let correct = samples.iter().filter(|(s, same)| (*s >= t) == *same).count();
        if correct > best.1 || (correct == best.1 && t < best.0) {
            best = (t, correct);
        }
    }
    best
}

fn threshold_optimizer() -> Outcome {
    let mut r = rand::rngs::StdRng::seed_from_u64(2024);
    let mut ties = 0;
    for i in 0..200 {
        let coarse = i % 4 == 0;
        let samples: Vec<(f64, bool)> = (0..600)
            .map(|_| {
                let same = r.random_bool(0.5);
                let shift = if same { 0.25 } else { 0.0 };
                let s: f64 = r.random_range(-1.0..1.0) * 0.6 + shift;
                (if coarse { (s * 20.0).round() / 20.0 } else { s }, same)
            })
            .collect();
        let got = best_threshold(&samples).map_err(e)?;
        let want = exhaustive_threshold(&samples);
        ensure(got == want, format!("instance {i}: {got:?} vs {want:?}"))?;
        let mut sorted: Vec<f64> = samples.iter().map(|s| s.0).collect();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        ties += usize::from(sorted.len() < samples.len());
    }
    Ok(format!("200 instances of 600 scores match exactly ({ties} with tied scores)"))
}

fn miniature_grid() -> ParamGrid {
    ParamGrid {
        noise_sigmas: vec![AxisValue::none(), AxisValue::extreme(16.0)],
        jpeg_qualities: vec![AxisValue::none(), AxisValue::extreme(8)],
        downscale_ratios: vec![AxisValue::none(), AxisValue::some(4)],
        kernels: vec![AxisValue::none(), AxisValue::extreme(KernelParams::new(2.0, 2.0, 0.0).unwrap())],
        exposure_gammas: vec![AxisValue::none(), AxisValue::extreme(4.0)],
    }
}

struct Sweep {
    root: tempfile::TempDir,
    config: RunConfig,
}

impl Sweep {
    fn report(&self, name: &str, limits: &[Option<usize>]) -> Result<(BenchmarkReport, Vec<u8>), String> {
        let dir = self.root.path().join(name);
        for &limit in limits {
            run(&self.config, &dir, limit).map_err(e)?;
        }
        let report = build_report(&dir).map_err(e)?;
        let bytes = report_json(&report);
        Ok((report, bytes))
    }
}

fn stub_sweep() -> Result<Sweep, String> {
    let root = tempfile::tempdir().map_err(e)?;
    write_dataset(&root.path().join("data"), &SynthSpec::default()).map_err(e)?;
    let manifest = root.path().join("manifest.json");
    write_manifest(&manifest, &plan_runs(&miniature_grid(), 0).map_err(e)?).map_err(e)?;
    let mut config = RunConfig::new(manifest, root.path().join("data/pairs.txt"), ProviderConfig::Stub);
    config.images = Some(root.path().join("data/images"));
    Ok(Sweep { root, config })
}

fn end_to_end(sweep: &Sweep) -> Result<(String, Vec<u8>), String> {
    let start = Instant::now();
    let (report, bytes) = sweep.report("first", &[None])?;
    let took = start.elapsed();
    let identity = report
        .results
        .iter()
        .filter(|r| r.combination == 0)
        .collect::<Vec<_>>();
    ensure(identity.len() == 2, format!("{} identity results", identity.len()))?;
    for r in &identity {
        ensure(
            r.fold_accuracy == report.clean.fold_accuracy,
            format!("{:?} identity {:?} vs clean {:?}", r.mode, r.fold_accuracy, report.clean.fold_accuracy),
        )?;
    }
    for mode in Mode::BOTH {
        for kind in SeriesKind::ALL {
            for axis in Axis::ALL {
                let n = report
                    .series
                    .iter()
                    .filter(|p| p.mode == mode && p.series == kind && p.axis == axis)
                    .count();
                ensure(n > 0, format!("no {} {} points on {}", mode.name(), kind.name(), axis.name()))?;
            }
        }
    }
    ensure(took < Duration::from_secs(60), format!("took {took:?}"))?;
    Ok((
        format!(
            "clean {:.3} reproduced, {} series points over 3 series x 2 modes, {took:.1?}",
            report.clean.mean_accuracy,
            report.series.len()
        ),
        bytes,
    ))
}

fn determinism(sweep: &Sweep, first: &[u8]) -> Outcome {
    let (_, second) = sweep.report("second", &[None])?;
    ensure(first == second.as_slice(), "two identical runs gave different reports")?;
    let (_, resumed) = sweep.report("resumed", &[Some(3), Some(4), None])?;
    ensure(first == resumed.as_slice(), "resumed run differs from uninterrupted run")?;
    Ok(format!("{} report bytes identical across repeat and resumed runs", first.len()))
}

fn chance_level() -> Outcome {
    let root = tempfile::tempdir().map_err(e)?;
    let spec = SynthSpec {
        identities: 400,
        images_per_identity: 6,
        folds: 10,
        pairs_per_fold: 300,
        ..SynthSpec::default()
    };
    let pairs_path = root.path().join("pairs.txt");
    fs::write(&pairs_path, format_pairs(&synth_pairs(&spec).map_err(e)?).map_err(e)?).map_err(e)?;
    let manifest = root.path().join("manifest.json");
    write_manifest(&manifest, &plan_runs(&miniature_grid(), 0).map_err(e)?).map_err(e)?;
    let config = RunConfig::new(manifest, pairs_path, ProviderConfig::Random { dim: 128, seed: 9 });
    let dir = root.path().join("run");
    run(&config, &dir, None).map_err(e)?;
    let report = build_report(&dir).map_err(e)?;
    let worst = report
        .series
        .iter()
        .map(|p| (p.mean_accuracy - 0.5).abs())
        .fold(0.0, f64::max);
    ensure(worst <= 0.04, format!("a series point is {worst:.4} from 0.5"))?;
    Ok(format!("{} points, max |acc - 0.5| = {worst:.4}", report.series.len()))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: u32, name: &str, outcome: Outcome| {
        match &outcome {
            Ok(d) => println!("PASS {n} {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL {n} {name}: {d}")
            }
        }
    };
    report(1, "grid arithmetic", grid_arithmetic());
    report(2, "kernel suite", kernel_suite());
    report(3, "exposure suite", exposure_suite());
    report(4, "noise statistics", noise_statistics());
    report(5, "jpeg monotonicity", jpeg_monotonicity());
    report(6, "threshold optimizer", threshold_optimizer());
    match stub_sweep() {
        Ok(sweep) => match end_to_end(&sweep) {
            Ok((detail, bytes)) => {
                report(7, "stub end-to-end", Ok(detail));
                report(8, "determinism", determinism(&sweep, &bytes));
            }
            Err(d) => {
                report(7, "stub end-to-end", Err(d));
                report(8, "determinism", Err("no baseline report".into()));
            }
        },
        Err(d) => {
            report(7, "stub end-to-end", Err(d.clone()));
            report(8, "determinism", Err(d));
        }
    }
    report(9, "chance level", chance_level());
    println!("SKIP 10 reference-model integration: needs an embedding service and aligned LFW crops");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
