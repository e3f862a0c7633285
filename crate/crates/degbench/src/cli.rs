//! Command-line interface.

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use degbench_core::degrade::{degrade, parse_theta, KernelParams, OUTPUT_SIZE};
use degbench_core::sweep::{enumerate_combinations, filter_at_most_one_extreme, plan_runs};
use degbench_core::verify::{CrossSide, Mode};
use degbench_core::{DegradationParams, ParamGrid};

use crate::imageio::{read_image, write_png};
use crate::manifest::{read_json, write_manifest};
use crate::provider::ProviderConfig;
use crate::remote::RemoteConfig;
use crate::report::{build_report, write_report};
use crate::run::{run, RunConfig};
use crate::selftest::run_checks;
use crate::synth::{write_dataset, SynthSpec};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "degbench", version, about = "Face verification under synthetic image degradation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Degrade one image and write it as PNG.
    Degrade(DegradeArgs),
    /// Enumerate a parameter grid and write the run manifest.
    Plan(PlanArgs),
    /// Execute (or resume) a planned sweep.
    Run(RunArgs),
    /// Aggregate a finished run into JSON and CSV.
    Report(ReportArgs),
    /// Run built-in consistency checks.
    Selftest,
    /// Write a synthetic face dataset with an LFW-style pairs.txt.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct DegradeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Exposure exponent in 1 - (1 - s)^gamma.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Blur kernel as `sigma_x,sigma_y,theta`; theta may be written `pi/4`.
    #[arg(long, value_parser = parse_kernel)]
    pub kernel: Option<KernelParams>,
    /// Integer downscale ratio.
    #[arg(long)]
    pub scale: Option<u32>,
    /// Noise standard deviation on the 0-255 scale.
    #[arg(long)]
    pub noise: Option<f64>,
    /// JPEG quality, 1-100.
    #[arg(long)]
    pub jpeg: Option<u8>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Side of the square output image.
    #[arg(long, default_value_t = OUTPUT_SIZE)]
    pub size: usize,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON parameter grid to use instead of the built-in one.
    #[arg(long)]
    pub grid: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ProviderKind {
    Stub,
    Random,
    Store,
    Remote,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Side {
    A,
    B,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub pairs: PathBuf,
    /// Image root holding `<name>/<name>_NNNN.<ext>`.
    #[arg(long)]
    pub images: Option<PathBuf>,
    #[arg(long, default_value = "png")]
    pub ext: String,
    /// Output directory; rerunning with the same arguments resumes.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = ProviderKind::Stub)]
    pub provider: ProviderKind,
    /// Embedding size for the random provider.
    #[arg(long, default_value_t = 512)]
    pub dim: usize,
    /// Seed for the random provider.
    #[arg(long, default_value_t = 0)]
    pub provider_seed: u64,
    /// Precomputed embedding store for the store provider.
    #[arg(long)]
    pub store: Option<PathBuf>,
    /// Embedding service URL for the remote provider (token read from
    /// DEGBENCH_EMBED_TOKEN).
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long, default_value_t = 30_000)]
    pub timeout_ms: u64,
    #[arg(long, default_value_t = 3)]
    pub retries: u32,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [CliMode::Normal, CliMode::Cross])]
    pub modes: Vec<CliMode>,
    /// Image kept clean in cross mode is the other one.
    #[arg(long, value_enum, default_value_t = Side::B)]
    pub cross_side: Side,
    #[arg(long, default_value_t = OUTPUT_SIZE)]
    pub size: usize,
    /// Worker threads (0: one per core).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Stop after this many newly completed combinations.
    #[arg(long)]
    pub max_combinations: Option<usize>,
    /// Provenance note for the input crops, copied into the report.
    #[arg(long)]
    pub alignment: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CliMode {
    Normal,
    Cross,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Run output directory.
    #[arg(long)]
    pub run: PathBuf,
    /// Defaults to `<run>/report.json`.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Defaults to `<run>/series.csv`.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub identities: usize,
    #[arg(long, default_value_t = 3)]
    pub images_per_identity: u32,
    #[arg(long, default_value_t = 2)]
    pub folds: usize,
    #[arg(long, default_value_t = 10)]
    pub pairs_per_fold: usize,
    #[arg(long, default_value_t = OUTPUT_SIZE)]
    pub size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_kernel(s: &str) -> std::result::Result<KernelParams, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [sx, sy, t] = parts.as_slice() else {
        return Err("expected sigma_x,sigma_y,theta".into());
    };
    let num = |v: &str| v.parse::<f64>().map_err(|_| format!("`{v}` is not a number"));
    KernelParams::new(num(sx)?, num(sy)?, parse_theta(t).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())
}

impl DegradeArgs {
    pub fn params(&self) -> DegradationParams {
        DegradationParams {
            exposure_gamma: self.gamma,
            kernel: self.kernel,
            downscale_ratio: self.scale,
            noise_sigma: self.noise,
            jpeg_quality: self.jpeg,
        }
    }
}

impl RunArgs {
    pub fn config(&self) -> Result<RunConfig> {
        let provider = match self.provider {
            ProviderKind::Stub => ProviderConfig::Stub,
            ProviderKind::Random => ProviderConfig::Random {
                dim: self.dim,
                seed: self.provider_seed,
            },
            ProviderKind::Store => ProviderConfig::Store {
                path: self
                    .store
                    .clone()
                    .ok_or_else(|| Error::Usage("--provider store needs --store".into()))?,
            },
            ProviderKind::Remote => {
                let endpoint = self
                    .endpoint
                    .clone()
                    .ok_or_else(|| Error::Usage("--provider remote needs --endpoint".into()))?;
                ProviderConfig::Remote(RemoteConfig {
                    timeout_ms: self.timeout_ms,
                    retries: self.retries,
                    ..RemoteConfig::new(endpoint)
                })
            }
        };
        let mut c = RunConfig::new(self.manifest.clone(), self.pairs.clone(), provider);
        c.images = self.images.clone();
        c.ext = self.ext.clone();
        c.modes = self
            .modes
            .iter()
            .map(|m| match m {
                CliMode::Normal => Mode::Normal,
                CliMode::Cross => Mode::Cross,
            })
            .collect();
        c.cross_side = match self.cross_side {
            Side::A => CrossSide::DegradeA,
            Side::B => CrossSide::DegradeB,
        };
        c.out_size = self.size;
        c.threads = self.threads;
        if let Some(a) = &self.alignment {
            c.alignment = a.clone();
        }
        Ok(c)
    }
}

fn default_in(dir: &Path, given: &Option<PathBuf>, name: &str) -> PathBuf {
    given.clone().unwrap_or_else(|| dir.join(name))
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let w = |e: io::Error| Error::io("<stdout>", e);
    match cli.command {
        Command::Degrade(a) => {
            let params = a.params();
            params.validate().map_err(|e| Error::Usage(e.to_string()))?;
            let img = read_image(&a.input)?;
            let degraded = degrade(&img, &params, a.seed, a.size)?;
            write_png(&a.output, &degraded)?;
            writeln!(out, "{}", serde_json::to_string(&params).expect("serializable")).map_err(w)?;
        }
        Command::Plan(a) => {
            let grid = match &a.grid {
                Some(p) => read_json::<ParamGrid>(p)?,
                None => ParamGrid::standard(),
            };
            let manifest = plan_runs(&grid, a.seed)?;
            let hash = write_manifest(&a.output, &manifest)?;
            let kept = filter_at_most_one_extreme(&enumerate_combinations(&grid), &grid)?.len();
            writeln!(out, "combinations: {}", manifest.header.combinations).map_err(w)?;
            writeln!(out, "at most one extreme: {kept}").map_err(w)?;
            writeln!(out, "runs: {}", manifest.total_runs()).map_err(w)?;
            writeln!(out, "sha256: {hash}").map_err(w)?;
        }
        Command::Run(a) => {
            let config = a.config()?;
            let o = run(&config, &a.out, a.max_combinations)?;
            writeln!(out, "ran {} combinations; {}/{} complete", o.ran, o.completed, o.total).map_err(w)?;
            if o.is_complete() {
                writeln!(out, "run finished; next: degbench report --run {}", a.out.display()).map_err(w)?;
            }
        }
        Command::Report(a) => {
            let report = build_report(&a.run)?;
            let json = default_in(&a.run, &a.json, "report.json");
            let csv = default_in(&a.run, &a.csv, "series.csv");
            write_report(&report, &json, &csv)?;
            writeln!(
                out,
                "clean accuracy {:.4}; {} results, {} series points",
                report.clean.mean_accuracy,
                report.results.len(),
                report.series.len()
            )
            .map_err(w)?;
            writeln!(out, "wrote {} and {}", json.display(), csv.display()).map_err(w)?;
        }
        Command::Selftest => {
            let checks = run_checks();
            for c in &checks {
                let status = if c.passed { "PASS" } else { "FAIL" };
                writeln!(out, "{status} {}: {}", c.name, c.detail).map_err(w)?;
            }
            if checks.iter().any(|c| !c.passed) {
                return Err(Error::Data("self-test failed".into()));
            }
        }
        Command::Synth(a) => {
            let spec = SynthSpec {
                identities: a.identities,
                images_per_identity: a.images_per_identity,
                folds: a.folds,
                pairs_per_fold: a.pairs_per_fold,
                size: a.size,
                seed: a.seed,
            };
            let pairs = write_dataset(&a.out, &spec)?;
            writeln!(
                out,
                "wrote {} pairs over {} images to {}",
                pairs.len(),
                pairs.image_ids().len(),
                a.out.display()
            )
            .map_err(w)?;
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli, &mut io::stdout().lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_flag() {
        let k = parse_kernel("1,3,pi/4").unwrap();
        assert_eq!((k.sigma_x, k.sigma_y), (1.0, 3.0));
        assert!((k.theta - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert!(parse_kernel("1,3").is_err());
        assert!(parse_kernel("0,3,0").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
