//! Benchmark report: the full JSON document and the plot-ready series CSV.

use std::path::Path;

use degbench_core::sweep::ParamGrid;
use degbench_core::verify::{aggregate, mean, CrossSide, SeriesPoint};
use degbench_core::{Error as CoreError, RunResult, ThresholdSet};
use serde::{Deserialize, Serialize};

use crate::manifest::{read_json, read_manifest, to_json_pretty};
use crate::pairs::read_pairs;
use crate::run::{self, Checkpoint, RunConfig};
use crate::store::write_atomic;
use crate::{Error, Result};

pub const REPORT_VERSION: u32 = 1;

pub const FILTER_RULE: &str =
    "combined and without_exposure series keep combinations with at most one extreme value";
pub const REPEAT_RULE: &str =
    "combinations with noise run 5 repeats; repeat accuracies are averaged before aggregation";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportMetadata {
    pub tool: String,
    pub grid: ParamGrid,
    pub global_seed: u64,
    pub seed_scheme: String,
    pub filter_rule: String,
    pub repeat_rule: String,
    pub provider: String,
    pub cross_side: CrossSide,
    pub alignment: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CleanBaseline {
    pub fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkReport {
    pub version: u32,
    pub config_hash: String,
    pub manifest_hash: String,
    pub config: RunConfig,
    pub metadata: ReportMetadata,
    pub thresholds: ThresholdSet,
    pub clean: CleanBaseline,
    /// Sorted by combination, repeat, mode.
    pub results: Vec<RunResult>,
    pub series: Vec<SeriesPoint>,
}

/// Assembles the report for a finished run directory. Refuses, listing the
/// missing combination indices, if any manifest entry lacks results.
pub fn build_report(dir: &Path) -> Result<BenchmarkReport> {
    let config: RunConfig = read_json(&run::config_path(dir))?;
    let checkpoint: Checkpoint = run::read_checkpoint(dir)?;
    let (manifest, manifest_hash) = read_manifest(&config.manifest)?;
    if manifest_hash != checkpoint.manifest_hash || config.hash() != checkpoint.config_hash {
        return Err(Error::Data(format!(
            "{}: checkpoint does not match the run configuration or manifest",
            dir.display()
        )));
    }
    let done = checkpoint.completed_set();
    let missing: Vec<u64> = manifest
        .entries
        .iter()
        .map(|e| e.index)
        .filter(|i| !done.contains(i))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Incomplete {
            dir: dir.to_owned(),
            missing,
        });
    }

    let mut results = run::read_results(dir, Some(&done))?;
    results.sort_by_key(|r| (r.combination, r.repeat, r.mode));
    let series = aggregate(&results, &manifest, &config.modes).map_err(|e| match e {
        CoreError::MissingRuns(missing) => Error::Incomplete {
            dir: dir.to_owned(),
            missing,
        },
        other => other.into(),
    })?;

    let pairs = read_pairs(&config.pairs)?;
    let (thresholds, clean_acc) = run::clean_accuracy(dir, &pairs)?;
    let h = &manifest.header;
    Ok(BenchmarkReport {
        version: REPORT_VERSION,
        config_hash: checkpoint.config_hash,
        manifest_hash,
        metadata: ReportMetadata {
            tool: format!("degbench {}", env!("CARGO_PKG_VERSION")),
            grid: h.grid.clone(),
            global_seed: h.global_seed,
            seed_scheme: h.seed_scheme.clone(),
            filter_rule: FILTER_RULE.into(),
            repeat_rule: REPEAT_RULE.into(),
            provider: serde_json::to_string(&config.provider).expect("serializable"),
            cross_side: config.cross_side,
            alignment: config.alignment.clone(),
        },
        config,
        thresholds,
        clean: CleanBaseline {
            mean_accuracy: mean(&clean_acc),
            fold_accuracy: clean_acc,
        },
        results,
        series,
    })
}

pub fn report_json(report: &BenchmarkReport) -> Vec<u8> {
    to_json_pretty(report)
}

/// One row per series point: `axis,value,mode,series,mean_accuracy,n_combos`.
pub fn series_csv(points: &[SeriesPoint]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["axis", "value", "mode", "series", "mean_accuracy", "n_combos"])
        .expect("in-memory write");
    for p in points {
        w.write_record([
            p.axis.name(),
            &p.value,
            p.mode.name(),
            p.series.name(),
            &format!("{}", p.mean_accuracy),
            &p.n_combos.to_string(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn write_report(report: &BenchmarkReport, json: &Path, csv_path: &Path) -> Result<()> {
    write_atomic(json, &report_json(report))?;
    write_atomic(csv_path, &series_csv(&report.series))
}
