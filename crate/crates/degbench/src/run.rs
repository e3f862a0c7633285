//! Resumable sweep execution.
//!
//! An output directory holds
//!
//! * `run_config.json`: the [`RunConfig`] that owns the directory,
//! * `clean.store`: clean-image embeddings,
//! * `thresholds.json`: per-fold thresholds fitted on the clean scores,
//! * `results.jsonl`: one [`RunResult`] per line, appended by a single writer,
//! * `checkpoint.json`: hashes of the manifest and config plus the completed
//!   combination indices, replaced atomically after every combination.

use std::collections::{BTreeSet, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::thread;

use degbench_core::degrade::{degrade, resize_square, OUTPUT_SIZE};
use degbench_core::embed::{EmbeddingStore, ImageKey, Layered};
use degbench_core::seed::image_seed;
use degbench_core::sweep::ManifestEntry;
use degbench_core::verify::{self, clean_scores, evaluate, optimize_thresholds, CrossSide, Mode};
use degbench_core::{ImageBuf, PairSet, RunResult, SweepManifest, ThresholdSet};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::imageio::read_image;
use crate::manifest::{read_json, read_manifest, sha256_hex, to_json_line, write_json};
use crate::pairs::{image_path, read_pairs};
use crate::provider::{Provider, ProviderConfig};
use crate::store::{load_store, save_store, write_atomic};
use crate::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

pub const CONFIG_FILE: &str = "run_config.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const CLEAN_STORE_FILE: &str = "clean.store";
pub const THRESHOLDS_FILE: &str = "thresholds.json";
pub const RESULTS_FILE: &str = "results.jsonl";

/// Everything that determines the results of a run. The output directory and
/// stop limits are deliberately not part of it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: PathBuf,
    pub pairs: PathBuf,
    /// Root of the `name/name_0001.<ext>` image tree; unused by providers
    /// that never look at pixels.
    pub images: Option<PathBuf>,
    pub ext: String,
    pub provider: ProviderConfig,
    pub modes: Vec<Mode>,
    pub cross_side: CrossSide,
    pub out_size: usize,
    /// Worker threads; 0 uses one per core.
    pub threads: usize,
    /// Free-text provenance of the input crops, copied into the report.
    pub alignment: String,
}

impl RunConfig {
    pub fn new(manifest: PathBuf, pairs: PathBuf, provider: ProviderConfig) -> Self {
        Self {
            manifest,
            pairs,
            images: None,
            ext: "png".into(),
            provider,
            modes: Mode::BOTH.to_vec(),
            cross_side: CrossSide::DegradeB,
            out_size: OUTPUT_SIZE,
            threads: 0,
            alignment: "unspecified; inputs assumed to be aligned face crops".into(),
        }
    }

    pub fn hash(&self) -> String {
        sha256_hex(&to_json_line(self))
    }

    fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(Error::Usage("at least one verification mode is required".into()));
        }
        let distinct: BTreeSet<_> = self.modes.iter().collect();
        if distinct.len() != self.modes.len() {
            return Err(Error::Usage("verification modes listed twice".into()));
        }
        if self.out_size == 0 {
            return Err(Error::Usage("output size must be positive".into()));
        }
        Ok(())
    }
}

/// Completed combinations as inclusive index ranges.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub version: u32,
    pub manifest_hash: String,
    pub config_hash: String,
    pub completed: Vec<[u64; 2]>,
}

impl Checkpoint {
    pub fn completed_set(&self) -> BTreeSet<u64> {
        self.completed.iter().flat_map(|&[a, b]| a..=b).collect()
    }

    pub fn set_completed(&mut self, done: &BTreeSet<u64>) {
        self.completed.clear();
        for &i in done {
            match self.completed.last_mut() {
                Some(r) if r[1] + 1 == i => r[1] = i,
                _ => self.completed.push([i, i]),
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOutcome {
    pub ran: usize,
    pub completed: usize,
    pub total: usize,
}

impl RunOutcome {
    pub fn is_complete(&self) -> bool {
        self.completed == self.total
    }
}

pub fn config_path(dir: &Path) -> PathBuf {
    dir.join(CONFIG_FILE)
}

pub fn read_checkpoint(dir: &Path) -> Result<Checkpoint> {
    read_json(&dir.join(CHECKPOINT_FILE))
}

fn write_checkpoint(dir: &Path, cp: &Checkpoint) -> Result<()> {
    write_json(&dir.join(CHECKPOINT_FILE), cp)
}

/// Reads `results.jsonl`, keeping only lines for combinations in `keep`. A
/// torn final line (from an interrupted append) is dropped.
pub fn read_results(dir: &Path, keep: Option<&BTreeSet<u64>>) -> Result<Vec<RunResult>> {
    let path = dir.join(RESULTS_FILE);
    let file = match File::open(&path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(&path, e)),
    };
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io(&path, e))?;
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: RunResult = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(_) if i + 1 == lines.len() && keep.is_some() => break,
            Err(e) => return Err(Error::json(&path, e)),
        };
        if keep.is_none_or(|k| k.contains(&r.combination)) {
            out.push(r);
        }
    }
    Ok(out)
}

struct Inputs {
    manifest: SweepManifest,
    manifest_hash: String,
    pairs: PairSet,
    provider: Provider,
    images: HashMap<String, ImageBuf>,
    ids: Vec<String>,
}

fn load_inputs(config: &RunConfig) -> Result<Inputs> {
    let (manifest, manifest_hash) = read_manifest(&config.manifest)?;
    let pairs = read_pairs(&config.pairs)?;
    let provider = Provider::from_config(&config.provider)?;
    let ids: Vec<String> = pairs.image_ids().into_iter().map(String::from).collect();
    let mut images = HashMap::new();
    if provider.needs_pixels() {
        let dir = config
            .images
            .as_deref()
            .ok_or_else(|| Error::Usage("this provider needs --images".into()))?;
        let loaded: Vec<(String, ImageBuf)> = ids
            .par_iter()
            .map(|id| Ok((id.clone(), read_image(&image_path(dir, id, &config.ext))?)))
            .collect::<Result<_>>()?;
        images.extend(loaded);
    }
    Ok(Inputs {
        manifest,
        manifest_hash,
        pairs,
        provider,
        images,
        ids,
    })
}

impl Inputs {
    fn image(&self, id: &str) -> Result<&ImageBuf> {
        self.images
            .get(id)
            .ok_or_else(|| Error::Data(format!("image `{id}` was not loaded")))
    }

    fn clean_phase(&self, config: &RunConfig, dir: &Path) -> Result<(EmbeddingStore, ThresholdSet)> {
        let store_path = dir.join(CLEAN_STORE_FILE);
        let th_path = dir.join(THRESHOLDS_FILE);
        if store_path.exists() && th_path.exists() {
            return Ok((load_store(&store_path)?, read_json(&th_path)?));
        }
        let embedded = self
            .ids
            .par_iter()
            .map(|id| {
                let key = ImageKey::clean(id.as_str());
                let e = self
                    .provider
                    .embed(&key, &|| Ok(resize_square(self.image(id)?, config.out_size)?))?;
                Ok((key, e))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut store = EmbeddingStore::new();
        for (k, e) in embedded {
            store.insert(k, e)?;
        }
        let scores = clean_scores(&store, &self.pairs)?;
        let thresholds = optimize_thresholds(&scores, &self.pairs)?;
        save_store(&store_path, &store)?;
        write_json(&th_path, &thresholds)?;
        Ok((store, thresholds))
    }

    fn run_entry(
        &self,
        config: &RunConfig,
        entry: &ManifestEntry,
        clean: &EmbeddingStore,
        thresholds: &ThresholdSet,
    ) -> Result<Vec<RunResult>> {
        let mut out = Vec::with_capacity(entry.repeats as usize * config.modes.len());
        for repeat in 0..entry.repeats {
            let run_seed = entry.seeds[repeat as usize];
            let mut local = EmbeddingStore::new();
            for (i, id) in self.ids.iter().enumerate() {
                let key = ImageKey::degraded(id.as_str(), entry.index, repeat);
                let e = self.provider.embed(&key, &|| {
                    Ok(degrade(
                        self.image(id)?,
                        &entry.params,
                        image_seed(run_seed, i as u64),
                        config.out_size,
                    )?)
                })?;
                local.insert(key, e)?;
            }
            let lookup = Layered {
                first: &local,
                second: clean,
            };
            for &mode in &config.modes {
                out.push(evaluate(
                    &lookup,
                    &self.pairs,
                    thresholds,
                    mode,
                    config.cross_side,
                    entry.index,
                    repeat,
                )?);
            }
        }
        Ok(out)
    }
}

/// Runs (or resumes) the sweep described by `config` in `dir`, stopping
/// after `limit` newly completed combinations if given.
pub fn run(config: &RunConfig, dir: &Path, limit: Option<usize>) -> Result<RunOutcome> {
    config.validate()?;
    let inputs = load_inputs(config)?;
    let config_hash = config.hash();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let cp_path = dir.join(CHECKPOINT_FILE);
    let mut checkpoint = if cp_path.exists() {
        let cp = read_checkpoint(dir)?;
        let refuse = |reason: String| Error::Resume {
            dir: dir.to_owned(),
            reason,
        };
        if cp.version != CHECKPOINT_VERSION {
            return Err(refuse(format!("checkpoint version {} is not supported", cp.version)));
        }
        if cp.manifest_hash != inputs.manifest_hash {
            return Err(refuse(format!(
                "manifest hash differs (checkpoint {}, current {}); the plan changed since the run started",
                cp.manifest_hash, inputs.manifest_hash
            )));
        }
        if cp.config_hash != config_hash {
            return Err(refuse(format!(
                "run configuration hash differs (checkpoint {}, current {}); compare with {}",
                cp.config_hash,
                config_hash,
                config_path(dir).display()
            )));
        }
        cp
    } else {
        for f in [CLEAN_STORE_FILE, THRESHOLDS_FILE, RESULTS_FILE] {
            let p = dir.join(f);
            if p.exists() {
                fs::remove_file(&p).map_err(|e| Error::io(&p, e))?;
            }
        }
        write_json(&config_path(dir), config)?;
        let cp = Checkpoint {
            version: CHECKPOINT_VERSION,
            manifest_hash: inputs.manifest_hash.clone(),
            config_hash: config_hash.clone(),
            completed: Vec::new(),
        };
        write_checkpoint(dir, &cp)?;
        cp
    };

    let mut done = checkpoint.completed_set();
    // Drop results appended after the last checkpoint.
    let kept = read_results(dir, Some(&done))?;
    let kept_bytes: Vec<u8> = kept.iter().flat_map(to_json_line).collect();
    write_atomic(&dir.join(RESULTS_FILE), &kept_bytes)?;

    let (clean, thresholds) = inputs.clean_phase(config, dir)?;

    let pending: Vec<&ManifestEntry> = inputs
        .manifest
        .entries
        .iter()
        .filter(|e| !done.contains(&e.index))
        .take(limit.unwrap_or(usize::MAX))
        .collect();
    let total = inputs.manifest.entries.len();
    let ran = pending.len();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Data(format!("cannot start worker pool: {e}")))?;
    let results_path = dir.join(RESULTS_FILE);
    let (tx, rx) = mpsc::channel::<(u64, Vec<RunResult>)>();

    let writer = {
        let dir = dir.to_owned();
        let mut checkpoint = std::mem::take(&mut checkpoint);
        let mut done = std::mem::take(&mut done);
        thread::spawn(move || -> Result<BTreeSet<u64>> {
            let mut file = OpenOptions::new()
                .append(true)
                .open(&results_path)
                .map_err(|e| Error::io(&results_path, e))?;
            for (index, results) in rx {
                let bytes: Vec<u8> = results.iter().flat_map(to_json_line).collect();
                file.write_all(&bytes)
                    .and_then(|_| file.sync_data())
                    .map_err(|e| Error::io(&results_path, e))?;
                done.insert(index);
                checkpoint.set_completed(&done);
                write_checkpoint(&dir, &checkpoint)?;
            }
            Ok(done)
        })
    };

    let work = pool.install(|| {
        pending.par_iter().try_for_each_with(tx, |tx, entry| {
            let results = inputs.run_entry(config, entry, &clean, &thresholds)?;
            tx.send((entry.index, results))
                .map_err(|_| Error::Data("results writer stopped".into()))
        })
    });
    let written = writer.join().expect("results writer panicked");
    work?;
    let done = written?;
    Ok(RunOutcome {
        ran,
        completed: done.len(),
        total,
    })
}

/// Clean-image accuracy per fold at the recorded thresholds.
pub fn clean_accuracy(dir: &Path, pairs: &PairSet) -> Result<(ThresholdSet, Vec<f64>)> {
    let store = load_store(&dir.join(CLEAN_STORE_FILE))?;
    let thresholds: ThresholdSet = read_json(&dir.join(THRESHOLDS_FILE))?;
    let scores = clean_scores(&store, pairs)?;
    let acc = verify::fold_accuracy(&scores, pairs, &thresholds)?;
    Ok((thresholds, acc))
}
