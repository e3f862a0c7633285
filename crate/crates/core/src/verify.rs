//! Pair verification under the LFW protocol: per-fold thresholds fitted on
//! clean scores, fixed-threshold evaluation of degraded runs, and the
//! per-axis aggregation into single / combined / without-exposure series.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::embed::{EmbeddingLookup, ImageKey};
use crate::sweep::{Axis, SweepManifest};
use crate::{Error, Result};

/// One labelled comparison.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pair {
    pub a: String,
    pub b: String,
    pub same: bool,
    pub fold: usize,
}

/// Labelled pairs split into equally sized, label-balanced folds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSet {
    folds: usize,
    pairs: Vec<Pair>,
}

impl PairSet {
    pub fn new(folds: usize, pairs: Vec<Pair>) -> Result<Self> {
        if folds < 2 {
            return Err(Error::PairSet(format!("need at least 2 folds, got {folds}")));
        }
        let mut pos = alloc::vec![0usize; folds];
        let mut neg = alloc::vec![0usize; folds];
        for p in &pairs {
            if p.fold >= folds {
                return Err(Error::PairSet(format!(
                    "pair {} / {} in fold {} of {folds}",
                    p.a, p.b, p.fold
                )));
            }
            if p.same {
                pos[p.fold] += 1;
            } else {
                neg[p.fold] += 1;
            }
        }
        for f in 0..folds {
            if pos[f] == 0 || pos[f] != neg[f] || pos[f] != pos[0] {
                return Err(Error::PairSet(format!(
                    "fold {f} has {} matched and {} mismatched pairs (fold 0 has {} of each)",
                    pos[f], neg[f], pos[0]
                )));
            }
        }
        Ok(Self { folds, pairs })
    }

    pub fn folds(&self) -> usize {
        self.folds
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Distinct image ids in first-appearance order.
    pub fn image_ids(&self) -> Vec<&str> {
        let mut seen = alloc::collections::BTreeSet::new();
        let mut out = Vec::new();
        for p in &self.pairs {
            for id in [p.a.as_str(), p.b.as_str()] {
                if seen.insert(id) {
                    out.push(id);
                }
            }
        }
        out
    }
}

/// Threshold maximizing the number of correct decisions (`same` iff
/// `score >= threshold`) over `samples`. Candidates are the midpoints between
/// consecutive distinct scores plus one sentinel below the minimum and one
/// above the maximum; ties go to the smallest candidate.
///
/// Returns `(threshold, correct)`.
pub fn best_threshold(samples: &[(f64, bool)]) -> Result<(f64, usize)> {
    if samples.is_empty() {
        return Err(Error::PairSet("no samples to fit a threshold on".into()));
    }
    if samples.iter().any(|(s, _)| !s.is_finite()) {
        return Err(Error::PairSet("non-finite similarity score".into()));
    }
    let mut sorted: Vec<(f64, bool)> = samples.to_vec();
    sorted.sort_by(|x, y| x.0.total_cmp(&y.0));

    let positives = sorted.iter().filter(|s| s.1).count();
    // Below every score: everything is predicted same.
    let mut best = (sorted[0].0 - 1.0, positives);
    let mut correct = positives as isize;
    let mut i = 0;
    while i < sorted.len() {
        let s = sorted[i].0;
        let mut j = i;
        while j < sorted.len() && sorted[j].0 == s {
            correct += if sorted[j].1 { -1 } else { 1 };
            j += 1;
        }
        let t = match sorted.get(j) {
            Some(&(next, _)) => midpoint(s, next),
            None => s + 1.0,
        };
        if correct as usize > best.1 {
            best = (t, correct as usize);
        }
        i = j;
    }
    Ok(best)
}

/// Midpoint strictly above `lo` and at most `hi`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = (lo + hi) / 2.0;
    if m > lo {
        m
    } else {
        hi
    }
}

/// Frozen per-fold decision thresholds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSet {
    pub thresholds: Vec<f64>,
    /// Accuracy each threshold achieved on its training folds.
    pub train_accuracy: Vec<f64>,
}

/// For every fold, fits a threshold on the scores of all other folds.
pub fn optimize_thresholds(clean_scores: &[f64], pairs: &PairSet) -> Result<ThresholdSet> {
    check_scores(clean_scores, pairs)?;
    let mut thresholds = Vec::with_capacity(pairs.folds());
    let mut train_accuracy = Vec::with_capacity(pairs.folds());
    for fold in 0..pairs.folds() {
        let train: Vec<(f64, bool)> = pairs
            .pairs()
            .iter()
            .zip(clean_scores)
            .filter(|(p, _)| p.fold != fold)
            .map(|(p, &s)| (s, p.same))
            .collect();
        if train.is_empty() {
            return Err(Error::EmptyFold(fold));
        }
        let (t, correct) = best_threshold(&train)?;
        thresholds.push(t);
        train_accuracy.push(correct as f64 / train.len() as f64);
    }
    Ok(ThresholdSet {
        thresholds,
        train_accuracy,
    })
}

fn check_scores(scores: &[f64], pairs: &PairSet) -> Result<()> {
    if scores.len() != pairs.len() {
        return Err(Error::ScoreCount {
            expected: pairs.len(),
            found: scores.len(),
        });
    }
    Ok(())
}

/// Fraction of correct decisions per fold at the fold's own threshold.
pub fn fold_accuracy(scores: &[f64], pairs: &PairSet, thresholds: &ThresholdSet) -> Result<Vec<f64>> {
    check_scores(scores, pairs)?;
    if thresholds.thresholds.len() != pairs.folds() {
        return Err(Error::FoldCount {
            expected: pairs.folds(),
            found: thresholds.thresholds.len(),
        });
    }
    let mut correct = alloc::vec![0usize; pairs.folds()];
    let mut total = alloc::vec![0usize; pairs.folds()];
    for (p, &s) in pairs.pairs().iter().zip(scores) {
        total[p.fold] += 1;
        if (s >= thresholds.thresholds[p.fold]) == p.same {
            correct[p.fold] += 1;
        }
    }
    total
        .iter()
        .zip(&correct)
        .enumerate()
        .map(|(f, (&n, &c))| {
            if n == 0 {
                Err(Error::EmptyFold(f))
            } else {
                Ok(c as f64 / n as f64)
            }
        })
        .collect()
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Both images of a pair degraded.
    Normal,
    /// One image kept clean.
    Cross,
}

impl Mode {
    pub const BOTH: [Mode; 2] = [Mode::Normal, Mode::Cross];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Normal => "normal",
            Mode::Cross => "cross",
        }
    }
}

/// Which image of a pair is degraded in cross mode.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossSide {
    DegradeA,
    #[default]
    DegradeB,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunResult {
    pub combination: u64,
    pub repeat: u32,
    pub mode: Mode,
    pub fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
}

/// Similarity of every pair with both images clean.
pub fn clean_scores<L: EmbeddingLookup + ?Sized>(store: &L, pairs: &PairSet) -> Result<Vec<f64>> {
    pairs
        .pairs()
        .iter()
        .map(|p| {
            store
                .lookup(&ImageKey::clean(p.a.as_str()))?
                .cosine(store.lookup(&ImageKey::clean(p.b.as_str()))?)
        })
        .collect()
}

/// Keys compared for `pair` in the given mode.
pub fn pair_keys(pair: &Pair, mode: Mode, side: CrossSide, combination: u64, repeat: u32) -> (ImageKey, ImageKey) {
    let d = |id: &str| ImageKey::degraded(id, combination, repeat);
    let c = |id: &str| ImageKey::clean(id);
    match (mode, side) {
        (Mode::Normal, _) => (d(&pair.a), d(&pair.b)),
        (Mode::Cross, CrossSide::DegradeB) => (c(&pair.a), d(&pair.b)),
        (Mode::Cross, CrossSide::DegradeA) => (d(&pair.a), c(&pair.b)),
    }
}

/// Scores one degraded run against the frozen thresholds.
pub fn evaluate<L: EmbeddingLookup + ?Sized>(
    store: &L,
    pairs: &PairSet,
    thresholds: &ThresholdSet,
    mode: Mode,
    side: CrossSide,
    combination: u64,
    repeat: u32,
) -> Result<RunResult> {
    let scores = pairs
        .pairs()
        .iter()
        .map(|p| {
            let (ka, kb) = pair_keys(p, mode, side, combination, repeat);
            store.lookup(&ka)?.cosine(store.lookup(&kb)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let fold_accuracy = fold_accuracy(&scores, pairs, thresholds)?;
    Ok(RunResult {
        combination,
        repeat,
        mode,
        mean_accuracy: mean(&fold_accuracy),
        fold_accuracy,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    /// Only the chosen axis active.
    Single,
    /// Every combination with at most one extreme value.
    Combined,
    /// As `Combined`, with exposure left out.
    WithoutExposure,
}

impl SeriesKind {
    pub const ALL: [SeriesKind; 3] = [SeriesKind::Single, SeriesKind::Combined, SeriesKind::WithoutExposure];

    pub fn name(self) -> &'static str {
        match self {
            SeriesKind::Single => "single",
            SeriesKind::Combined => "combined",
            SeriesKind::WithoutExposure => "without_exposure",
        }
    }
}

/// Mean accuracy over the combinations sharing one axis value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesPoint {
    pub axis: Axis,
    /// Position of the value on its grid axis.
    pub position: usize,
    pub value: String,
    pub extreme: bool,
    pub mode: Mode,
    pub series: SeriesKind,
    pub mean_accuracy: f64,
    pub n_combos: usize,
}

/// Repeat-averaged accuracy per combination and mode. Results for modes not
/// listed in `modes` are ignored.
pub fn combination_accuracy(
    results: &[RunResult],
    manifest: &SweepManifest,
    modes: &[Mode],
) -> Result<BTreeMap<(Mode, u64), f64>> {
    let mut by_run: BTreeMap<(Mode, u64, u32), f64> = BTreeMap::new();
    for r in results {
        let entry = manifest.entry(r.combination).ok_or_else(|| {
            Error::InvalidParam(format!("result for combination {} outside the manifest", r.combination))
        })?;
        if !modes.contains(&r.mode) {
            continue;
        }
        if r.repeat >= entry.repeats {
            return Err(Error::InvalidParam(format!(
                "result for combination {} has repeat {} of {}",
                r.combination, r.repeat, entry.repeats
            )));
        }
        if by_run.insert((r.mode, r.combination, r.repeat), r.mean_accuracy).is_some() {
            return Err(Error::DuplicateRun {
                combination: r.combination,
                repeat: r.repeat,
            });
        }
    }
    let mut missing = Vec::new();
    let mut out = BTreeMap::new();
    for e in &manifest.entries {
        for &mode in modes {
            let accs: Option<Vec<f64>> = (0..e.repeats).map(|r| by_run.get(&(mode, e.index, r)).copied()).collect();
            match accs {
                Some(a) => {
                    out.insert((mode, e.index), mean(&a));
                }
                None => {
                    if missing.last() != Some(&e.index) {
                        missing.push(e.index);
                    }
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingRuns(missing));
    }
    Ok(out)
}

/// Builds every series for every axis and mode. Points with no member
/// combination are omitted.
pub fn aggregate(results: &[RunResult], manifest: &SweepManifest, modes: &[Mode]) -> Result<Vec<SeriesPoint>> {
    let per_combo = combination_accuracy(results, manifest, modes)?;
    let grid = &manifest.header.grid;

    // Axis positions of each entry, computed once.
    let mut positions = Vec::with_capacity(manifest.entries.len());
    for e in &manifest.entries {
        let mut pos = [0usize; 5];
        for (i, axis) in Axis::ALL.iter().enumerate() {
            pos[i] = grid.position_on(&e.params, *axis)?;
        }
        positions.push(pos);
    }

    let mut points = Vec::new();
    for &mode in modes {
        for (ai, &axis) in Axis::ALL.iter().enumerate() {
            for kind in SeriesKind::ALL {
                for v in 0..grid.axis_len(axis) {
                    let mut sum = 0.0;
                    let mut n = 0usize;
                    for (e, pos) in manifest.entries.iter().zip(&positions) {
                        if pos[ai] != v {
                            continue;
                        }
                        let member = match kind {
                            SeriesKind::Single => Axis::ALL
                                .iter()
                                .enumerate()
                                .all(|(j, &other)| j == ai || grid.is_none(other, pos[j])),
                            SeriesKind::Combined => e.extreme_count <= 1,
                            SeriesKind::WithoutExposure => {
                                e.extreme_count <= 1 && grid.is_none(Axis::Exposure, pos[0])
                            }
                        };
                        if member {
                            sum += per_combo[&(mode, e.index)];
                            n += 1;
                        }
                    }
                    if n > 0 {
                        points.push(SeriesPoint {
                            axis,
                            position: v,
                            value: grid.label(axis, v),
                            extreme: grid.is_extreme(axis, v),
                            mode,
                            series: kind,
                            mean_accuracy: sum / n as f64,
                            n_combos: n,
                        });
                    }
                }
            }
        }
    }
    Ok(points)
}
