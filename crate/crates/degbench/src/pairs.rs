//! LFW `pairs.txt`: a header `folds<TAB>n`, then per fold `n` matched lines
//! `name idx1 idx2` followed by `n` mismatched lines `name1 idx1 name2 idx2`.
//!
//! Image ids follow the LFW directory layout, `name/name_0001`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use degbench_core::verify::Pair;
use degbench_core::PairSet;

use crate::{Error, Result};

pub fn image_id(name: &str, index: u32) -> String {
    format!("{name}/{name}_{index:04}")
}

/// Splits an id produced by [`image_id`] back into name and index.
pub fn split_id(id: &str) -> Option<(&str, u32)> {
    let (name, file) = id.split_once('/')?;
    let idx = file.strip_prefix(name)?.strip_prefix('_')?;
    if idx.len() < 4 {
        return None;
    }
    Some((name, idx.parse().ok()?))
}

pub fn image_path(dir: &Path, id: &str, ext: &str) -> PathBuf {
    dir.join(format!("{id}.{ext}"))
}

pub fn parse_pairs(text: &str, path: &Path) -> Result<PairSet> {
    let err = |line: usize, message: String| Error::Pairs {
        path: path.to_owned(),
        line,
        message,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hl, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let head: Vec<&str> = header.split_whitespace().collect();
    let (folds, n) = match head.as_slice() {
        [f, n] => (
            f.parse::<usize>().map_err(|_| err(hl, format!("bad fold count `{f}`")))?,
            n.parse::<usize>().map_err(|_| err(hl, format!("bad pair count `{n}`")))?,
        ),
        _ => return Err(err(hl, "header must be `<folds> <pairs per fold>`".into())),
    };
    let index = |line: usize, s: &str| -> Result<u32> {
        s.parse().map_err(|_| err(line, format!("bad image index `{s}`")))
    };

    let mut pairs = Vec::with_capacity(folds * 2 * n);
    for fold in 0..folds {
        for same in [true, false] {
            for _ in 0..n {
                let (ln, l) = lines
                    .next()
                    .ok_or_else(|| err(0, format!("file ends inside fold {fold}")))?;
                let f: Vec<&str> = l.split_whitespace().collect();
                let (a, b) = match (same, f.as_slice()) {
                    (true, [name, i, j]) => (image_id(name, index(ln, i)?), image_id(name, index(ln, j)?)),
                    (false, [n1, i, n2, j]) => (image_id(n1, index(ln, i)?), image_id(n2, index(ln, j)?)),
                    _ => {
                        let want = if same { "`name idx1 idx2`" } else { "`name1 idx1 name2 idx2`" };
                        return Err(err(ln, format!("expected {want} in fold {fold}")));
                    }
                };
                pairs.push(Pair { a, b, same, fold });
            }
        }
    }
    if let Some((ln, _)) = lines.next() {
        return Err(err(ln, "trailing lines after the last fold".into()));
    }
    PairSet::new(folds, pairs).map_err(|e| err(hl, e.to_string()))
}

pub fn read_pairs(path: &Path) -> Result<PairSet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pairs(&text, path)
}

/// Writes a pair set back out; pairs must be grouped by fold with matched
/// pairs first, and ids must have the `name/name_0001` form.
pub fn format_pairs(set: &PairSet) -> Result<String> {
    let per_fold = set.len() / set.folds() / 2;
    let mut out = format!("{}\t{}\n", set.folds(), per_fold);
    for (i, p) in set.pairs().iter().enumerate() {
        let fold = i / (2 * per_fold);
        let same = i % (2 * per_fold) < per_fold;
        if p.fold != fold || p.same != same {
            return Err(Error::Data(format!("pair {i} is out of pairs.txt order")));
        }
        let bad = |id: &str| Error::Data(format!("image id `{id}` is not of the form name/name_0001"));
        let (na, ia) = split_id(&p.a).ok_or_else(|| bad(&p.a))?;
        let (nb, ib) = split_id(&p.b).ok_or_else(|| bad(&p.b))?;
        if p.same {
            if na != nb {
                return Err(Error::Data(format!("matched pair {i} has two names")));
            }
            writeln!(out, "{na}\t{ia}\t{ib}").unwrap();
        } else {
            writeln!(out, "{na}\t{ia}\t{nb}\t{ib}").unwrap();
        }
    }
    Ok(out)
}
