//! Parameter grid enumeration and run planning.
//!
//! Combinations are indexed in mixed radix with the noise axis outermost and
//! the exposure axis innermost, so an index is stable for a given grid and is
//! what every derived seed is keyed on.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::degrade::{DegradationParams, KernelParams};
use crate::{seed, Error, Result};

/// Number of repeats for combinations with additive noise.
pub const NOISE_REPEATS: u32 = 5;

pub const MANIFEST_VERSION: u32 = 1;

/// One value on a grid axis; `value: None` means the stage is skipped.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisValue<T> {
    pub value: Option<T>,
    #[serde(default)]
    pub extreme: bool,
}

impl<T> AxisValue<T> {
    pub const fn none() -> Self {
        Self {
            value: None,
            extreme: false,
        }
    }

    pub const fn some(value: T) -> Self {
        Self {
            value: Some(value),
            extreme: false,
        }
    }

    pub const fn extreme(value: T) -> Self {
        Self {
            value: Some(value),
            extreme: true,
        }
    }
}

/// The five degradation axes, in the order the pipeline applies them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Exposure,
    Blur,
    Downscale,
    Noise,
    Jpeg,
}

impl Axis {
    pub const ALL: [Axis; 5] = [
        Axis::Exposure,
        Axis::Blur,
        Axis::Downscale,
        Axis::Noise,
        Axis::Jpeg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Exposure => "exposure",
            Axis::Blur => "blur",
            Axis::Downscale => "downscale",
            Axis::Noise => "noise",
            Axis::Jpeg => "jpeg",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamGrid {
    pub noise_sigmas: Vec<AxisValue<f64>>,
    pub jpeg_qualities: Vec<AxisValue<u8>>,
    pub downscale_ratios: Vec<AxisValue<u32>>,
    pub kernels: Vec<AxisValue<KernelParams>>,
    pub exposure_gammas: Vec<AxisValue<f64>>,
}

impl ParamGrid {
    /// The full study grid; the most severe value of each axis is flagged
    /// extreme (both ends for exposure).
    pub fn standard() -> Self {
        let k = |sx: f64, sy: f64, t: f64| AxisValue::some(KernelParams {
            sigma_x: sx,
            sigma_y: sy,
            theta: t,
        });
        Self {
            noise_sigmas: [2.0, 4.0, 8.0, 16.0, 32.0]
                .into_iter()
                .map(AxisValue::some)
                .chain([AxisValue::extreme(64.0)])
                .collect_with_none(),
            jpeg_qualities: [64, 32, 16, 8]
                .into_iter()
                .map(AxisValue::some)
                .chain([AxisValue::extreme(4)])
                .collect_with_none(),
            downscale_ratios: [2, 3, 4]
                .into_iter()
                .map(AxisValue::some)
                .chain([AxisValue::extreme(8)])
                .collect_with_none(),
            kernels: [
                k(1.0, 1.0, 0.0),
                k(2.0, 2.0, 0.0),
                AxisValue::extreme(KernelParams {
                    sigma_x: 3.0,
                    sigma_y: 3.0,
                    theta: 0.0,
                }),
                k(1.0, 3.0, 0.0),
                k(1.0, 3.0, PI / 4.0),
                k(1.0, 3.0, PI / 2.0),
                k(1.0, 3.0, 3.0 * PI / 4.0),
            ]
            .into_iter()
            .collect_with_none(),
            exposure_gammas: alloc::vec![
                AxisValue::extreme(0.125),
                AxisValue::some(0.25),
                AxisValue::some(0.5),
                AxisValue::none(),
                AxisValue::some(2.0),
                AxisValue::some(4.0),
                AxisValue::extreme(8.0),
            ],
        }
    }

    /// Axis cardinalities in index order (noise, jpeg, downscale, blur, exposure).
    fn radices(&self) -> [usize; 5] {
        [
            self.noise_sigmas.len(),
            self.jpeg_qualities.len(),
            self.downscale_ratios.len(),
            self.kernels.len(),
            self.exposure_gammas.len(),
        ]
    }

    pub fn axis_len(&self, axis: Axis) -> usize {
        match axis {
            Axis::Noise => self.noise_sigmas.len(),
            Axis::Jpeg => self.jpeg_qualities.len(),
            Axis::Downscale => self.downscale_ratios.len(),
            Axis::Blur => self.kernels.len(),
            Axis::Exposure => self.exposure_gammas.len(),
        }
    }

    /// Number of combinations (product of axis lengths).
    pub fn len(&self) -> u64 {
        self.radices().iter().map(|&n| n as u64).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        fn check<T: Copy + PartialEq + fmt::Debug>(
            axis: &'static str,
            values: &[AxisValue<T>],
            valid: impl Fn(&T) -> Result<()>,
        ) -> Result<()> {
            if values.is_empty() {
                return Err(Error::EmptyAxis(axis));
            }
            for (i, v) in values.iter().enumerate() {
                match &v.value {
                    None if v.extreme => {
                        return Err(Error::InvalidAxis {
                            axis,
                            reason: "the absent value cannot be extreme".to_string(),
                        })
                    }
                    None => {}
                    Some(x) => valid(x).map_err(|e| Error::InvalidAxis {
                        axis,
                        reason: e.to_string(),
                    })?,
                }
                if values[..i].iter().any(|w| w.value == v.value) {
                    return Err(Error::InvalidAxis {
                        axis,
                        reason: format!("duplicate value {:?}", v.value),
                    });
                }
            }
            Ok(())
        }
        check("noise_sigmas", &self.noise_sigmas, |&s| {
            DegradationParams {
                noise_sigma: Some(s),
                ..DegradationParams::IDENTITY
            }
            .validate()
        })?;
        check("jpeg_qualities", &self.jpeg_qualities, |&q| {
            DegradationParams {
                jpeg_quality: Some(q),
                ..DegradationParams::IDENTITY
            }
            .validate()
        })?;
        check("downscale_ratios", &self.downscale_ratios, |&r| {
            DegradationParams {
                downscale_ratio: Some(r),
                ..DegradationParams::IDENTITY
            }
            .validate()
        })?;
        check("kernels", &self.kernels, KernelParams::validate)?;
        check("exposure_gammas", &self.exposure_gammas, |&g| {
            DegradationParams {
                exposure_gamma: Some(g),
                ..DegradationParams::IDENTITY
            }
            .validate()
        })?;
        Ok(())
    }

    /// Per-axis positions of combination `index`, in index order.
    fn digits(&self, index: u64) -> Option<[usize; 5]> {
        if index >= self.len() {
            return None;
        }
        let radices = self.radices();
        let mut rest = index;
        let mut d = [0usize; 5];
        for i in (0..5).rev() {
            let n = radices[i] as u64;
            d[i] = (rest % n) as usize;
            rest /= n;
        }
        Some(d)
    }

    pub fn combination(&self, index: u64) -> Result<DegradationParams> {
        let d = self.digits(index).ok_or(Error::CombinationIndex(index))?;
        Ok(DegradationParams {
            noise_sigma: self.noise_sigmas[d[0]].value,
            jpeg_quality: self.jpeg_qualities[d[1]].value,
            downscale_ratio: self.downscale_ratios[d[2]].value,
            kernel: self.kernels[d[3]].value,
            exposure_gamma: self.exposure_gammas[d[4]].value,
        })
    }

    fn positions(&self, p: &DegradationParams) -> Result<[usize; 5]> {
        fn find<T: PartialEq + fmt::Debug>(
            axis: &'static str,
            values: &[AxisValue<T>],
            v: &Option<T>,
        ) -> Result<usize> {
            values
                .iter()
                .position(|a| a.value == *v)
                .ok_or_else(|| Error::NotInGrid {
                    axis,
                    value: format!("{v:?}"),
                })
        }
        Ok([
            find("noise_sigmas", &self.noise_sigmas, &p.noise_sigma)?,
            find("jpeg_qualities", &self.jpeg_qualities, &p.jpeg_quality)?,
            find("downscale_ratios", &self.downscale_ratios, &p.downscale_ratio)?,
            find("kernels", &self.kernels, &p.kernel)?,
            find("exposure_gammas", &self.exposure_gammas, &p.exposure_gamma)?,
        ])
    }

    pub fn index_of(&self, p: &DegradationParams) -> Result<u64> {
        let d = self.positions(p)?;
        Ok(d.iter()
            .zip(self.radices())
            .fold(0u64, |acc, (&digit, n)| acc * n as u64 + digit as u64))
    }

    /// Position of `p`'s value on `axis`.
    pub fn position_on(&self, p: &DegradationParams, axis: Axis) -> Result<usize> {
        let d = self.positions(p)?;
        Ok(match axis {
            Axis::Noise => d[0],
            Axis::Jpeg => d[1],
            Axis::Downscale => d[2],
            Axis::Blur => d[3],
            Axis::Exposure => d[4],
        })
    }

    pub fn is_extreme(&self, axis: Axis, position: usize) -> bool {
        match axis {
            Axis::Noise => self.noise_sigmas[position].extreme,
            Axis::Jpeg => self.jpeg_qualities[position].extreme,
            Axis::Downscale => self.downscale_ratios[position].extreme,
            Axis::Blur => self.kernels[position].extreme,
            Axis::Exposure => self.exposure_gammas[position].extreme,
        }
    }

    pub fn is_none(&self, axis: Axis, position: usize) -> bool {
        match axis {
            Axis::Noise => self.noise_sigmas[position].value.is_none(),
            Axis::Jpeg => self.jpeg_qualities[position].value.is_none(),
            Axis::Downscale => self.downscale_ratios[position].value.is_none(),
            Axis::Blur => self.kernels[position].value.is_none(),
            Axis::Exposure => self.exposure_gammas[position].value.is_none(),
        }
    }

    /// Human-readable label of the value at `position` on `axis`, e.g. `None`,
    /// `64`, `0.125` or `(1,3,pi/4)`.
    pub fn label(&self, axis: Axis, position: usize) -> String {
        fn num(v: f64) -> String {
            format!("{v}")
        }
        let opt = |o: Option<String>| o.unwrap_or_else(|| "None".to_string());
        match axis {
            Axis::Noise => opt(self.noise_sigmas[position].value.map(num)),
            Axis::Jpeg => opt(self.jpeg_qualities[position].value.map(|q| q.to_string())),
            Axis::Downscale => opt(self.downscale_ratios[position].value.map(|r| r.to_string())),
            Axis::Blur => opt(self.kernels[position].value.map(|k| {
                format!("({},{},{})", num(k.sigma_x), num(k.sigma_y), theta_label(k.theta))
            })),
            Axis::Exposure => opt(self.exposure_gammas[position].value.map(num)),
        }
    }

    /// Total number of degradation runs, counting noise repeats.
    pub fn total_runs(&self) -> u64 {
        let with_noise = self.noise_sigmas.iter().filter(|v| v.value.is_some()).count() as u64;
        let without = self.noise_sigmas.len() as u64 - with_noise;
        let rest = self.len() / self.noise_sigmas.len().max(1) as u64;
        rest * (without + with_noise * u64::from(NOISE_REPEATS))
    }
}

trait CollectWithNone<T> {
    fn collect_with_none(self) -> Vec<AxisValue<T>>;
}

impl<T, I: Iterator<Item = AxisValue<T>>> CollectWithNone<T> for I {
    fn collect_with_none(self) -> Vec<AxisValue<T>> {
        core::iter::once(AxisValue::none()).chain(self).collect()
    }
}

/// Formats an angle as a small multiple of pi when it is one (`pi/4`,
/// `3pi/4`), otherwise as plain radians.
pub fn theta_label(theta: f64) -> String {
    if theta == 0.0 {
        return "0".to_string();
    }
    for d in [1u32, 2, 3, 4, 6, 8, 12] {
        for k in 1..2 * d {
            if f64::from(k) * PI / f64::from(d) == theta {
                return match (k, d) {
                    (1, 1) => "pi".to_string(),
                    (1, _) => format!("pi/{d}"),
                    (_, 1) => format!("{k}pi"),
                    _ => format!("{k}pi/{d}"),
                };
            }
        }
    }
    format!("{theta}")
}

/// All combinations of the grid in index order.
pub fn enumerate_combinations(grid: &ParamGrid) -> Vec<DegradationParams> {
    (0..grid.len())
        .map(|i| grid.combination(i).expect("index below grid length"))
        .collect()
}

/// Number of axes on which `p` takes a value flagged extreme.
pub fn extreme_count(p: &DegradationParams, grid: &ParamGrid) -> Result<usize> {
    let d = grid.positions(p)?;
    Ok([
        grid.noise_sigmas[d[0]].extreme,
        grid.jpeg_qualities[d[1]].extreme,
        grid.downscale_ratios[d[2]].extreme,
        grid.kernels[d[3]].extreme,
        grid.exposure_gammas[d[4]].extreme,
    ]
    .iter()
    .filter(|&&e| e)
    .count())
}

/// Keeps the combinations with at most one extreme value, in order.
pub fn filter_at_most_one_extreme(
    combos: &[DegradationParams],
    grid: &ParamGrid,
) -> Result<Vec<DegradationParams>> {
    let mut out = Vec::with_capacity(combos.len());
    for p in combos {
        if extreme_count(p, grid)? <= 1 {
            out.push(*p);
        }
    }
    Ok(out)
}

pub fn repeats_for(p: &DegradationParams) -> u32 {
    if p.noise_sigma.is_some() {
        NOISE_REPEATS
    } else {
        1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestHeader {
    pub version: u32,
    pub grid: ParamGrid,
    pub global_seed: u64,
    pub seed_scheme: String,
    pub combinations: u64,
    pub total_runs: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub index: u64,
    pub params: DegradationParams,
    pub extreme_count: u8,
    pub repeats: u32,
    /// One seed per repeat.
    pub seeds: Vec<u64>,
}

/// Immutable run plan: every combination with its repeat count and seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepManifest {
    pub header: ManifestHeader,
    pub entries: Vec<ManifestEntry>,
}

impl SweepManifest {
    pub fn total_runs(&self) -> u64 {
        self.entries.iter().map(|e| u64::from(e.repeats)).sum()
    }

    pub fn entry(&self, index: u64) -> Option<&ManifestEntry> {
        // Entries are sorted by index and dense.
        self.entries
            .get(index as usize)
            .filter(|e| e.index == index)
            .or_else(|| self.entries.iter().find(|e| e.index == index))
    }

    /// Checks the structural invariants of a manifest read from disk.
    pub fn validate(&self) -> Result<()> {
        let h = &self.header;
        if h.version != MANIFEST_VERSION {
            return Err(Error::InvalidParam(format!(
                "manifest version {} (expected {MANIFEST_VERSION})",
                h.version
            )));
        }
        h.grid.validate()?;
        let regenerated = plan_runs(&h.grid, h.global_seed)?;
        if regenerated.header != *h || regenerated.entries != self.entries {
            return Err(Error::InvalidParam(
                "manifest entries do not match its grid and seed".to_string(),
            ));
        }
        Ok(())
    }
}

/// Builds the run plan for `grid`: every combination, `NOISE_REPEATS` repeats
/// when noise is active, one seed per repeat.
pub fn plan_runs(grid: &ParamGrid, global_seed: u64) -> Result<SweepManifest> {
    grid.validate()?;
    let mut entries = Vec::with_capacity(grid.len() as usize);
    for index in 0..grid.len() {
        let params = grid.combination(index)?;
        let repeats = repeats_for(&params);
        entries.push(ManifestEntry {
            index,
            params,
            extreme_count: extreme_count(&params, grid)? as u8,
            repeats,
            seeds: (0..repeats)
                .map(|r| seed::run_seed(global_seed, index, r))
                .collect(),
        });
    }
    let total_runs = entries.iter().map(|e| u64::from(e.repeats)).sum();
    Ok(SweepManifest {
        header: ManifestHeader {
            version: MANIFEST_VERSION,
            grid: grid.clone(),
            global_seed,
            seed_scheme: seed::SEED_SCHEME.to_string(),
            combinations: grid.len(),
            total_runs,
        },
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn only(f: impl FnOnce(&mut DegradationParams)) -> DegradationParams {
        let mut p = DegradationParams::IDENTITY;
        f(&mut p);
        p
    }

    #[test]
    fn standard_counts() {
        let g = ParamGrid::standard();
        g.validate().unwrap();
        assert_eq!(g.len(), 7 * 6 * 5 * 8 * 7);
        let all = enumerate_combinations(&g);
        assert_eq!(all.len(), 11_760);
        let kept = filter_at_most_one_extreme(&all, &g).unwrap();
        assert_eq!(kept.len(), 9_070);
        assert_eq!(g.total_runs(), 52_080);
    }

    /// Independent count by nested loops over the raw grid values.
    #[test]
    fn extreme_split_by_brute_force() {
        let noise = [None, Some(2), Some(4), Some(8), Some(16), Some(32), Some(64)];
        let jpeg = [None, Some(64), Some(32), Some(16), Some(8), Some(4)];
        let scale = [None, Some(2), Some(3), Some(4), Some(8)];
        let kernel = [None, Some("111"), Some("220"), Some("330"), Some("a"), Some("b"), Some("c"), Some("d")];
        let gamma = [Some("1/8"), Some("1/4"), Some("1/2"), None, Some("2"), Some("4"), Some("8")];
        let (mut zero, mut one, mut more) = (0, 0, 0);
        for n in noise {
            for j in jpeg {
                for s in scale {
                    for k in kernel {
                        for g in gamma {
                            let e = usize::from(n == Some(64))
                                + usize::from(j == Some(4))
                                + usize::from(s == Some(8))
                                + usize::from(k == Some("330"))
                                + usize::from(g == Some("1/8") || g == Some("8"));
                            match e {
                                0 => zero += 1,
                                1 => one += 1,
                                _ => more += 1,
                            }
                        }
                    }
                }
            }
        }
        assert_eq!((zero, one, more), (4_200, 4_870, 2_690));

        let g = ParamGrid::standard();
        let all = enumerate_combinations(&g);
        let counts = all.iter().fold([0usize; 6], |mut acc, p| {
            acc[extreme_count(p, &g).unwrap()] += 1;
            acc
        });
        assert_eq!(counts[0], zero);
        assert_eq!(counts[1], one);
        assert_eq!(counts[2..].iter().sum::<usize>(), more);
    }

    #[test]
    fn extreme_flags_are_the_bold_values() {
        let g = ParamGrid::standard();
        assert_eq!(extreme_count(&DegradationParams::IDENTITY, &g).unwrap(), 0);
        let p = only(|p| {
            p.noise_sigma = Some(64.0);
            p.jpeg_quality = Some(4);
        });
        assert_eq!(extreme_count(&p, &g).unwrap(), 2);
        assert_eq!(extreme_count(&only(|p| p.exposure_gamma = Some(0.125)), &g).unwrap(), 1);
        assert_eq!(extreme_count(&only(|p| p.exposure_gamma = Some(8.0)), &g).unwrap(), 1);
        assert_eq!(extreme_count(&only(|p| p.downscale_ratio = Some(8)), &g).unwrap(), 1);
        let k330 = KernelParams::new(3.0, 3.0, 0.0).unwrap();
        assert_eq!(extreme_count(&only(|p| p.kernel = Some(k330)), &g).unwrap(), 1);

        let mut flagged = Vec::new();
        for axis in Axis::ALL {
            for i in 0..g.axis_len(axis) {
                if g.is_extreme(axis, i) {
                    flagged.push(alloc::format!("{axis}={}", g.label(axis, i)));
                }
            }
        }
        assert_eq!(
            flagged,
            ["exposure=0.125", "exposure=8", "blur=(3,3,0)", "downscale=8", "noise=64", "jpeg=4"]
        );
    }

    #[test]
    fn filter_drops_multi_extreme() {
        let g = ParamGrid::standard();
        let bad = only(|p| {
            p.noise_sigma = Some(64.0);
            p.jpeg_quality = Some(4);
            p.downscale_ratio = Some(8);
        });
        let kept =
            filter_at_most_one_extreme(&[DegradationParams::IDENTITY, bad], &g).unwrap();
        assert_eq!(kept, [DegradationParams::IDENTITY]);
    }

    #[test]
    fn value_off_grid_is_an_error() {
        let g = ParamGrid::standard();
        let p = only(|p| p.noise_sigma = Some(3.0));
        assert!(matches!(
            extreme_count(&p, &g),
            Err(Error::NotInGrid {
                axis: "noise_sigmas",
                ..
            })
        ));
    }

    #[test]
    fn singleton_grid_has_one_combination() {
        let g = ParamGrid {
            noise_sigmas: alloc::vec![AxisValue::some(8.0)],
            jpeg_qualities: alloc::vec![AxisValue::none()],
            downscale_ratios: alloc::vec![AxisValue::none()],
            kernels: alloc::vec![AxisValue::none()],
            exposure_gammas: alloc::vec![AxisValue::none()],
        };
        assert_eq!(enumerate_combinations(&g).len(), 1);
        let m = plan_runs(&g, 1).unwrap();
        assert_eq!(m.entries[0].repeats, 5);
        assert_eq!(m.total_runs(), 5);
    }

    #[test]
    fn noise_only_sub_grid_has_seven_points() {
        let mut g = ParamGrid::standard();
        g.jpeg_qualities.truncate(1);
        g.downscale_ratios.truncate(1);
        g.kernels.truncate(1);
        g.exposure_gammas = alloc::vec![AxisValue::none()];
        let all = enumerate_combinations(&g);
        let sigmas: Vec<Option<f64>> = all.iter().map(|p| p.noise_sigma).collect();
        assert_eq!(
            sigmas,
            [None, Some(2.0), Some(4.0), Some(8.0), Some(16.0), Some(32.0), Some(64.0)]
        );
    }

    #[test]
    fn plan_repeats_and_seeds() {
        let g = ParamGrid::standard();
        let m = plan_runs(&g, 42).unwrap();
        assert_eq!(m.header.combinations, 11_760);
        assert_eq!(m.total_runs(), 52_080);
        assert_eq!(m.header.total_runs, 52_080);
        let none_runs: u64 = m
            .entries
            .iter()
            .filter(|e| e.params.noise_sigma.is_none())
            .map(|e| u64::from(e.repeats))
            .sum();
        assert_eq!(none_runs, 1_680);
        for e in &m.entries {
            assert_eq!(e.repeats, if e.params.noise_sigma.is_some() { 5 } else { 1 });
            assert_eq!(e.seeds.len(), e.repeats as usize);
        }
        let sigma2 = m.entries.iter().find(|e| e.params.noise_sigma == Some(2.0)).unwrap();
        assert_eq!(sigma2.seeds.len(), 5);
        assert!(m.entries.windows(2).all(|w| w[0].index + 1 == w[1].index));
        assert_eq!(m, plan_runs(&g, 42).unwrap());
        assert_ne!(m.entries[0].seeds, plan_runs(&g, 43).unwrap().entries[0].seeds);
        m.validate().unwrap();
    }

    #[test]
    fn noise_is_outermost_and_exposure_innermost() {
        let g = ParamGrid::standard();
        let first = g.combination(0).unwrap();
        assert_eq!(first.exposure_gamma, Some(0.125));
        assert!(first.noise_sigma.is_none());
        assert_eq!(g.combination(1).unwrap().exposure_gamma, Some(0.25));
        assert_eq!(g.combination(6 * 5 * 8 * 7).unwrap().noise_sigma, Some(2.0));
        assert!(g.combination(11_760).is_err());
    }

    #[test]
    fn grid_validation() {
        let mut g = ParamGrid::standard();
        g.noise_sigmas[0].extreme = true;
        assert!(matches!(g.validate(), Err(Error::InvalidAxis { .. })));
        let mut g = ParamGrid::standard();
        g.kernels.clear();
        assert!(matches!(g.validate(), Err(Error::EmptyAxis("kernels"))));
        let mut g = ParamGrid::standard();
        g.downscale_ratios.push(AxisValue::some(2));
        assert!(g.validate().is_err());
        let mut g = ParamGrid::standard();
        g.jpeg_qualities.push(AxisValue::some(0));
        assert!(g.validate().is_err());
    }

    #[test]
    fn theta_labels() {
        assert_eq!(theta_label(0.0), "0");
        assert_eq!(theta_label(PI / 4.0), "pi/4");
        assert_eq!(theta_label(PI / 2.0), "pi/2");
        assert_eq!(theta_label(3.0 * PI / 4.0), "3pi/4");
        assert_eq!(theta_label(0.3), "0.3");
        let g = ParamGrid::standard();
        assert_eq!(g.label(Axis::Blur, 5), "(1,3,pi/4)");
        assert_eq!(g.label(Axis::Blur, 0), "None");
        assert_eq!(g.label(Axis::Exposure, 0), "0.125");
    }

    proptest! {
        #[test]
        fn index_round_trips(i in 0u64..11_760) {
            let g = ParamGrid::standard();
            let p = g.combination(i).unwrap();
            prop_assert_eq!(g.index_of(&p).unwrap(), i);
        }
    }
}
