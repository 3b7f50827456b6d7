//! Robustness of the 1-bit gain to small user displacements.

use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use super::exhaustive::exhaustive_1bit_search;
use crate::error::{Error, Result};
use crate::histogram::Histogram;
use crate::ris::{Grouping, VaractorModel};
use crate::scene::{baseline_channel, synthesize_components, Point, SceneDescription};

/// Default per-axis displacements, meters.
pub const DEFAULT_X_OFFSETS: [f64; 3] = [-0.075, 0.0, 0.075];
pub const DEFAULT_Y_OFFSETS: [f64; 3] = [-0.092, 0.0, 0.092];

/// The 3×3 default displacement grid, x-major.
pub fn default_offset_grid() -> Vec<Point> {
    offset_grid(&DEFAULT_X_OFFSETS, &DEFAULT_Y_OFFSETS)
}

pub fn offset_grid(xs: &[f64], ys: &[f64]) -> Vec<Point> {
    xs.iter()
        .flat_map(|&x| ys.iter().map(move |&y| Point::new(x, y)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationEntry {
    pub combination: usize,
    /// Index into each user's offset list.
    pub offsets: Vec<usize>,
    pub best_min_rate: f64,
    pub baseline_min_rate: f64,
    /// `best_min_rate − baseline_min_rate`.
    pub improvement: f64,
    /// Improvement of the all-OFF configuration.
    pub all_off_improvement: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PerturbationResult {
    pub combinations: usize,
    pub entries: Vec<PerturbationEntry>,
    pub skipped: usize,
    pub histogram: Histogram,
}

impl PerturbationResult {
    /// (min, median, max) of the improvements.
    pub fn summary(&self) -> Option<(f64, f64, f64)> {
        let mut v: Vec<f64> = self.entries.iter().map(|e| e.improvement).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        Some((v[0], v[(v.len() - 1) / 2], v[v.len() - 1]))
    }
}

/// Mixed-radix digits of `index`, first user most significant.
fn digits(mut index: usize, radices: &[usize]) -> Vec<usize> {
    let mut d = vec![0; radices.len()];
    for (slot, &r) in d.iter_mut().zip(radices).rev() {
        *slot = index % r;
        index /= r;
    }
    d
}

fn evaluate(
    scene: &SceneDescription,
    model: &VaractorModel,
    grouping: &Grouping,
    p_bs: f64,
    sigma2: f64,
) -> Result<(f64, f64, f64)> {
    let comps = synthesize_components(scene)?;
    let base = baseline_channel(scene)?;
    let r = exhaustive_1bit_search(&comps, model, grouping, p_bs, sigma2, Some(&base), f64::MAX)?;
    let best = r
        .best()
        .and_then(|e| e.min_rate)
        .ok_or_else(|| Error::Domain("no configuration could be evaluated".into()))?;
    let all_off = r.entries[0]
        .min_rate
        .ok_or_else(|| Error::Domain("all-OFF configuration could not be evaluated".into()))?;
    Ok((best, r.baseline_min_rate.expect("baseline supplied"), all_off))
}

/// Runs the exhaustive 1-bit search and the no-RIS baseline for every
/// combination of per-user displacements (`offsets[k]` lists user k's).
pub fn perturbation_study(
    scene: &SceneDescription,
    model: &VaractorModel,
    grouping: &Grouping,
    offsets: &[Vec<Point>],
    p_bs: f64,
    sigma2: f64,
    bin_width: f64,
) -> Result<PerturbationResult> {
    let k = scene.user_positions.len();
    if offsets.len() != k {
        return Err(Error::dim("offsets", k, offsets.len()));
    }
    if let Some(u) = offsets.iter().position(Vec::is_empty) {
        return Err(Error::InvalidInput(format!("user {u} has no offsets")));
    }
    let radices: Vec<usize> = offsets.iter().map(Vec::len).collect();
    let combinations = radices.iter().product::<usize>();
    let results: Vec<Option<PerturbationEntry>> = (0..combinations)
        .into_par_iter()
        .map(|combination| {
            let idx = digits(combination, &radices);
            let users = scene
                .user_positions
                .iter()
                .zip(&idx)
                .zip(offsets)
                .map(|((p, &i), off)| *p + off[i])
                .collect();
            let moved = scene.with_users(users);
            match evaluate(&moved, model, grouping, p_bs, sigma2) {
                Ok((best, base, all_off)) => Some(PerturbationEntry {
                    combination,
                    offsets: idx,
                    best_min_rate: best,
                    baseline_min_rate: base,
                    improvement: best - base,
                    all_off_improvement: all_off - base,
                }),
                Err(e) => {
                    warn!("perturbation combination {combination} skipped: {e}");
                    None
                }
            }
        })
        .collect();
    let skipped = results.iter().filter(|r| r.is_none()).count();
    let entries: Vec<PerturbationEntry> = results.into_iter().flatten().collect();
    let improvements: Vec<f64> = entries.iter().map(|e| e.improvement).collect();
    let histogram = Histogram::from_values(&improvements, bin_width)?;
    Ok(PerturbationResult {
        combinations,
        entries,
        skipped,
        histogram,
    })
}
