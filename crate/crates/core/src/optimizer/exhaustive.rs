//! Brute-force evaluation of every 1-bit group configuration.

use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use crate::beamforming::duality_beamformer;
use crate::channel::{assemble_for_config, ChannelComponents};
use crate::error::{Error, Result};
use crate::histogram::Histogram;
use crate::ris::{enumerate_1bit_configs, index_to_states, Grouping, RisConfiguration, VaractorModel};
use crate::CMatrix;

/// Result for one binary configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExhaustiveEntry {
    /// Enumeration index; bit `n_groups − 1 − g` is the state of group `g`.
    pub index: u64,
    pub states: Vec<bool>,
    /// `None` if the configuration could not be evaluated.
    pub min_rate: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExhaustiveResult {
    /// In enumeration order.
    pub entries: Vec<ExhaustiveEntry>,
    /// Indices into `entries`, best first (ties by enumeration index).
    pub ranking: Vec<usize>,
    pub histogram: Histogram,
    pub failures: usize,
    /// No-RIS minimum rate, if a baseline was supplied.
    pub baseline_min_rate: Option<f64>,
    /// Fraction of evaluated configurations strictly beating the baseline.
    pub beat_baseline_fraction: Option<f64>,
}

impl ExhaustiveResult {
    pub fn best(&self) -> Option<&ExhaustiveEntry> {
        self.ranking.first().map(|&i| &self.entries[i])
    }

    pub fn evaluated(&self) -> usize {
        self.entries.len() - self.failures
    }

    /// Sorted successful min rates, ascending.
    pub fn sorted_rates(&self) -> Vec<f64> {
        let mut r: Vec<f64> = self.entries.iter().filter_map(|e| e.min_rate).collect();
        r.sort_by(f64::total_cmp);
        r
    }

    /// Lower median of the successful min rates.
    pub fn median_rate(&self) -> Option<f64> {
        let r = self.sorted_rates();
        (!r.is_empty()).then(|| r[(r.len() - 1) / 2])
    }

    pub fn best_configuration(&self, grouping: &Grouping) -> Option<Result<RisConfiguration>> {
        self.best()
            .map(|b| RisConfiguration::from_states(grouping.clone(), &b.states))
    }
}

/// Min rate (bps/Hz) of the max-min duality beamformer on `h`.
pub fn min_rate_of(h: &CMatrix, p_bs: f64, sigma2: f64) -> Result<f64> {
    Ok(duality_beamformer(h, p_bs, sigma2)?.report.min_rate)
}

/// Evaluates all `2^G` configurations in parallel; per-configuration
/// failures are recorded as missing rates.
pub fn exhaustive_1bit_search(
    c: &ChannelComponents,
    model: &VaractorModel,
    grouping: &Grouping,
    p_bs: f64,
    sigma2: f64,
    baseline: Option<&CMatrix>,
    bin_width: f64,
) -> Result<ExhaustiveResult> {
    if grouping.n_elements() != c.n_elements() {
        return Err(Error::dim("grouping", c.n_elements(), grouping.n_elements()));
    }
    let n_groups = grouping.len();
    let count = enumerate_1bit_configs(n_groups)?.len() as u64;
    let entries: Vec<ExhaustiveEntry> = (0..count)
        .into_par_iter()
        .map(|index| {
            let states = index_to_states(index, n_groups);
            let rate = RisConfiguration::from_states(grouping.clone(), &states)
                .and_then(|cfg| assemble_for_config(c, model, &cfg))
                .and_then(|h| min_rate_of(&h.matrix, p_bs, sigma2));
            let min_rate = match rate {
                Ok(r) => Some(r),
                Err(e) => {
                    warn!("configuration {index} skipped: {e}");
                    None
                }
            };
            ExhaustiveEntry {
                index,
                states,
                min_rate,
            }
        })
        .collect();
    summarize(entries, p_bs, sigma2, baseline, bin_width)
}

fn summarize(
    entries: Vec<ExhaustiveEntry>,
    p_bs: f64,
    sigma2: f64,
    baseline: Option<&CMatrix>,
    bin_width: f64,
) -> Result<ExhaustiveResult> {
    let mut ranking: Vec<usize> = (0..entries.len()).filter(|&i| entries[i].min_rate.is_some()).collect();
    ranking.sort_by(|&a, &b| {
        let (ra, rb) = (entries[a].min_rate.unwrap(), entries[b].min_rate.unwrap());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let failures = entries.len() - ranking.len();
    let rates: Vec<f64> = entries.iter().filter_map(|e| e.min_rate).collect();
    let histogram = Histogram::from_values(&rates, bin_width)?;
    let baseline_min_rate = baseline.map(|h| min_rate_of(h, p_bs, sigma2)).transpose()?;
    let beat_baseline_fraction = baseline_min_rate.and_then(|b| {
        (!rates.is_empty()).then(|| rates.iter().filter(|r| **r > b).count() as f64 / rates.len() as f64)
    });
    Ok(ExhaustiveResult {
        entries,
        ranking,
        histogram,
        failures,
        baseline_min_rate,
        beat_baseline_fraction,
    })
}
