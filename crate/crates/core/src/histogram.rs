//! Fixed-width histograms with a `bin_left,bin_right,count` CSV form.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_BIN_WIDTH: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bin {
    pub left: f64,
    pub right: f64,
    pub count: usize,
}

/// Contiguous bins aligned to integer multiples of the width.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub bins: Vec<Bin>,
}

/// Rounds away binary noise so `3 * 0.05` prints as `0.15`.
fn tidy(x: f64) -> f64 {
    let r = (x * 1e12).round() / 1e12;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

impl Histogram {
    /// Bins the finite values; non-finite values are ignored.
    pub fn from_values(values: &[f64], bin_width: f64) -> Result<Self> {
        if !(bin_width > 0.0) || !bin_width.is_finite() {
            return Err(Error::InvalidInput(format!(
                "bin width must be positive, got {bin_width}"
            )));
        }
        let idx: Vec<i64> = values
            .iter()
            .filter(|v| v.is_finite())
            .map(|v| (v / bin_width + 1e-9).floor() as i64)
            .collect();
        let (Some(&lo), Some(&hi)) = (idx.iter().min(), idx.iter().max()) else {
            return Ok(Histogram {
                bin_width,
                bins: Vec::new(),
            });
        };
        let mut counts = vec![0usize; (hi - lo + 1) as usize];
        for i in idx {
            counts[(i - lo) as usize] += 1;
        }
        let bins = counts
            .into_iter()
            .enumerate()
            .map(|(j, count)| {
                let b = lo + j as i64;
                Bin {
                    left: tidy(b as f64 * bin_width),
                    right: tidy((b + 1) as f64 * bin_width),
                    count,
                }
            })
            .collect();
        Ok(Histogram { bin_width, bins })
    }

    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_left,bin_right,count\n");
        for b in &self.bins {
            let _ = writeln!(s, "{},{},{}", b.left, b.right, b.count);
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some("bin_left,bin_right,count") => {}
            other => return Err(Error::parse("header", format!("unexpected {other:?}"))),
        }
        let mut bins = Vec::new();
        for (i, line) in lines.enumerate() {
            let cols: Vec<&str> = line.split(',').collect();
            let bad = || Error::parse(format!("row {}", i + 1), format!("cannot parse {line:?}"));
            if cols.len() != 3 {
                return Err(bad());
            }
            bins.push(Bin {
                left: cols[0].parse().map_err(|_| bad())?,
                right: cols[1].parse().map_err(|_| bad())?,
                count: cols[2].parse().map_err(|_| bad())?,
            });
        }
        let bin_width = bins.first().map_or(DEFAULT_BIN_WIDTH, |b| tidy(b.right - b.left));
        Ok(Histogram { bin_width, bins })
    }
}
