//! Experiment drivers behind the `risopt` binary: power sweeps, exhaustive
//! and perturbation studies, gain maps and single optimization runs.
//!
//! Every driver writes plain CSV/JSON into an output directory. Nothing in
//! the outputs depends on wall-clock time or thread scheduling except the
//! optional `generated_unix` field of `manifest.json`, which is omitted in
//! reproducible mode.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{info, warn};
use serde::Serialize;
use serde_json::json;

use crate::beamforming::{
    dbm_to_dbm_per_hz, dbm_to_watts, duality_beamformer, noise_power, watts_to_dbm, SinrReport, DEFAULT_BANDWIDTH_HZ,
    DEFAULT_TEMPERATURE_K,
};
use crate::channel::{assemble_for_config, evaluate_gain_map, ChannelComponents};
use crate::error::{Error, Result};
use crate::histogram::DEFAULT_BIN_WIDTH;
use crate::io::{write_atomic, write_json};
use crate::optimizer::{
    default_offset_grid, exhaustive_1bit_search, multistart_optimize, perturbation_study, BcdSettings,
    ExhaustiveResult, OptimizationTrace,
};
use crate::ris::{ControlMode, Grouping, RisConfiguration, VaractorModel, PF};
use crate::scene::{baseline_channel, direct_channel, port_channel, synthesize_components, Point, SceneDescription};
use crate::CMatrix;

/// Power levels of the default sweep, dBm.
pub const DEFAULT_POWERS_DBM: [f64; 5] = [10.0, 15.0, 20.0, 25.0, 30.0];

/// What a run evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    NoRis,
    Continuous,
    OnebitExhaustive,
    Perturbation,
    GainMap,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::NoRis,
        Mode::Continuous,
        Mode::OnebitExhaustive,
        Mode::Perturbation,
        Mode::GainMap,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::NoRis => "no-ris",
            Mode::Continuous => "continuous",
            Mode::OnebitExhaustive => "onebit-exhaustive",
            Mode::Perturbation => "perturbation",
            Mode::GainMap => "gain-map",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown mode {s:?}")))
    }
}

/// Channel substrate of an experiment.
#[derive(Debug, Clone)]
pub enum ChannelSource {
    Scene(SceneDescription),
    /// Externally computed components; the no-RIS baseline falls back to `H_u`.
    File(ChannelComponents),
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub source: ChannelSource,
    pub model: VaractorModel,
    pub powers_dbm: Vec<f64>,
    pub bandwidth_hz: f64,
    pub temperature_k: f64,
    pub modes: Vec<Mode>,
    pub seed: u64,
    pub bcd: BcdSettings,
    /// Elements per column; the component port count must be a multiple.
    pub rows: usize,
    pub bin_width: f64,
    /// Per-user displacement grid for the perturbation study.
    pub offsets: Vec<Point>,
    pub reproducible: bool,
}

impl ExperimentConfig {
    pub fn new(source: ChannelSource) -> Self {
        ExperimentConfig {
            source,
            model: VaractorModel::default(),
            powers_dbm: DEFAULT_POWERS_DBM.to_vec(),
            bandwidth_hz: DEFAULT_BANDWIDTH_HZ,
            temperature_k: DEFAULT_TEMPERATURE_K,
            modes: vec![Mode::NoRis, Mode::Continuous, Mode::OnebitExhaustive],
            seed: 0,
            bcd: BcdSettings::default(),
            rows: 1,
            bin_width: DEFAULT_BIN_WIDTH,
            offsets: default_offset_grid(),
            reproducible: false,
        }
    }

    pub fn default_experiment() -> Self {
        Self::new(ChannelSource::Scene(SceneDescription::default_experiment()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.powers_dbm.is_empty() {
            return Err(Error::InvalidInput("power list is empty".into()));
        }
        if let Some(p) = self.powers_dbm.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!("power {p} dBm is not finite")));
        }
        if !(self.bandwidth_hz > 0.0) || !self.bandwidth_hz.is_finite() {
            return Err(Error::InvalidInput(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth_hz
            )));
        }
        if self.rows == 0 {
            return Err(Error::InvalidInput("rows must be ≥ 1".into()));
        }
        self.model.validate()?;
        self.bcd.validate()?;
        noise_power(self.temperature_k, self.bandwidth_hz).map(|_| ())
    }

    pub fn noise_power(&self) -> Result<f64> {
        noise_power(self.temperature_k, self.bandwidth_hz)
    }

    /// Highest configured power, used by single-point studies.
    pub fn peak_power_dbm(&self) -> f64 {
        self.powers_dbm.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn settings(&self) -> BcdSettings {
        BcdSettings {
            rng_seed: self.seed,
            ..self.bcd
        }
    }
}

/// Components, no-RIS baseline and control groupings for an experiment.
#[derive(Debug, Clone)]
pub struct Setup {
    pub components: ChannelComponents,
    pub baseline: CMatrix,
    /// One group per column (continuous control).
    pub columns: Grouping,
    /// Adjacent column pairs (1-bit control).
    pub pairs: Grouping,
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let (components, baseline) = match &cfg.source {
            ChannelSource::Scene(s) => (synthesize_components(s)?, baseline_channel(s)?),
            ChannelSource::File(c) => (c.clone(), c.h_u.clone()),
        };
        let n = components.n_elements();
        if n % cfg.rows != 0 {
            return Err(Error::InvalidInput(format!(
                "{n} elements do not split into columns of {}",
                cfg.rows
            )));
        }
        let cols = n / cfg.rows;
        Ok(Setup {
            components,
            baseline,
            columns: Grouping::columns(cols, cfg.rows),
            pairs: Grouping::column_pairs(cols, cfg.rows),
        })
    }
}

/// One row of the rate-vs-power table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub p_dbm: f64,
    pub p_dbm_per_hz: f64,
    pub mode: Mode,
    pub min_rate_bps_hz: f64,
    /// Mean over users of the total received signal power, dBm.
    pub avg_rx_power_db: f64,
}

impl Serialize for Mode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

pub const SWEEP_HEADER: &str = "p_dbm,p_dbm_per_hz,mode,min_rate_bps_hz,avg_rx_power_db";

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut s = format!("{SWEEP_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.p_dbm, r.p_dbm_per_hz, r.mode, r.min_rate_bps_hz, r.avg_rx_power_db
        );
    }
    s
}

pub fn sweep_from_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(SWEEP_HEADER) {
        return Err(Error::parse("header", format!("expected {SWEEP_HEADER:?}")));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = || Error::parse(format!("row {}", i + 1), format!("cannot parse {line:?}"));
            let c: Vec<&str> = line.split(',').collect();
            if c.len() != 5 {
                return Err(bad());
            }
            Ok(SweepRow {
                p_dbm: c[0].parse().map_err(|_| bad())?,
                p_dbm_per_hz: c[1].parse().map_err(|_| bad())?,
                mode: c[2].parse()?,
                min_rate_bps_hz: c[3].parse().map_err(|_| bad())?,
                avg_rx_power_db: c[4].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

/// Outcome of one mode at one power level.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub report: SinrReport,
    pub configuration: Option<RisConfiguration>,
}

/// Best 1-bit configuration and the full exhaustive table.
pub fn onebit_point(
    setup: &Setup,
    cfg: &ExperimentConfig,
    p_bs: f64,
    sigma2: f64,
) -> Result<(ExhaustiveResult, PointResult)> {
    let ex = exhaustive_1bit_search(
        &setup.components,
        &cfg.model,
        &setup.pairs,
        p_bs,
        sigma2,
        Some(&setup.baseline),
        cfg.bin_width,
    )?;
    let best = ex
        .best_configuration(&setup.pairs)
        .ok_or_else(|| Error::Domain("no 1-bit configuration could be evaluated".into()))??;
    let h = assemble_for_config(&setup.components, &cfg.model, &best)?;
    let report = duality_beamformer(&h.matrix, p_bs, sigma2)?.report;
    Ok((
        ex,
        PointResult {
            report,
            configuration: Some(best),
        },
    ))
}

/// Continuous per-column optimization: seeded random starts plus a warm
/// start at the best 1-bit configuration.
pub fn continuous_point(
    setup: &Setup,
    cfg: &ExperimentConfig,
    p_bs: f64,
    sigma2: f64,
    onebit: Option<&RisConfiguration>,
) -> Result<OptimizationTrace> {
    let warm: Vec<Vec<f64>> = match onebit {
        Some(c) => vec![setup.columns.iter().map(|m| c.capacitances[m[0]]).collect()],
        None => Vec::new(),
    };
    multistart_optimize(
        &setup.components,
        &cfg.model,
        &setup.columns,
        ControlMode::ContinuousPerColumn,
        &warm,
        p_bs,
        sigma2,
        &cfg.settings(),
    )
}

fn nan_row(p_dbm: f64, bandwidth: f64, mode: Mode) -> SweepRow {
    SweepRow {
        p_dbm,
        p_dbm_per_hz: dbm_to_dbm_per_hz(p_dbm, bandwidth),
        mode,
        min_rate_bps_hz: f64::NAN,
        avg_rx_power_db: f64::NAN,
    }
}

/// Min rate and received power for every (power, mode) pair; modes other
/// than no-ris / continuous / onebit-exhaustive are ignored. Failed points
/// become NaN rows.
pub fn run_power_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let setup = Setup::new(cfg)?;
    let sigma2 = cfg.noise_power()?;
    let mut modes: Vec<Mode> = cfg
        .modes
        .iter()
        .copied()
        .filter(|m| matches!(m, Mode::NoRis | Mode::Continuous | Mode::OnebitExhaustive))
        .collect();
    modes.sort();
    modes.dedup();
    if modes.is_empty() {
        return Err(Error::InvalidInput(
            "sweep needs at least one of no-ris, continuous, onebit-exhaustive".into(),
        ));
    }
    let mut rows = Vec::new();
    for &p_dbm in &cfg.powers_dbm {
        let p_bs = dbm_to_watts(p_dbm);
        let need_onebit = modes.contains(&Mode::OnebitExhaustive) || modes.contains(&Mode::Continuous);
        let onebit = if need_onebit {
            onebit_point(&setup, cfg, p_bs, sigma2).map(|(_, r)| r)
        } else {
            Err(Error::InvalidInput("unused".into()))
        };
        for &mode in &modes {
            let result: Result<SinrReport> = match mode {
                Mode::NoRis => duality_beamformer(&setup.baseline, p_bs, sigma2).map(|o| o.report),
                Mode::OnebitExhaustive => onebit
                    .as_ref()
                    .map(|r| r.report.clone())
                    .map_err(|e| Error::Domain(e.to_string())),
                Mode::Continuous => {
                    let warm = onebit.as_ref().ok().and_then(|r| r.configuration.as_ref());
                    continuous_point(&setup, cfg, p_bs, sigma2, warm).map(|t| t.report)
                }
                _ => unreachable!(),
            };
            rows.push(match result {
                Ok(r) => SweepRow {
                    p_dbm,
                    p_dbm_per_hz: dbm_to_dbm_per_hz(p_dbm, cfg.bandwidth_hz),
                    mode,
                    min_rate_bps_hz: r.min_rate,
                    avg_rx_power_db: watts_to_dbm(r.avg_received_power),
                },
                Err(e) => {
                    warn!("{mode} at {p_dbm} dBm failed: {e}");
                    nan_row(p_dbm, cfg.bandwidth_hz, mode)
                }
            });
        }
        info!("sweep point {p_dbm} dBm done");
    }
    Ok(rows)
}

fn states_string(states: &[bool]) -> String {
    states.iter().map(|&s| if s { '1' } else { '0' }).collect()
}

/// Summary written next to the exhaustive outputs.
#[derive(Debug, Clone, Serialize)]
pub struct ExhaustiveSummary {
    pub p_dbm: f64,
    pub groups: usize,
    pub configurations: usize,
    pub evaluated: usize,
    pub failures: usize,
    pub best_states: Option<String>,
    pub best_min_rate: Option<f64>,
    pub median_min_rate: Option<f64>,
    pub baseline_min_rate: Option<f64>,
    pub beat_baseline_fraction: Option<f64>,
}

/// Runs the exhaustive 1-bit study at the peak power and writes
/// `exhaustive_histogram.csv`, `exhaustive_ranking.json`,
/// `exhaustive_best_config.json` and `exhaustive_summary.json`.
pub fn run_exhaustive(cfg: &ExperimentConfig, out: &Path) -> Result<ExhaustiveSummary> {
    cfg.validate()?;
    let setup = Setup::new(cfg)?;
    let sigma2 = cfg.noise_power()?;
    let p_dbm = cfg.peak_power_dbm();
    let ex = exhaustive_1bit_search(
        &setup.components,
        &cfg.model,
        &setup.pairs,
        dbm_to_watts(p_dbm),
        sigma2,
        Some(&setup.baseline),
        cfg.bin_width,
    )?;
    write_atomic(&out.join("exhaustive_histogram.csv"), ex.histogram.to_csv().as_bytes())?;
    let ranking: Vec<_> = ex
        .ranking
        .iter()
        .enumerate()
        .map(|(rank, &i)| {
            let e = &ex.entries[i];
            json!({"rank": rank + 1, "index": e.index, "states": states_string(&e.states), "min_rate_bps_hz": e.min_rate})
        })
        .collect();
    write_json(&out.join("exhaustive_ranking.json"), &ranking)?;
    if let Some(best) = ex.best_configuration(&setup.pairs) {
        best?.save(out.join("exhaustive_best_config.json"))?;
    }
    let summary = ExhaustiveSummary {
        p_dbm,
        groups: setup.pairs.len(),
        configurations: ex.entries.len(),
        evaluated: ex.evaluated(),
        failures: ex.failures,
        best_states: ex.best().map(|b| states_string(&b.states)),
        best_min_rate: ex.best().and_then(|b| b.min_rate),
        median_min_rate: ex.median_rate(),
        baseline_min_rate: ex.baseline_min_rate,
        beat_baseline_fraction: ex.beat_baseline_fraction,
    };
    write_json(&out.join("exhaustive_summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct PerturbationSummary {
    pub p_dbm: f64,
    pub combinations: usize,
    pub evaluated: usize,
    pub skipped: usize,
    pub min_improvement: Option<f64>,
    pub median_improvement: Option<f64>,
    pub max_improvement: Option<f64>,
}

pub const PERTURBATION_HEADER: &str =
    "combination,offsets,best_min_rate,baseline_min_rate,improvement,all_off_improvement";

/// Runs the displacement study at the peak power and writes
/// `perturbation_improvements.csv`, `perturbation_histogram.csv` and
/// `perturbation_summary.json`. Needs a scene.
pub fn run_perturbation(cfg: &ExperimentConfig, out: &Path) -> Result<PerturbationSummary> {
    cfg.validate()?;
    let ChannelSource::Scene(scene) = &cfg.source else {
        return Err(Error::InvalidInput(
            "the perturbation study needs a scene, not a channel file".into(),
        ));
    };
    let setup = Setup::new(cfg)?;
    let sigma2 = cfg.noise_power()?;
    let p_dbm = cfg.peak_power_dbm();
    let offsets = vec![cfg.offsets.clone(); scene.user_positions.len()];
    let r = perturbation_study(
        scene,
        &cfg.model,
        &setup.pairs,
        &offsets,
        dbm_to_watts(p_dbm),
        sigma2,
        cfg.bin_width,
    )?;
    let mut csv = format!("{PERTURBATION_HEADER}\n");
    for e in &r.entries {
        let idx: Vec<String> = e.offsets.iter().map(usize::to_string).collect();
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            e.combination,
            idx.join(":"),
            e.best_min_rate,
            e.baseline_min_rate,
            e.improvement,
            e.all_off_improvement
        );
    }
    write_atomic(&out.join("perturbation_improvements.csv"), csv.as_bytes())?;
    write_atomic(&out.join("perturbation_histogram.csv"), r.histogram.to_csv().as_bytes())?;
    let s = r.summary();
    let summary = PerturbationSummary {
        p_dbm,
        combinations: r.combinations,
        evaluated: r.entries.len(),
        skipped: r.skipped,
        min_improvement: s.map(|s| s.0),
        median_improvement: s.map(|s| s.1),
        max_improvement: s.map(|s| s.2),
    };
    write_json(&out.join("perturbation_summary.json"), &summary)?;
    Ok(summary)
}

/// Optimized operating point used by the optimize and gain-map commands.
#[derive(Debug, Clone)]
pub struct OptimizedPoint {
    pub p_dbm: f64,
    pub trace: Option<OptimizationTrace>,
    pub configuration: RisConfiguration,
    pub beamformer: CMatrix,
    pub report: SinrReport,
}

/// Optimizes at the peak power in the given mode (continuous,
/// onebit-exhaustive or no-ris).
pub fn optimize_point(cfg: &ExperimentConfig, mode: Mode) -> Result<OptimizedPoint> {
    cfg.validate()?;
    let setup = Setup::new(cfg)?;
    let sigma2 = cfg.noise_power()?;
    let p_dbm = cfg.peak_power_dbm();
    let p_bs = dbm_to_watts(p_dbm);
    match mode {
        Mode::Continuous | Mode::GainMap => {
            let (_, one) = onebit_point(&setup, cfg, p_bs, sigma2)?;
            let t = continuous_point(&setup, cfg, p_bs, sigma2, one.configuration.as_ref())?;
            Ok(OptimizedPoint {
                p_dbm,
                configuration: t.configuration.clone(),
                beamformer: t.beamformer.weights.clone(),
                report: t.report.clone(),
                trace: Some(t),
            })
        }
        Mode::OnebitExhaustive => {
            let (_, one) = onebit_point(&setup, cfg, p_bs, sigma2)?;
            let configuration = one.configuration.expect("best configuration");
            let h = assemble_for_config(&setup.components, &cfg.model, &configuration)?;
            let out = duality_beamformer(&h.matrix, p_bs, sigma2)?;
            Ok(OptimizedPoint {
                p_dbm,
                trace: None,
                configuration,
                beamformer: out.beamformer.weights,
                report: out.report,
            })
        }
        Mode::NoRis => {
            let out = duality_beamformer(&setup.baseline, p_bs, sigma2)?;
            let n = setup.components.n_elements();
            let configuration = RisConfiguration::from_groups(
                ControlMode::ContinuousPerColumn,
                setup.columns.clone(),
                &vec![cfg.model.c_min; setup.columns.len()],
            )?;
            debug_assert_eq!(configuration.n_elements(), n);
            Ok(OptimizedPoint {
                p_dbm,
                trace: None,
                configuration,
                beamformer: out.beamformer.weights,
                report: out.report,
            })
        }
        Mode::Perturbation => Err(Error::InvalidInput(
            "optimize does not support the perturbation mode".into(),
        )),
    }
}

fn complex_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    m.row_iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect()
}

/// Writes `optimized_config.json` and `optimize_result.json`.
pub fn run_optimize(cfg: &ExperimentConfig, mode: Mode, out: &Path) -> Result<OptimizedPoint> {
    let pt = optimize_point(cfg, mode)?;
    pt.configuration.save(out.join("optimized_config.json"))?;
    let trace = pt.trace.as_ref().map(|t| {
        json!({
            "initial_group_values_pf": t.initial_group_values.iter().map(|c| c / PF).collect::<Vec<_>>(),
            "initial_sinr_min": t.initial_sinr_min,
            "converged": t.converged,
            "sweeps": t.sweeps,
            "steps": t.steps,
            "monotonicity_violations": t.monotonicity_violations(),
        })
    });
    let result = json!({
        "mode": mode.as_str(),
        "p_dbm": pt.p_dbm,
        "p_dbm_per_hz": dbm_to_dbm_per_hz(pt.p_dbm, cfg.bandwidth_hz),
        "seed": cfg.seed,
        "report": pt.report,
        "beamformer": complex_rows(&pt.beamformer),
        "trace": trace,
    });
    write_json(&out.join("optimize_result.json"), &result)?;
    Ok(pt)
}

pub const GAIN_MAP_HEADER: &str = "x,y,gain_db";

/// One gain-map sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSample {
    pub x: f64,
    pub y: f64,
    pub gain_db: f64,
}

pub fn gain_map_from_csv(text: &str) -> Result<Vec<GainSample>> {
    let mut lines = text.lines();
    if lines.next() != Some(GAIN_MAP_HEADER) {
        return Err(Error::parse("header", format!("expected {GAIN_MAP_HEADER:?}")));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = || Error::parse(format!("row {}", i + 1), format!("cannot parse {line:?}"));
            let c: Vec<f64> = line
                .split(',')
                .map(|v| v.parse().map_err(|_| bad()))
                .collect::<Result<_>>()?;
            if c.len() != 3 {
                return Err(bad());
            }
            Ok(GainSample {
                x: c[0],
                y: c[1],
                gain_db: c[2],
            })
        })
        .collect()
}

/// Gain maps over the scene grid for the optimized configuration and
/// beamformer; writes `gainmap_beam{k}.csv` per beam, normalized by the
/// transmit budget. Returns the written paths.
pub fn run_gain_map(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let ChannelSource::Scene(scene) = &cfg.source else {
        return Err(Error::InvalidInput(
            "gain maps need a scene with an observation grid".into(),
        ));
    };
    let grid = scene
        .grid
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("scene has no observation grid".into()))?;
    let points = grid.points();
    let pt = optimize_point(cfg, Mode::Continuous)?;
    pt.configuration.save(out.join("gainmap_config.json"))?;
    let setup = Setup::new(cfg)?;
    let grid_comps = setup
        .components
        .with_user_links(direct_channel(scene, &points)?, port_channel(scene, &points)?)?;
    let h = assemble_for_config(&grid_comps, &cfg.model, &pt.configuration)?;
    let budget = dbm_to_watts(pt.p_dbm);
    let mut paths = Vec::new();
    for k in 0..pt.beamformer.ncols() {
        let map = evaluate_gain_map(&h, &pt.beamformer, k, budget)?;
        let mut csv = format!("{GAIN_MAP_HEADER}\n");
        for (p, g) in points.iter().zip(&map) {
            let _ = writeln!(csv, "{},{},{}", p.x, p.y, g);
        }
        let path = out.join(format!("gainmap_beam{k}.csv"));
        write_atomic(&path, csv.as_bytes())?;
        paths.push(path);
    }
    Ok(paths)
}

/// Writes the rate-vs-power table to `sweep.csv`.
pub fn write_sweep(rows: &[SweepRow], out: &Path) -> Result<PathBuf> {
    let path = out.join("sweep.csv");
    write_atomic(&path, sweep_to_csv(rows).as_bytes())?;
    Ok(path)
}

/// Writes `manifest.json` describing the run.
pub fn write_manifest(cfg: &ExperimentConfig, command: &str, out: &Path) -> Result<()> {
    let mut m = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "powers_dbm": cfg.powers_dbm,
        "bandwidth_hz": cfg.bandwidth_hz,
        "temperature_k": cfg.temperature_k,
        "noise_power_w": cfg.noise_power()?,
        "modes": cfg.modes.iter().map(|m| m.as_str()).collect::<Vec<_>>(),
        "rx_power_metric": "mean over users of sum_j |Y[k,j]|^2, dBm",
        "gain_map_normalization": "|h w_k|^2 / P_BS, dB",
    });
    if !cfg.reproducible {
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        m["generated_unix"] = json!(now);
    }
    write_json(&out.join("manifest.json"), &m)
}
