use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde_json::json;

use risopt::channel::ChannelComponents;
use risopt::experiment::{
    run_exhaustive, run_gain_map, run_optimize, run_perturbation, run_power_sweep, write_manifest, write_sweep,
    ChannelSource, ExperimentConfig, Mode, DEFAULT_POWERS_DBM,
};
use risopt::io::write_json;
use risopt::optimizer::BcdSettings;
use risopt::ris::VaractorModel;
use risopt::scene::{baseline_channel, synthesize_components, SceneDescription};
use risopt::{Error, Result};

/// Site-specific RIS channel modeling and max-min rate optimization.
#[derive(Parser)]
#[command(name = "risopt", version, about)]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scene utilities.
    Scene {
        #[command(subcommand)]
        action: SceneAction,
    },
    /// Optimize the RIS and beamformer at the highest configured power.
    Optimize(Common),
    /// Minimum rate and received power versus transmit power.
    Sweep(Common),
    /// Evaluate every column-paired 1-bit configuration.
    Exhaustive(Common),
    /// 1-bit gain over the no-RIS baseline under user displacements.
    Perturb(Common),
    /// Per-beam gain maps over the scene's observation grid.
    Gainmap(Common),
    /// Channel-file utilities.
    Channel {
        #[command(subcommand)]
        action: ChannelAction,
    },
}

#[derive(Subcommand)]
enum SceneAction {
    /// Trace the scene and write its channel components.
    Trace(Common),
}

#[derive(Subcommand)]
enum ChannelAction {
    /// Validate a channel file and rewrite it in canonical form.
    Convert {
        /// Input channel file.
        #[arg(long)]
        channels: PathBuf,
        /// Output file, or a directory to write `channels.json` into.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// Scene JSON; the built-in default experiment when omitted.
    #[arg(long, conflicts_with = "channels")]
    scene: Option<PathBuf>,
    /// Channel-component JSON to use instead of a scene.
    #[arg(long)]
    channels: Option<PathBuf>,
    /// Varactor model JSON.
    #[arg(long)]
    varactor: Option<PathBuf>,
    /// Mode(s): no-ris, continuous, onebit-exhaustive, perturbation, gain-map.
    #[arg(long = "mode")]
    modes: Vec<String>,
    /// Total BS power in dBm (repeatable).
    #[arg(long = "power-dbm", allow_negative_numbers = true)]
    powers_dbm: Vec<f64>,
    /// Bandwidth for noise power and dBm/Hz conversion.
    #[arg(long, default_value_t = risopt::beamforming::DEFAULT_BANDWIDTH_HZ)]
    bandwidth_hz: f64,
    /// Noise temperature in kelvin.
    #[arg(long, default_value_t = risopt::beamforming::DEFAULT_TEMPERATURE_K)]
    temperature_k: f64,
    /// Seed for random initializations.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random restarts of the continuous optimizer.
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    /// Elements per RIS column.
    #[arg(long, default_value_t = 1)]
    rows: usize,
    /// Stop BCD once a sweep improves SINR_min by less than 1e-9.
    #[arg(long)]
    practical_eps: bool,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Omit timestamps so repeated runs are byte-identical.
    #[arg(long)]
    reproducible: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let source = match (&self.scene, &self.channels) {
            (_, Some(ch)) => ChannelSource::File(ChannelComponents::load(ch)?),
            (Some(s), None) => ChannelSource::Scene(SceneDescription::load(s)?),
            (None, None) => ChannelSource::Scene(SceneDescription::default_experiment()),
        };
        let mut cfg = ExperimentConfig::new(source);
        if let Some(v) = &self.varactor {
            cfg.model = VaractorModel::load(v)?;
        }
        if !self.modes.is_empty() {
            cfg.modes = self.modes.iter().map(|m| m.parse()).collect::<Result<_>>()?;
        }
        cfg.powers_dbm = if self.powers_dbm.is_empty() {
            DEFAULT_POWERS_DBM.to_vec()
        } else {
            self.powers_dbm.clone()
        };
        cfg.bandwidth_hz = self.bandwidth_hz;
        cfg.temperature_k = self.temperature_k;
        cfg.seed = self.seed;
        cfg.rows = self.rows;
        cfg.reproducible = self.reproducible;
        cfg.bcd = BcdSettings {
            restarts: self.restarts,
            eps_g: if self.practical_eps {
                BcdSettings::PRACTICAL_EPS_G
            } else {
                BcdSettings::default().eps_g
            },
            ..BcdSettings::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn setup_threads(&self) -> Result<()> {
        if let Some(n) = self.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::InvalidInput(format!("cannot configure {n} threads: {e}")))?;
        }
        Ok(())
    }

    fn single_mode(&self, default: Mode) -> Result<Mode> {
        match self.modes.as_slice() {
            [] => Ok(default),
            [m] => m.parse(),
            _ => Err(Error::InvalidInput("this command takes a single --mode".into())),
        }
    }
}

fn summary_line(label: &str, value: impl std::fmt::Display) {
    println!("{label:<28}{value}");
}

fn scene_trace(c: &Common) -> Result<()> {
    let scene = match &c.scene {
        Some(p) => SceneDescription::load(p)?,
        None => SceneDescription::default_experiment(),
    };
    let comps = synthesize_components(&scene)?;
    let base = baseline_channel(&scene)?;
    comps.save(c.out.join("channels.json"))?;
    scene.save(c.out.join("scene.json"))?;
    let rows: Vec<Vec<[f64; 2]>> = base
        .row_iter()
        .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
        .collect();
    write_json(&c.out.join("baseline_channel.json"), &json!({ "h": rows }))?;
    let (k, m, n) = comps.dims();
    summary_line("users x antennas x ports", format!("{k} x {m} x {n}"));
    summary_line("written to", c.out.display());
    Ok(())
}

fn channel_convert(input: &Path, out: &Path) -> Result<()> {
    let comps = ChannelComponents::load(input)?;
    let target = if out.is_dir() {
        out.join("channels.json")
    } else {
        out.to_path_buf()
    };
    comps.save(&target)?;
    let (k, m, n) = comps.dims();
    summary_line("users x antennas x ports", format!("{k} x {m} x {n}"));
    summary_line("written to", target.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Scene {
            action: SceneAction::Trace(c),
        } => {
            c.setup_threads()?;
            let cfg = c.config()?;
            scene_trace(&c)?;
            write_manifest(&cfg, "scene trace", &c.out)
        }
        Command::Channel {
            action: ChannelAction::Convert { channels, out },
        } => channel_convert(&channels, &out),
        Command::Optimize(c) => {
            c.setup_threads()?;
            let cfg = c.config()?;
            let mode = c.single_mode(Mode::Continuous)?;
            let pt = run_optimize(&cfg, mode, &c.out)?;
            write_manifest(&cfg, "optimize", &c.out)?;
            summary_line("mode", mode);
            summary_line("power (dBm)", pt.p_dbm);
            summary_line("min rate (bps/Hz)", format!("{:.4}", pt.report.min_rate));
            Ok(())
        }
        Command::Sweep(c) => {
            c.setup_threads()?;
            let cfg = c.config()?;
            let rows = run_power_sweep(&cfg)?;
            let path = write_sweep(&rows, &c.out)?;
            write_manifest(&cfg, "sweep", &c.out)?;
            for r in &rows {
                println!(
                    "{:>7.2} dBm  {:<18} {:>9.4} bps/Hz",
                    r.p_dbm,
                    r.mode.as_str(),
                    r.min_rate_bps_hz
                );
            }
            summary_line("written to", path.display());
            Ok(())
        }
        Command::Exhaustive(c) => {
            c.setup_threads()?;
            let cfg = c.config()?;
            let s = run_exhaustive(&cfg, &c.out)?;
            write_manifest(&cfg, "exhaustive", &c.out)?;
            summary_line("configurations", s.configurations);
            summary_line("evaluated", s.evaluated);
            if let (Some(b), Some(st)) = (s.best_min_rate, &s.best_states) {
                summary_line("best (bps/Hz)", format!("{b:.4} [{st}]"));
            }
            if let Some(f) = s.beat_baseline_fraction {
                summary_line("beat no-RIS baseline", format!("{:.2}%", 100.0 * f));
            }
            Ok(())
        }
        Command::Perturb(c) => {
            c.setup_threads()?;
            let cfg = c.config()?;
            let s = run_perturbation(&cfg, &c.out)?;
            write_manifest(&cfg, "perturb", &c.out)?;
            summary_line("combinations", s.combinations);
            summary_line("skipped", s.skipped);
            if let (Some(a), Some(m), Some(b)) = (s.min_improvement, s.median_improvement, s.max_improvement) {
                summary_line("improvement min/med/max", format!("{a:.4} / {m:.4} / {b:.4} bps/Hz"));
            }
            Ok(())
        }
        Command::Gainmap(c) => {
            c.setup_threads()?;
            let cfg = c.config()?;
            let paths = run_gain_map(&cfg, &c.out)?;
            write_manifest(&cfg, "gainmap", &c.out)?;
            for p in paths {
                info!("wrote {}", p.display());
                println!("{}", p.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
