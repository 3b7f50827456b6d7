//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line
//! (written straight to stdout so it shows even when output is captured).

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use risopt::beamforming::{dbm_to_watts, downlink_sinr, duality_beamformer, noise_power, uplink_sinr};
use risopt::channel::test_support::random_components;
use risopt::channel::{assemble_effective_channel, ChannelComponents};
use risopt::experiment::{onebit_point, optimize_point, run_power_sweep, ExperimentConfig, Mode, Setup};
use risopt::optimizer::{
    alternating_optimize, argmin, default_offset_grid, exhaustive_1bit_search, min_sinr_gradients, perturbation_study,
    BcdSettings,
};
use risopt::ris::{ControlMode, Grouping, RisConfiguration, VaractorModel, C_OFF, C_ON, PF};
use risopt::scene::{synthesize_components, SceneDescription};
use risopt::CMatrix;

fn report(n: usize, name: &str, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "acceptance {n} [{verdict}] {name}: {detail}");
}

fn loads(model: &VaractorModel, caps: &[f64], f: f64) -> Vec<Complex64> {
    caps.iter().map(|&c| model.load_impedance(c, f).unwrap()).collect()
}

fn rel_fro(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm() / b.norm()
}

fn default_setup() -> (ExperimentConfig, Setup, f64) {
    let cfg = ExperimentConfig::default_experiment();
    let setup = Setup::new(&cfg).unwrap();
    let sigma2 = cfg.noise_power().unwrap();
    (cfg, setup, sigma2)
}

#[test]
fn criterion_1_duality_equivalence() {
    let start = Instant::now();
    let model = VaractorModel::default();
    let mut worst_sinr = 0.0_f64;
    let mut worst_power = 0.0_f64;
    let mut failures = 0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
        let m = rng.random_range(1..=8);
        let k = rng.random_range(1..=m);
        let c = random_components(k, m, 20, seed);
        let caps: Vec<f64> = (0..20).map(|_| rng.random_range(model.c_min..=model.c_max)).collect();
        let h = assemble_effective_channel(&c, &loads(&model, &caps, c.frequency))
            .unwrap()
            .matrix;
        let p_bs = 1.0;
        let sigma2 = 10f64.powf(-rng.random_range(1.0..4.0));
        let Ok(out) = duality_beamformer(&h, p_bs, sigma2) else {
            failures += 1;
            continue;
        };
        let ul = uplink_sinr(&h, &out.uplink.combiner, &out.uplink.powers, sigma2).unwrap();
        for (dl, ul) in out.report.sinr.iter().zip(&ul) {
            worst_sinr = worst_sinr.max((dl - ul).abs() / ul);
        }
        let sum_p: f64 = out.downlink_powers.iter().sum();
        worst_power = worst_power.max((sum_p - p_bs).abs() / p_bs);
    }
    let elapsed = start.elapsed();
    let ok = failures == 0 && worst_sinr <= 1e-6 && worst_power <= 1e-8 && elapsed < Duration::from_secs(10);
    report(
        1,
        "duality equivalence",
        ok,
        &format!("max SINR rel err {worst_sinr:.2e}, max power rel err {worst_power:.2e}, {failures} failures, {elapsed:.2?}"),
    );
    assert!(ok);
}

#[test]
fn criterion_2_gradient_fidelity() {
    let start = Instant::now();
    let model = VaractorModel::default();
    let grouping = Grouping::singletons(20);
    let mut worst = 0.0_f64;
    for seed in 0..100u64 {
        let c = random_components(3, 3, 20, 500 + seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let caps: Vec<f64> = (0..20).map(|_| rng.random_range(model.c_min..=model.c_max)).collect();
        let sigma2 = 1e-2;
        let h = assemble_effective_channel(&c, &loads(&model, &caps, c.frequency)).unwrap();
        let w = duality_beamformer(&h.matrix, 1.0, sigma2).unwrap().beamformer.weights;
        let ks = argmin(&downlink_sinr(&(&h.matrix * &w), sigma2));
        let analytic = min_sinr_gradients(&h, &model, &caps, &grouping, &w, sigma2, c.frequency);
        // Central differences of the active user's SINR with W fixed.
        let sinr_at = |caps: &[f64]| {
            let hh = assemble_effective_channel(&c, &loads(&model, caps, c.frequency))
                .unwrap()
                .matrix;
            downlink_sinr(&(&hh * &w), sigma2)[ks]
        };
        let fd: Vec<f64> = (0..20)
            .map(|n| {
                let step = 1e-6 * caps[n];
                let mut up = caps.clone();
                let mut dn = caps.clone();
                up[n] += step;
                dn[n] -= step;
                (sinr_at(&up) - sinr_at(&dn)) / (2.0 * step)
            })
            .collect();
        let diff = analytic
            .iter()
            .zip(&fd)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst = worst.max(diff / norm);
    }
    let elapsed = start.elapsed();
    let ok = worst <= 1e-4 && elapsed < Duration::from_secs(30);
    report(
        2,
        "gradient fidelity",
        ok,
        &format!("max rel err {worst:.2e} over 100 seeds, {elapsed:.2?}"),
    );
    assert!(ok);
}

#[test]
fn criterion_3_monotone_ascent() {
    let (cfg, setup, sigma2) = default_setup();
    let p_bs = dbm_to_watts(cfg.peak_power_dbm());
    let mut violations = 0;
    let mut accepted = 0;
    for seed in 0..20u64 {
        let settings = BcdSettings {
            rng_seed: seed,
            ..BcdSettings::default()
        };
        let t = alternating_optimize(
            &setup.components,
            &cfg.model,
            &setup.columns,
            ControlMode::ContinuousPerColumn,
            None,
            p_bs,
            sigma2,
            &settings,
        )
        .unwrap();
        violations += t.monotonicity_violations();
        accepted += t.steps.len();
        let mut prev = t.initial_sinr_min;
        for s in &t.steps {
            if s.sinr_min_after < prev {
                violations += 1;
            }
            prev = s.sinr_min_after;
        }
        if t.sinr_min() < prev {
            violations += 1;
        }
    }
    let ok = violations == 0 && accepted > 0;
    report(
        3,
        "monotone ascent",
        ok,
        &format!("{violations} violations, {accepted} accepted steps over 20 runs"),
    );
    assert!(ok);
}

#[test]
fn criterion_4_exhaustive_vs_local() {
    let (cfg, setup, sigma2) = default_setup();
    let p_bs = dbm_to_watts(cfg.peak_power_dbm());
    let start = Instant::now();
    let ex = exhaustive_1bit_search(&setup.components, &cfg.model, &setup.pairs, p_bs, sigma2, None, 0.05).unwrap();
    let elapsed = start.elapsed();
    let best = ex.best().unwrap();
    let best_rate = best.min_rate.unwrap();
    let winner = ex.best_configuration(&setup.pairs).unwrap().unwrap();
    let t = alternating_optimize(
        &setup.components,
        &cfg.model,
        &setup.pairs,
        ControlMode::ContinuousPerColumn,
        Some(&winner.group_values()),
        p_bs,
        sigma2,
        &BcdSettings::default(),
    )
    .unwrap();
    let ok = setup.pairs.len() == 10
        && ex.entries.len() == 1024
        && ex.evaluated() == 1024
        && t.min_rate() >= best_rate
        && elapsed < Duration::from_secs(60);
    report(
        4,
        "exhaustive vs local",
        ok,
        &format!(
            "1-bit optimum {best_rate:.4}, warm-started BCD {:.4} bps/Hz, {} configs in {elapsed:.2?}",
            t.min_rate(),
            ex.evaluated()
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_5_high_snr_slope() {
    let mut cfg = ExperimentConfig::default_experiment();
    cfg.modes = vec![Mode::NoRis];
    let rows = run_power_sweep(&cfg).unwrap();
    let rates: Vec<f64> = rows.iter().map(|r| r.min_rate_bps_hz).collect();
    let n = rates.len();
    let slopes = [rates[n - 2] - rates[n - 3], rates[n - 1] - rates[n - 2]];
    let ok = n >= 3 && slopes.iter().all(|s| (1.51..=1.81).contains(s));
    report(
        5,
        "high-SNR slope",
        ok,
        &format!(
            "rates {rates:.3?}, top steps {:.4} / {:.4} bps/Hz",
            slopes[0], slopes[1]
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_6_ordering() {
    let (cfg, setup, sigma2) = default_setup();
    let p_bs = dbm_to_watts(cfg.peak_power_dbm());
    let (ex, one) = onebit_point(&setup, &cfg, p_bs, sigma2).unwrap();
    let median = ex.median_rate().unwrap();
    let cont = optimize_point(&cfg, Mode::Continuous).unwrap().report.min_rate;
    let best = one.report.min_rate;
    let ok = cont >= best && best >= median;
    report(
        6,
        "ordering",
        ok,
        &format!("continuous {cont:.4} >= best 1-bit {best:.4} >= median 1-bit {median:.4}"),
    );
    assert!(ok);
}

#[test]
fn criterion_7_structural_anchors() {
    let (cfg, setup, sigma2) = default_setup();
    let p_bs = dbm_to_watts(cfg.peak_power_dbm());
    let ex = exhaustive_1bit_search(&setup.components, &cfg.model, &setup.pairs, p_bs, sigma2, None, 0.05).unwrap();

    let scene = SceneDescription::default_experiment();
    let offsets = vec![default_offset_grid(); scene.user_positions.len()];
    let study = perturbation_study(&scene, &cfg.model, &setup.pairs, &offsets, p_bs, sigma2, 0.05).unwrap();
    let xs: Vec<f64> = default_offset_grid().iter().map(|p| p.x.abs()).collect();
    let ys: Vec<f64> = default_offset_grid().iter().map(|p| p.y.abs()).collect();
    let offsets_ok = xs.iter().all(|&x| x == 0.0 || x == 0.075) && ys.iter().all(|&y| y == 0.0 || y == 0.092);

    let states = RisConfiguration::from_states(
        setup.pairs.clone(),
        &[true, false, true, false, true, false, true, false, true, false],
    )
    .unwrap();
    let mut distinct: Vec<f64> = states.capacitances.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let states_ok = distinct == vec![C_OFF, C_ON] && C_OFF == 0.38 * PF && C_ON == 0.54 * PF;

    let ktb = noise_power(900.0, 40e6).unwrap();
    let ktb_ok = ((ktb - 4.970e-13) / 4.970e-13).abs() <= 1e-3;

    let ok = ex.entries.len() == 1024 && study.combinations == 729 && offsets_ok && states_ok && ktb_ok;
    report(
        7,
        "structural anchors",
        ok,
        &format!(
            "{} configs, {} perturbation combos ({} skipped), states {:?} pF, kTB {ktb:.4e} W",
            ex.entries.len(),
            study.combinations,
            study.skipped,
            distinct.iter().map(|c| c / PF).collect::<Vec<_>>()
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_8_channel_core_oracles() {
    let model = VaractorModel::default();
    let scene = SceneDescription::default_experiment();
    let c = synthesize_components(&scene).unwrap();
    let n = c.n_elements();

    // Dense inverse on the default scene and a batch of random instances.
    let mut worst_dense = 0.0_f64;
    let mut instances = vec![c.clone()];
    instances.extend((0..20).map(|s| random_components(3, 4, 20, 900 + s)));
    for (i, inst) in instances.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
        let caps: Vec<f64> = (0..inst.n_elements())
            .map(|_| rng.random_range(model.c_min..=model.c_max))
            .collect();
        let z = loads(&model, &caps, inst.frequency);
        let fast = assemble_effective_channel(inst, &z).unwrap().matrix;
        let mut zm = -inst.z_ll.clone();
        for (j, zl) in z.iter().enumerate() {
            zm[(j, j)] += zl;
        }
        let dense = &inst.h_u + &inst.g_l * zm.try_inverse().unwrap() * &inst.h_0;
        worst_dense = worst_dense.max(rel_fro(&fast, &dense));
    }

    let tiny = loads(&model, &vec![1e-18; n], c.frequency);
    let unloaded = assemble_effective_channel(&c, &tiny).unwrap().matrix;
    let unloaded_err = rel_fro(&unloaded, &c.h_u);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("channels.json");
    c.save(&path).unwrap();
    let back = ChannelComponents::load(&path).unwrap();
    let z_exact = back.z_ll == c.z_ll;
    let z_symmetric = (0..n).all(|i| (0..n).all(|j| back.z_ll[(i, j)] == back.z_ll[(j, i)]));
    back.save(dir.path().join("again.json")).unwrap();
    let bytes_stable = std::fs::read(&path).unwrap() == std::fs::read(dir.path().join("again.json")).unwrap();
    let all_exact = back.h_u == c.h_u && back.h_0 == c.h_0 && back.g_l == c.g_l;

    let ok = worst_dense <= 1e-10 && unloaded_err <= 1e-6 && z_exact && z_symmetric && bytes_stable && all_exact;
    report(
        8,
        "channel-core oracles",
        ok,
        &format!(
            "dense rel err {worst_dense:.2e}, unloaded rel err {unloaded_err:.2e}, Z_ll bit-exact {z_exact}, symmetric {z_symmetric}"
        ),
    );
    assert!(ok);
}

fn run_cli(args: &[&str], out: &Path) {
    let o = Command::new(env!("CARGO_BIN_EXE_risopt"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap();
    assert!(
        o.status.success(),
        "risopt {args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_9_cli_determinism() {
    let root = tempfile::tempdir().unwrap();
    let commands: [&[&str]; 6] = [
        &["scene", "trace", "--reproducible"],
        &["optimize", "--reproducible", "--power-dbm", "20"],
        &["sweep", "--reproducible", "--power-dbm", "10", "--power-dbm", "20"],
        &["exhaustive", "--reproducible", "--power-dbm", "20"],
        &["perturb", "--reproducible", "--power-dbm", "20"],
        &["gainmap", "--reproducible", "--power-dbm", "20"],
    ];
    let mut mismatched = Vec::new();
    let mut files = 0;
    for (i, args) in commands.iter().enumerate() {
        let a = root.path().join(format!("{i}a"));
        let b = root.path().join(format!("{i}b"));
        run_cli(args, &a);
        run_cli(args, &b);
        let (ta, tb) = (tree(&a), tree(&b));
        files += ta.len();
        if ta.is_empty() || ta != tb {
            mismatched.push(args.join(" "));
        }
    }
    // Channel conversion of the traced file.
    let traced = root.path().join("0a").join("channels.json");
    for dir in ["ca", "cb"] {
        let out = root.path().join(dir);
        std::fs::create_dir_all(&out).unwrap();
        let status = Command::new(env!("CARGO_BIN_EXE_risopt"))
            .args(["channel", "convert", "--channels"])
            .arg(&traced)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap()
            .status;
        assert!(status.success());
    }
    let converted = tree(&root.path().join("ca"));
    files += converted.len();
    if converted != tree(&root.path().join("cb")) {
        mismatched.push("channel convert".into());
    }
    let ok = mismatched.is_empty();
    report(
        9,
        "CLI determinism",
        ok,
        &format!("7 commands, {files} files compared, mismatches {mismatched:?}"),
    );
    assert!(ok);
}
