//! Noise, SINR and rate evaluation, and the max-min downlink beamformer
//! obtained through uplink–downlink duality.

use log::warn;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::{CMatrix, BOLTZMANN};

/// Noise temperature used by the default experiments, K.
pub const DEFAULT_TEMPERATURE_K: f64 = 900.0;
/// System bandwidth used by the default experiments, Hz.
pub const DEFAULT_BANDWIDTH_HZ: f64 = 40e6;

/// Relative tolerance on `Σ p_k = P_BS` after power recovery.
pub const POWER_CONSERVATION_TOL: f64 = 1e-8;
/// Relative downlink/uplink SINR mismatch above which a warning is logged.
pub const DUALITY_WARN_TOL: f64 = 1e-6;

/// `kTB` in watts.
pub fn noise_power(temperature: f64, bandwidth: f64) -> Result<f64> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::InvalidInput(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(Error::InvalidInput(format!(
            "bandwidth must be positive, got {bandwidth}"
        )));
    }
    Ok(BOLTZMANN * temperature * bandwidth)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Converts a total power in dBm to a spectral density in dBm/Hz over `bandwidth`.
pub fn dbm_to_dbm_per_hz(dbm: f64, bandwidth: f64) -> f64 {
    dbm - 10.0 * bandwidth.log10()
}

pub fn dbm_per_hz_to_dbm(dbm_per_hz: f64, bandwidth: f64) -> f64 {
    dbm_per_hz + 10.0 * bandwidth.log10()
}

/// Downlink beamformer `W` (M×K) and the budget it was normalized to.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerMatrix {
    pub weights: CMatrix,
    pub power_budget: f64,
}

impl BeamformerMatrix {
    pub fn total_power(&self) -> f64 {
        self.weights.norm_squared()
    }

    /// Rows of `[re, im]` pairs, for JSON output.
    pub fn to_rows(&self) -> Vec<Vec<[f64; 2]>> {
        self.weights
            .row_iter()
            .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
            .collect()
    }
}

/// Per-user SINR and rate summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SinrReport {
    pub sinr: Vec<f64>,
    /// `bandwidth · log2(1 + SINR)`; bps/Hz with the default unit bandwidth.
    pub rates: Vec<f64>,
    pub min_rate: f64,
    /// Mean over users of `Σ_j |Y[k, j]|²`, watts.
    pub avg_received_power: f64,
    pub noise_power: f64,
}

impl SinrReport {
    /// Builds the report from the received-signal matrix `Y = H̃ W`.
    /// `bandwidth = 1.0` gives bandwidth-normalized rates.
    pub fn from_signals(y: &CMatrix, sigma2: f64, bandwidth: f64) -> Self {
        let sinr = downlink_sinr(y, sigma2);
        let rates: Vec<f64> = sinr.iter().map(|s| bandwidth * (1.0 + s).log2()).collect();
        let min_rate = rates.iter().copied().fold(f64::INFINITY, f64::min);
        let k = y.nrows().max(1) as f64;
        let avg_received_power = y.iter().map(|z| z.norm_sqr()).sum::<f64>() / k;
        SinrReport {
            sinr,
            rates,
            min_rate,
            avg_received_power,
            noise_power: sigma2,
        }
    }

    pub fn min_sinr(&self) -> f64 {
        self.sinr.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `SINR_k = |Y[k,k]|² / (Σ_{j≠k} |Y[k,j]|² + σ²)`.
pub fn downlink_sinr(y: &CMatrix, sigma2: f64) -> Vec<f64> {
    (0..y.nrows())
        .map(|k| {
            let mut interference = sigma2;
            for j in 0..y.ncols() {
                if j != k {
                    interference += y[(k, j)].norm_sqr();
                }
            }
            y[(k, k)].norm_sqr() / interference
        })
        .collect()
}

/// Uplink transmit powers, one per user.
#[derive(Debug, Clone, PartialEq)]
pub struct UplinkPowers {
    pub q: Vec<f64>,
}

impl UplinkPowers {
    pub fn uniform(k: usize, total: f64) -> Self {
        UplinkPowers {
            q: vec![total / k as f64; k],
        }
    }

    pub fn total(&self) -> f64 {
        self.q.iter().sum()
    }

    fn validate(&self, k: usize) -> Result<()> {
        if self.q.len() != k {
            return Err(Error::dim("q", k, self.q.len()));
        }
        if let Some(i) = self.q.iter().position(|q| !(*q >= 0.0) || !q.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "uplink power q[{i}] = {} is not ≥ 0",
                self.q[i]
            )));
        }
        Ok(())
    }
}

/// MMSE receive combiners, `w_k = √q_k (σ² I + Σ_j q_j h_jᴴ h_j)⁻¹ h_kᴴ`, as the columns of an M×K matrix.
pub fn mmse_combiner(h: &CMatrix, q: &UplinkPowers, sigma2: f64) -> Result<CMatrix> {
    let (k, m) = h.shape();
    q.validate(k)?;
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "noise power must be positive, got {sigma2}"
        )));
    }
    let hh = h.adjoint();
    let mut gram = CMatrix::identity(m, m) * Complex64::from(sigma2);
    for j in 0..k {
        let hj = hh.column(j);
        gram += (hj * hj.adjoint()) * Complex64::from(q.q[j]);
    }
    let rhs = DMatrix::from_fn(m, k, |r, c| hh[(r, c)] * q.q[c].sqrt());
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Domain("MMSE Gram matrix is not positive definite".into()))?;
    Ok(chol.solve(&rhs))
}

/// `SINR_k^ul = q_k|h_k w_k|² / (Σ_{j≠k} q_j|h_j w_k|² + σ²‖w_k‖²)`; zero combiners give 0.
pub fn uplink_sinr(h: &CMatrix, w_ul: &CMatrix, q: &UplinkPowers, sigma2: f64) -> Result<Vec<f64>> {
    let k = h.nrows();
    q.validate(k)?;
    if w_ul.shape() != (h.ncols(), k) {
        return Err(Error::dim(
            "w_ul",
            format!("{}x{k}", h.ncols()),
            format!("{}x{}", w_ul.nrows(), w_ul.ncols()),
        ));
    }
    // g[(j, kk)] = |h_j w_kk|²
    let g = (h * w_ul).map(|z| z.norm_sqr());
    Ok((0..k)
        .map(|kk| {
            let wn = w_ul.column(kk).norm_squared();
            if wn == 0.0 {
                return 0.0;
            }
            let mut den = sigma2 * wn;
            for j in 0..k {
                if j != kk {
                    den += q.q[j] * g[(j, kk)];
                }
            }
            q.q[kk] * g[(kk, kk)] / den
        })
        .collect())
}

/// Stopping rule for the uplink power fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceSettings {
    /// Threshold on the relative change of the minimum uplink SINR.
    pub eps_u: f64,
    pub max_iterations: usize,
}

impl Default for BalanceSettings {
    fn default() -> Self {
        BalanceSettings {
            eps_u: 1e-6,
            max_iterations: 50,
        }
    }
}

/// Converged state of the uplink fixed point.
#[derive(Debug, Clone)]
pub struct BalancedUplink {
    pub powers: UplinkPowers,
    /// MMSE combiners for `powers`.
    pub combiner: CMatrix,
    /// Uplink SINRs of `combiner` under `powers`.
    pub sinr: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Max-min SINR balancing: `q_k ← q_k · min_i SINR_i / SINR_k`, renormalized to `Σ q = p_bs`.
pub fn fixed_point_power_balance(
    h: &CMatrix,
    p_bs: f64,
    sigma2: f64,
    settings: BalanceSettings,
) -> Result<BalancedUplink> {
    let (k, m) = h.shape();
    if !(p_bs > 0.0) || !p_bs.is_finite() {
        return Err(Error::InvalidInput(format!(
            "power budget must be positive, got {p_bs}"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidInput("no users".into()));
    }
    if let Some(user) = (0..k).find(|&i| h.row(i).iter().all(|z| z.norm_sqr() == 0.0)) {
        return Err(Error::InfeasibleUser { user });
    }
    if k > m {
        warn!("{k} users exceed {m} BS antennas; max-min balancing may settle at low SINR");
    }
    let mut q = UplinkPowers::uniform(k, p_bs);
    let mut prev_min = f64::NAN;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let w = mmse_combiner(h, &q, sigma2)?;
        let sinr = uplink_sinr(h, &w, &q, sigma2)?;
        let min = sinr.iter().copied().fold(f64::INFINITY, f64::min);
        if let Some(user) = sinr.iter().position(|s| *s == 0.0) {
            return Err(Error::InfeasibleUser { user });
        }
        let converged = (min - prev_min).abs() <= settings.eps_u * min;
        if converged || iterations >= settings.max_iterations {
            return Ok(BalancedUplink {
                powers: q,
                combiner: w,
                sinr,
                iterations,
                converged,
            });
        }
        prev_min = min;
        for (qk, s) in q.q.iter_mut().zip(&sinr) {
            *qk *= min / s;
        }
        let total = q.total();
        for qk in &mut q.q {
            *qk *= p_bs / total;
        }
    }
}

/// Scales each column to unit norm (zero columns are left at zero).
pub fn normalize_columns(w: &CMatrix) -> CMatrix {
    let mut out = w.clone();
    for mut c in out.column_iter_mut() {
        let n = c.norm();
        if n > 0.0 {
            c /= Complex64::from(n);
        }
    }
    out
}

/// Downlink powers reaching the uplink SINRs with the unit-norm directions of `w_ul`.
///
/// Solves `p_k G(k,k) − SINR_k Σ_{j≠k} p_j G(k,j) = SINR_k σ²` with `G(k,j) = |h_k w̄_j|²`.
pub fn downlink_power_recovery(h: &CMatrix, w_ul: &CMatrix, sinr_ul: &[f64], sigma2: f64) -> Result<Vec<f64>> {
    let k = h.nrows();
    if sinr_ul.len() != k {
        return Err(Error::dim("sinr_ul", k, sinr_ul.len()));
    }
    let wbar = normalize_columns(w_ul);
    let g = (h * &wbar).map(|z| z.norm_sqr());
    if let Some(user) = (0..k).find(|&i| !(g[(i, i)] > 0.0)) {
        return Err(Error::Duality(format!(
            "user {user} has zero effective gain G({user},{user})"
        )));
    }
    let a = DMatrix::from_fn(k, k, |r, c| if r == c { g[(r, r)] } else { -sinr_ul[r] * g[(r, c)] });
    let b = DVector::from_fn(k, |r, _| sinr_ul[r] * sigma2);
    let p = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Duality("power recovery system is singular".into()))?;
    let scale = p.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if let Some(user) = p.iter().position(|x| *x < -1e-12 * scale || !x.is_finite()) {
        return Err(Error::Duality(format!(
            "negative downlink power p[{user}] = {:.3e} (SINR targets {:?})",
            p[user], sinr_ul
        )));
    }
    Ok(p.iter().map(|x| x.max(0.0)).collect())
}

/// Beamformer plus its per-user report and the uplink state that produced it.
#[derive(Debug, Clone)]
pub struct DualityOutcome {
    pub beamformer: BeamformerMatrix,
    pub report: SinrReport,
    pub uplink: BalancedUplink,
    pub downlink_powers: Vec<f64>,
}

/// Max-min SINR downlink beamformer through uplink–downlink duality.
///
/// Rates in the report are bandwidth-normalized.
pub fn duality_beamformer(h: &CMatrix, p_bs: f64, sigma2: f64) -> Result<DualityOutcome> {
    duality_beamformer_with(h, p_bs, sigma2, BalanceSettings::default())
}

pub fn duality_beamformer_with(
    h: &CMatrix,
    p_bs: f64,
    sigma2: f64,
    settings: BalanceSettings,
) -> Result<DualityOutcome> {
    let uplink = fixed_point_power_balance(h, p_bs, sigma2, settings)?;
    let p = downlink_power_recovery(h, &uplink.combiner, &uplink.sinr, sigma2)?;
    let total: f64 = p.iter().sum();
    if (total - p_bs).abs() > POWER_CONSERVATION_TOL * p_bs {
        return Err(Error::Duality(format!(
            "recovered downlink power {total:.12e} W differs from budget {p_bs:.12e} W"
        )));
    }
    let mut weights = normalize_columns(&uplink.combiner);
    for (mut c, pk) in weights.column_iter_mut().zip(&p) {
        c *= Complex64::from(pk.sqrt());
    }
    // Remove the residual round-off so the budget holds to machine precision.
    let fro2 = weights.norm_squared();
    if fro2 > 0.0 {
        weights *= Complex64::from((p_bs / fro2).sqrt());
    }
    let y = h * &weights;
    let report = SinrReport::from_signals(&y, sigma2, 1.0);
    for (kk, (dl, ul)) in report.sinr.iter().zip(&uplink.sinr).enumerate() {
        let rel = (dl - ul).abs() / ul.abs().max(f64::MIN_POSITIVE);
        if rel > DUALITY_WARN_TOL {
            warn!("user {kk}: downlink SINR {dl:.9e} vs uplink {ul:.9e} (relative gap {rel:.2e})");
        }
    }
    Ok(DualityOutcome {
        beamformer: BeamformerMatrix {
            weights,
            power_budget: p_bs,
        },
        report,
        uplink,
        downlink_powers: p,
    })
}
