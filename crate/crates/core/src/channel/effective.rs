//! Effective channel `H̃ = H_u + G_l (diag(Z_L) − Z_ll)⁻¹ H_0` and its
//! derivative with respect to a single load capacitance.

use std::hash::{DefaultHasher, Hash, Hasher};

use nalgebra::{Dyn, LU};
use num_complex::Complex64;

use super::ChannelComponents;
use crate::error::{Error, Result};
use crate::ris::{load_impedances, RisConfiguration, VaractorModel};
use crate::CMatrix;

/// Largest 1-norm condition number accepted for the port impedance system.
pub const MAX_CONDITION: f64 = 1e12;

/// Floor applied to gain maps in dB.
pub const GAIN_FLOOR_DB: f64 = -300.0;

/// Assembled channel for one load configuration.
///
/// Keeps the LU factorization of `Z = diag(Z_L) − Z_ll` together with the
/// two solved products `Z⁻¹ H_0` and `G_l Z⁻¹`, so derivatives with respect
/// to any capacitance are rank-one updates.
#[derive(Debug, Clone)]
pub struct EffectiveChannel {
    pub matrix: CMatrix,
    lu: LU<Complex64, Dyn, Dyn>,
    /// `Z⁻¹ H_0`, N×M.
    solved_h0: CMatrix,
    /// `G_l Z⁻¹`, K×N.
    left_factor: CMatrix,
    pub condition: f64,
    pub fingerprint: u64,
}

/// Order-sensitive hash of the exact bit patterns of the load impedances.
pub fn fingerprint(z_loads: &[Complex64]) -> u64 {
    let mut h = DefaultHasher::new();
    z_loads.len().hash(&mut h);
    for z in z_loads {
        z.re.to_bits().hash(&mut h);
        z.im.to_bits().hash(&mut h);
    }
    h.finish()
}

fn one_norm(a: &CMatrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Assembles the effective channel for load impedances `z_loads`.
pub fn assemble_effective_channel(c: &ChannelComponents, z_loads: &[Complex64]) -> Result<EffectiveChannel> {
    let n = c.n_elements();
    if z_loads.len() != n {
        return Err(Error::dim("z_loads", n, z_loads.len()));
    }
    let fp = fingerprint(z_loads);
    let mut z = -c.z_ll.clone();
    for (i, zl) in z_loads.iter().enumerate() {
        z[(i, i)] += zl;
    }
    let singular = |reason: String| Error::Singular {
        fingerprint: fp,
        reason,
    };
    let z_norm = one_norm(&z);
    let lu = z.clone().lu();
    let condition = if n == 0 {
        1.0
    } else {
        let inv = lu
            .try_inverse()
            .ok_or_else(|| singular("exactly singular impedance matrix".into()))?;
        z_norm * one_norm(&inv)
    };
    if !(condition <= MAX_CONDITION) {
        return Err(singular(format!(
            "condition number {condition:.3e} exceeds {MAX_CONDITION:.0e}"
        )));
    }
    let solved_h0 = if n == 0 {
        c.h_0.clone()
    } else {
        lu.solve(&c.h_0).ok_or_else(|| singular("LU solve failed".into()))?
    };
    let left_factor = solve_transposed(&lu, &c.g_l.transpose())
        .ok_or_else(|| singular("transposed LU solve failed".into()))?
        .transpose();
    let matrix = &c.h_u + &c.g_l * &solved_h0;
    Ok(EffectiveChannel {
        matrix,
        lu,
        solved_h0,
        left_factor,
        condition,
        fingerprint: fp,
    })
}

/// Solves `Zᵀ X = B` with the factorization `P Z = L U`, i.e. `Uᵀ Lᵀ P X = B`.
fn solve_transposed(lu: &LU<Complex64, Dyn, Dyn>, b: &CMatrix) -> Option<CMatrix> {
    if b.nrows() == 0 {
        return Some(b.clone());
    }
    let u = lu.u();
    let l = lu.l();
    let s = u.transpose().solve_lower_triangular(b)?;
    let mut x = l.transpose().solve_upper_triangular(&s)?;
    lu.p().inv_permute_rows(&mut x);
    Some(x)
}

/// Convenience: load impedances from a configuration, then assemble.
pub fn assemble_for_config(
    c: &ChannelComponents,
    model: &VaractorModel,
    config: &RisConfiguration,
) -> Result<EffectiveChannel> {
    let z = load_impedances(model, config, c.frequency)?;
    assemble_effective_channel(c, &z)
}

impl EffectiveChannel {
    pub fn n_users(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_antennas(&self) -> usize {
        self.matrix.ncols()
    }

    /// `Z⁻¹ H_0` (N×M).
    pub fn solved_h0(&self) -> &CMatrix {
        &self.solved_h0
    }

    /// `G_l Z⁻¹` (K×N).
    pub fn left_factor(&self) -> &CMatrix {
        &self.left_factor
    }

    /// Applies `Z⁻¹` to `rhs` with the cached factorization.
    pub fn apply_inverse(&self, rhs: &CMatrix) -> Option<CMatrix> {
        self.lu.solve(rhs)
    }

    /// `∂H̃/∂Z_{L,n}` as a K×M matrix: `−(G Z⁻¹ e_n)(e_nᵀ Z⁻¹ H_0)`.
    pub fn impedance_derivative(&self, n: usize) -> CMatrix {
        -(self.left_factor.column(n) * self.solved_h0.row(n))
    }

    /// `∂H̃/∂C_n` for element `n` currently at capacitance `capacitance`.
    pub fn capacitance_derivative(&self, model: &VaractorModel, n: usize, capacitance: f64, frequency: f64) -> CMatrix {
        self.impedance_derivative(n) * model.load_impedance_derivative(capacitance, frequency)
    }

    /// Derivative with respect to a shared capacitance driving all `members`.
    pub fn group_derivative(
        &self,
        model: &VaractorModel,
        members: &[usize],
        capacitance: f64,
        frequency: f64,
    ) -> CMatrix {
        let dz = model.load_impedance_derivative(capacitance, frequency);
        let mut acc = CMatrix::zeros(self.n_users(), self.n_antennas());
        for &n in members {
            acc -= self.left_factor.column(n) * self.solved_h0.row(n);
        }
        acc * dz
    }
}

/// `Y = H̃ W`; `Y[k, j]` is user k's response to the beam intended for user j.
pub fn received_signals(h: &EffectiveChannel, w: &CMatrix) -> Result<CMatrix> {
    if w.nrows() != h.n_antennas() {
        return Err(Error::dim("beamformer rows", h.n_antennas(), w.nrows()));
    }
    Ok(&h.matrix * w)
}

/// `∂H̃/∂C_n` for element `n` of `config`.
pub fn channel_derivative(
    c: &ChannelComponents,
    model: &VaractorModel,
    config: &RisConfiguration,
    n: usize,
) -> Result<CMatrix> {
    if n >= c.n_elements() {
        return Err(Error::InvalidInput(format!(
            "element {n} out of range 0..{}",
            c.n_elements()
        )));
    }
    let h = assemble_for_config(c, model, config)?;
    Ok(h.capacitance_derivative(model, n, config.capacitances[n], c.frequency))
}

/// Per-point power gain `|H̃_g w_k|²` (linear).
pub fn gain_map_linear(grid: &EffectiveChannel, w: &CMatrix, k: usize) -> Result<Vec<f64>> {
    if k >= w.ncols() {
        return Err(Error::InvalidInput(format!(
            "beam index {k} out of range 0..{}",
            w.ncols()
        )));
    }
    if w.nrows() != grid.n_antennas() {
        return Err(Error::dim("beamformer rows", grid.n_antennas(), w.nrows()));
    }
    let beam = w.column(k);
    Ok((0..grid.n_users())
        .map(|g| (grid.matrix.row(g) * beam)[(0, 0)].norm_sqr())
        .collect())
}

/// Gain map in dB relative to the transmit budget `power_budget`, floored at [`GAIN_FLOOR_DB`].
pub fn evaluate_gain_map(grid: &EffectiveChannel, w: &CMatrix, k: usize, power_budget: f64) -> Result<Vec<f64>> {
    let lin = gain_map_linear(grid, w, k)?;
    Ok(lin
        .into_iter()
        .map(|g| {
            let ratio = if power_budget > 0.0 { g / power_budget } else { 0.0 };
            if ratio > 0.0 {
                (10.0 * ratio.log10()).max(GAIN_FLOOR_DB)
            } else {
                GAIN_FLOOR_DB
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;

    use super::*;
    use crate::channel::test_support::random_components;
    use crate::ris::{ControlMode, Grouping, RisConfiguration};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn scalar_hand_arithmetic() {
        let one = |v: f64| DMatrix::from_element(1, 1, c(v, 0.0));
        let comps = ChannelComponents::new(one(1.0), one(3.0), one(2.0), one(1.0), 1e9).unwrap();
        let h = assemble_effective_channel(&comps, &[c(5.0, 0.0)]).unwrap();
        assert!((h.matrix[(0, 0)] - c(2.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_coupling_is_baseline() {
        let mut comps = random_components(3, 3, 20, 1);
        comps.g_l.fill(c(0.0, 0.0));
        let model = VaractorModel::default();
        let cfg = RisConfiguration::from_groups(
            ControlMode::ContinuousPerElement,
            Grouping::singletons(20),
            &[0.5e-12; 20],
        )
        .unwrap();
        let h = assemble_for_config(&comps, &model, &cfg).unwrap();
        assert_eq!(h.matrix, comps.h_u);
        let d = channel_derivative(&comps, &model, &cfg, 3).unwrap();
        assert!(d.iter().all(|z| *z == c(0.0, 0.0)));
    }

    #[test]
    fn transposed_solve_matches_dense_inverse() {
        let comps = random_components(3, 4, 12, 7);
        let z: Vec<Complex64> = (0..12).map(|i| c(2.0, -40.0 - i as f64)).collect();
        let h = assemble_effective_channel(&comps, &z).unwrap();
        let mut zm = -comps.z_ll.clone();
        for i in 0..12 {
            zm[(i, i)] += z[i];
        }
        let inv = zm.clone().try_inverse().unwrap();
        let expected = &comps.g_l * &inv;
        assert!((&h.left_factor - &expected).norm() <= 1e-10 * expected.norm());
        // residual invariant on the cached factorization
        let x = h.apply_inverse(&CMatrix::identity(12, 12)).unwrap();
        let resid = (&zm * &x - CMatrix::identity(12, 12)).norm();
        assert!(resid <= 1e-9 * 12.0);
    }

    #[test]
    fn singular_system_reported() {
        let one = |v: f64| DMatrix::from_element(1, 1, c(v, 0.0));
        let comps = ChannelComponents::new(one(1.0), one(3.0), one(2.0), one(1.0), 1e9).unwrap();
        let err = assemble_effective_channel(&comps, &[c(1.0, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::Singular { .. }), "{err}");
        // nearly rank-deficient 2x2: condition ~1e14
        let z = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        let comps = ChannelComponents::new(
            DMatrix::from_element(1, 1, c(0.0, 0.0)),
            DMatrix::from_element(2, 1, c(1.0, 0.0)),
            DMatrix::from_element(1, 2, c(1.0, 0.0)),
            z,
            1e9,
        )
        .unwrap();
        let err = assemble_effective_channel(&comps, &[c(2.0, 0.0), c(2.0 + 1e-14, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::Singular { .. }), "{err}");
        assert!(assemble_effective_channel(&comps, &[c(3.0, 0.0), c(2.0, 0.0)]).is_ok());
    }

    #[test]
    fn received_signals_identity_and_loop() {
        let comps = random_components(3, 3, 5, 3);
        let z: Vec<Complex64> = (0..5).map(|i| c(2.0, -30.0 - 3.0 * i as f64)).collect();
        let h = assemble_effective_channel(&comps, &z).unwrap();
        let w = random_components(3, 3, 1, 9).h_u;
        let y = received_signals(&h, &w).unwrap();
        for k in 0..3 {
            for j in 0..3 {
                let mut acc = c(0.0, 0.0);
                for m in 0..3 {
                    acc += h.matrix[(k, m)] * w[(m, j)];
                }
                assert!((y[(k, j)] - acc).norm() <= 1e-14 * (1.0 + acc.norm()));
            }
        }
        assert!(received_signals(&h, &CMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn gain_map_edge_cases() {
        let comps = random_components(4, 2, 3, 5);
        let h = assemble_effective_channel(&comps, &[c(2.0, -40.0); 3]).unwrap();
        let zero = CMatrix::zeros(2, 2);
        assert!(gain_map_linear(&h, &zero, 1).unwrap().iter().all(|g| *g == 0.0));
        assert!(evaluate_gain_map(&h, &zero, 0, 1.0)
            .unwrap()
            .iter()
            .all(|g| *g == GAIN_FLOOR_DB));
        assert!(evaluate_gain_map(&h, &zero, 2, 1.0).is_err());
    }
}
