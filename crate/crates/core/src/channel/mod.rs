//! Channel components, effective-channel assembly and derivatives.

mod components;
mod effective;

pub use components::{relative_asymmetry, ChannelComponents, SYMMETRY_TOLERANCE};
pub use effective::{
    assemble_effective_channel, assemble_for_config, channel_derivative, evaluate_gain_map, fingerprint,
    gain_map_linear, received_signals, EffectiveChannel, GAIN_FLOOR_DB, MAX_CONDITION,
};

/// Random instances shared by unit tests and the integration suites.
#[doc(hidden)]
pub mod test_support {
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::ChannelComponents;
    use crate::scene::synthesize_mutual_impedance;

    /// Unit-variance complex Gaussian-ish entries (sum of uniforms) for the
    /// links; a physical induced-EMF matrix for `Z_ll`.
    pub fn random_components(k: usize, m: usize, n: usize, seed: u64) -> ChannelComponents {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |r: usize, c: usize, scale: f64| {
            DMatrix::from_fn(r, c, |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale
            })
        };
        let h_u = draw(k, m, 0.1);
        let h_0 = draw(n, m, 0.1);
        let g_l = draw(k, n, 3.0);
        let f = 5.8e9;
        let spacing = crate::SPEED_OF_LIGHT / f / 2.0;
        let z_ll = synthesize_mutual_impedance(n, spacing, f, Complex64::new(73.1, 42.5)).expect("valid spacing");
        ChannelComponents::new(h_u, h_0, g_l, z_ll, f).expect("consistent dimensions")
    }
}
