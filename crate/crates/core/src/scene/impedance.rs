//! Induced-EMF mutual impedance of parallel side-by-side half-wave dipoles.
//!
//! Used as a stand-in for a full-wave multiport extraction of the RIS port
//! impedance matrix. The off-diagonal entries follow the classical closed
//! form in terms of the sine and cosine integrals; the diagonal is supplied.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

/// Free-space wave impedance over 4π, rounded the way antenna texts do (30 Ω).
const ETA_OVER_4PI: f64 = 29.979_245_8;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Sine and cosine integrals `(Si(x), Ci(x))` for `x > 0`.
///
/// Power series below `x = 2`, complex continued fraction for `E1(ix)` above.
pub fn sici(x: f64) -> (f64, f64) {
    assert!(x > 0.0, "sici requires x > 0");
    if x < 2.0 {
        let mut si = 0.0;
        let mut ci = 0.0;
        let mut term = 1.0; // x^k / k!
                            // Si = Σ (-1)^n x^{2n+1} / ((2n+1)(2n+1)!)
                            // Ci = γ + ln x + Σ_{n≥1} (-1)^n x^{2n} / (2n (2n)!)
        for k in 1..60usize {
            term *= x / k as f64;
            let contrib = term / k as f64;
            let signed = if (k / 2) % 2 == 0 { contrib } else { -contrib };
            if k % 2 == 1 {
                si += signed;
            } else {
                ci += signed;
            }
            if contrib < 1e-18 {
                break;
            }
        }
        (si, EULER_GAMMA + x.ln() + ci)
    } else {
        // Modified Lentz evaluation of E1(ix) = -Ci(x) + i(Si(x) - π/2).
        let tiny = 1e-300;
        let mut b = Complex64::new(1.0, x);
        let mut c = Complex64::new(1.0 / tiny, 0.0);
        let mut d = Complex64::new(1.0, 0.0) / b;
        let mut h = d;
        for i in 1..1000usize {
            let a = -((i * i) as f64);
            b += 2.0;
            d = Complex64::new(1.0, 0.0) / (d * a + b);
            c = b + Complex64::new(a, 0.0) / c;
            let del = c * d;
            h *= del;
            if (del.re - 1.0).abs() + del.im.abs() < 1e-16 {
                break;
            }
        }
        let h = h * Complex64::from_polar(1.0, -x);
        (PI / 2.0 + h.im, -h.re)
    }
}

/// Mutual impedance (ohms) between two parallel side-by-side half-wave
/// dipoles separated by `distance` meters.
pub fn half_wave_mutual_impedance(distance: f64, frequency: f64) -> Complex64 {
    let lambda = SPEED_OF_LIGHT / frequency;
    let k = 2.0 * PI / lambda;
    let len = lambda / 2.0;
    let u0 = k * distance;
    let r = (distance * distance + len * len).sqrt();
    let u1 = k * (r + len);
    let u2 = k * (r - len);
    let (s0, c0) = sici(u0);
    let (s1, c1) = sici(u1);
    let (s2, c2) = sici(u2);
    let re = ETA_OVER_4PI * (2.0 * c0 - c1 - c2);
    let im = -ETA_OVER_4PI * (2.0 * s0 - s1 - s2);
    Complex64::new(re, im)
}

/// N×N port impedance matrix for `n_ports` dipoles on a line with uniform `spacing`.
pub fn synthesize_mutual_impedance(
    n_ports: usize,
    spacing: f64,
    frequency: f64,
    self_impedance: Complex64,
) -> Result<DMatrix<Complex64>> {
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(Error::InvalidInput(format!(
            "port spacing must be positive, got {spacing}"
        )));
    }
    if !(frequency > 0.0) {
        return Err(Error::InvalidInput(format!(
            "frequency must be positive, got {frequency}"
        )));
    }
    // Entries depend only on |i - j|.
    let coupling: Vec<Complex64> = (0..n_ports)
        .map(|d| {
            if d == 0 {
                self_impedance
            } else {
                half_wave_mutual_impedance(d as f64 * spacing, frequency)
            }
        })
        .collect();
    Ok(DMatrix::from_fn(n_ports, n_ports, |i, j| coupling[i.abs_diff(j)]))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct quadrature of the induced-EMF integral, independent of Si/Ci.
    ///
    /// Z21 = j30 ∫_{-l/2}^{l/2} (e^{-jkR1}/R1 + e^{-jkR2}/R2) sin(k(l/2 - |z|)) dz
    fn mutual_by_quadrature(distance: f64, frequency: f64) -> Complex64 {
        let lambda = SPEED_OF_LIGHT / frequency;
        let k = 2.0 * PI / lambda;
        let h = lambda / 4.0;
        let n = 20_000; // even, composite Simpson
        let step = 2.0 * h / n as f64;
        let f = |z: f64| {
            let r1 = (distance * distance + (z - h).powi(2)).sqrt();
            let r2 = (distance * distance + (z + h).powi(2)).sqrt();
            let e = Complex64::from_polar(1.0 / r1, -k * r1) + Complex64::from_polar(1.0 / r2, -k * r2);
            e * (k * (h - z.abs())).sin()
        };
        let mut acc = f(-h) + f(h);
        for i in 1..n {
            let z = -h + i as f64 * step;
            acc += f(z) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        Complex64::new(0.0, ETA_OVER_4PI) * acc * (step / 3.0)
    }

    #[test]
    fn sici_reference_values() {
        // Abramowitz & Stegun table 5.1.
        let cases = [
            (0.5, 0.493_107_418_043_066_7, -0.177_784_078_806_612_3),
            (1.0, 0.946_083_070_367_183, 0.337_403_922_900_968_1),
            (2.0, 1.605_412_976_802_695, 0.422_980_828_774_865),
            (5.0, 1.549_931_244_944_674, -0.190_029_749_656_643_9),
            (10.0, 1.658_347_594_218_874, -0.045_456_433_004_455_4),
        ];
        for (x, si, ci) in cases {
            let (s, c) = sici(x);
            assert!((s - si).abs() < 1e-13, "Si({x}) = {s}, want {si}");
            assert!((c - ci).abs() < 1e-13, "Ci({x}) = {c}, want {ci}");
        }
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let f = 5.8e9;
        let lambda = SPEED_OF_LIGHT / f;
        for frac in [0.1, 0.25, 0.5, 0.75, 1.0, 2.5] {
            let d = frac * lambda;
            let closed = half_wave_mutual_impedance(d, f);
            let quad = mutual_by_quadrature(d, f);
            assert!(
                (closed - quad).norm() < 1e-6 * (1.0 + quad.norm()),
                "d={frac}λ: {closed} vs {quad}"
            );
        }
    }

    #[test]
    fn half_wavelength_textbook_value() {
        let f = 5.8e9;
        let lambda = SPEED_OF_LIGHT / f;
        let z = mutual_by_quadrature(lambda / 2.0, f);
        assert!((z.re - -12.5).abs() < 0.1, "{z}");
        assert!((z.im - -29.9).abs() < 0.1, "{z}");
        let z = half_wave_mutual_impedance(lambda / 2.0, f);
        assert!((z.re - -12.5).abs() < 0.1 && (z.im - -29.9).abs() < 0.1, "{z}");
    }

    #[test]
    fn single_port_and_decoupling() {
        let zs = Complex64::new(73.1, 42.5);
        let m = synthesize_mutual_impedance(1, 0.025, 5.8e9, zs).unwrap();
        assert_eq!(m.shape(), (1, 1));
        assert_eq!(m[(0, 0)], zs);
        let far = half_wave_mutual_impedance(1e4, 5.8e9);
        assert!(far.norm() < 1e-2, "{far}");
        let farther = half_wave_mutual_impedance(1e6, 5.8e9);
        assert!(farther.norm() < far.norm() * 0.1);
        assert!(synthesize_mutual_impedance(3, 0.0, 5.8e9, zs).is_err());
    }

    #[test]
    fn matrix_is_symmetric_toeplitz() {
        let zs = Complex64::new(73.1, 42.5);
        let m = synthesize_mutual_impedance(20, 0.02584, 5.8e9, zs).unwrap();
        for i in 0..20 {
            assert_eq!(m[(i, i)], zs);
            for j in 0..20 {
                assert_eq!(m[(i, j)], m[(j, i)]);
            }
        }
    }
}
