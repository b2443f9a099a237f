//! Frequency-shifted sinc pulse basis and the rotation-angle functionals.
//!
//! A pulse of length τ is expanded over sinc-shaped frequency profiles
//! centred at μ⁽ⁿ⁾ = (n + s)·2π/τ. The fractional shift s (default 1/5,
//! required < 1/4 by the Kadec stability bound) keeps the n = 0 component
//! away from zero frequency so every basis function integrates to zero and
//! off-resonant spins see no net DC kick.
//!
//! Because the frequency response is a sum of shifted sincs, the rotation
//! angle each spin accumulates is a *linear* functional of the coefficients
//! for every fixed noise realization (δ, ε, φ) — frequency error δ only
//! shifts the sinc arguments, amplitude error scales by 1+ε, and phase error
//! rotates weight between the two quadratures. That linearity is what makes
//! the noise-averaged synthesis a plain quadratic solve downstream.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::spin_model::{CzParameters, Register};

/// √(2π)/2, the prefactor turning frequency-domain amplitudes into
/// accumulated rotation angles.
pub const ANGLE_PREFACTOR: f64 = 1.253_314_137_315_500_3;

/// Default fractional frequency shift of the basis centres.
pub const DEFAULT_SHIFT_FRACTION: f64 = 0.2;

/// Kadec stability bound on the fractional shift.
pub const KADEC_BOUND: f64 = 0.25;

/// Unnormalized sinc: sin(x)/x with sinc(0) = 1.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        // two-term series keeps full double precision through the removable
        // singularity (x² < 1e-16 ⇒ truncation below 1e-32)
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// The shifted-sinc basis family for one gate time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SincBasis {
    /// gate time τ, seconds
    pub tau: f64,
    /// fractional shift s of the centre frequencies, 0 ≤ s < 1/4
    pub shift_fraction: f64,
    /// largest basis index (basis count M = max_index + 1)
    pub max_index: usize,
}

impl SincBasis {
    pub fn new(tau: f64, shift_fraction: f64, max_index: usize) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::config("basis: tau must be positive"));
        }
        if !(0.0..KADEC_BOUND).contains(&shift_fraction) {
            return Err(Error::config(format!(
                "basis: shift_fraction {shift_fraction} outside [0, {KADEC_BOUND}) (Kadec bound)"
            )));
        }
        Ok(SincBasis {
            tau,
            shift_fraction,
            max_index,
        })
    }

    /// Default-shift basis with M components.
    pub fn with_default_shift(tau: f64, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::config("basis: need at least one component"));
        }
        Self::new(tau, DEFAULT_SHIFT_FRACTION, m - 1)
    }

    pub fn component_count(&self) -> usize {
        self.max_index + 1
    }

    /// Centre frequency μ⁽ⁿ⁾ = (n + shift)·2π/τ.
    pub fn basis_shift(&self, n: usize) -> f64 {
        (n as f64 + self.shift_fraction) * TAU / self.tau
    }

    /// Frequency response of unit component n at ω:
    /// τ[sinc(τ(ω−μ)/2) + sinc(τ(ω+μ)/2)]. Even in ω.
    pub fn frequency_response(&self, n: usize, omega: f64) -> f64 {
        let mu = self.basis_shift(n);
        self.tau * (sinc(self.tau * (omega - mu) / 2.0) + sinc(self.tau * (omega + mu) / 2.0))
    }
}

/// Which quadrature of the carrier the envelope multiplies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadratureKind {
    /// a(t)·cos(ωt): drives X rotations
    Cosine,
    /// b(t)·sin(ωt): drives Y rotations
    Sine,
}

/// A concrete pulse: basis, quadrature, carrier, and one coefficient per
/// basis component. Coefficients are effective frequency-domain amplitudes
/// in rad/s (the per-basis step-1 amplitudes are already folded in).
#[derive(Debug, Clone, PartialEq)]
pub struct PulseWaveform {
    pub basis: SincBasis,
    pub quadrature: QuadratureKind,
    /// carrier frequency ω, rad/s (the targeted transition, or λ for the
    /// two-qubit gate)
    pub carrier: f64,
    pub coefficients: Vec<f64>,
}

/// Serialized form: {tau_s, shift_fraction, quadrature, carrier_rad_s,
/// coefficients[]}.
#[derive(Debug, Serialize, Deserialize)]
struct WaveformJson {
    tau_s: f64,
    shift_fraction: f64,
    quadrature: QuadratureKind,
    carrier_rad_s: f64,
    coefficients: Vec<f64>,
}

impl Serialize for PulseWaveform {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        WaveformJson {
            tau_s: self.basis.tau,
            shift_fraction: self.basis.shift_fraction,
            quadrature: self.quadrature,
            carrier_rad_s: self.carrier,
            coefficients: self.coefficients.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PulseWaveform {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = WaveformJson::deserialize(d)?;
        if raw.coefficients.is_empty() {
            return Err(serde::de::Error::custom("waveform needs coefficients"));
        }
        let basis = SincBasis::new(raw.tau_s, raw.shift_fraction, raw.coefficients.len() - 1)
            .map_err(serde::de::Error::custom)?;
        Ok(PulseWaveform {
            basis,
            quadrature: raw.quadrature,
            carrier: raw.carrier_rad_s,
            coefficients: raw.coefficients,
        })
    }
}

impl PulseWaveform {
    pub fn new(
        basis: SincBasis,
        quadrature: QuadratureKind,
        carrier: f64,
        coefficients: Vec<f64>,
    ) -> Result<Self> {
        if coefficients.len() != basis.component_count() {
            return Err(Error::config(format!(
                "waveform: {} coefficients for a basis of {} components",
                coefficients.len(),
                basis.component_count()
            )));
        }
        Ok(PulseWaveform {
            basis,
            quadrature,
            carrier,
            coefficients,
        })
    }

    /// Frequency-domain envelope Σ c_n·τ[sinc(τ(ω−μ⁽ⁿ⁾)/2)+sinc(τ(ω+μ⁽ⁿ⁾)/2)].
    pub fn eval_frequency(&self, omega: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(n, c)| c * self.basis.frequency_response(n, omega))
            .sum()
    }

    /// Time-domain envelope Σ 2√(2π)·c_n·cos(μ⁽ⁿ⁾t) on [−τ/2, τ/2], zero
    /// outside the pulse support.
    pub fn eval_time(&self, t: f64) -> f64 {
        if t.abs() > self.basis.tau / 2.0 {
            return 0.0;
        }
        let amp = 2.0 * f64::sqrt(TAU);
        self.coefficients
            .iter()
            .enumerate()
            .map(|(n, c)| amp * c * (self.basis.basis_shift(n) * t).cos())
            .sum()
    }

    /// Peak |envelope| over the pulse support, sampled on a dense grid with
    /// local parabolic refinement — used against the hardware amplitude cap.
    pub fn max_time_amplitude(&self) -> f64 {
        let samples = 4001usize;
        let tau = self.basis.tau;
        let mut best = 0.0f64;
        let mut best_t = -tau / 2.0;
        for k in 0..samples {
            let t = -tau / 2.0 + tau * k as f64 / (samples - 1) as f64;
            let v = self.eval_time(t).abs();
            if v > best {
                best = v;
                best_t = t;
            }
        }
        // golden polish around the best sample
        let dt = tau / (samples - 1) as f64;
        let (_, neg_peak) = crate::minimize::brent_min(
            |t| -self.eval_time(t).abs(),
            (best_t - dt).max(-tau / 2.0),
            (best_t + dt).min(tau / 2.0),
            tau * 1e-12,
            100,
        );
        best.max(-neg_peak)
    }
}

/// One realization of the control-error triple.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseRealization {
    /// carrier frequency error δ, rad/s
    pub delta: f64,
    /// fractional amplitude error ε
    pub epsilon: f64,
    /// carrier phase error φ, rad
    pub phi: f64,
}

impl NoiseRealization {
    pub const NOISELESS: NoiseRealization = NoiseRealization {
        delta: 0.0,
        epsilon: 0.0,
        phi: 0.0,
    };
}

/// X and Y rotation angles accumulated by one spin over the pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationAngles {
    pub x: f64,
    pub y: f64,
}

/// Per-unit-coefficient response rows of component `n` of `basis` on a spin
/// at ω, driven at effective carrier W: (main, leak).
///
/// Cosine drive: main = dX/dc_n = −(√(2π)/2)[A(ω+W) + A(ω−W)],
///               leak = dY/dc_n = +(√(2π)/2)[A(ω−W) − A(ω+W)] (enters × sin φ).
/// Sine drive:   main = dY/dc_n = +(√(2π)/2)[B(ω+W) − B(ω−W)],
///               leak = dX/dc_n = −(√(2π)/2)[B(ω+W) + B(ω−W)] (enters × sin φ).
pub fn functional_rows(
    basis: &SincBasis,
    quadrature: QuadratureKind,
    n: usize,
    omega: f64,
    effective_carrier: f64,
) -> (f64, f64) {
    let plus = basis.frequency_response(n, omega + effective_carrier);
    let minus = basis.frequency_response(n, omega - effective_carrier);
    match quadrature {
        QuadratureKind::Cosine => (
            -ANGLE_PREFACTOR * (plus + minus),
            ANGLE_PREFACTOR * (minus - plus),
        ),
        QuadratureKind::Sine => (
            ANGLE_PREFACTOR * (plus - minus),
            -ANGLE_PREFACTOR * (plus + minus),
        ),
    }
}

/// Rotation angles (X_i, Y_i) for every nucleus of the register under the
/// given waveform and noise realization. The carrier must target qubit j
/// (ω = ω_j); δ shifts the carrier, ε scales the field, and φ mixes the
/// main quadrature into the orthogonal one.
pub fn rotation_functionals(
    register: &Register,
    waveform: &PulseWaveform,
    target_j: usize,
    noise: &NoiseRealization,
) -> Result<Vec<RotationAngles>> {
    if target_j >= register.len() {
        return Err(Error::config(format!(
            "target qubit {target_j} out of range for register of {}",
            register.len()
        )));
    }
    let w_eff = waveform.carrier + noise.delta;
    let gain = 1.0 + noise.epsilon;
    let (cphi, sphi) = (noise.phi.cos(), noise.phi.sin());
    Ok(register
        .transition_frequencies()
        .iter()
        .map(|&omega_i| {
            let mut main = 0.0;
            let mut leak = 0.0;
            for (n, c) in waveform.coefficients.iter().enumerate() {
                let (m, l) = functional_rows(&waveform.basis, waveform.quadrature, n, omega_i, w_eff);
                main += c * m;
                leak += c * l;
            }
            let main_angle = gain * cphi * main;
            let leak_angle = gain * sphi * leak;
            match waveform.quadrature {
                QuadratureKind::Cosine => RotationAngles {
                    x: main_angle,
                    y: leak_angle,
                },
                QuadratureKind::Sine => RotationAngles {
                    x: leak_angle,
                    y: main_angle,
                },
            }
        })
        .collect())
}

/// Conditional rotation angles (X₁…X₄) of the electron drive for nuclear
/// configurations 11, 10, 01, 00. The carrier must be λ; frequency error δ
/// shifts λ (electron-transition fluctuation). φ is accepted for
/// diagnostics (cos φ projection) but is excluded from noise averages by
/// the synthesis layer.
pub fn cz_functionals(
    params: &CzParameters,
    waveform: &PulseWaveform,
    noise: &NoiseRealization,
) -> Result<[f64; 4]> {
    if params.conditional.len() != 4 {
        return Err(Error::config(
            "two-qubit functionals need a 2-nucleus register",
        ));
    }
    let lambda_eff = waveform.carrier + noise.delta;
    let gain = (1.0 + noise.epsilon) * noise.phi.cos();
    let mut out = [0.0; 4];
    for (k, &omega_s) in params.conditional.iter().enumerate() {
        let mut acc = 0.0;
        for (n, c) in waveform.coefficients.iter().enumerate() {
            let plus = waveform.basis.frequency_response(n, omega_s + lambda_eff);
            let minus = waveform.basis.frequency_response(n, omega_s - lambda_eff);
            acc += c * (plus + minus);
        }
        out[k] = gain * ANGLE_PREFACTOR * acc;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_model::Register;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn basis_1us(m: usize) -> SincBasis {
        SincBasis::with_default_shift(1e-6, m).unwrap()
    }

    #[test]
    fn angle_prefactor_is_half_sqrt_tau() {
        assert_relative_eq!(ANGLE_PREFACTOR, f64::sqrt(TAU) / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn basis_shift_values() {
        let b = basis_1us(3);
        assert_relative_eq!(b.basis_shift(0), 0.2 * TAU * 1e6, max_relative = 1e-14);
        assert_relative_eq!(b.basis_shift(1), 1.2 * TAU * 1e6, max_relative = 1e-14);
        let plain = SincBasis::new(1e-6, 0.0, 5).unwrap();
        assert_relative_eq!(plain.basis_shift(3), 3.0 * TAU * 1e6, max_relative = 1e-14);
    }

    #[test]
    fn kadec_bound_enforced() {
        assert!(SincBasis::new(1e-6, 0.25, 2).is_err());
        assert!(SincBasis::new(1e-6, -0.01, 2).is_err());
        assert!(SincBasis::new(1e-6, 0.2499, 2).is_ok());
    }

    #[test]
    fn frequency_response_at_centre() {
        // ω = μ⁽ⁿ⁾ → τ[1 + sinc(τμ)]
        let b = basis_1us(2);
        let mu = b.basis_shift(1);
        let expect = b.tau * (1.0 + sinc(b.tau * mu));
        assert_relative_eq!(b.frequency_response(1, mu), expect, max_relative = 1e-12);
    }

    #[test]
    fn unshifted_basis_vanishes_at_dc() {
        let b = SincBasis::new(1e-6, 0.0, 4).unwrap();
        for n in 1..5 {
            // sinc(±τμ/2) with μ = n·2π/τ → sinc(nπ) = 0
            assert_abs_diff_eq!(b.frequency_response(n, 0.0), 0.0, epsilon = 1e-18);
        }
    }

    #[test]
    fn frequency_envelope_is_even() {
        let wf = PulseWaveform::new(
            basis_1us(4),
            QuadratureKind::Cosine,
            TAU * 7.0501e6,
            vec![1.3e6, -0.7e6, 2.2e6, 0.4e6],
        )
        .unwrap();
        for k in 0..40 {
            let w = -TAU * 12e6 + k as f64 * TAU * 0.61e6;
            assert_relative_eq!(
                wf.eval_frequency(w),
                wf.eval_frequency(-w),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn time_envelope_support_and_dc_value() {
        let wf = PulseWaveform::new(
            basis_1us(3),
            QuadratureKind::Cosine,
            0.0,
            vec![1.0e6, -2.0e6, 0.5e6],
        )
        .unwrap();
        let sum: f64 = wf.coefficients.iter().sum();
        assert_relative_eq!(wf.eval_time(0.0), 2.0 * f64::sqrt(TAU) * sum, max_relative = 1e-14);
        assert_eq!(wf.eval_time(0.51e-6), 0.0);
        assert_eq!(wf.eval_time(-0.51e-6), 0.0);
    }

    #[test]
    fn time_and_frequency_domains_are_fourier_pair() {
        // ∫a(t)cos(ωt)dt over the support must equal √(2π)·a(ω): each
        // cosine integrates to (τ/2)[sinc(τ(ω−μ)/2)+sinc(τ(ω+μ)/2)], half
        // the per-component frequency response, and the 2√(2π) time-domain
        // amplitude supplies the rest. Midpoint quadrature on a fine grid.
        let wf = PulseWaveform::new(
            basis_1us(2),
            QuadratureKind::Cosine,
            0.0,
            vec![1.1e6, -0.6e6],
        )
        .unwrap();
        let tau = wf.basis.tau;
        let steps = 20_000usize;
        let dt = tau / steps as f64;
        for &omega in &[0.0, TAU * 0.5e6, TAU * 3.3e6, TAU * 7.05e6] {
            let mut integral = 0.0;
            for k in 0..steps {
                let t = -tau / 2.0 + (k as f64 + 0.5) * dt;
                integral += wf.eval_time(t) * (omega * t).cos() * dt;
            }
            assert_relative_eq!(
                integral,
                f64::sqrt(TAU) * wf.eval_frequency(omega),
                max_relative = 1e-6
            );
        }
    }

    #[test]
    fn noiseless_functionals_reduce_to_closed_form() {
        let reg = Register::default_nv();
        let wc = reg.transition_frequency(1).unwrap();
        let wf = PulseWaveform::new(
            basis_1us(3),
            QuadratureKind::Cosine,
            wc,
            vec![-1.3e6, 0.8e6, 0.2e6],
        )
        .unwrap();
        let angles = rotation_functionals(&reg, &wf, 1, &NoiseRealization::NOISELESS).unwrap();
        for (i, a) in angles.iter().enumerate() {
            let wi = reg.transition_frequency(i).unwrap();
            let expect = -ANGLE_PREFACTOR * (wf.eval_frequency(wi + wc) + wf.eval_frequency(wi - wc));
            assert_relative_eq!(a.x, expect, max_relative = 1e-13);
            assert_abs_diff_eq!(a.y, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn amplitude_noise_scales_linearly() {
        let reg = Register::default_nv();
        let wc = reg.transition_frequency(1).unwrap();
        let wf = PulseWaveform::new(
            basis_1us(2),
            QuadratureKind::Cosine,
            wc,
            vec![-1.2e6, 0.79e6],
        )
        .unwrap();
        let noiseless = rotation_functionals(&reg, &wf, 1, &NoiseRealization::NOISELESS).unwrap();
        let noisy = rotation_functionals(
            &reg,
            &wf,
            1,
            &NoiseRealization {
                delta: 0.0,
                epsilon: 0.01,
                phi: 0.0,
            },
        )
        .unwrap();
        for (a, b) in noiseless.iter().zip(noisy.iter()) {
            assert_relative_eq!(b.x, 1.01 * a.x, max_relative = 1e-13);
        }
    }

    #[test]
    fn phase_noise_moves_weight_to_orthogonal_quadrature() {
        let reg = Register::default_nv();
        let wc = reg.transition_frequency(1).unwrap();
        let wf = PulseWaveform::new(
            basis_1us(2),
            QuadratureKind::Cosine,
            wc,
            vec![-1.2e6, 0.79e6],
        )
        .unwrap();
        let phi = 0.37;
        let angles = rotation_functionals(
            &reg,
            &wf,
            1,
            &NoiseRealization {
                delta: 0.0,
                epsilon: 0.0,
                phi,
            },
        )
        .unwrap();
        let clean = rotation_functionals(&reg, &wf, 1, &NoiseRealization::NOISELESS).unwrap();
        for (a, c) in angles.iter().zip(clean.iter()) {
            assert_relative_eq!(a.x, c.x * phi.cos(), max_relative = 1e-13);
            // leak magnitude bounded by the mirrored response but nonzero here
            assert!(a.y != 0.0);
        }
    }

    #[test]
    fn functionals_are_linear_in_coefficients() {
        let reg = Register::default_nv();
        let wc = reg.transition_frequency(1).unwrap();
        let noise = NoiseRealization {
            delta: TAU * 800.0,
            epsilon: 4e-3,
            phi: 2e-4,
        };
        let mk = |c: Vec<f64>| {
            PulseWaveform::new(basis_1us(3), QuadratureKind::Cosine, wc, c).unwrap()
        };
        let a = rotation_functionals(&reg, &mk(vec![1.0e6, 0.0, 0.0]), 1, &noise).unwrap();
        let b = rotation_functionals(&reg, &mk(vec![0.0, -2.0e6, 0.5e6]), 1, &noise).unwrap();
        let ab = rotation_functionals(&reg, &mk(vec![1.0e6, -2.0e6, 0.5e6]), 1, &noise).unwrap();
        for i in 0..2 {
            assert_relative_eq!(ab[i].x, a[i].x + b[i].x, max_relative = 1e-12);
            assert_relative_eq!(ab[i].y, a[i].y + b[i].y, max_relative = 1e-12);
        }
    }

    #[test]
    fn cz_functionals_zero_for_zero_coefficients() {
        let reg = Register::default_nv();
        let p = reg.cz_parameters().unwrap();
        let wf = PulseWaveform::new(
            SincBasis::with_default_shift(1e-6, 4).unwrap(),
            QuadratureKind::Cosine,
            p.lambda,
            vec![0.0; 4],
        )
        .unwrap();
        let x = cz_functionals(&p, &wf, &NoiseRealization::NOISELESS).unwrap();
        assert_eq!(x, [0.0; 4]);
    }

    #[test]
    fn waveform_json_roundtrip() {
        let wf = PulseWaveform::new(
            basis_1us(2),
            QuadratureKind::Sine,
            TAU * 7.0501e6,
            vec![-0.671e6, 3.488e6],
        )
        .unwrap();
        let text = serde_json::to_string(&wf).unwrap();
        assert!(text.contains("\"tau_s\""));
        assert!(text.contains("\"sine\""));
        let back: PulseWaveform = serde_json::from_str(&text).unwrap();
        assert_eq!(back, wf);
    }
}
