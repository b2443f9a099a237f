//! Qubit register: physical constants, hyperfine tensors, transition
//! frequencies, and the rotating-frame control Hamiltonians.
//!
//! Everything internal is in angular units — rad/s and rad/s/T. External
//! JSON configs carry MHz and MHz/T and are converted on load, so there is
//! exactly one place where a 2π can go wrong.
//!
//! Computational subspace: the electron m_s = −1 manifold. Nuclear qubit
//! basis |0⟩, |1⟩ with |1⟩ the m_I = +1/2 level, so the two-qubit state
//! |11⟩ pairs with the conditional electron frequency Δ + β₁ + β₂. The
//! leftmost tensor factor is qubit 0.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::path::Path;

use crate::error::{Error, Result};

/// Electron gyromagnetic ratio, rad s⁻¹ T⁻¹ (28 024.951 MHz/T).
pub const GAMMA_E: f64 = TAU * 28_024.951_424_2e6;
/// NV ground-state zero-field splitting, rad s⁻¹ (2.87 GHz).
pub const D_ZFS: f64 = TAU * 2.87e9;
/// ¹³C gyromagnetic ratio, rad s⁻¹ T⁻¹ (10.705 MHz/T).
pub const GAMMA_C13: f64 = TAU * 10.705e6;
/// ¹⁵N gyromagnetic ratio, rad s⁻¹ T⁻¹ — negative (−4.316 MHz/T).
pub const GAMMA_N15: f64 = -TAU * 4.316e6;

/// Fixed device-level constants in angular units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// electron gyromagnetic ratio, rad s⁻¹ T⁻¹
    pub gamma_e: f64,
    /// zero-field splitting D, rad s⁻¹
    pub d_zfs: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            gamma_e: GAMMA_E,
            d_zfs: D_ZFS,
        }
    }
}

/// One nuclear spin: label, gyromagnetic ratio, full 3×3 hyperfine tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NucleusSpec {
    pub label: String,
    /// rad s⁻¹ T⁻¹, signed (negative for ¹⁵N)
    pub gamma: f64,
    /// hyperfine tensor A, rad s⁻¹; row/column order x, y, z
    pub hyperfine: [[f64; 3]; 3],
    /// true when the off-diagonal z-column entries are small against the
    /// secular term A_zz + γB₀ (see [`NucleusSpec::check_aligned`])
    pub aligned: bool,
}

impl NucleusSpec {
    pub fn new(label: impl Into<String>, gamma: f64, hyperfine: [[f64; 3]; 3], b0: f64) -> Self {
        let mut spec = NucleusSpec {
            label: label.into(),
            gamma,
            hyperfine,
            aligned: false,
        };
        spec.aligned = spec.check_aligned(b0, 0.1);
        spec
    }

    /// Secular (z-diagonal) part A_zz + γB₀ of the transition frequency.
    pub fn secular_frequency(&self, b0: f64) -> f64 {
        self.hyperfine[2][2] + self.gamma * b0
    }

    /// Full transition frequency ω = √((A_zz+γB₀)² + A_xz² + A_yz²).
    pub fn transition_frequency(&self, b0: f64) -> f64 {
        let sec = self.secular_frequency(b0);
        let axz = self.hyperfine[0][2];
        let ayz = self.hyperfine[1][2];
        (sec * sec + axz * axz + ayz * ayz).sqrt()
    }

    /// |A_xz|, |A_yz| ≤ ratio·|A_zz + γB₀| — "hyperfine fields nearly
    /// aligned with the NV axis".
    pub fn check_aligned(&self, b0: f64, ratio: f64) -> bool {
        let sec = self.secular_frequency(b0).abs();
        self.hyperfine[0][2].abs() <= ratio * sec && self.hyperfine[1][2].abs() <= ratio * sec
    }
}

/// Parameters of the electron-mediated two-qubit (CZ) model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CzParameters {
    /// electron drive detuning Δ = D − γ_e B₀, rad s⁻¹ (negative above the
    /// level crossing)
    pub delta: f64,
    /// effective Rabi coupling Ω = √2 γ_e, rad s⁻¹ T⁻¹
    pub omega_rabi: f64,
    /// α_i = −γ_i B₀/2 − ω_i/2 per nucleus
    pub alpha: Vec<f64>,
    /// β_i = −γ_i B₀/2 + ω_i/2 per nucleus
    pub beta: Vec<f64>,
    /// selective-drive carrier λ = Δ + β₁ + β₂ (the |11⟩ frequency)
    pub lambda: f64,
    /// conditional electron frequencies for nuclear states 11, 10, 01, 00
    pub conditional: Vec<f64>,
}

impl CzParameters {
    /// Nuclear configurations in the order of `conditional`: 11, 10, 01, 00.
    pub fn configurations(n: usize) -> Vec<Vec<u8>> {
        let count = 1usize << n;
        (0..count)
            .map(|k| {
                let flipped = count - 1 - k; // descending: 11, 10, 01, 00
                (0..n).map(|q| ((flipped >> (n - 1 - q)) & 1) as u8).collect()
            })
            .collect()
    }
}

/// The qubit register: static field, constants, ordered nuclei.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Register {
    /// static field B₀ along the NV axis, tesla
    pub b0: f64,
    pub constants: PhysicalConstants,
    /// list order defines qubit indices (leftmost tensor factor first)
    pub nuclei: Vec<NucleusSpec>,
}

/// On-disk register config. All frequencies in MHz (per tesla where noted);
/// converted to rad/s on load.
#[derive(Debug, Deserialize)]
struct RegisterConfig {
    #[serde(rename = "B0_tesla")]
    b0_tesla: f64,
    constants: ConstantsConfig,
    nuclei: Vec<NucleusConfig>,
}

#[derive(Debug, Deserialize)]
struct ConstantsConfig {
    #[serde(rename = "gamma_e_MHz_per_T")]
    gamma_e_mhz_per_t: f64,
    #[serde(rename = "D_MHz")]
    d_mhz: f64,
}

#[derive(Debug, Deserialize)]
struct NucleusConfig {
    label: String,
    #[serde(rename = "gamma_MHz_per_T")]
    gamma_mhz_per_t: f64,
    #[serde(rename = "A_MHz")]
    a_mhz: [[f64; 3]; 3],
}

const MHZ: f64 = TAU * 1e6;

impl Register {
    /// The reference two-qubit register: a ¹⁵N (aligned, A ≈ 3 MHz) and a
    /// ¹³C (A ≈ 0.413 MHz) at B₀ = 0.62 T.
    pub fn default_nv() -> Self {
        let b0 = 0.62;
        let iso = |a: f64| [[a, 0.0, 0.0], [0.0, a, 0.0], [0.0, 0.0, a]];
        Register {
            b0,
            constants: PhysicalConstants::default(),
            nuclei: vec![
                NucleusSpec::new("15N", GAMMA_N15, iso(TAU * 3.0e6), b0),
                NucleusSpec::new("13C", GAMMA_C13, iso(TAU * 0.413e6), b0),
            ],
        }
    }

    pub fn from_config_json(text: &str) -> Result<Self> {
        let cfg: RegisterConfig = serde_json::from_str(text)
            .map_err(|e| Error::config(format!("register config: {e}")))?;
        let b0 = cfg.b0_tesla;
        if !(b0 > 0.0) {
            return Err(Error::config("register config: B0_tesla must be positive"));
        }
        let constants = PhysicalConstants {
            gamma_e: cfg.constants.gamma_e_mhz_per_t * MHZ,
            d_zfs: cfg.constants.d_mhz * MHZ,
        };
        let nuclei = cfg
            .nuclei
            .into_iter()
            .map(|n| {
                let mut a = [[0.0; 3]; 3];
                for (i, row) in n.a_mhz.iter().enumerate() {
                    for (j, v) in row.iter().enumerate() {
                        a[i][j] = v * MHZ;
                    }
                }
                NucleusSpec::new(n.label, n.gamma_mhz_per_t * MHZ, a, b0)
            })
            .collect();
        let reg = Register {
            b0,
            constants,
            nuclei,
        };
        reg.validate()?;
        Ok(reg)
    }

    pub fn from_config_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config(format!("cannot read register file {}: {e}", path.display()))
        })?;
        Self::from_config_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b0 > 0.0) {
            return Err(Error::config("B0 must be positive"));
        }
        if self.nuclei.is_empty() {
            return Err(Error::config("register needs at least one nucleus"));
        }
        for n in &self.nuclei {
            for row in &n.hyperfine {
                for v in row {
                    if !v.is_finite() {
                        return Err(Error::config(format!(
                            "nucleus {}: non-finite hyperfine entry",
                            n.label
                        )));
                    }
                }
            }
        }
        // addressability requires pairwise distinct transition frequencies
        for i in 0..self.nuclei.len() {
            for j in i + 1..self.nuclei.len() {
                let wi = self.nuclei[i].transition_frequency(self.b0);
                let wj = self.nuclei[j].transition_frequency(self.b0);
                if (wi - wj).abs() < 1e-9 * wi.abs().max(wj.abs()).max(1.0) {
                    return Err(Error::config(format!(
                        "nuclei {} and {} have degenerate transition frequencies",
                        self.nuclei[i].label, self.nuclei[j].label
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nuclei.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nuclei.is_empty()
    }

    /// Transition frequency ω_i of nucleus i, rad/s.
    pub fn transition_frequency(&self, i: usize) -> Result<f64> {
        self.nuclei
            .get(i)
            .map(|n| n.transition_frequency(self.b0))
            .ok_or_else(|| Error::config(format!("qubit index {i} out of range")))
    }

    /// All transition frequencies, register order.
    pub fn transition_frequencies(&self) -> Vec<f64> {
        self.nuclei
            .iter()
            .map(|n| n.transition_frequency(self.b0))
            .collect()
    }

    /// Two-qubit model parameters; requires exactly two nuclei.
    pub fn cz_parameters(&self) -> Result<CzParameters> {
        if self.nuclei.len() != 2 {
            return Err(Error::config(format!(
                "two-qubit model needs exactly 2 nuclei, register has {}",
                self.nuclei.len()
            )));
        }
        let delta = self.constants.d_zfs - self.constants.gamma_e * self.b0;
        let omega_rabi = std::f64::consts::SQRT_2 * self.constants.gamma_e;
        let mut alpha = Vec::with_capacity(2);
        let mut beta = Vec::with_capacity(2);
        for n in &self.nuclei {
            let w = n.transition_frequency(self.b0);
            alpha.push(-n.gamma * self.b0 / 2.0 - w / 2.0);
            beta.push(-n.gamma * self.b0 / 2.0 + w / 2.0);
        }
        let lambda = delta + beta.iter().sum::<f64>();
        let conditional = CzParameters::configurations(2)
            .iter()
            .map(|cfg| {
                delta
                    + cfg
                        .iter()
                        .zip(&beta)
                        .map(|(&s, &b)| if s == 1 { b } else { -b })
                        .sum::<f64>()
            })
            .collect();
        Ok(CzParameters {
            delta,
            omega_rabi,
            alpha,
            beta,
            lambda,
            conditional,
        })
    }
}

fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b)
}

fn identity(dim: usize) -> DMatrix<Complex64> {
    DMatrix::identity(dim, dim)
}

fn pauli_x() -> DMatrix<Complex64> {
    DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ],
    )
}

fn pauli_y() -> DMatrix<Complex64> {
    DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, 0.0),
        ],
    )
}

/// Spin operator I_q (σ/2) embedded at qubit position `q` of `n`.
fn embedded_spin_half(op: &DMatrix<Complex64>, q: usize, n: usize) -> DMatrix<Complex64> {
    let mut out = identity(1);
    for k in 0..n {
        let factor = if k == q {
            op.map(|z| z * 0.5)
        } else {
            identity(2)
        };
        out = kron(&out, &factor);
    }
    out
}

/// Rotating-frame single-qubit drive Hamiltonian at time t for a shared
/// envelope sample a(t) (rad/s):
/// H = −a(t) Σ_i [I_{i,x} cos ω_i t + I_{i,y} sin ω_i t].
pub fn single_qubit_hamiltonian(register: &Register, envelope: f64, t: f64) -> DMatrix<Complex64> {
    let n = register.len();
    let dim = 1usize << n;
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    let sx = pauli_x();
    let sy = pauli_y();
    for (i, nuc) in register.nuclei.iter().enumerate() {
        let w = nuc.transition_frequency(register.b0);
        let cx = Complex64::new(-envelope * (w * t).cos(), 0.0);
        let cy = Complex64::new(-envelope * (w * t).sin(), 0.0);
        h += embedded_spin_half(&sx, i, n).map(|z| z * cx)
            + embedded_spin_half(&sy, i, n).map(|z| z * cy);
    }
    h
}

/// Rotating-frame two-qubit drive Hamiltonian (electron ⊗ two nuclei, 8×8)
/// for a field sample B₁ (tesla):
/// H = (Ω/2) B₁ Σ_s [σ_x cos ω_s t − σ_y sin ω_s t] ⊗ |s⟩⟨s|.
pub fn two_qubit_hamiltonian(params: &CzParameters, b1: f64, t: f64) -> DMatrix<Complex64> {
    let configs = CzParameters::configurations(2);
    let mut h = DMatrix::<Complex64>::zeros(8, 8);
    let sx = pauli_x();
    let sy = pauli_y();
    for (omega_s, cfg) in params.conditional.iter().zip(&configs) {
        // |s⟩⟨s| on the two nuclear qubits; |1⟩ = m_I = +1/2
        let idx = (cfg[0] as usize) * 2 + cfg[1] as usize;
        let mut proj = DMatrix::<Complex64>::zeros(4, 4);
        proj[(idx, idx)] = Complex64::new(1.0, 0.0);
        let amp = params.omega_rabi / 2.0 * b1;
        let block = sx.map(|z| z * Complex64::new(amp * (omega_s * t).cos(), 0.0))
            - sy.map(|z| z * Complex64::new(amp * (omega_s * t).sin(), 0.0));
        h += kron(&block, &proj);
    }
    h
}
