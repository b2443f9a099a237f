//! Two-step gate synthesis.
//!
//! Step 1 treats each basis component on its own: a bounded scalar search
//! finds the amplitude minimising the exact (cosine-form) intrinsic
//! infidelity of that single component. Step 2 exploits the fact that every
//! rotation angle is linear in the coefficients for each fixed noise
//! realization: the noise-averaged small-angle infidelity is then a convex
//! quadratic ⟨I⟩ = cᵀQc − 2bᵀc + k whose Gauss–Hermite-averaged
//! coefficients can be assembled once and minimised by a linear solve.
//!
//! Coefficients throughout are effective frequency-domain amplitudes in
//! rad/s; the step-1 amplitudes are reported alongside as the individually
//! optimal single-component pulses.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::exec::map_cells;
use crate::minimize::grid_seeded_min;
use crate::pulse_basis::{
    cz_functionals, functional_rows, rotation_functionals, NoiseRealization, PulseWaveform,
    QuadratureKind, SincBasis,
};
use crate::quadrature::GaussianQuadrature;
use crate::spin_model::Register;

/// Default nuclear-transition frequency-noise width, rad/s (1 kHz).
pub const NUCLEAR_LINEWIDTH: f64 = TAU * 1.0e3;

/// Electron-transition frequency-noise width, rad/s (27.5 kHz) — the
/// dephasing-limited linewidth used for the linewidth sweeps.
pub const ELECTRON_LINEWIDTH: f64 = TAU * 27.5e3;

/// Default fractional amplitude-noise width.
pub const DEFAULT_SIGMA_EPSILON: f64 = 1.0e-3;

/// Default carrier phase-noise width, rad.
pub const DEFAULT_SIGMA_PHI: f64 = 1.0e-3 / TAU;

/// What the pulse is supposed to do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    /// rotation about x on one nucleus (cosine quadrature)
    SingleX,
    /// rotation about y on one nucleus (sine quadrature)
    SingleY,
    /// conditional 2π on the electron |11⟩ transition
    Cz,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateTarget {
    pub kind: GateKind,
    /// index of the driven nucleus (ignored for the two-qubit gate)
    pub target_qubit: usize,
    /// intended rotation angle, rad; fixed at 2π for the two-qubit gate
    pub angle: f64,
}

impl GateTarget {
    pub fn single_x(target_qubit: usize, angle: f64) -> Result<Self> {
        Self::single(GateKind::SingleX, target_qubit, angle)
    }

    pub fn single_y(target_qubit: usize, angle: f64) -> Result<Self> {
        Self::single(GateKind::SingleY, target_qubit, angle)
    }

    fn single(kind: GateKind, target_qubit: usize, angle: f64) -> Result<Self> {
        if !(angle > -TAU && angle <= TAU) {
            return Err(Error::config(format!(
                "target angle {angle} outside (-2π, 2π]"
            )));
        }
        Ok(GateTarget {
            kind,
            target_qubit,
            angle,
        })
    }

    pub fn cz() -> Self {
        GateTarget {
            kind: GateKind::Cz,
            target_qubit: 0,
            angle: TAU,
        }
    }

    pub fn quadrature(&self) -> QuadratureKind {
        match self.kind {
            GateKind::SingleY => QuadratureKind::Sine,
            GateKind::SingleX | GateKind::Cz => QuadratureKind::Cosine,
        }
    }

    /// Carrier frequency for this gate on the given register.
    pub fn carrier(&self, register: &Register) -> Result<f64> {
        match self.kind {
            GateKind::Cz => Ok(register.cz_parameters()?.lambda),
            _ => register.transition_frequency(self.target_qubit),
        }
    }
}

/// Gaussian widths of the three control-error channels and how to average
/// over them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// carrier/transition frequency error width, rad/s
    pub sigma_delta: f64,
    /// fractional amplitude error width
    pub sigma_epsilon: f64,
    /// carrier phase error width, rad
    pub sigma_phi: f64,
    /// whether φ participates in averages (excluded for the two-qubit gate,
    /// whose conditional angles only pick up the cos φ projection)
    pub include_phase: bool,
    /// Gauss–Hermite nodes per active noise dimension
    pub quadrature_nodes: usize,
}

impl NoiseModel {
    /// Nuclear-spin defaults: σ_δ = 2π·1 kHz, σ_ε = 10⁻³, σ_φ = 10⁻³/2π rad.
    pub fn single_qubit_default() -> Self {
        NoiseModel {
            sigma_delta: NUCLEAR_LINEWIDTH,
            sigma_epsilon: DEFAULT_SIGMA_EPSILON,
            sigma_phi: DEFAULT_SIGMA_PHI,
            include_phase: true,
            quadrature_nodes: 21,
        }
    }

    /// Two-qubit defaults: phase excluded from the average.
    pub fn cz_default() -> Self {
        NoiseModel {
            sigma_delta: NUCLEAR_LINEWIDTH,
            sigma_epsilon: DEFAULT_SIGMA_EPSILON,
            sigma_phi: DEFAULT_SIGMA_PHI,
            include_phase: false,
            quadrature_nodes: 21,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma_delta < 0.0 || self.sigma_epsilon < 0.0 || self.sigma_phi < 0.0 {
            return Err(Error::config("noise model: sigmas must be non-negative"));
        }
        if self.quadrature_nodes == 0 {
            return Err(Error::config("noise model: need at least one node"));
        }
        Ok(())
    }

    fn delta_rule(&self) -> GaussianQuadrature {
        GaussianQuadrature::new(self.sigma_delta, self.quadrature_nodes)
    }

    fn epsilon_rule(&self) -> GaussianQuadrature {
        GaussianQuadrature::new(self.sigma_epsilon, self.quadrature_nodes)
    }

    fn phi_rule(&self) -> GaussianQuadrature {
        if self.include_phase {
            GaussianQuadrature::new(self.sigma_phi, self.quadrature_nodes)
        } else {
            GaussianQuadrature::new(0.0, 1)
        }
    }
}

/// Frequency-domain amplitude window for the step-1 search plus the
/// hardware cap on the peak time-domain field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeBounds {
    pub coeff_lo: f64,
    pub coeff_hi: f64,
    /// peak |a(t)| the hardware can deliver, rad/s
    pub time_domain_cap: f64,
}

impl AmplitudeBounds {
    /// Single-qubit window [−5, 5] Mrad/s, cap ≈ 25 Mrad/s.
    pub fn single_qubit_default() -> Self {
        AmplitudeBounds {
            coeff_lo: -5.0e6,
            coeff_hi: 5.0e6,
            time_domain_cap: 25.0e6,
        }
    }

    /// Two-qubit window [0.5, 15] Mrad/s, cap ≈ 80 Mrad/s.
    pub fn cz_default() -> Self {
        AmplitudeBounds {
            coeff_lo: 0.5e6,
            coeff_hi: 15.0e6,
            time_domain_cap: 80.0e6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.coeff_lo < self.coeff_hi) {
            return Err(Error::config("amplitude bounds: lo must be below hi"));
        }
        if !(self.time_domain_cap > 0.0) {
            return Err(Error::config("amplitude bounds: cap must be positive"));
        }
        Ok(())
    }
}

/// Step-1 output: one independently optimised amplitude per basis component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSolutions {
    pub target: GateTarget,
    pub basis: SincBasis,
    pub bounds: AmplitudeBounds,
    /// optimal scalar amplitude per component, rad/s
    pub amplitudes: Vec<f64>,
    /// exact intrinsic infidelity each single-component pulse achieves
    pub infidelities: Vec<f64>,
    /// whether the search ended pinned at a bound edge
    pub clipped: Vec<bool>,
}

/// Step-2 output: the combined pulse and its quality numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisResult {
    pub target: GateTarget,
    /// step-1 amplitudes, rad/s
    pub per_basis_amplitudes: Vec<f64>,
    /// step-2 combination coefficients (effective amplitudes), rad/s
    pub combination: Vec<f64>,
    /// exact cosine-form infidelity of the combined pulse at zero noise
    pub intrinsic_infidelity: f64,
    /// Gauss–Hermite noise average of the small-angle infidelity
    pub averaged_infidelity: f64,
    /// peak |a(t)| of the combined pulse, rad/s
    pub max_time_amplitude: f64,
    /// peak exceeds the hardware cap
    pub cap_exceeded: bool,
    /// step-1 clipped flags, carried through for reporting
    pub clipped: Vec<bool>,
    /// λ_max/λ_min of the normal-equation matrix (kept spectrum)
    pub condition_estimate: f64,
    /// ‖∂⟨I⟩/∂c‖_∞ at the returned combination
    pub gradient_residual: f64,
    /// exact and small-angle infidelities disagree by more than 10%:
    /// the quadratic model is untrustworthy at this operating point
    pub small_angle_flag: bool,
    /// the synthesized pulse itself
    pub waveform: PulseWaveform,
}

/// Exact infidelity of a single-qubit rotation given the main-quadrature
/// angles of every nucleus: I = 1 − [∏_{i≠j} cos(X_i/2)]·cos((X_j−X_T)/2).
pub fn intrinsic_infidelity_single(angles: &[f64], target: &GateTarget) -> f64 {
    let mut product = 1.0;
    for (i, &x) in angles.iter().enumerate() {
        if i == target.target_qubit {
            product *= ((x - target.angle) / 2.0).cos();
        } else {
            product *= (x / 2.0).cos();
        }
    }
    1.0 - product
}

/// Quadratic (small-angle) form of the same infidelity, with both
/// quadratures: (1/8)[Σ_{i≠j}(X_i²+Y_i²) + (X_j−X_T)² + Y_j²].
pub fn quadratic_infidelity_single(x: &[f64], y: &[f64], target: &GateTarget) -> f64 {
    let mut sum = 0.0;
    for i in 0..x.len() {
        let main = if i == target.target_qubit {
            x[i] - target.angle
        } else {
            x[i]
        };
        sum += main * main + y[i] * y[i];
    }
    sum / 8.0
}

/// Exact infidelity of the conditional-2π gate from the four conditional
/// rotation angles (configurations 11, 10, 01, 00):
/// I = 1 − (1/8)[−2cos(X₁/2) + 2cos(X₂/2) + 2cos(X₃/2) + 2cos(X₄/2)].
pub fn intrinsic_infidelity_cz(x: &[f64; 4]) -> f64 {
    1.0 - 0.125
        * (-2.0 * (x[0] / 2.0).cos()
            + 2.0 * (x[1] / 2.0).cos()
            + 2.0 * (x[2] / 2.0).cos()
            + 2.0 * (x[3] / 2.0).cos())
}

/// Quadratic form of the conditional-gate infidelity:
/// (1/32)[(X₁−2π)² + X₂² + X₃² + X₄²].
pub fn quadratic_infidelity_cz(x: &[f64; 4]) -> f64 {
    let d1 = x[0] - TAU;
    (d1 * d1 + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]) / 32.0
}

fn exact_intrinsic_of(
    register: &Register,
    target: &GateTarget,
    waveform: &PulseWaveform,
) -> Result<f64> {
    match target.kind {
        GateKind::Cz => {
            let params = register.cz_parameters()?;
            let x = cz_functionals(&params, waveform, &NoiseRealization::NOISELESS)?;
            Ok(intrinsic_infidelity_cz(&x))
        }
        _ => {
            let angles = rotation_functionals(
                register,
                waveform,
                target.target_qubit,
                &NoiseRealization::NOISELESS,
            )?;
            let main: Vec<f64> = angles
                .iter()
                .map(|a| match target.quadrature() {
                    QuadratureKind::Cosine => a.x,
                    QuadratureKind::Sine => a.y,
                })
                .collect();
            Ok(intrinsic_infidelity_single(&main, target))
        }
    }
}

fn quadratic_intrinsic_of(
    register: &Register,
    target: &GateTarget,
    waveform: &PulseWaveform,
) -> Result<f64> {
    match target.kind {
        GateKind::Cz => {
            let params = register.cz_parameters()?;
            let x = cz_functionals(&params, waveform, &NoiseRealization::NOISELESS)?;
            Ok(quadratic_infidelity_cz(&x))
        }
        _ => {
            let angles = rotation_functionals(
                register,
                waveform,
                target.target_qubit,
                &NoiseRealization::NOISELESS,
            )?;
            let (x, y): (Vec<f64>, Vec<f64>) = angles.iter().map(|a| (a.x, a.y)).unzip();
            match target.quadrature() {
                QuadratureKind::Cosine => Ok(quadratic_infidelity_single(&x, &y, target)),
                // sine drive: Y is the controlled quadrature, X the leak
                QuadratureKind::Sine => Ok(quadratic_infidelity_single(&y, &x, target)),
            }
        }
    }
}

/// Step 1: independently optimise the scalar amplitude of each basis
/// component against the exact intrinsic infidelity, within bounds.
/// Oscillatory landscapes are handled by seeding a bounded Brent search on
/// a 200-point grid; solutions pinned at a bound edge are flagged, not
/// rejected.
pub fn generate_basis_solutions(
    register: &Register,
    target: &GateTarget,
    tau: f64,
    basis_count: usize,
    bounds: &AmplitudeBounds,
) -> Result<BasisSolutions> {
    bounds.validate()?;
    if basis_count == 0 {
        return Err(Error::config("need at least one basis component"));
    }
    let basis = SincBasis::with_default_shift(tau, basis_count)?;
    let carrier = target.carrier(register)?;
    let quadrature = target.quadrature();

    let mut amplitudes = Vec::with_capacity(basis_count);
    let mut infidelities = Vec::with_capacity(basis_count);
    let mut clipped_flags = Vec::with_capacity(basis_count);
    for n in 0..basis_count {
        let objective = |amp: f64| -> f64 {
            let mut coeffs = vec![0.0; basis_count];
            coeffs[n] = amp;
            let wf = PulseWaveform::new(basis, quadrature, carrier, coeffs)
                .expect("component count fixed above");
            exact_intrinsic_of(register, target, &wf)
                .expect("register validated by carrier lookup")
        };
        let (mut amp, mut infidelity, mut clipped) =
            grid_seeded_min(objective, bounds.coeff_lo, bounds.coeff_hi, 200, 1e-4);
        // "no pulse" is always a sane candidate when feasible, and the seed
        // grid has no point exactly at zero
        if bounds.coeff_lo <= 0.0 && bounds.coeff_hi >= 0.0 && objective(0.0) < infidelity {
            amp = 0.0;
            infidelity = objective(0.0);
            clipped = false;
        }
        if !infidelity.is_finite() {
            return Err(Error::solver(format!(
                "step-1 search for component {n} found no finite infidelity"
            )));
        }
        amplitudes.push(amp);
        infidelities.push(infidelity);
        clipped_flags.push(clipped);
    }
    Ok(BasisSolutions {
        target: *target,
        basis,
        bounds: *bounds,
        amplitudes,
        infidelities,
        clipped: clipped_flags,
    })
}

/// The noise-averaged quadratic model ⟨I⟩(c) = cᵀQc − 2bᵀc + k.
struct QuadraticModel {
    q: DMatrix<f64>,
    b: DVector<f64>,
    k: f64,
}

impl QuadraticModel {
    fn evaluate(&self, c: &DVector<f64>) -> f64 {
        (c.transpose() * &self.q * c)[(0, 0)] - 2.0 * self.b.dot(c) + self.k
    }

    fn gradient_inf_norm(&self, c: &DVector<f64>) -> f64 {
        (2.0 * (&self.q * c - &self.b)).amax()
    }
}

/// Assemble Q, b, k by Gauss–Hermite tensor quadrature over the active
/// noise dimensions. Rows are the per-unit-coefficient angle responses;
/// each realization contributes outer-products weighted by the Gaussian
/// rule, so the assembled form IS the noise average of the quadratic
/// infidelity.
fn quadratic_model(
    register: &Register,
    target: &GateTarget,
    basis: &SincBasis,
    noise: &NoiseModel,
) -> Result<QuadraticModel> {
    noise.validate()?;
    let m = basis.component_count();
    let carrier = target.carrier(register)?;
    let quadrature = target.quadrature();
    let mut q = DMatrix::zeros(m, m);
    let mut b = DVector::zeros(m);
    let mut k = 0.0;

    // (frequency ω_s, target angle) pairs: every spin for a single-qubit
    // gate, every nuclear configuration for the conditional gate
    let (frequencies, targets): (Vec<f64>, Vec<f64>) = match target.kind {
        GateKind::Cz => {
            let params = register.cz_parameters()?;
            let t = vec![TAU, 0.0, 0.0, 0.0];
            (params.conditional.clone(), t)
        }
        _ => {
            let f = register.transition_frequencies().to_vec();
            let t = (0..f.len())
                .map(|i| if i == target.target_qubit { target.angle } else { 0.0 })
                .collect();
            (f, t)
        }
    };
    let norm = match target.kind {
        GateKind::Cz => 32.0,
        _ => 8.0,
    };

    let delta_rule = noise.delta_rule();
    let epsilon_rule = noise.epsilon_rule();
    let phi_rule = noise.phi_rule();

    let mut main_rows = vec![DVector::zeros(m); frequencies.len()];
    let mut leak_rows = vec![DVector::zeros(m); frequencies.len()];
    for (delta, w_delta) in delta_rule.iter() {
        let w_eff = carrier + delta;
        for (s, &omega_s) in frequencies.iter().enumerate() {
            for n in 0..m {
                // conditional angles carry the opposite overall sign to the
                // single-qubit X convention and have no orthogonal leak —
                // the rows here must match cz_functionals exactly or the
                // solve returns the sign-mirrored pulse (X₁ = −2π)
                let (main, leak) = match target.kind {
                    GateKind::Cz => {
                        let (x_main, _) = functional_rows(basis, quadrature, n, omega_s, w_eff);
                        (-x_main, 0.0)
                    }
                    _ => functional_rows(basis, quadrature, n, omega_s, w_eff),
                };
                main_rows[s][n] = main;
                leak_rows[s][n] = leak;
            }
        }
        for (epsilon, w_epsilon) in epsilon_rule.iter() {
            let gain = 1.0 + epsilon;
            for (phi, w_phi) in phi_rule.iter() {
                let w = w_delta * w_epsilon * w_phi;
                let cm = gain * phi.cos();
                let sm = gain * phi.sin();
                for s in 0..frequencies.len() {
                    let u = &main_rows[s] * cm;
                    q += w * &u * u.transpose();
                    b += (w * targets[s]) * &u;
                    k += w * targets[s] * targets[s];
                    if sm != 0.0 {
                        let v = &leak_rows[s] * sm;
                        q += w * &v * v.transpose();
                    }
                }
            }
        }
    }
    q /= norm;
    b /= norm;
    k /= norm;
    Ok(QuadraticModel { q, b, k })
}

/// Noise-averaged small-angle infidelity of a concrete waveform.
/// σ → 0 collapses every rule to a point mass and this reduces exactly to
/// the quadratic intrinsic form.
pub fn averaged_infidelity(
    register: &Register,
    target: &GateTarget,
    waveform: &PulseWaveform,
    noise: &NoiseModel,
) -> Result<f64> {
    let model = quadratic_model(register, target, &waveform.basis, noise)?;
    let c = DVector::from_column_slice(&waveform.coefficients);
    Ok(model.evaluate(&c))
}

/// Minimum-norm solution of the normal equations via symmetric
/// eigendecomposition; eigenvalues below `rel_cutoff`·λ_max are treated as
/// null directions. Returns (solution, condition of kept spectrum).
fn solve_normal_equations(model: &QuadraticModel, rel_cutoff: f64) -> Result<(DVector<f64>, f64)> {
    let eig = model.q.clone().symmetric_eigen();
    let lam_max = eig.eigenvalues.amax();
    if !(lam_max > 0.0) {
        return Err(Error::solver(
            "normal equations are identically zero (empty response)".to_string(),
        ));
    }
    let mut solution = DVector::zeros(model.b.len());
    let mut lam_min_kept = f64::INFINITY;
    for (idx, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > rel_cutoff * lam_max {
            let v = eig.eigenvectors.column(idx);
            solution += (v.dot(&model.b) / lam) * v;
            lam_min_kept = lam_min_kept.min(lam);
        }
    }
    Ok((solution, lam_max / lam_min_kept))
}

/// Step 2: minimise the noise-averaged quadratic infidelity over linear
/// combinations of the basis components. Because each angle is linear in
/// the coefficients per realization, the average is a convex quadratic and
/// the normal equations give the global minimum directly.
pub fn optimize_combination(
    register: &Register,
    target: &GateTarget,
    basis_solutions: &BasisSolutions,
    noise: &NoiseModel,
) -> Result<SynthesisResult> {
    let basis = basis_solutions.basis;
    let model = quadratic_model(register, target, &basis, noise)?;
    let (solution, condition) = solve_normal_equations(&model, 1e-12)?;
    let gradient_residual = model.gradient_inf_norm(&solution);
    // the form is convex with unit-scale rows: a gradient that fails to
    // vanish means the kept spectrum was too ill-conditioned to solve
    if gradient_residual > 1e-8 {
        return Err(Error::solver(format!(
            "normal equations unsolved: |grad| = {gradient_residual:.3e}, condition ≈ {condition:.3e}"
        )));
    }

    let averaged = model.evaluate(&solution);
    let combination: Vec<f64> = solution.iter().copied().collect();
    let waveform = PulseWaveform::new(
        basis,
        target.quadrature(),
        target.carrier(register)?,
        combination.clone(),
    )?;
    let intrinsic = exact_intrinsic_of(register, target, &waveform)?;
    let quadratic = quadratic_intrinsic_of(register, target, &waveform)?;
    let scale = intrinsic.abs().max(quadratic.abs());
    let small_angle_flag = scale > 1e-300 && (intrinsic - quadratic).abs() > 0.1 * scale;
    let max_time_amplitude = waveform.max_time_amplitude();

    Ok(SynthesisResult {
        target: *target,
        per_basis_amplitudes: basis_solutions.amplitudes.clone(),
        combination,
        intrinsic_infidelity: intrinsic,
        averaged_infidelity: averaged,
        max_time_amplitude,
        cap_exceeded: max_time_amplitude > basis_solutions.bounds.time_domain_cap,
        clipped: basis_solutions.clipped.clone(),
        condition_estimate: condition,
        gradient_residual,
        small_angle_flag,
        waveform,
    })
}

/// Convenience: both steps back to back.
pub fn synthesize(
    register: &Register,
    target: &GateTarget,
    tau: f64,
    basis_count: usize,
    bounds: &AmplitudeBounds,
    noise: &NoiseModel,
) -> Result<SynthesisResult> {
    let step1 = generate_basis_solutions(register, target, tau, basis_count, bounds)?;
    optimize_combination(register, target, &step1, noise)
}

/// One cell of a linewidth sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tau: f64,
    pub basis_count: usize,
    pub sigma_multiplier: f64,
    pub intrinsic_infidelity: f64,
    pub averaged_infidelity: f64,
    pub max_time_amplitude: f64,
    /// step-1 clipped flags as a 0/1 string, component order
    pub clipped_flags: String,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str =
        "tau_s,M,sigma_multiplier,intrinsic_I,averaged_I,max_amp_rad_s,clipped_flags";

    pub fn to_csv(&self) -> String {
        format!(
            "{:.12e},{},{},{:.12e},{:.12e},{:.12e},{}",
            self.tau,
            self.basis_count,
            self.sigma_multiplier,
            self.intrinsic_infidelity,
            self.averaged_infidelity,
            self.max_time_amplitude,
            self.clipped_flags
        )
    }
}

/// Averaged infidelity per (τ, M, multiplier) cell, where each multiplier
/// scales the frequency-noise width of `base_noise`. Cells are independent
/// and evaluated through the data-parallel engine in deterministic
/// τ-major / M / multiplier-minor order.
pub fn linewidth_sweep(
    register: &Register,
    target: &GateTarget,
    tau_grid: &[f64],
    m_grid: &[usize],
    sigma_delta_multipliers: &[f64],
    bounds: &AmplitudeBounds,
    base_noise: &NoiseModel,
) -> Result<Vec<SweepRow>> {
    if tau_grid.is_empty() || m_grid.is_empty() || sigma_delta_multipliers.is_empty() {
        return Err(Error::config("linewidth sweep: grids must be non-empty"));
    }
    let mut cells = Vec::new();
    for &tau in tau_grid {
        for &m in m_grid {
            for &mult in sigma_delta_multipliers {
                cells.push((tau, m, mult));
            }
        }
    }
    map_cells(&cells, |&(tau, m, mult)| {
        let noise = NoiseModel {
            sigma_delta: mult * base_noise.sigma_delta,
            ..*base_noise
        };
        let result = synthesize(register, target, tau, m, bounds, &noise).map_err(|e| match e {
            Error::Config(msg) => {
                Error::config(format!("cell (tau = {tau:.6e} s, M = {m}): {msg}"))
            }
            Error::Solver(msg) => {
                Error::solver(format!("cell (tau = {tau:.6e} s, M = {m}): {msg}"))
            }
        })?;
        Ok(SweepRow {
            tau,
            basis_count: m,
            sigma_multiplier: mult,
            intrinsic_infidelity: result.intrinsic_infidelity,
            averaged_infidelity: result.averaged_infidelity,
            max_time_amplitude: result.max_time_amplitude,
            clipped_flags: result
                .clipped
                .iter()
                .map(|&c| if c { '1' } else { '0' })
                .collect(),
        })
    })
    .into_iter()
    .collect()
}

/// Smallest M in a monotone infidelity sequence that captures at least
/// `fraction` of the total improvement from the first to the last entry.
/// Returns None for sequences with no improvement.
pub fn convergence_basis_count(infidelities: &[(usize, f64)], fraction: f64) -> Option<usize> {
    let first = infidelities.first()?.1;
    let last = infidelities.last()?.1;
    let total = first - last;
    if !(total > 0.0) {
        return None;
    }
    infidelities
        .iter()
        .find(|&&(_, v)| first - v >= fraction * total)
        .map(|&(m, _)| m)
}
