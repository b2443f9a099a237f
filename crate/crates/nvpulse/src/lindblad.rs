//! Dephasing-limited density-matrix evolution in vectorized (Liouville)
//! form.
//!
//! Density matrices are column-stacked: entry (r, c) of an N×N matrix lands
//! at vec index c·N + r, so vec(AρB) = (Bᵀ ⊗ A)vec(ρ). The master equation
//!
//!   ρ̇ = −i[H, ρ] + Σ_k ( L_k ρ L_k† − ½{L_k†L_k, ρ} )
//!
//! becomes vec(ρ̇) = (𝐇 + 𝐆)vec(ρ) with
//!
//!   𝐇 = −i(𝟙⊗H − Hᵀ⊗𝟙),
//!   𝐆 = Σ_k ( L̄_k⊗L_k − ½ 𝟙⊗L_k†L_k − ½ (L_k†L_k)ᵀ⊗𝟙 ),
//!
//! and the finite-time map is the matrix exponential of (𝐇 + 𝐆)t.
//!
//! The register-level noise model is pure dephasing: one jump operator
//! √(1/2T₂) σ_z per qubit. Because every generator term then acts on a
//! single tensor factor, a gate on k active qubits factorizes exactly into a
//! 4^k × 4^k superoperator on the active qubits times an element-wise decay
//! e^{−τ/T₂} on every spectator coherence — see
//! [`apply_local_gate_with_dephasing`]. That structured path is what makes
//! five-qubit circuit simulation cheap; the dense route stays available as
//! the cross-check.
//!
//! Qubit 0 is the leftmost tensor factor, i.e. the most significant bit of
//! the basis-state index.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default single-qubit coherence time T₂, seconds.
pub const DEFAULT_T2: f64 = 1.8e-3;

/// Column-stack a square matrix: entry (r, c) ↦ index c·N + r.
pub fn vectorize(rho: &DMatrix<Complex64>) -> DVector<Complex64> {
    DVector::from_column_slice(rho.as_slice())
}

/// Inverse of [`vectorize`] for a dim×dim matrix.
pub fn unvectorize(v: &DVector<Complex64>, dim: usize) -> Result<DMatrix<Complex64>> {
    if v.len() != dim * dim {
        return Err(Error::config(format!(
            "vectorized length {} is not {dim}²",
            v.len()
        )));
    }
    Ok(DMatrix::from_column_slice(dim, dim, v.as_slice()))
}

/// 𝐇 = −i(𝟙⊗H − Hᵀ⊗𝟙), the commutator −i[H, ·] in vectorized form.
pub fn coherent_superoperator(h: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    if h.nrows() != h.ncols() {
        return Err(Error::config("Hamiltonian must be square"));
    }
    let id = DMatrix::<Complex64>::identity(h.nrows(), h.nrows());
    let commutator = id.kronecker(h) - h.transpose().kronecker(&id);
    Ok(commutator * Complex64::new(0.0, -1.0))
}

/// 𝐆 = Σ_k ( L̄_k⊗L_k − ½ 𝟙⊗L_k†L_k − ½ (L_k†L_k)ᵀ⊗𝟙 ).
pub fn dissipative_superoperator(jumps: &[DMatrix<Complex64>]) -> Result<DMatrix<Complex64>> {
    let first = jumps
        .first()
        .ok_or_else(|| Error::config("at least one jump operator required"))?;
    let dim = first.nrows();
    let id = DMatrix::<Complex64>::identity(dim, dim);
    let half = Complex64::new(0.5, 0.0);
    let mut g = DMatrix::<Complex64>::zeros(dim * dim, dim * dim);
    for l in jumps {
        if l.nrows() != dim || l.ncols() != dim {
            return Err(Error::config("jump operators must share one square shape"));
        }
        let ll = l.adjoint() * l;
        g += l.conjugate().kronecker(l)
            - id.kronecker(&ll) * half
            - ll.transpose().kronecker(&id) * half;
    }
    Ok(g)
}

/// Per-qubit pure-dephasing model: jump operator √(1/2T₂) σ_z on each qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DephasingModel {
    /// coherence time per qubit, seconds
    #[serde(rename = "t2_s")]
    t2: Vec<f64>,
}

impl DephasingModel {
    pub fn new(t2: Vec<f64>) -> Result<Self> {
        if t2.is_empty() {
            return Err(Error::config("dephasing model needs at least one qubit"));
        }
        if let Some(bad) = t2.iter().find(|&&t| !(t > 0.0) || !t.is_finite()) {
            return Err(Error::config(format!(
                "T₂ must be finite and positive, got {bad}"
            )));
        }
        Ok(DephasingModel { t2 })
    }

    /// Same T₂ on every qubit.
    pub fn uniform(n_qubits: usize, t2: f64) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::config("dephasing model needs at least one qubit"));
        }
        DephasingModel::new(vec![t2; n_qubits])
    }

    pub fn qubit_count(&self) -> usize {
        self.t2.len()
    }

    pub fn t2(&self, qubit: usize) -> f64 {
        self.t2[qubit]
    }

    /// One embedded jump operator √(1/2T₂) σ_z per qubit.
    pub fn jump_operators(&self) -> Vec<DMatrix<Complex64>> {
        let n = self.qubit_count();
        self.t2
            .iter()
            .enumerate()
            .map(|(q, &t2)| {
                let rate = (1.0 / (2.0 * t2)).sqrt();
                embed_single_qubit(&(pauli_z() * Complex64::new(rate, 0.0)), q, n)
            })
            .collect()
    }

    /// Full Liouvillian 𝐇 + 𝐆 for a Hamiltonian on this register.
    pub fn generator(&self, h: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        let dim = 1usize << self.qubit_count();
        if h.nrows() != dim || h.ncols() != dim {
            return Err(Error::config(format!(
                "Hamiltonian is {}×{}, expected {dim}×{dim} for {} qubits",
                h.nrows(),
                h.ncols(),
                self.qubit_count()
            )));
        }
        Ok(coherent_superoperator(h)? + dissipative_superoperator(&self.jump_operators())?)
    }

    /// Propagate ρ for `duration` seconds under H plus this dephasing, via
    /// the exact exponential of the full Liouvillian. Dense route — cost
    /// grows as 4³ⁿ, so keep it to small registers and cross-checks.
    pub fn evolve(
        &self,
        h: &DMatrix<Complex64>,
        rho: &DMatrix<Complex64>,
        duration: f64,
    ) -> Result<DMatrix<Complex64>> {
        if !(duration >= 0.0) || !duration.is_finite() {
            return Err(Error::config(format!(
                "duration must be finite and non-negative, got {duration}"
            )));
        }
        let dim = 1usize << self.qubit_count();
        if rho.nrows() != dim || rho.ncols() != dim {
            return Err(Error::config(format!(
                "density matrix is {}×{}, expected {dim}×{dim}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let map = (self.generator(h)? * Complex64::new(duration, 0.0)).exp();
        unvectorize(&(map * vectorize(rho)), dim)
    }
}

impl Default for DephasingModel {
    fn default() -> Self {
        DephasingModel::uniform(1, DEFAULT_T2).expect("default T₂ is valid")
    }
}

/// Apply a gate U = e^{−iK} on `active` qubits together with dephasing on
/// every qubit over the gate duration τ.
///
/// `generator` is K on the active subspace (2^k × 2^k, active\[0\] the most
/// significant local bit). The map factorizes exactly: the active qubits get
/// exp(−i(𝟙⊗K − Kᵀ⊗𝟙) + τ𝐆_active) as a 4^k × 4^k superoperator, and every
/// spectator coherence decays by e^{−τ/T₂} — no approximation, because each
/// generator term touches a single tensor factor.
pub fn apply_local_gate_with_dephasing(
    rho: &DMatrix<Complex64>,
    active: &[usize],
    generator: &DMatrix<Complex64>,
    duration: f64,
    model: &DephasingModel,
) -> Result<DMatrix<Complex64>> {
    let n = model.qubit_count();
    let dim = 1usize << n;
    let k = active.len();
    if k == 0 || k > 2 {
        return Err(Error::config(format!(
            "local gates act on one or two qubits, got {k}"
        )));
    }
    if active.iter().any(|&q| q >= n) || (k == 2 && active[0] == active[1]) {
        return Err(Error::config(format!(
            "active qubits {active:?} invalid for a {n}-qubit register"
        )));
    }
    let adim = 1usize << k;
    if generator.nrows() != adim || generator.ncols() != adim {
        return Err(Error::config(format!(
            "gate generator is {}×{}, expected {adim}×{adim}",
            generator.nrows(),
            generator.ncols()
        )));
    }
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::config(format!(
            "density matrix is {}×{}, expected {dim}×{dim}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(Error::config(format!(
            "duration must be finite and non-negative, got {duration}"
        )));
    }

    // active-subspace superoperator: integrated coherent generator plus the
    // active qubits' dephasing over τ
    let local_jumps: Vec<DMatrix<Complex64>> = active
        .iter()
        .enumerate()
        .map(|(a, &q)| {
            let rate = (duration / (2.0 * model.t2(q))).sqrt();
            embed_single_qubit(&(pauli_z() * Complex64::new(rate, 0.0)), a, k)
        })
        .collect();
    let map = (coherent_superoperator(generator)? + dissipative_superoperator(&local_jumps)?).exp();

    // bit masks: position of each active qubit in the global index, and the
    // per-spectator decay factors keyed by row⊕col
    let shift = |q: usize| n - 1 - q;
    let active_mask: usize = active.iter().map(|&q| 1usize << shift(q)).sum();
    let place = |local: usize| -> usize {
        active
            .iter()
            .enumerate()
            .map(|(a, &q)| ((local >> (k - 1 - a)) & 1) << shift(q))
            .sum()
    };
    let spectators: Vec<(usize, f64)> = (0..n)
        .filter(|q| !active.contains(q))
        .map(|q| (1usize << shift(q), (-duration / model.t2(q)).exp()))
        .collect();

    let mut out = DMatrix::<Complex64>::zeros(dim, dim);
    let spect_patterns: Vec<usize> = (0..dim).filter(|g| g & active_mask == 0).collect();
    let mut block = DVector::<Complex64>::zeros(adim * adim);
    for &sr in &spect_patterns {
        for &sc in &spect_patterns {
            let decay: f64 = spectators
                .iter()
                .filter(|(mask, _)| (sr ^ sc) & mask != 0)
                .map(|&(_, f)| f)
                .product();
            for c in 0..adim {
                for r in 0..adim {
                    block[c * adim + r] = rho[(sr | place(r), sc | place(c))];
                }
            }
            let mapped = &map * &block;
            let scale = Complex64::new(decay, 0.0);
            for c in 0..adim {
                for r in 0..adim {
                    out[(sr | place(r), sc | place(c))] = mapped[c * adim + r] * scale;
                }
            }
        }
    }
    Ok(out)
}

/// Overlap fidelity Tr[ρ_ideal† ρ] / Tr[ρ_ideal† ρ_ideal]; for a pure ideal
/// state this is ⟨ψ|ρ|ψ⟩.
pub fn state_fidelity(ideal: &DMatrix<Complex64>, actual: &DMatrix<Complex64>) -> f64 {
    assert_eq!(ideal.shape(), actual.shape(), "state dimensions differ");
    let num: Complex64 = ideal
        .iter()
        .zip(actual.iter())
        .map(|(a, b)| a.conj() * b)
        .sum();
    let den: Complex64 = ideal.iter().map(|a| a.conj() * a).sum();
    num.re / den.re
}

/// |index⟩⟨index| on an n-qubit register.
pub fn basis_state_density(n_qubits: usize, index: usize) -> DMatrix<Complex64> {
    let dim = 1usize << n_qubits;
    assert!(index < dim, "basis index {index} out of range for {dim}");
    let mut rho = DMatrix::zeros(dim, dim);
    rho[(index, index)] = Complex64::new(1.0, 0.0);
    rho
}

/// |ψ⟩⟨ψ| from a (not necessarily normalized) state vector.
pub fn pure_state_density(psi: &DVector<Complex64>) -> DMatrix<Complex64> {
    let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    DMatrix::from_fn(psi.len(), psi.len(), |r, c| {
        psi[r] * psi[c].conj() / norm2
    })
}

/// Verify trace one, Hermiticity, and positivity (eigenvalues ≥ −tol).
pub fn check_density_matrix(rho: &DMatrix<Complex64>, tol: f64) -> Result<()> {
    let trace = rho.trace();
    if (trace.re - 1.0).abs() > tol || trace.im.abs() > tol {
        return Err(Error::solver(format!("density-matrix trace drifted to {trace}")));
    }
    let herm_defect = (rho - rho.adjoint()).camax();
    if herm_defect > tol {
        return Err(Error::solver(format!(
            "density matrix lost Hermiticity by {herm_defect:.3e}"
        )));
    }
    let min_eig = rho
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min_eig < -tol {
        return Err(Error::solver(format!(
            "density matrix lost positivity: min eigenvalue {min_eig:.3e}"
        )));
    }
    Ok(())
}

fn pauli_z() -> DMatrix<Complex64> {
    DMatrix::from_diagonal(&DVector::from_vec(vec![
        Complex64::new(1.0, 0.0),
        Complex64::new(-1.0, 0.0),
    ]))
}

/// op on `qubit`, identity elsewhere; qubit 0 is the most significant bit.
fn embed_single_qubit(op: &DMatrix<Complex64>, qubit: usize, n_qubits: usize) -> DMatrix<Complex64> {
    let mut out = DMatrix::<Complex64>::identity(1, 1);
    let id2 = DMatrix::<Complex64>::identity(2, 2);
    for q in 0..n_qubits {
        out = out.kronecker(if q == qubit { op } else { &id2 });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
        let a = DMatrix::from_fn(dim, dim, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        (&a + a.adjoint()) * c(0.5, 0.0)
    }

    fn random_density(dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
        let a = DMatrix::from_fn(dim, dim, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let rho = &a * a.adjoint();
        let tr = rho.trace();
        rho / tr
    }

    fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
        (a - b).camax()
    }

    #[test]
    fn vectorize_is_column_stacking() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.5), c(3.0, 0.0), c(4.0, 0.0)]);
        let v = vectorize(&m);
        // columns first: (1, 3, 2+i/2, 4)
        assert_eq!(v[0], c(1.0, 0.0));
        assert_eq!(v[1], c(3.0, 0.0));
        assert_eq!(v[2], c(2.0, 0.5));
        assert_eq!(v[3], c(4.0, 0.0));
        let back = unvectorize(&v, 2).unwrap();
        assert_eq!(back, m);
        assert!(unvectorize(&v, 3).is_err());
    }

    #[test]
    fn sandwich_identity_holds() {
        // vec(AXB) = (Bᵀ⊗A) vec(X) — the identity the whole module rests on
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dim = 3;
        let a = random_hermitian(dim, &mut rng);
        let b = random_hermitian(dim, &mut rng);
        let x = random_hermitian(dim, &mut rng);
        let direct = vectorize(&(&a * &x * &b));
        let lifted = b.transpose().kronecker(&a) * vectorize(&x);
        assert!((direct - lifted).camax() < 1e-12);
    }

    #[test]
    fn single_qubit_dephasing_generator_is_diagonal() {
        let t2 = 1.8e-3;
        let model = DephasingModel::uniform(1, t2).unwrap();
        let g = dissipative_superoperator(&model.jump_operators()).unwrap();
        // populations untouched, coherences decay at 1/T₂
        let want = [0.0, -1.0 / t2, -1.0 / t2, 0.0];
        for r in 0..4 {
            for col in 0..4 {
                let expect = if r == col { want[r] } else { 0.0 };
                assert!(
                    (g[(r, col)] - c(expect, 0.0)).norm() < 1e-12 / t2,
                    "G[{r},{col}] = {}",
                    g[(r, col)]
                );
            }
        }
    }

    #[test]
    fn plus_state_coherence_decays_analytically() {
        let t2 = 1.8e-3;
        let model = DephasingModel::uniform(1, t2).unwrap();
        let plus = pure_state_density(&DVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]));
        let h = DMatrix::zeros(2, 2);
        let t = 0.9e-3;
        let rho = model.evolve(&h, &plus, t).unwrap();
        let factor = (-t / t2).exp();
        assert!((rho[(0, 1)].re - 0.5 * factor).abs() < 1e-12);
        assert!((rho[(0, 0)].re - 0.5).abs() < 1e-12);
        // F = (1 + e^{−t/T₂})/2 against the ideal |+⟩
        let f = state_fidelity(&plus, &rho);
        assert!((f - 0.5 * (1.0 + factor)).abs() < 1e-12, "F = {f}");
    }

    #[test]
    fn coherent_only_evolution_matches_spectral_route() {
        // 𝐆 = 0: the vectorized exponential must reproduce U ρ U† with U
        // built independently from the eigendecomposition of H
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let h = random_hermitian(4, &mut rng);
        let rho = random_density(4, &mut rng);
        let t = 0.7;
        let map = (coherent_superoperator(&h).unwrap() * c(t, 0.0)).exp();
        let evolved = unvectorize(&(map * vectorize(&rho)), 4).unwrap();

        let eig = h.clone().symmetric_eigen();
        let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|w| c(0.0, -w * t).exp()));
        let u = &eig.eigenvectors * phases * eig.eigenvectors.adjoint();
        let conjugated = &u * &rho * u.adjoint();
        assert!(max_abs_diff(&evolved, &conjugated) < 1e-9);
    }

    #[test]
    fn expm_route_matches_rk4_oracle() {
        // independent integration of the matrix-valued master equation
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let model = DephasingModel::new(vec![1.3, 0.6]).unwrap();
        let h = random_hermitian(4, &mut rng) * c(2.0, 0.0);
        let rho0 = random_density(4, &mut rng);
        let t = 0.5;

        let jumps = model.jump_operators();
        let deriv = |rho: &DMatrix<Complex64>| -> DMatrix<Complex64> {
            let mut d = (&h * rho - rho * &h) * c(0.0, -1.0);
            for l in &jumps {
                let ll = l.adjoint() * l;
                d += l * rho * l.adjoint() - (&ll * rho + rho * &ll) * c(0.5, 0.0);
            }
            d
        };
        let steps = 500;
        let dt = t / steps as f64;
        let mut rho = rho0.clone();
        for _ in 0..steps {
            let k1 = deriv(&rho);
            let k2 = deriv(&(&rho + &k1 * c(dt / 2.0, 0.0)));
            let k3 = deriv(&(&rho + &k2 * c(dt / 2.0, 0.0)));
            let k4 = deriv(&(&rho + &k3 * c(dt, 0.0)));
            rho += (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(dt / 6.0, 0.0);
        }

        let exact = model.evolve(&h, &rho0, t).unwrap();
        assert!(max_abs_diff(&exact, &rho) < 1e-7);
        check_density_matrix(&exact, 1e-9).unwrap();
    }

    #[test]
    fn structured_single_qubit_gate_matches_dense_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let model = DephasingModel::new(vec![1.8e-3, 0.9e-3, 2.5e-3]).unwrap();
        let rho = random_density(8, &mut rng);
        let theta = 0.77;
        let tau = 1e-4;
        // K = (θ/2)σx on qubit 1
        let k = DMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(theta / 2.0, 0.0), c(theta / 2.0, 0.0), c(0.0, 0.0)],
        );
        let fast = apply_local_gate_with_dephasing(&rho, &[1], &k, tau, &model).unwrap();
        let h_full = embed_single_qubit(&k, 1, 3) / c(tau, 0.0);
        let dense = model.evolve(&h_full, &rho, tau).unwrap();
        assert!(max_abs_diff(&fast, &dense) < 1e-9);
        check_density_matrix(&fast, 1e-9).unwrap();
    }

    #[test]
    fn structured_two_qubit_gate_matches_dense_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let model = DephasingModel::new(vec![1.8e-3, 0.9e-3, 2.5e-3]).unwrap();
        let rho = random_density(8, &mut rng);
        let tau = 2e-4;
        // conditional-phase generator K = π|11⟩⟨11| on qubits {0, 2}
        let mut k = DMatrix::<Complex64>::zeros(4, 4);
        k[(3, 3)] = c(std::f64::consts::PI, 0.0);
        let fast = apply_local_gate_with_dephasing(&rho, &[0, 2], &k, tau, &model).unwrap();
        // dense: scatter K onto the full register by bit pattern
        let mut h_full = DMatrix::<Complex64>::zeros(8, 8);
        for i in 0..8usize {
            // qubit 0 → bit 2, qubit 2 → bit 0 of the global index
            if i & 0b100 != 0 && i & 0b001 != 0 {
                h_full[(i, i)] = c(std::f64::consts::PI / tau, 0.0);
            }
        }
        let dense = model.evolve(&h_full, &rho, tau).unwrap();
        assert!(max_abs_diff(&fast, &dense) < 1e-9);
    }

    #[test]
    fn zero_duration_changes_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let model = DephasingModel::uniform(2, DEFAULT_T2).unwrap();
        let rho = random_density(4, &mut rng);
        let h = random_hermitian(4, &mut rng);
        let out = model.evolve(&h, &rho, 0.0).unwrap();
        assert!(max_abs_diff(&out, &rho) < 1e-12);
        let k = DMatrix::<Complex64>::zeros(2, 2);
        let out = apply_local_gate_with_dephasing(&rho, &[1], &k, 0.0, &model).unwrap();
        assert!(max_abs_diff(&out, &rho) < 1e-12);
    }

    #[test]
    fn jump_operators_embed_at_the_right_qubit() {
        let t2 = 2.0;
        let model = DephasingModel::uniform(2, t2).unwrap();
        let jumps = model.jump_operators();
        let rate = (1.0 / (2.0 * t2)).sqrt();
        // qubit 0 is the most significant bit: σz⊗𝟙 → diag(1, 1, −1, −1)
        let want0 = [1.0, 1.0, -1.0, -1.0];
        let want1 = [1.0, -1.0, 1.0, -1.0];
        for i in 0..4 {
            assert_eq!(jumps[0][(i, i)], c(rate * want0[i], 0.0));
            assert_eq!(jumps[1][(i, i)], c(rate * want1[i], 0.0));
        }
    }

    #[test]
    fn fidelity_is_normalized_for_mixed_references() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let rho = random_density(4, &mut rng);
        assert!((state_fidelity(&rho, &rho) - 1.0).abs() < 1e-12);
        let zero = basis_state_density(1, 0);
        let one = basis_state_density(1, 1);
        assert!(state_fidelity(&zero, &one).abs() < 1e-15);
        assert!((state_fidelity(&zero, &zero) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_inputs_are_config_errors() {
        let model = DephasingModel::uniform(2, DEFAULT_T2).unwrap();
        let rho = basis_state_density(2, 0);
        let k1 = DMatrix::<Complex64>::zeros(2, 2);
        assert!(DephasingModel::uniform(0, 1e-3).is_err());
        assert!(DephasingModel::new(vec![1.0, -1.0]).is_err());
        assert!(apply_local_gate_with_dephasing(&rho, &[], &k1, 1e-6, &model).is_err());
        assert!(apply_local_gate_with_dephasing(&rho, &[2], &k1, 1e-6, &model).is_err());
        assert!(apply_local_gate_with_dephasing(&rho, &[0, 0], &k1, 1e-6, &model).is_err());
        assert!(apply_local_gate_with_dephasing(&rho, &[0], &k1, -1.0, &model).is_err());
        let k4 = DMatrix::<Complex64>::zeros(4, 4);
        assert!(apply_local_gate_with_dephasing(&rho, &[0], &k4, 1e-6, &model).is_err());
        assert!(model.evolve(&DMatrix::zeros(2, 2), &rho, 1e-6).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        // the exact map must preserve trace, Hermiticity, and positivity for
        // any Hamiltonian scale and duration
        #[test]
        fn evolution_preserves_density_matrix_structure(
            seed in 0u64..1024,
            scale in 0.1f64..50.0,
            t in 0.0f64..2.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let model = DephasingModel::new(vec![1.4, 0.8]).unwrap();
            let h = random_hermitian(4, &mut rng) * c(scale, 0.0);
            let rho0 = random_density(4, &mut rng);
            let rho = model.evolve(&h, &rho0, t).unwrap();
            prop_assert!(check_density_matrix(&rho, 1e-9).is_ok());
        }
    }
}
