//! Frequency-selective pulse synthesis and open-system simulation for
//! NV-centre nuclear-spin registers.
//!
//! The crate covers the full pipeline for driving nuclear-spin qubits that
//! share one always-on hyperfine coupling to the NV electron spin:
//!
//! * [`spin_model`] — register description, transition frequencies, and the
//!   single-/two-qubit control Hamiltonians in the rotating frame.
//! * [`pulse_basis`] — frequency-shifted sinc pulse envelopes and the
//!   rotation-angle functionals they induce on every spin, with frequency,
//!   amplitude and phase errors threaded through analytically.
//! * [`gate_synth`] — two-step synthesis: per-basis amplitude optimisation,
//!   then a noise-averaged linear solve for the combination coefficients.
//! * [`time_ordered`] — finite-difference time-ordered propagation, exact
//!   averaged infidelities, and grid-search coefficient refinement.
//! * [`lindblad`] — vectorized dephasing-limited density-matrix evolution.
//! * [`circuits`] — pulse-level gate decompositions, QFT benchmarks, the
//!   run-time model, and shot-convergence sampling.
//! * [`misalignment`] — hyperfine misalignment angles, second-order secular
//!   corrections, and the entangling-gate infidelity they induce.
//!
//! All internal quantities are in angular units (rad/s, rad/s/T); external
//! configs use MHz and MHz/T and are converted on load.

pub mod circuits;
pub mod error;
pub mod exec;
pub mod gate_synth;
pub mod lindblad;
pub mod minimize;
pub mod misalignment;
pub mod pulse_basis;
pub mod quadrature;
pub mod spin_model;
pub mod time_ordered;

pub use error::{Error, Result};
