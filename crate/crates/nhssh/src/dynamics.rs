//! Non-unitary Schrödinger evolution and the decay-to-eigenstate protocol.
//!
//! A state under a non-Hermitian generator obeys i ∂t|ψ⟩ = H|ψ⟩ without any
//! normalization; amplitudes grow or shrink with the imaginary parts of the
//! eigenvalues. Writing ψ(0) = α1|R1⟩ + α2|R2⟩ with Im λ1 > Im λ2, the
//! component along |R1⟩ outgrows the other exponentially, so waiting long
//! enough prepares |R1⟩ from almost any initial state. That preparation, and
//! the U_y conjugation that converts an x-basis measurement into a z-basis
//! one, are what this module provides.
//!
//! States are kept unnormalized through evolution; observables normalize at
//! extraction time.

use thiserror::Error;

use crate::linalg::{cr, expm_minus_i_ht, fidelity, M2, V2};
use crate::ssh_model::{self, EigenSystem, ModelError, SshParams};

/// Relative overlap below which an initial state cannot decay to |R1⟩.
pub const OVERLAP_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    /// Im λ1 = Im λ2: neither band dominates, the protocol stalls.
    #[error("imaginary parts of the eigenvalues are degenerate; no decay direction")]
    DegenerateDecay,
    /// ⟨L1|ψ0⟩ ≈ 0: the target band is absent from the initial state.
    #[error("initial state has no overlap with the dominant band (|⟨L1|ψ0⟩| < {OVERLAP_TOL:.0e})")]
    NoOverlap,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// exp(-i H t) ψ0, evaluated in closed form. No normalization is applied.
///
/// The propagator is exact for any complex 2×2 generator, including at
/// exceptional points where the eigenbasis is defective.
pub fn evolve_nonunitary(h: &M2, psi0: &V2, t: f64) -> V2 {
    assert!(t >= 0.0, "evolution time must be non-negative");
    expm_minus_i_ht(h, t) * psi0
}

/// Time series of a non-unitary evolution with the observables the
/// experiment records.
#[derive(Debug, Clone)]
pub struct EvolutionResult {
    /// Sample times in μs.
    pub times: Vec<f64>,
    /// Unnormalized states; `raw_states[0]` is the supplied initial state.
    pub raw_states: Vec<V2>,
    /// P0 = |⟨0|ψ⟩|²/⟨ψ|ψ⟩ per sample.
    pub populations_z: Vec<f64>,
    /// |⟨R̂1|ψ̂⟩|² per sample.
    pub fidelity_to_r1: Vec<f64>,
}

/// Evolve ψ0 under H(k) of `p` and record populations and band-1 fidelity
/// on the given time grid.
pub fn evolution_series(
    p: &SshParams,
    psi0: &V2,
    times: &[f64],
) -> Result<EvolutionResult, DynamicsError> {
    let h = ssh_model::hamiltonian(p);
    let es = ssh_model::eigensystem(p)?;
    let mut raw_states = Vec::with_capacity(times.len());
    let mut populations_z = Vec::with_capacity(times.len());
    let mut fidelity_to_r1 = Vec::with_capacity(times.len());
    for (i, &t) in times.iter().enumerate() {
        let psi = if i == 0 && t == 0.0 {
            *psi0
        } else {
            evolve_nonunitary(&h, psi0, t)
        };
        populations_z.push(psi[0].norm_sqr() / psi.norm_squared());
        fidelity_to_r1.push(fidelity(&es.r1, &psi));
        raw_states.push(psi);
    }
    Ok(EvolutionResult {
        times: times.to_vec(),
        raw_states,
        populations_z,
        fidelity_to_r1,
    })
}

/// Decay-based preparation of the dominant eigenstate.
///
/// Evolves `psi0` for `horizon`, normalizes, and returns the state together
/// with its fidelity |⟨R̂1|ψ̂⟩|².
pub fn steady_eigenstate(
    p: &SshParams,
    psi0: &V2,
    horizon: f64,
) -> Result<(V2, f64), DynamicsError> {
    let es = ssh_model::eigensystem(p)?;
    steady_eigenstate_with(&ssh_model::hamiltonian(p), &es, psi0, horizon)
}

/// As [`steady_eigenstate`] but reusing an already-computed eigensystem.
pub fn steady_eigenstate_with(
    h: &M2,
    es: &EigenSystem,
    psi0: &V2,
    horizon: f64,
) -> Result<(V2, f64), DynamicsError> {
    if es.ordering_degenerate {
        return Err(DynamicsError::DegenerateDecay);
    }
    let overlap = es.l1.dotc(psi0).norm() / (psi0.norm() * es.l1.norm());
    if overlap < OVERLAP_TOL {
        return Err(DynamicsError::NoOverlap);
    }
    let psi = evolve_nonunitary(h, psi0, horizon);
    let psi = psi / cr(psi.norm());
    let fid = fidelity(&es.r1, &psi);
    Ok((psi, fid))
}

/// Time for the subdominant amplitude ratio to shrink by a factor ε:
/// ln(1/ε) / (Im λ1 - Im λ2).
pub fn decay_horizon(
    lambda1: crate::C64,
    lambda2: crate::C64,
    epsilon: f64,
) -> Result<f64, DynamicsError> {
    assert!(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
    let gap = lambda1.im - lambda2.im;
    if gap <= 0.0 {
        return Err(DynamicsError::DegenerateDecay);
    }
    Ok((1.0 / epsilon).ln() / gap)
}

/// The coherence-time cap on the evolution window in experiment-emulation
/// mode, in μs.
pub const EMULATION_HORIZON_CAP: f64 = 1.8;

/// Default preparation horizon: decay to ε = 1e-3, capped at
/// [`EMULATION_HORIZON_CAP`] when `emulate_experiment` is set.
pub fn default_horizon(es: &EigenSystem, emulate_experiment: bool) -> Result<f64, DynamicsError> {
    let t = decay_horizon(es.lambda1, es.lambda2, 1e-3)?;
    Ok(if emulate_experiment {
        t.min(EMULATION_HORIZON_CAP)
    } else {
        t
    })
}

/// The basis-rotation unitary U_y = (1/√2) [[1, -1], [1, 1]].
pub fn u_y() -> M2 {
    let s = cr(std::f64::consts::FRAC_1_SQRT_2);
    M2::new(s, -s, s, s)
}

/// U_y† H U_y. Evolving under the rotated generator and measuring σz
/// populations is equivalent to evolving under `h` and measuring σx.
pub fn rotate_hamiltonian_y(h: &M2) -> M2 {
    let u = u_y();
    u.adjoint() * h * u
}
