//! The non-Hermitian SSH Bloch Hamiltonian and its exact eigenstructure.
//!
//! The model is
//!
//! ```text
//! H(k) = γ [ h_x σx + (h_z + i/2) σz ],   h_x = v + r cos k,  h_z = r sin k
//! ```
//!
//! with γ an overall energy scale in rad/μs. The i/2 gain/loss term makes H
//! non-Hermitian; eigenvalues come in chiral pairs ±λ and the gap closes at
//! the exceptional points (h_x, h_z) = (±1/2, 0). Eigenvectors are kept in
//! the closed angular form
//!
//! ```text
//! |R1⟩ = (cos θ/2, -sin θ/2)ᵀ,  |R2⟩ = (sin θ/2, cos θ/2)ᵀ,
//! ```
//!
//! with complex θ satisfying tan θ = -h_x / (h_z + i/2); left eigenvectors
//! use θ*. The vectors are deliberately stored unnormalized so the algebraic
//! relations between expectation values stay exact; every observable divides
//! by ⟨ψ|ψ⟩.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{c, cr, pauli, sigma_x, sigma_z, C64, M2, V2};

/// Alias matching the role this type plays in public signatures.
pub type ComplexMatrix2 = M2;

/// Relative gap tolerance below which two eigenvalues count as coalesced.
pub const GAP_TOL: f64 = 1e-8;
/// Relative tolerance on |Im λ1 - Im λ2| for the ordering tie-break.
pub const IM_TIE_TOL: f64 = 1e-9;
/// Distance from a phase boundary below which classification refuses.
pub const PHASE_BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    /// Eigenvalues (and eigenvectors) coalesce; the spectral form is defective.
    #[error("exceptional point: |λ1 - λ2| = {gap:.3e} below tolerance {tol:.3e}")]
    ExceptionalPoint { gap: f64, tol: f64 },
    /// Parameters sit on a line |v ± r| = 1/2 where the winding number is undefined.
    #[error("parameters within {tol:.1e} of a phase boundary (|v ± r| = 1/2)")]
    PhaseBoundary { tol: f64 },
    /// An expectation value of the zero vector was requested.
    #[error("zero-norm state has no normalized expectation values")]
    ZeroNorm,
}

/// Model parameters plus the momentum at which the Bloch Hamiltonian is read.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SshParams {
    /// Intracell hopping (dimensionless).
    pub v: f64,
    /// Intercell hopping (dimensionless).
    pub r: f64,
    /// Energy scale in rad/μs; must be positive.
    pub gamma: f64,
    /// Momentum in radians. Callers pass unwrapped values; the Hamiltonian
    /// itself is 2π-periodic while eigenvector sweeps may cover 4π.
    pub k: f64,
}

impl SshParams {
    pub fn new(v: f64, r: f64, gamma: f64, k: f64) -> Self {
        assert!(gamma > 0.0, "gamma must be positive");
        Self { v, r, gamma, k }
    }

    pub fn at_k(&self, k: f64) -> Self {
        Self { k, ..*self }
    }

    pub fn h_x(&self) -> f64 {
        self.v + self.r * self.k.cos()
    }

    pub fn h_z(&self) -> f64 {
        self.r * self.k.sin()
    }
}

/// Measurement axis for spin expectations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Exact eigendata of H(k) at one momentum.
///
/// `lambda1` always carries the larger imaginary part; when the imaginary
/// parts coincide the pair is ordered by descending real part and
/// `ordering_degenerate` is set so sweep code can handle the band crossing.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    /// Complex Bloch angle on the principal branch, Re θ ∈ (-π, π].
    pub theta: C64,
    pub lambda1: C64,
    pub lambda2: C64,
    /// Right eigenvectors in the closed (unnormalized) form.
    pub r1: V2,
    pub r2: V2,
    /// Left eigenvectors: H†|L_i⟩ = λ_i*|L_i⟩.
    pub l1: V2,
    pub l2: V2,
    /// Set when |Im λ1 - Im λ2| fell below the tie tolerance.
    pub ordering_degenerate: bool,
}

impl EigenSystem {
    /// ⟨L1|ψ⟩ and ⟨L2|ψ⟩: coefficients of ψ on the biorthogonal basis.
    /// With the closed-form gauge ⟨L_i|R_i⟩ = 1 exactly.
    pub fn band_coefficients(&self, psi: &V2) -> (C64, C64) {
        (self.l1.dotc(psi), self.l2.dotc(psi))
    }
}

/// The Bloch Hamiltonian γ[h_x σx + (h_z + i/2) σz].
pub fn hamiltonian(p: &SshParams) -> M2 {
    let g = cr(p.gamma);
    (sigma_x() * cr(p.h_x()) + sigma_z() * c(p.h_z(), 0.5)) * g
}

/// The Hermitian reference limit γ[h_x σx + h_z σz] with the gain/loss term
/// removed. Used by diagnostic paths (e.g. pulse compilation sanity checks).
pub fn hamiltonian_hermitian(p: &SshParams) -> M2 {
    let g = cr(p.gamma);
    (sigma_x() * cr(p.h_x()) + sigma_z() * cr(p.h_z())) * g
}

/// Exact eigensystem of H(k).
///
/// λ = ±γ√(h_x² + (h_z + i/2)²) with the root oriented so Im λ1 ≥ Im λ2.
/// θ is fixed by e^{iθ} = (h_z + i/2 - i h_x)/s, which solves
/// tan θ = -h_x/(h_z + i/2) on the branch matching that λ assignment.
pub fn eigensystem(p: &SshParams) -> Result<EigenSystem, ModelError> {
    let h_x = p.h_x();
    let z = c(p.h_z(), 0.5);
    let s2 = cr(h_x * h_x) + z * z;
    let mut s = s2.sqrt();

    let gap = 2.0 * p.gamma * s.norm();
    let tol = GAP_TOL * p.gamma;
    if gap < tol {
        return Err(ModelError::ExceptionalPoint { gap, tol });
    }

    let ordering_degenerate = 2.0 * p.gamma * s.im.abs() < IM_TIE_TOL * p.gamma;
    if s.im < 0.0 || (ordering_degenerate && s.re < 0.0) {
        s = -s;
    }

    let w = (z - c(0.0, h_x)) / s;
    let theta = c(w.arg(), -w.norm().ln());
    Ok(eigensystem_from_theta(theta, p.gamma * s, ordering_degenerate))
}

/// Assemble the eigenvector set from a Bloch angle; used both by
/// [`eigensystem`] and by sweep code that re-anchors θ for continuity.
pub fn eigensystem_from_theta(theta: C64, lambda1: C64, ordering_degenerate: bool) -> EigenSystem {
    let half = theta * cr(0.5);
    let (ch, sh) = (half.cos(), half.sin());
    let halfc = theta.conj() * cr(0.5);
    let (chc, shc) = (halfc.cos(), halfc.sin());
    EigenSystem {
        theta,
        lambda1,
        lambda2: -lambda1,
        r1: V2::new(ch, -sh),
        r2: V2::new(sh, ch),
        l1: V2::new(chc, -shc),
        l2: V2::new(shc, chc),
        ordering_degenerate,
    }
}

/// All momenta in [0, 2π) where (h_x, h_z) hits an exceptional point,
/// with a short description of which point is hit.
///
/// h_z = r sin k vanishes only at k ∈ {0, π} (the r = 0 ring degenerates to
/// those same representatives), so it suffices to test h_x = ±1/2 there.
pub fn exceptional_momenta(v: f64, r: f64) -> Vec<(f64, String)> {
    let mut out = Vec::new();
    let tol = 1e-9;
    for (k, label) in [(0.0, "k = 0"), (std::f64::consts::PI, "k = π")] {
        let h_x = v + r * k.cos();
        for sign in [0.5_f64, -0.5] {
            if (h_x - sign).abs() < tol {
                out.push((k, format!("(h_x, h_z) = ({sign:+.1}, 0) at {label}")));
            }
        }
    }
    out
}

/// Phase classification by the number of exceptional points the (h_x, h_z)
/// ellipse encloses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseClass {
    /// Winding number: 0, 1/2 or 1.
    pub w: f64,
    /// Number of enclosed exceptional points (0, 1 or 2).
    pub enclosed_ep_count: usize,
}

/// Count exceptional points enclosed by the loop k ↦ (v + r cos k, r sin k)
/// and map 0 → w = 0, 1 → w = 1/2, 2 → w = 1.
pub fn classify_phase(v: f64, r: f64) -> Result<PhaseClass, ModelError> {
    let radius = r.abs();
    let mut enclosed = 0;
    for ep in [0.5_f64, -0.5] {
        let d = (v - ep).abs();
        if (d - radius).abs() < PHASE_BOUNDARY_TOL {
            return Err(ModelError::PhaseBoundary {
                tol: PHASE_BOUNDARY_TOL,
            });
        }
        if d < radius {
            enclosed += 1;
        }
    }
    Ok(PhaseClass {
        w: enclosed as f64 / 2.0,
        enclosed_ep_count: enclosed,
    })
}

/// ⟨ψ|σ_axis|ψ⟩ / ⟨ψ|ψ⟩ for an arbitrary (possibly unnormalized) state.
pub fn normalized_expectation(state: &V2, axis: Axis) -> Result<f64, ModelError> {
    let norm_sq = state.norm_squared();
    if norm_sq == 0.0 {
        return Err(ModelError::ZeroNorm);
    }
    let op = match axis {
        Axis::X => pauli(1),
        Axis::Y => pauli(2),
        Axis::Z => pauli(3),
    };
    Ok(state.dotc(&(op * state)).re / norm_sq)
}

/// (⟨σx⟩, ⟨σz⟩) of a state, the pair that forms the measured spin texture.
pub fn texture_of(state: &V2) -> Result<(f64, f64), ModelError> {
    Ok((
        normalized_expectation(state, Axis::X)?,
        normalized_expectation(state, Axis::Z)?,
    ))
}

/// Spin texture of the band-1 eigenstate directly from the Bloch angle:
/// ⟨σx⟩ = -sin(Re θ)/cosh(Im θ), ⟨σz⟩ = cos(Re θ)/cosh(Im θ).
pub fn texture_from_theta(theta: C64) -> (f64, f64) {
    let ch = theta.im.cosh();
    (-theta.re.sin() / ch, theta.re.cos() / ch)
}

/// Verify σy⁻¹ H σy = -H entrywise; returns the maximum violation.
pub fn chiral_symmetry_residual(p: &SshParams) -> f64 {
    let h = hamiltonian(p);
    let sy = crate::linalg::sigma_y();
    // σy is its own inverse.
    crate::linalg::max_abs(&(sy * h * sy + h))
}

/// Residual ‖H r - λ r‖ / ‖H‖ used by the eigen-quality invariants.
pub fn eigen_residual(h: &M2, r: &V2, lambda: C64) -> f64 {
    let scale = crate::linalg::max_abs(h).max(f64::MIN_POSITIVE);
    (h * r - r * lambda).norm() / (scale * r.norm())
}
