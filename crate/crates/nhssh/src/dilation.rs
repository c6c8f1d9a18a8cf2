//! Hermitian two-qubit dilation of the non-Hermitian electron dynamics.
//!
//! The non-unitary evolution i ψ' = H_e ψ is embedded into a unitary one on
//! electron ⊗ nuclear space by the dilated state
//!
//! ```text
//! |Ψ(t)⟩ = |ψ(t)⟩|-⟩ + η(t)|ψ(t)⟩|+⟩,
//! |-⟩ = (|↑⟩ - i|↓⟩)/√2,   |+⟩ = -i(|↑⟩ + i|↓⟩)/√2,
//! ```
//!
//! which satisfies i ∂t|Ψ⟩ = H_en|Ψ⟩ with the Hermitian generator
//!
//! ```text
//! H_en = Λ(t) ⊗ I + Γ(t) ⊗ σz,
//! Λ = {H_e + [i η̇ + η H_e] η} M⁻¹,
//! Γ = i [H_e η - η H_e - i η̇] M⁻¹,
//! M = η†η + I,    i Ṁ = H_e† M - M H_e.
//! ```
//!
//! M(0) must keep M(t) - I positive over the whole window; we take the
//! scalar choice M(0) = (1 + η0²) I and η(t) as the unique Hermitian
//! positive square root of M(t) - I. Projecting the nuclear spin onto |-⟩
//! then recovers ψ(t) exactly.
//!
//! The metric ODE is marched with fixed-step RK4 and the dilated state with
//! a fourth-order two-point Magnus stepper, so the end-to-end correspondence
//! error scales as h⁴ in the grid step.

use thiserror::Error;

use crate::linalg::{
    c, cr, expm_minus_i_ht, hermitian_eig2, hermiticity_residual, hermitize, identity2, kron2,
    pauli, sigma_z, I, M2, M4, V2, V4,
};

// Gauss-Legendre nodes on [0, 1] for the fourth-order Magnus step.
const GAUSS_LO: f64 = 0.5 - 0.28867513459481287; // 1/2 - √3/6
const GAUSS_HI: f64 = 0.5 + 0.28867513459481287;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DilationError {
    /// min eig(M(t) - I) fell to the floor: η(0) too small or horizon too long.
    #[error("M(t) - I lost positivity at t = {t:.6} μs (min eigenvalue {min_eig:.3e})")]
    PositivityLoss { t: f64, min_eig: f64 },
    /// A Hermitian square root of a non-positive matrix was requested.
    #[error("matrix is not positive definite (min eigenvalue {min_eig:.3e})")]
    NotPositive { min_eig: f64 },
    /// Pauli decomposition of a matrix that is not Hermitian within tolerance.
    #[error("matrix is not Hermitian within {tol:.1e} (residual {residual:.3e})")]
    NotHermitian { residual: f64, tol: f64 },
    /// The nuclear |-⟩ component carries (numerically) no weight.
    #[error("post-selection probability {p:.3e} below 1e-12")]
    PostselectionVanished { p: f64 },
}

/// Configuration of a dilation run.
#[derive(Debug, Clone, Copy)]
pub struct DilationConfig {
    /// Initial scale η(0); M(0) = (1 + η0²) I. Must be positive.
    pub eta0: f64,
    /// Grid step in μs.
    pub step: f64,
    /// Horizon in μs; the grid is t_i = i·step up to and including the last
    /// point ≥ horizon - step/2.
    pub horizon: f64,
    /// Error floor for min eig(M(t) - I).
    pub positivity_floor: f64,
}

impl DilationConfig {
    pub fn new(eta0: f64, step: f64, horizon: f64) -> Self {
        assert!(eta0 > 0.0, "eta0 must be positive");
        assert!(step > 0.0 && horizon > 0.0, "step and horizon must be positive");
        Self {
            eta0,
            step,
            horizon,
            positivity_floor: 0.0,
        }
    }

    /// η(0) = 8, step 1e-4 μs, horizon 1.5 μs.
    pub fn default_run(horizon: f64) -> Self {
        Self::new(8.0, 1e-4, horizon)
    }

    pub fn n_steps(&self) -> usize {
        (self.horizon / self.step).round().max(1.0) as usize
    }

    pub fn t_grid(&self) -> Vec<f64> {
        (0..=self.n_steps()).map(|i| i as f64 * self.step).collect()
    }
}

/// Per-interval generator samples at the two Gauss nodes, kept for the
/// fourth-order propagator. `lambda`/`gamma` are the Hermitian blocks of
/// H_en at the node.
#[derive(Debug, Clone)]
struct GaussNodes {
    lambda: [M2; 2],
    gamma: [M2; 2],
}

/// Time-resolved dilation data on the configured grid.
#[derive(Debug, Clone)]
pub struct DilationTrajectory {
    /// Grid times in μs.
    pub times: Vec<f64>,
    /// Metric M(t), Hermitian with M - I positive definite.
    pub m: Vec<M2>,
    /// Hermitian positive square root of M - I.
    pub eta: Vec<M2>,
    /// Electron block of the dilated generator.
    pub lambda: Vec<M2>,
    /// Nuclear-conditioned block of the dilated generator.
    pub gamma: Vec<M2>,
    /// Pauli tracks of Λ: A[i][0..4] = (A0, A1, A2, A3) at times[i].
    pub a: Vec<[f64; 4]>,
    /// Pauli tracks of Γ.
    pub b: Vec<[f64; 4]>,
    /// min eig(M(t) - I) per sample; positive throughout a valid run.
    pub min_eig_m_minus_i: Vec<f64>,
    /// Largest ‖X - X†‖ seen on Λ or Γ before symmetrization.
    pub max_hermiticity_residual: f64,
    gauss: Vec<GaussNodes>,
}

impl DilationTrajectory {
    pub fn step(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    /// H_en(t_i) = Λ ⊗ I + Γ ⊗ σz as a dense 4×4.
    pub fn h_en(&self, i: usize) -> M4 {
        kron2(&self.lambda[i], &identity2()) + kron2(&self.gamma[i], &sigma_z())
    }
}

/// RHS of the metric ODE: Ṁ = -i (H† M - M H).
fn m_dot(h: &M2, m: &M2) -> M2 {
    (h.adjoint() * m - m * h) * (-I)
}

fn rk4_step(h: &M2, m: &M2, dt: f64) -> M2 {
    let k1 = m_dot(h, m);
    let k2 = m_dot(h, &(m + k1 * cr(dt / 2.0)));
    let k3 = m_dot(h, &(m + k2 * cr(dt / 2.0)));
    let k4 = m_dot(h, &(m + k3 * cr(dt)));
    let out = m + (k1 + k2 * cr(2.0) + k3 * cr(2.0) + k4) * cr(dt / 6.0);
    // Re-symmetrize: the exact flow preserves Hermiticity, the integrator
    // only up to roundoff.
    hermitize(&out)
}

/// Integrate the metric ODE from M(0) = (1 + η0²) I across the grid.
///
/// Returns M at the grid points. Positivity of M - I is checked at every
/// internal node against `config.positivity_floor`.
pub fn solve_m(h: &M2, config: &DilationConfig) -> Result<Vec<M2>, DilationError> {
    let run = march_m(h, config, identity2() * cr(1.0 + config.eta0 * config.eta0))?;
    Ok(run.grid)
}

struct MetricMarch {
    grid: Vec<M2>,
    /// M at the two Gauss nodes of each interval.
    nodes: Vec<[M2; 2]>,
}

/// March M across the grid, landing RK4 sub-steps exactly on the Gauss nodes
/// of each interval so the propagator can sample the generator there.
fn march_m(h: &M2, config: &DilationConfig, m0: M2) -> Result<MetricMarch, DilationError> {
    let n = config.n_steps();
    let dt = config.step;
    let mut grid = Vec::with_capacity(n + 1);
    let mut nodes = Vec::with_capacity(n);
    let mut m = m0;

    let check = |m: &M2, t: f64| -> Result<f64, DilationError> {
        let min_eig = crate::linalg::hermitian_min_eig2(&(m - identity2()));
        if min_eig <= config.positivity_floor {
            return Err(DilationError::PositivityLoss { t, min_eig });
        }
        Ok(min_eig)
    };

    check(&m, 0.0)?;
    grid.push(m);
    for i in 0..n {
        let t0 = i as f64 * dt;
        let m_g1 = rk4_step(h, &m, GAUSS_LO * dt);
        check(&m_g1, t0 + GAUSS_LO * dt)?;
        let m_g2 = rk4_step(h, &m_g1, (GAUSS_HI - GAUSS_LO) * dt);
        check(&m_g2, t0 + GAUSS_HI * dt)?;
        m = rk4_step(h, &m_g2, (1.0 - GAUSS_HI) * dt);
        check(&m, t0 + dt)?;
        nodes.push([m_g1, m_g2]);
        grid.push(m);
    }
    Ok(MetricMarch { grid, nodes })
}

/// Hermitian positive-definite square root of M - I.
pub fn eta_from_m(m: &M2) -> Result<M2, DilationError> {
    let d = m - identity2();
    let min_eig = crate::linalg::hermitian_min_eig2(&d);
    if min_eig <= 0.0 {
        return Err(DilationError::NotPositive { min_eig });
    }
    Ok(crate::linalg::hermitian_sqrt2(&d).expect("positive definite by the check above"))
}

/// η̇ from the metric flow: solving η̇η + ηη̇ = Ṁ in η's eigenbasis, where
/// the equation is entrywise division by the eigenvalue sums.
fn eta_dot_from_m_dot(eta: &M2, m_dot: &M2) -> M2 {
    let (evs, v) = hermitian_eig2(&(eta * eta));
    let d = [evs[0].max(0.0).sqrt(), evs[1].max(0.0).sqrt()];
    let s = v.adjoint() * m_dot * v;
    let mut out = M2::zeros();
    for a in 0..2 {
        for b in 0..2 {
            out[(a, b)] = s[(a, b)] / cr(d[a] + d[b]);
        }
    }
    hermitize(&(v * out * v.adjoint()))
}

/// The Hermitian blocks of the dilated generator at one time sample.
///
/// Returns (Λ, Γ) after symmetrization together with the worst
/// pre-symmetrization Hermiticity residual, which a healthy run keeps at
/// roundoff scale.
pub fn dilated_hamiltonian(h: &M2, eta: &M2, deta_dt: &M2, m_inv: &M2) -> (M2, M2, f64) {
    let lambda_raw = (h + (deta_dt * I + eta * h) * eta) * m_inv;
    let gamma_raw = (h * eta - eta * h - deta_dt * I) * m_inv * I;
    let residual = hermiticity_residual(&lambda_raw).max(hermiticity_residual(&gamma_raw));
    (hermitize(&lambda_raw), hermitize(&gamma_raw), residual)
}

/// Pauli coefficients of a Hermitian 2×2: c_i = Tr(X σ_i)/2 with σ0 = I.
pub fn pauli_decompose(x: &M2) -> Result<[f64; 4], DilationError> {
    let tol = 1e-8;
    let residual = hermiticity_residual(x);
    if residual > tol {
        return Err(DilationError::NotHermitian { residual, tol });
    }
    let mut out = [0.0; 4];
    for (i, coeff) in out.iter_mut().enumerate() {
        let tr = (x * pauli(i)).trace() * cr(0.5);
        *coeff = tr.re;
    }
    Ok(out)
}

fn lambda_gamma_at(h: &M2, m: &M2) -> Result<(M2, M2, f64), DilationError> {
    let eta = eta_from_m(m)?;
    let eta_dot = eta_dot_from_m_dot(&eta, &m_dot(h, m));
    let m_inv = m.try_inverse().expect("M is positive definite");
    Ok(dilated_hamiltonian(h, &eta, &eta_dot, &m_inv))
}

/// Build the full trajectory: metric, η, generator blocks and Pauli tracks,
/// plus the interior data the unitary stepper needs.
pub fn build_trajectory(h: &M2, config: &DilationConfig) -> Result<DilationTrajectory, DilationError> {
    let m0 = identity2() * cr(1.0 + config.eta0 * config.eta0);
    let run = march_m(h, config, m0)?;
    let times = config.t_grid();

    let mut traj = DilationTrajectory {
        times,
        m: run.grid,
        eta: Vec::new(),
        lambda: Vec::new(),
        gamma: Vec::new(),
        a: Vec::new(),
        b: Vec::new(),
        min_eig_m_minus_i: Vec::new(),
        max_hermiticity_residual: 0.0,
        gauss: Vec::new(),
    };

    for m in &traj.m {
        let eta = eta_from_m(m)?;
        let (lambda, gamma, res) = lambda_gamma_at(h, m)?;
        traj.a.push(pauli_decompose(&lambda)?);
        traj.b.push(pauli_decompose(&gamma)?);
        traj.min_eig_m_minus_i
            .push(crate::linalg::hermitian_min_eig2(&(m - identity2())));
        traj.max_hermiticity_residual = traj.max_hermiticity_residual.max(res);
        traj.eta.push(eta);
        traj.lambda.push(lambda);
        traj.gamma.push(gamma);
    }

    for pair in &run.nodes {
        let (l1, g1, r1) = lambda_gamma_at(h, &pair[0])?;
        let (l2, g2, r2) = lambda_gamma_at(h, &pair[1])?;
        traj.max_hermiticity_residual = traj.max_hermiticity_residual.max(r1).max(r2);
        traj.gauss.push(GaussNodes {
            lambda: [l1, l2],
            gamma: [g1, g2],
        });
    }
    Ok(traj)
}

/// Four amplitudes over |0↑⟩, |0↓⟩, |-1↑⟩, |-1↓⟩ (nuclear index fastest).
pub type DilatedState = V4;

/// Nuclear basis states in (↑, ↓) components.
pub fn nuclear_minus() -> V2 {
    V2::new(cr(std::f64::consts::FRAC_1_SQRT_2), c(0.0, -std::f64::consts::FRAC_1_SQRT_2))
}

pub fn nuclear_plus() -> V2 {
    // -i(|↑⟩ + i|↓⟩)/√2 = (-i|↑⟩ + |↓⟩)/√2
    V2::new(c(0.0, -std::f64::consts::FRAC_1_SQRT_2), cr(std::f64::consts::FRAC_1_SQRT_2))
}

/// |Ψ(0)⟩ = |ψ0⟩|-⟩ + (η(0)ψ0)|+⟩, returned with unit norm.
pub fn initial_dilated_state(psi0: &V2, eta0: &M2) -> DilatedState {
    assert!(psi0.norm() > 0.0, "initial electron state must be nonzero");
    let minus = nuclear_minus();
    let plus = nuclear_plus();
    let eta_psi = eta0 * psi0;
    let mut out = V4::zeros();
    for e in 0..2 {
        for n in 0..2 {
            out[2 * e + n] = psi0[e] * minus[n] + eta_psi[e] * plus[n];
        }
    }
    out / cr(out.norm())
}

/// Unitary evolution of the dilated state across the trajectory grid.
///
/// H_en = Λ ⊗ I + Γ ⊗ σz is block-diagonal in the nuclear z-basis, so each
/// step applies exp(-iG) of the 2×2 blocks Λ ± Γ built from the two
/// Gauss-node samples (fourth-order Magnus).
pub fn evolve_dilated(traj: &DilationTrajectory, psi0: &DilatedState) -> Vec<DilatedState> {
    let h = traj.step();
    let mut up = V2::new(psi0[0], psi0[2]);
    let mut dn = V2::new(psi0[1], psi0[3]);
    let mut out = Vec::with_capacity(traj.times.len());
    let pack = |up: &V2, dn: &V2| V4::new(up[0], dn[0], up[1], dn[1]);
    out.push(pack(&up, &dn));
    for nodes in &traj.gauss {
        for (block, sign) in [(&mut up, 1.0), (&mut dn, -1.0)] {
            let b1 = nodes.lambda[0] + nodes.gamma[0] * cr(sign);
            let b2 = nodes.lambda[1] + nodes.gamma[1] * cr(sign);
            let comm = b1 * b2 - b2 * b1;
            let g = (b1 + b2) * cr(h / 2.0) + comm * (I * cr(h * h * 3.0_f64.sqrt() / 12.0));
            let u = crate::linalg::expm_minus_i_hermitian(&g);
            *block = u * *block;
        }
        out.push(pack(&up, &dn));
    }
    out
}

/// Project the nuclear spin onto |-⟩⟨-|.
///
/// Returns the electron 2-vector of the |-⟩ component and the post-selection
/// probability (its squared norm, for a normalized input).
pub fn postselect_minus(psi: &DilatedState) -> Result<(V2, f64), DilationError> {
    let minus = nuclear_minus();
    let e0 = minus.dotc(&V2::new(psi[0], psi[1]));
    let e1 = minus.dotc(&V2::new(psi[2], psi[3]));
    let out = V2::new(e0, e1);
    let p = out.norm_squared();
    if p < 1e-12 {
        return Err(DilationError::PostselectionVanished { p });
    }
    Ok((out, p))
}

/// exp(i H t); the adjoint propagator used by the closed-form metric oracle
/// M(t) = e^{-i H† t} M(0) e^{i H t}.
pub fn metric_closed_form(h: &M2, m0: &M2, t: f64) -> M2 {
    let right = expm_minus_i_ht(h, -t); // e^{iHt}
    let left = right.adjoint(); // e^{-iH†t}
    left * m0 * right
}
