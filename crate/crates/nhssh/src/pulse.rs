//! Lowering of the dilated generator onto a two-tone microwave schedule.
//!
//! The target register is an electron spin qubit (levels |0⟩, |-1⟩) with a
//! nuclear spin ancilla, governed in the secular approximation by the
//! diagonal Hamiltonian
//!
//! ```text
//! H0 = -(D - ωe - Azz/2) σz⊗I + (ωn - Azz/2) I⊗σz + (Azz/2) σz⊗σz.
//! ```
//!
//! Two drive tones address the electron transition conditioned on the
//! nuclear state. In the rotating frame that also absorbs the A3, B0, B3
//! tracks of the dilated generator, the rotating-wave effective Hamiltonian
//! is
//!
//! ```text
//! H_eff = A3 σz⊗I + B0 I⊗σz + B3 σz⊗σz
//!       + πΩ1 [cos φ1 σx - sin φ1 σy] ⊗ |↑⟩⟨↑|
//!       + πΩ2 [cos φ2 σx - sin φ2 σy] ⊗ |↓⟩⟨↓|,
//! ```
//!
//! and matching it to Λ ⊗ I + Γ ⊗ σz fixes the schedule in closed form:
//!
//! ```text
//! ω1 = ω↑ + 2(A3 + B3)            ω2 = ω↓ + 2(A3 - B3)
//! Ω1 = (1/π) √((A1+B1)² + (A2+B2)²)   φ1 = -atan2(A2+B2, A1+B1)
//! Ω2 = (1/π) √((A1-B1)² + (A2-B2)²)   φ2 = -atan2(A2-B2, A1-B1)
//! ```
//!
//! The A0 track is a global phase with no drive knob; it rides along as
//! frame data in the schedule sidecar. Amplitudes follow the 1/π convention
//! of the drive model H_MW = 2π Ω cos(∫ω dτ + φ) σx ⊗ I, whose co-rotating
//! half has magnitude πΩ.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dilation::DilationTrajectory;
use crate::linalg::{c, cr, identity2, kron2, sigma_x, sigma_y, sigma_z, M2, M4, V4};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PulseError {
    /// Lab-frame integration step too coarse for the fastest frequency.
    #[error("integrator step {step:.3e} μs exceeds 1/(50·f_max) = {bound:.3e} μs")]
    StepTooCoarse { step: f64, bound: f64 },
}

/// Static constants of the two-spin register, all in rad/μs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NvParams {
    /// Zero-field splitting of the electron spin.
    pub d: f64,
    /// Electron Zeeman splitting.
    pub omega_e: f64,
    /// Nuclear Zeeman splitting.
    pub omega_n: f64,
    /// Hyperfine coupling; must be positive.
    pub a_zz: f64,
}

impl NvParams {
    pub fn new(d: f64, omega_e: f64, omega_n: f64, a_zz: f64) -> Self {
        assert!(a_zz > 0.0, "hyperfine coupling must be positive");
        assert!(
            d.is_finite() && omega_e.is_finite() && omega_n.is_finite(),
            "register constants must be finite"
        );
        Self {
            d,
            omega_e,
            omega_n,
            a_zz,
        }
    }

    /// 2.87 GHz zero-field splitting, Zeeman splittings at a 480 G field
    /// (2.8 MHz/G electron, 1.07 kHz/G nuclear) and 13.7 MHz hyperfine.
    pub fn nv_defaults() -> Self {
        use std::f64::consts::TAU;
        Self::new(TAU * 2870.0, TAU * 1344.0, TAU * 0.5138, TAU * 13.7)
    }

    /// Same hyperfine and nuclear constants but the electron gap compressed
    /// to tens of MHz, making lab-frame integration cheap. The rotating-wave
    /// error depends on Ω/Azz, which this rescaling leaves untouched.
    pub fn scaled_down() -> Self {
        use std::f64::consts::TAU;
        Self::new(TAU * 50.0, 0.0, TAU * 0.5138, TAU * 13.7)
    }
}

/// One sample of a compiled two-tone schedule.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PulseSample {
    /// Time in μs.
    pub t: f64,
    /// Tone angular frequencies in rad/μs (signed; only cos(∫ω dτ + φ) is
    /// ever formed, so the sign convention drops out of the physics).
    pub omega1: f64,
    pub omega2: f64,
    /// Amplitudes in the 1/π drive convention, non-negative.
    pub omega_rabi1: f64,
    pub omega_rabi2: f64,
    /// Phases in (-π, π] from the two-argument arctangent; held from the
    /// previous sample wherever the amplitude vanishes.
    pub phi1: f64,
    pub phi2: f64,
}

/// A compiled schedule with the frame data needed to reconstruct H_eff.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub nv: NvParams,
    /// Electron transition frequencies conditioned on the nuclear state.
    pub resonance_up: f64,
    pub resonance_down: f64,
    pub samples: Vec<PulseSample>,
    /// Frame tracks carried alongside the drive: (A0, A3, B0, B3) per sample.
    pub frame: Vec<[f64; 4]>,
}

impl PulseSchedule {
    /// (δ1, δ2) = (ω1 - ω↑, ω2 - ω↓) at sample `i`.
    pub fn detunings(&self, i: usize) -> (f64, f64) {
        (
            self.samples[i].omega1 - self.resonance_up,
            self.samples[i].omega2 - self.resonance_down,
        )
    }
}

/// The diagonal two-spin Hamiltonian on the basis |0↑⟩, |0↓⟩, |-1↑⟩, |-1↓⟩.
pub fn nv_reduced_hamiltonian(nv: &NvParams) -> M4 {
    let x = cr(nv.d - nv.omega_e - nv.a_zz / 2.0);
    let n = cr(nv.omega_n - nv.a_zz / 2.0);
    let hf = cr(nv.a_zz / 2.0);
    kron2(&sigma_z(), &identity2()) * (-x)
        + kron2(&identity2(), &sigma_z()) * n
        + kron2(&sigma_z(), &sigma_z()) * hf
}

/// Electron transition frequencies conditioned on the nuclear state, read
/// off the diagonal of H0: ω↑ = E(|0↑⟩) - E(|-1↑⟩), ω↓ = E(|0↓⟩) - E(|-1↓⟩).
pub fn resonance_frequencies(nv: &NvParams) -> (f64, f64) {
    let h0 = nv_reduced_hamiltonian(nv);
    let up = h0[(0, 0)].re - h0[(2, 2)].re;
    let down = h0[(1, 1)].re - h0[(3, 3)].re;
    (up, down)
}

const AMP_EPS: f64 = 1e-300;

/// Compile a dilation trajectory into a two-tone schedule, one sample per
/// grid point.
pub fn compile(traj: &DilationTrajectory, nv: &NvParams) -> PulseSchedule {
    let (up, down) = resonance_frequencies(nv);
    let mut samples = Vec::with_capacity(traj.times.len());
    let mut frame = Vec::with_capacity(traj.times.len());
    let (mut held1, mut held2) = (0.0, 0.0);
    for (i, &t) in traj.times.iter().enumerate() {
        let a = traj.a[i];
        let b = traj.b[i];
        let (u1, w1) = (a[1] + b[1], a[2] + b[2]);
        let (u2, w2) = (a[1] - b[1], a[2] - b[2]);
        let rabi1 = (u1 * u1 + w1 * w1).sqrt() / std::f64::consts::PI;
        let rabi2 = (u2 * u2 + w2 * w2).sqrt() / std::f64::consts::PI;
        if rabi1 > AMP_EPS {
            held1 = -w1.atan2(u1);
        }
        if rabi2 > AMP_EPS {
            held2 = -w2.atan2(u2);
        }
        samples.push(PulseSample {
            t,
            omega1: up + 2.0 * (a[3] + b[3]),
            omega2: down + 2.0 * (a[3] - b[3]),
            omega_rabi1: rabi1,
            omega_rabi2: rabi2,
            phi1: held1,
            phi2: held2,
        });
        frame.push([a[0], a[3], b[0], b[3]]);
    }
    PulseSchedule {
        nv: *nv,
        resonance_up: up,
        resonance_down: down,
        samples,
        frame,
    }
}

fn projector_up() -> M2 {
    M2::new(cr(1.0), cr(0.0), cr(0.0), cr(0.0))
}

fn projector_down() -> M2 {
    M2::new(cr(0.0), cr(0.0), cr(0.0), cr(1.0))
}

/// The rotating-wave effective Hamiltonian realized by one schedule sample,
/// given the frame tracks at the same time.
pub fn effective_hamiltonian(sample: &PulseSample, a3: f64, b0: f64, b3: f64) -> M4 {
    let drive = |rabi: f64, phi: f64| -> M2 {
        (sigma_x() * cr(phi.cos()) - sigma_y() * cr(phi.sin())) * cr(std::f64::consts::PI * rabi)
    };
    kron2(&sigma_z(), &identity2()) * cr(a3)
        + kron2(&identity2(), &sigma_z()) * cr(b0)
        + kron2(&sigma_z(), &sigma_z()) * cr(b3)
        + kron2(&drive(sample.omega_rabi1, sample.phi1), &projector_up())
        + kron2(&drive(sample.omega_rabi2, sample.phi2), &projector_down())
}

/// Read the drive-encoded Pauli tracks back out of an effective Hamiltonian:
/// returns (A1, A2, B1, B2).
pub fn decode_drive(h_eff: &M4) -> (f64, f64, f64, f64) {
    // The σx/σy ⊗ P↑ block sits at (0,2); the ⊗ P↓ block at (1,3). Each
    // entry reads (A1±B1) - i(A2±B2).
    let up = h_eff[(0, 2)];
    let down = h_eff[(1, 3)];
    let (u1, w1) = (up.re, -up.im);
    let (u2, w2) = (down.re, -down.im);
    (
        (u1 + u2) / 2.0,
        (w1 + w2) / 2.0,
        (u1 - u2) / 2.0,
        (w1 - w2) / 2.0,
    )
}

/// Rebuild (Λ, Γ) from one schedule sample and its frame data: drive terms
/// carry A1, A2, B1, B2, the frame carries A0, A3, B0, B3.
pub fn reconstruct_lambda_gamma(sample: &PulseSample, frame: &[f64; 4]) -> (M2, M2) {
    let h_eff = effective_hamiltonian(sample, frame[1], frame[2], frame[3]);
    let (a1, a2, b1, b2) = decode_drive(&h_eff);
    let lambda = identity2() * cr(frame[0])
        + sigma_x() * cr(a1)
        + sigma_y() * cr(a2)
        + sigma_z() * cr(frame[1]);
    let gamma = identity2() * cr(frame[2])
        + sigma_x() * cr(b1)
        + sigma_y() * cr(b2)
        + sigma_z() * cr(frame[3]);
    (lambda, gamma)
}

/// Maximum deviation between lab-frame evolution under H0 + H_MW(t) with the
/// compiled drive, transformed into the rotating frame, and evolution under
/// the effective Hamiltonian rebuilt from the same schedule.
///
/// States are compared up to a global phase (the A0 track is frame data, not
/// a drive parameter). The deviation shrinks as the drive amplitudes shrink
/// relative to the hyperfine splitting, which is the rotating-wave validity
/// condition.
pub fn rotating_frame_check(
    nv: &NvParams,
    schedule: &PulseSchedule,
    horizon: f64,
    step: f64,
) -> Result<f64, PulseError> {
    let h0 = nv_reduced_hamiltonian(nv);
    let diag: [f64; 4] = std::array::from_fn(|i| h0[(i, i)].re);
    let f_max = schedule
        .samples
        .iter()
        .flat_map(|s| [s.omega1.abs(), s.omega2.abs()])
        .chain(diag.iter().map(|e| e.abs()))
        .fold(0.0, f64::max)
        / std::f64::consts::TAU;
    let bound = 1.0 / (50.0 * f_max);
    if step > bound {
        return Err(PulseError::StepTooCoarse { step, bound });
    }

    let sample_dt = schedule.samples[1].t - schedule.samples[0].t;
    let n_samples = schedule.samples.len();
    let interp = |track: &dyn Fn(usize) -> f64, t: f64| -> f64 {
        let x = (t / sample_dt).clamp(0.0, (n_samples - 1) as f64);
        let i = (x as usize).min(n_samples - 2);
        let frac = x - i as f64;
        track(i) * (1.0 - frac) + track(i + 1) * frac
    };

    // An even superposition exposes all four levels to the drive.
    let mut psi_lab = V4::from_element(cr(0.5));
    let mut psi_eff = psi_lab;

    let n_steps = (horizon / step).ceil() as usize;
    let mut acc1 = 0.0; // ∫ ω1 dτ
    let mut acc2 = 0.0;
    let mut acc_a3 = 0.0; // rotating-frame track integrals
    let mut acc_b0 = 0.0;
    let mut acc_b3 = 0.0;
    let mut max_dev: f64 = 0.0;

    let lab_h = |t: f64, th1: f64, th2: f64| -> M4 {
        let rabi1 = interp(&|i| schedule.samples[i].omega_rabi1, t);
        let rabi2 = interp(&|i| schedule.samples[i].omega_rabi2, t);
        let phi1 = interp(&|i| schedule.samples[i].phi1, t);
        let phi2 = interp(&|i| schedule.samples[i].phi2, t);
        let amp =
            std::f64::consts::TAU * (rabi1 * (th1 + phi1).cos() + rabi2 * (th2 + phi2).cos());
        h0 + kron2(&sigma_x(), &identity2()) * cr(amp)
    };

    let rhs = |h: &M4, psi: &V4| -> V4 { h * psi * c(0.0, -1.0) };

    for n in 0..n_steps {
        let t = n as f64 * step;
        // Tone frequencies vary on the schedule scale, far slower than the
        // lab step; freeze them at the interval midpoint.
        let w1 = interp(&|i| schedule.samples[i].omega1, t + step / 2.0);
        let w2 = interp(&|i| schedule.samples[i].omega2, t + step / 2.0);
        let h_a = lab_h(t, acc1, acc2);
        let h_m = lab_h(
            t + step / 2.0,
            acc1 + w1 * step / 2.0,
            acc2 + w2 * step / 2.0,
        );
        let h_b = lab_h(t + step, acc1 + w1 * step, acc2 + w2 * step);
        let k1 = rhs(&h_a, &psi_lab);
        let k2 = rhs(&h_m, &(psi_lab + k1 * cr(step / 2.0)));
        let k3 = rhs(&h_m, &(psi_lab + k2 * cr(step / 2.0)));
        let k4 = rhs(&h_b, &(psi_lab + k3 * cr(step)));
        psi_lab += (k1 + k2 * cr(2.0) + k3 * cr(2.0) + k4) * cr(step / 6.0);
        acc1 += w1 * step;
        acc2 += w2 * step;

        // Reference evolution under H_eff with a midpoint sample.
        let tm = t + step / 2.0;
        let mid = PulseSample {
            t: tm,
            omega1: w1,
            omega2: w2,
            omega_rabi1: interp(&|i| schedule.samples[i].omega_rabi1, tm),
            omega_rabi2: interp(&|i| schedule.samples[i].omega_rabi2, tm),
            phi1: interp(&|i| schedule.samples[i].phi1, tm),
            phi2: interp(&|i| schedule.samples[i].phi2, tm),
        };
        let a3_m = interp(&|i| schedule.frame[i][1], tm);
        let b0_m = interp(&|i| schedule.frame[i][2], tm);
        let b3_m = interp(&|i| schedule.frame[i][3], tm);
        let h_eff = effective_hamiltonian(&mid, a3_m, b0_m, b3_m);
        let k1 = rhs(&h_eff, &psi_eff);
        let k2 = rhs(&h_eff, &(psi_eff + k1 * cr(step / 2.0)));
        let k3 = rhs(&h_eff, &(psi_eff + k2 * cr(step / 2.0)));
        let k4 = rhs(&h_eff, &(psi_eff + k3 * cr(step)));
        psi_eff += (k1 + k2 * cr(2.0) + k3 * cr(2.0) + k4) * cr(step / 6.0);
        acc_a3 += a3_m * step;
        acc_b0 += b0_m * step;
        acc_b3 += b3_m * step;

        // U_rot = exp(+i ∫ [H0 - A3 σz⊗I - B0 I⊗σz - B3 σz⊗σz] dτ) is
        // diagonal; apply it as per-level phases.
        let t_end = t + step;
        let mut psi_rot = V4::zeros();
        for j in 0..4 {
            let (ez, nz) = match j {
                0 => (1.0, 1.0),
                1 => (1.0, -1.0),
                2 => (-1.0, 1.0),
                _ => (-1.0, -1.0),
            };
            let phase = diag[j] * t_end - acc_a3 * ez - acc_b0 * nz - acc_b3 * ez * nz;
            psi_rot[j] = psi_lab[j] * (c(0.0, 1.0) * cr(phase)).exp();
        }
        let overlap = psi_rot.dotc(&psi_eff).norm();
        let dev = (2.0 * (1.0 - overlap.min(1.0))).sqrt();
        max_dev = max_dev.max(dev);
    }
    Ok(max_dev)
}

/// Columnar schedule file: metadata comments, a header row, then
/// t, delta1, delta2, Omega1, Omega2, phi1, phi2 in full precision.
/// Phases are unwrapped so the emitted tracks are continuous.
pub fn schedule_table(schedule: &PulseSchedule, metadata: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in metadata {
        out.push_str(&format!("# {k} = {v}\n"));
    }
    out.push_str(&format!(
        "# resonance_up = {}\n# resonance_down = {}\n",
        schedule.resonance_up, schedule.resonance_down
    ));
    out.push_str("t,delta1,delta2,Omega1,Omega2,phi1,phi2\n");
    let unwrapped1 = unwrap_phases(schedule.samples.iter().map(|s| s.phi1));
    let unwrapped2 = unwrap_phases(schedule.samples.iter().map(|s| s.phi2));
    for (i, s) in schedule.samples.iter().enumerate() {
        let (d1, d2) = schedule.detunings(i);
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.t, d1, d2, s.omega_rabi1, s.omega_rabi2, unwrapped1[i], unwrapped2[i]
        ));
    }
    out
}

/// JSON sidecar: register constants, resonances and the frame tracks.
pub fn schedule_sidecar(schedule: &PulseSchedule) -> serde_json::Value {
    serde_json::json!({
        "nv": schedule.nv,
        "resonance_up": schedule.resonance_up,
        "resonance_down": schedule.resonance_down,
        "frame_tracks": {
            "t": schedule.samples.iter().map(|s| s.t).collect::<Vec<_>>(),
            "a0": schedule.frame.iter().map(|f| f[0]).collect::<Vec<_>>(),
            "a3": schedule.frame.iter().map(|f| f[1]).collect::<Vec<_>>(),
            "b0": schedule.frame.iter().map(|f| f[2]).collect::<Vec<_>>(),
            "b3": schedule.frame.iter().map(|f| f[3]).collect::<Vec<_>>(),
        },
    })
}

fn unwrap_phases(phases: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    let mut offset = 0.0;
    let mut prev_raw: Option<f64> = None;
    for phi in phases {
        if let Some(p) = prev_raw {
            let mut delta = phi - p;
            while delta > std::f64::consts::PI {
                delta -= std::f64::consts::TAU;
                offset -= std::f64::consts::TAU;
            }
            while delta < -std::f64::consts::PI {
                delta += std::f64::consts::TAU;
                offset += std::f64::consts::TAU;
            }
        }
        prev_raw = Some(phi);
        out.push(phi + offset);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dilation::{build_trajectory, DilationConfig};
    use crate::linalg::{max_abs, max_abs4};
    use crate::ssh_model::{self, SshParams};
    use approx::assert_relative_eq;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn zero_parameters_give_zero_hamiltonian() {
        let nv = NvParams {
            d: 0.0,
            omega_e: 0.0,
            omega_n: 0.0,
            a_zz: 1e-12,
        };
        let h = nv_reduced_hamiltonian(&nv);
        assert!(max_abs4(&h) < 1e-11);
    }

    #[test]
    fn reduced_hamiltonian_is_diagonal() {
        let h = nv_reduced_hamiltonian(&NvParams::nv_defaults());
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_eq!(h[(i, j)].norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn resonance_splitting_is_twice_hyperfine() {
        // E(0↑)-E(-1↑) minus E(0↓)-E(-1↓) leaves 2·Azz by the diagonal
        // arithmetic.
        let nv = NvParams::nv_defaults();
        let (up, down) = resonance_frequencies(&nv);
        assert_relative_eq!(up - down, 2.0 * nv.a_zz, epsilon = 1e-9);
        let h = nv_reduced_hamiltonian(&nv);
        assert_relative_eq!(up, h[(0, 0)].re - h[(2, 2)].re, epsilon = 1e-12);
    }

    #[test]
    fn hyperfine_off_merges_resonances() {
        let nv = NvParams {
            a_zz: 1e-9,
            ..NvParams::nv_defaults()
        };
        let (up, down) = resonance_frequencies(&nv);
        assert!((up - down).abs() < 1e-8);
    }

    #[test]
    fn swapping_nuclear_labels_swaps_the_pair() {
        // Conjugating H0 by I⊗σx relabels ↑ ↔ ↓; the conditioned transition
        // frequencies swap with it.
        let nv = NvParams::nv_defaults();
        let (up, down) = resonance_frequencies(&nv);
        let x = kron2(&identity2(), &sigma_x());
        let h = x * nv_reduced_hamiltonian(&nv) * x;
        let up_swapped = h[(0, 0)].re - h[(2, 2)].re;
        let down_swapped = h[(1, 1)].re - h[(3, 3)].re;
        assert_relative_eq!(up_swapped, down, epsilon = 1e-9);
        assert_relative_eq!(down_swapped, up, epsilon = 1e-9);
    }

    fn tiny_traj() -> DilationTrajectory {
        let h = ssh_model::hamiltonian(&SshParams::new(0.3, 1.0, 3.5, 0.3 * PI));
        build_trajectory(&h, &DilationConfig::new(8.0, 1e-3, 0.05)).unwrap()
    }

    #[test]
    fn compile_direct_substitution() {
        // A2 = B2 = 0, A1 + B1 = π, A1 - B1 = 0 → Ω1 = 1, Ω2 = 0, φ1 = 0.
        let mut traj = tiny_traj();
        traj.a[0] = [0.0, PI / 2.0, 0.0, 0.0];
        traj.b[0] = [0.0, PI / 2.0, 0.0, 0.0];
        let schedule = compile(&traj, &NvParams::nv_defaults());
        let s = &schedule.samples[0];
        assert_relative_eq!(s.omega_rabi1, 1.0, epsilon = 1e-12);
        assert!(s.omega_rabi2 < 1e-12);
        assert_relative_eq!(s.phi1, 0.0);
        // Resonant drive when A3 = B3 = 0.
        let (d1, d2) = schedule.detunings(0);
        assert_relative_eq!(d1, 0.0);
        assert_relative_eq!(d2, 0.0);
    }

    #[test]
    fn detuning_linearity() {
        // δ1 + δ2 = 4 A3 and δ1 - δ2 = 4 B3 at every sample.
        let traj = tiny_traj();
        let schedule = compile(&traj, &NvParams::nv_defaults());
        for i in 0..schedule.samples.len() {
            let (d1, d2) = schedule.detunings(i);
            assert_relative_eq!(d1 + d2, 4.0 * traj.a[i][3], epsilon = 1e-9);
            assert_relative_eq!(d1 - d2, 4.0 * traj.b[i][3], epsilon = 1e-9);
        }
    }

    #[test]
    fn amplitudes_nonnegative_and_smooth() {
        let traj = tiny_traj();
        let schedule = compile(&traj, &NvParams::nv_defaults());
        let mut prev: Option<PulseSample> = None;
        for s in &schedule.samples {
            assert!(s.omega_rabi1 >= 0.0 && s.omega_rabi2 >= 0.0);
            if let Some(p) = prev {
                assert!((s.omega_rabi1 - p.omega_rabi1).abs() < 1.0);
            }
            prev = Some(*s);
        }
    }

    #[test]
    fn effective_hamiltonian_zero_sample_is_diagonal_part() {
        let s = PulseSample {
            t: 0.0,
            omega1: 0.0,
            omega2: 0.0,
            omega_rabi1: 0.0,
            omega_rabi2: 0.0,
            phi1: 0.0,
            phi2: 0.0,
        };
        let h = effective_hamiltonian(&s, 1.5, -0.7, 0.3);
        let expect = kron2(&sigma_z(), &identity2()) * cr(1.5)
            + kron2(&identity2(), &sigma_z()) * cr(-0.7)
            + kron2(&sigma_z(), &sigma_z()) * cr(0.3);
        assert!(max_abs4(&(h - expect)) < 1e-14);
    }

    #[test]
    fn phase_convention_gives_pure_sigma_y() {
        let s = PulseSample {
            t: 0.0,
            omega1: 0.0,
            omega2: 0.0,
            omega_rabi1: 0.5,
            omega_rabi2: 0.0,
            phi1: -PI / 2.0,
            phi2: 0.0,
        };
        let h = effective_hamiltonian(&s, 0.0, 0.0, 0.0);
        let expect = kron2(&sigma_y(), &projector_up()) * cr(PI * 0.5);
        assert!(max_abs4(&(h - expect)) < 1e-12);
    }

    #[test]
    fn compile_roundtrip_recovers_generator() {
        // compile → effective_hamiltonian → decode reproduces Λ, Γ.
        let traj = tiny_traj();
        let schedule = compile(&traj, &NvParams::nv_defaults());
        for i in 0..schedule.samples.len() {
            let (lambda, gamma) =
                reconstruct_lambda_gamma(&schedule.samples[i], &schedule.frame[i]);
            let dl = max_abs(&(lambda - traj.lambda[i]));
            let dg = max_abs(&(gamma - traj.gamma[i]));
            assert!(dl < 1e-10 && dg < 1e-10, "sample {i}: {dl:.2e}, {dg:.2e}");
        }
    }

    #[test]
    fn roundtrip_on_arbitrary_tracks() {
        // The compile/decode pair is an algebraic inverse for any real
        // (A1, A2, B1, B2).
        let mut traj = tiny_traj();
        traj.a[0] = [0.3, -1.2, 0.8, 0.25];
        traj.b[0] = [0.05, 0.6, -1.4, -0.1];
        let schedule = compile(&traj, &NvParams::nv_defaults());
        let h_eff = effective_hamiltonian(&schedule.samples[0], 0.25, 0.05, -0.1);
        let (a1, a2, b1, b2) = decode_drive(&h_eff);
        assert_relative_eq!(a1, -1.2, epsilon = 1e-10);
        assert_relative_eq!(a2, 0.8, epsilon = 1e-10);
        assert_relative_eq!(b1, 0.6, epsilon = 1e-10);
        assert_relative_eq!(b2, -1.4, epsilon = 1e-10);
    }

    #[test]
    fn zero_drive_frames_agree_exactly() {
        // With all tracks zeroed both evolutions are generated by diagonal
        // Hamiltonians related by the exact frame.
        let mut traj = tiny_traj();
        for i in 0..traj.times.len() {
            traj.a[i] = [0.0; 4];
            traj.b[i] = [0.0; 4];
        }
        let nv = NvParams::scaled_down();
        let schedule = compile(&traj, &nv);
        // Residual is integrator truncation plus the ~√ε floor of the
        // overlap metric; both sit far below any rotating-wave error.
        let dev = rotating_frame_check(&nv, &schedule, 0.02, 1e-5).unwrap();
        assert!(dev < 1e-6, "deviation {dev:.3e}");
    }

    #[test]
    fn step_too_coarse_is_refused() {
        let traj = tiny_traj();
        let nv = NvParams::scaled_down();
        let schedule = compile(&traj, &nv);
        assert!(matches!(
            rotating_frame_check(&nv, &schedule, 0.02, 1e-2),
            Err(PulseError::StepTooCoarse { .. })
        ));
    }

    #[test]
    fn rwa_deviation_small_and_scales_with_drive() {
        // Weak drive relative to the hyperfine splitting: the rotating-wave
        // error stays below 5e-2 over 0.05 μs and grows superlinearly when
        // the drive is doubled.
        let h = ssh_model::hamiltonian(&SshParams::new(0.3, 1.0, 1.0, 0.3 * PI));
        let traj = build_trajectory(&h, &DilationConfig::new(8.0, 1e-3, 0.05)).unwrap();
        let nv = NvParams::scaled_down();
        let schedule = compile(&traj, &nv);
        let step = 2e-5;
        let dev = rotating_frame_check(&nv, &schedule, 0.05, step).unwrap();
        assert!(dev < 5e-2, "deviation {dev:.3e}");

        let mut boosted = schedule.clone();
        for s in &mut boosted.samples {
            s.omega_rabi1 *= 2.0;
            s.omega_rabi2 *= 2.0;
        }
        let dev2 = rotating_frame_check(&nv, &boosted, 0.05, step).unwrap();
        assert!(
            dev2 > 1.5 * dev,
            "doubling the drive: {dev:.3e} → {dev2:.3e}"
        );
    }

    #[test]
    fn hermitian_limit_tones_coincide() {
        // With the gain/loss term removed, Γ ≡ 0: both tones share amplitude
        // and detuning.
        let p = SshParams::new(0.3, 1.0, 3.5, 0.3 * PI);
        let h = ssh_model::hamiltonian_hermitian(&p);
        let traj = build_trajectory(&h, &DilationConfig::new(8.0, 1e-3, 0.05)).unwrap();
        let schedule = compile(&traj, &NvParams::nv_defaults());
        for i in 0..schedule.samples.len() {
            let s = &schedule.samples[i];
            assert!((s.omega_rabi1 - s.omega_rabi2).abs() < 1e-9);
            let (d1, d2) = schedule.detunings(i);
            assert!((d1 - d2).abs() < 1e-9);
            assert!(max_abs(&traj.gamma[i]) < 1e-9);
        }
    }

    #[test]
    fn schedule_table_and_sidecar_shape() {
        let traj = tiny_traj();
        let schedule = compile(&traj, &NvParams::nv_defaults());
        let table = schedule_table(&schedule, &[("v".into(), "0.3".into())]);
        assert!(table.starts_with("# v = 0.3"));
        let header = table.lines().find(|l| !l.starts_with('#')).unwrap();
        assert_eq!(header, "t,delta1,delta2,Omega1,Omega2,phi1,phi2");
        let n_rows = table.lines().filter(|l| !l.starts_with('#')).count() - 1;
        assert_eq!(n_rows, schedule.samples.len());

        let sidecar = schedule_sidecar(&schedule);
        assert_eq!(
            sidecar["frame_tracks"]["a3"].as_array().unwrap().len(),
            schedule.samples.len()
        );
    }

    #[test]
    fn unwrap_keeps_phases_continuous() {
        let raw = [3.0, -3.0, 2.9, -2.9];
        let un = unwrap_phases(raw.iter().copied());
        for w in un.windows(2) {
            assert!((w[1] - w[0]).abs() <= PI + 1e-12);
        }
        // Unwrapped values agree with raw modulo 2π.
        for (u, r) in un.iter().zip(&raw) {
            assert!(((u - r) / TAU - ((u - r) / TAU).round()).abs() < 1e-12);
        }
    }
}
