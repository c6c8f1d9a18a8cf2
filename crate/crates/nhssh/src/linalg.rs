//! Small fixed-size complex linear algebra shared by every module.
//!
//! Everything in the simulator lives in C^2 (electron) or C^2 ⊗ C^2
//! (electron ⊗ nuclear), so the only primitives needed are 2×2 and 4×4
//! complex matrices. The 2×2 exponential is evaluated in closed form via
//! Cayley-Hamilton, which stays exact through eigenvalue coalescence.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use num_complex::Complex;

pub type C64 = Complex<f64>;
/// 2×2 complex matrix, row-major constructor order.
pub type M2 = Matrix2<C64>;
pub type V2 = Vector2<C64>;
pub type M4 = Matrix4<C64>;
pub type V4 = Vector4<C64>;

pub const ZERO: C64 = Complex::new(0.0, 0.0);
pub const ONE: C64 = Complex::new(1.0, 0.0);
pub const I: C64 = Complex::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

pub fn identity2() -> M2 {
    M2::identity()
}

pub fn sigma_x() -> M2 {
    M2::new(ZERO, ONE, ONE, ZERO)
}

pub fn sigma_y() -> M2 {
    M2::new(ZERO, -I, I, ZERO)
}

pub fn sigma_z() -> M2 {
    M2::new(ONE, ZERO, ZERO, -ONE)
}

/// σ_0..σ_3 with σ_0 = I.
pub fn pauli(i: usize) -> M2 {
    match i {
        0 => identity2(),
        1 => sigma_x(),
        2 => sigma_y(),
        3 => sigma_z(),
        _ => panic!("pauli index out of range: {i}"),
    }
}

pub fn max_abs(m: &M2) -> f64 {
    m.iter().map(|e| e.norm()).fold(0.0, f64::max)
}

pub fn max_abs4(m: &M4) -> f64 {
    m.iter().map(|e| e.norm()).fold(0.0, f64::max)
}

/// ‖A − A†‖_max, the Hermiticity residual.
pub fn hermiticity_residual(m: &M2) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// (A + A†)/2.
pub fn hermitize(m: &M2) -> M2 {
    (m + m.adjoint()).map(|e| e * cr(0.5))
}

/// Eigenvalues (ascending) and unitary eigenvector matrix of a Hermitian 2×2.
///
/// Input is assumed Hermitian; only the upper triangle and the real parts of
/// the diagonal are read.
pub fn hermitian_eig2(m: &M2) -> ([f64; 2], M2) {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = m[(0, 1)];
    let mean = 0.5 * (a + d);
    let half_gap = 0.5 * (a - d);
    let disc = (half_gap * half_gap + b.norm_sqr()).sqrt();
    let lo = mean - disc;
    let hi = mean + disc;
    if disc == 0.0 || b.norm() == 0.0 {
        // Already diagonal; order the basis vectors by the diagonal entries.
        let v = if a <= d {
            M2::identity()
        } else {
            M2::new(ZERO, ONE, ONE, ZERO)
        };
        let evs = if a <= d { [a, d] } else { [d, a] };
        return (evs, v);
    }
    // Eigenvector for `lo`: (b, lo - a), normalized.
    let v_lo = V2::new(b, cr(lo - a));
    let v_lo = v_lo / cr(v_lo.norm());
    // The Hermitian partner is orthogonal.
    let v_hi = V2::new(-v_lo[1].conj(), v_lo[0].conj());
    ([lo, hi], M2::from_columns(&[v_lo, v_hi]))
}

/// Smallest eigenvalue of a Hermitian 2×2.
pub fn hermitian_min_eig2(m: &M2) -> f64 {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let mean = 0.5 * (a + d);
    let half_gap = 0.5 * (a - d);
    mean - (half_gap * half_gap + m[(0, 1)].norm_sqr()).sqrt()
}

/// Hermitian positive-semidefinite square root of a Hermitian 2×2.
///
/// Returns `None` when an eigenvalue is negative beyond -1e-14 of scale;
/// tiny negative roundoff is clamped to zero.
pub fn hermitian_sqrt2(m: &M2) -> Option<M2> {
    let (evs, v) = hermitian_eig2(m);
    let scale = evs[1].abs().max(1.0);
    if evs[0] < -1e-14 * scale {
        return None;
    }
    let d = M2::new(cr(evs[0].max(0.0).sqrt()), ZERO, ZERO, cr(evs[1].max(0.0).sqrt()));
    Some(v * d * v.adjoint())
}

/// sin(z)/z with a series guard near the origin.
fn sinc_c(z: C64) -> C64 {
    if z.norm() < 1e-3 {
        let z2 = z * z;
        ONE - z2 / cr(6.0) + z2 * z2 / cr(120.0)
    } else {
        z.sin() / z
    }
}

/// exp(-i H t) for an arbitrary complex 2×2 `H`, exact via Cayley-Hamilton.
///
/// Splitting H = (tr H/2) I + H0 with H0 traceless gives H0² = -det(H0) I,
/// so exp(-i H t) = e^{-i tr(H) t/2} [cos(μt) I - i t sinc(μt) H0] with
/// μ² = -det H0. The form is continuous through μ → 0, i.e. through
/// exceptional points, where it reduces to the Jordan-block limit.
pub fn expm_minus_i_ht(h: &M2, t: f64) -> M2 {
    let tr = h[(0, 0)] + h[(1, 1)];
    let h0 = h - M2::identity() * (tr * cr(0.5));
    expm_traceless(&h0, t) * (-I * tr * cr(0.5 * t)).exp()
}

fn expm_traceless(h0: &M2, t: f64) -> M2 {
    let det = h0[(0, 0)] * h0[(1, 1)] - h0[(0, 1)] * h0[(1, 0)];
    let mu = (-det).sqrt();
    let z = mu * cr(t);
    M2::identity() * z.cos() - h0 * (I * cr(t) * sinc_c(z))
}

/// exp(-i G) for Hermitian `G`; unitary up to roundoff.
pub fn expm_minus_i_hermitian(g: &M2) -> M2 {
    // G = g0 I + a σx + b σy + cz σz, so G01 = a - ib.
    let g0 = 0.5 * (g[(0, 0)].re + g[(1, 1)].re);
    let a = g[(0, 1)].re;
    let b = -g[(0, 1)].im;
    let cz = 0.5 * (g[(0, 0)].re - g[(1, 1)].re);
    let n = (a * a + b * b + cz * cz).sqrt();
    let phase = (-I * cr(g0)).exp();
    if n == 0.0 {
        return M2::identity() * phase;
    }
    let (s, co) = (n.sin(), n.cos());
    let f = -I * cr(s / n);
    let m = M2::identity() * cr(co) + (sigma_x() * cr(a) + sigma_y() * cr(b) + sigma_z() * cr(cz)) * f;
    m * phase
}

/// |⟨a|b⟩|² for normalized inputs.
pub fn fidelity(a: &V2, b: &V2) -> f64 {
    let an = a / cr(a.norm());
    let bn = b / cr(b.norm());
    an.dotc(&bn).norm_sqr()
}

/// Trace distance between the pure states along `a` and `b`:
/// sqrt(1 - |⟨a|b⟩|²) after normalization.
pub fn trace_distance(a: &V2, b: &V2) -> f64 {
    (1.0 - fidelity(a, b)).max(0.0).sqrt()
}

/// Kronecker product A ⊗ B on the basis ordering |e⟩ ⊗ |n⟩ with the nuclear
/// index fastest: (|0↑⟩, |0↓⟩, |-1↑⟩, |-1↓⟩).
pub fn kron2(a: &M2, b: &M2) -> M4 {
    let mut out = M4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}
